"""Multi-modal relational matrices built from one attributed graph.

Modality 1 is the adjacency itself, modality 2 the Gram matrix of the row
normalized attributes, and each further modality the Gram matrix of attributes
smoothed by repeated parameter-free message passing. An optional high-pass
modality captures what the smoothing removes.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .graphs import Graph

__all__ = [
    "RelationalSet",
    "propagation_operator",
    "message_pass",
    "normalize_rows",
    "build_relational_set",
]


@dataclass(frozen=True, eq=False)
class RelationalSet:
    """Ordered relational matrices of one graph plus the propagated features.

    ``matrices[k]`` is the (k+1)-th modality, an n x n symmetric matrix.
    ``propagated`` keeps the smoothed attribute stages Z^(0..K-2) when
    attribute modalities exist. ``modality_names`` labels each matrix.
    """

    matrices: tuple[np.ndarray, ...]
    propagated: tuple[np.ndarray, ...]
    modality_names: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.matrices:
            raise ValueError("a relational set needs at least one matrix")
        n = self.matrices[0].shape[0]
        for mat in self.matrices:
            if mat.shape != (n, n):
                raise ValueError("all relational matrices must share the node count")
            if not np.isfinite(mat).all():
                raise ValueError("relational matrices must be finite")
        if len(self.modality_names) != len(self.matrices):
            raise ValueError("one name per matrix required")

    @property
    def k(self) -> int:
        return len(self.matrices)

    @property
    def node_count(self) -> int:
        return self.matrices[0].shape[0]


def propagation_operator(adjacency: np.ndarray) -> np.ndarray:
    """Symmetric normalized low-pass operator with self-loops.

    With A_hat = A + I and M the diagonal of A_hat row sums, returns
    M^(-1/2) A_hat M^(-1/2). Self-loops keep every row sum positive, so the
    inverse square root always exists.
    """
    n = adjacency.shape[0]
    a_hat = adjacency + np.eye(n)
    inv_sqrt = 1.0 / np.sqrt(a_hat.sum(axis=1))
    return a_hat * inv_sqrt[:, None] * inv_sqrt[None, :]


def message_pass(g: Graph, steps: int) -> list[np.ndarray]:
    """Propagate attributes: Z^0 = X, Z^n = M^(-1/2)(A+I)M^(-1/2) Z^(n-1).

    Returns [Z^0, ..., Z^steps]. The operator has spectral radius at most one,
    so Frobenius norms never grow from one stage to the next.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    op = propagation_operator(g.adjacency)
    stages = [np.array(g.attributes, dtype=float)]
    for _ in range(steps):
        stages.append(op @ stages[-1])
    return stages


def normalize_rows(x: np.ndarray) -> np.ndarray:
    """L2-normalize each row; all-zero rows are returned unchanged."""
    x = np.asarray(x, dtype=float)
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    return x / np.where(norms > 0.0, norms, 1.0)


def build_relational_set(
    g: Graph,
    k_modalities: int,
    *,
    highpass: bool = False,
    normalize: bool = True,
) -> RelationalSet:
    """Construct the K relational matrices of a graph (plus optional high-pass).

    K = 1 gives adjacency only. K = 2 adds the Gram matrix of the row
    normalized attributes. Each further modality k propagates the normalized
    attributes k-2 steps and takes the Gram matrix of the result. When
    ``normalize`` is on (the default), every matrix is rescaled by its own
    max absolute entry so modalities live on a comparable scale; all-zero
    matrices are left alone. ``highpass`` appends the Gram matrix of the
    high-pass filtered attributes as one extra modality.
    """
    if k_modalities < 1:
        raise ValueError("k_modalities must be >= 1")
    matrices: list[np.ndarray] = [np.array(g.adjacency, dtype=float)]
    names: list[str] = ["topology"]
    propagated: tuple[np.ndarray, ...] = ()
    if k_modalities >= 2 or highpass:
        x = normalize_rows(g.attributes)
    if k_modalities >= 2:
        steps = k_modalities - 2
        stages = message_pass(replace(g, attributes=x), steps)
        propagated = tuple(stages)
        matrices.append(x @ x.T)
        names.append("attribute")
        for k in range(3, k_modalities + 1):
            z = stages[k - 2]
            matrices.append(z @ z.T)
            names.append(f"subgraph-{k - 2}")
    if highpass:
        warnings.warn(
            "high-pass relational matrices amplify edge noise and can destabilize "
            "the transport solves; enable with care",
            UserWarning,
            stacklevel=2,
        )
        lap = np.eye(g.node_count) - propagation_operator(g.adjacency)
        hx = lap @ x
        matrices.append(hx @ hx.T)
        names.append("highpass")
    if normalize:
        for i, mat in enumerate(matrices):
            peak = np.abs(mat).max()
            if peak > 0.0:
                matrices[i] = mat / peak
    return RelationalSet(tuple(matrices), propagated, tuple(names))
