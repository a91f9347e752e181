"""Graph containers, dataset ingestion, noise perturbation, and relabeling."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import GraphParseError

__all__ = [
    "Graph",
    "Alignment",
    "NoiseSpec",
    "load_graph",
    "load_alignment",
    "save_graph",
    "perturb_edges",
    "permute_graph",
]


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected attributed graph over a dense 0..n-1 node indexing.

    ``adjacency`` is a symmetric {0, 1} matrix with a zero diagonal (self-loops
    are never stored; propagation operators add them transiently).
    ``attributes`` holds one row of real features per node. ``labels`` keeps
    the original node identifiers when ids were remapped at load time.
    """

    adjacency: np.ndarray
    attributes: np.ndarray
    labels: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        adj = np.asarray(self.adjacency, dtype=float)
        attrs = np.asarray(self.attributes, dtype=float)
        object.__setattr__(self, "adjacency", adj)
        object.__setattr__(self, "attributes", attrs)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {adj.shape}")
        n = adj.shape[0]
        if n < 1:
            raise ValueError("graph needs at least one node")
        if not np.array_equal(adj, adj.T):
            raise ValueError("adjacency must be symmetric")
        if not np.isin(adj, (0.0, 1.0)).all():
            raise ValueError("adjacency entries must be 0 or 1")
        if np.diagonal(adj).any():
            raise ValueError("self-loops are not allowed in stored graphs")
        if attrs.ndim != 2 or attrs.shape[0] != n:
            raise ValueError(
                f"attributes must have one row per node: got {attrs.shape} for {n} nodes"
            )
        if not np.isfinite(attrs).all():
            raise ValueError("attributes must be finite")
        if self.labels is not None and len(self.labels) != n:
            raise ValueError("labels must have one entry per node")

    @property
    def node_count(self) -> int:
        return self.adjacency.shape[0]

    @property
    def edge_count(self) -> int:
        return int(round(self.adjacency.sum())) // 2

    @property
    def attr_dim(self) -> int:
        return self.attributes.shape[1]

    def edge_array(self) -> np.ndarray:
        """Edges as an (m, 2) array of index pairs with i < j, lexicographic order."""
        iu, ju = np.triu_indices(self.node_count, k=1)
        keep = self.adjacency[iu, ju] > 0
        return np.stack([iu[keep], ju[keep]], axis=1)


@dataclass(frozen=True)
class NoiseSpec:
    """Edge-rewiring level: remove floor(level/100 * |E|) edges, add as many back."""

    level_percent: float
    seed: int

    def __post_init__(self) -> None:
        if not 0.0 <= float(self.level_percent) <= 100.0:
            raise ValueError(f"level_percent must be in [0, 100], got {self.level_percent}")
        if int(self.seed) < 0:
            raise ValueError("seed must be non-negative")


@dataclass(frozen=True)
class Alignment:
    """Ground-truth node correspondence: (source index, target index) pairs."""

    pairs: tuple[tuple[int, int], ...]
    source_size: int
    target_size: int

    def __post_init__(self) -> None:
        seen_s: set[int] = set()
        seen_t: set[int] = set()
        for s, t in self.pairs:
            if not (0 <= s < self.source_size and 0 <= t < self.target_size):
                raise ValueError(f"alignment pair ({s}, {t}) out of range")
            if s in seen_s or t in seen_t:
                raise ValueError(f"alignment pair ({s}, {t}) repeats a node")
            seen_s.add(s)
            seen_t.add(t)

    @classmethod
    def identity(cls, n: int) -> "Alignment":
        return cls(tuple((i, i) for i in range(n)), n, n)


def load_graph(edge_path: str | Path, attr_path: str | Path | None = None) -> Graph:
    """Load a graph from a whitespace-separated edge list, plus optional attributes.

    Edge lines read "u v" with non-negative integer ids; '#' starts a comment
    and blank lines are skipped. Duplicate edges collapse. Ids are remapped to
    a dense 0..n-1 range; original ids are kept in ``labels``. The attribute
    file is a headerless CSV with one row per original id (row count must be
    max id + 1). Without attributes every node gets a single max-normalized
    degree feature.
    """
    path = Path(edge_path)
    edges: set[tuple[int, int]] = set()
    ids: set[int] = set()
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphParseError(f"{path}:{lineno}: expected 'u v', got {raw!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphParseError(f"{path}:{lineno}: non-integer node id in {raw!r}") from None
        if u < 0 or v < 0:
            raise GraphParseError(f"{path}:{lineno}: negative node id in {raw!r}")
        if u == v:
            raise GraphParseError(f"{path}:{lineno}: self-loop on node {u} is not allowed")
        edges.add((min(u, v), max(u, v)))
        ids.update((u, v))
    if not edges:
        raise GraphParseError(f"{path}: no edges found")
    order = sorted(ids)
    dense = {orig: i for i, orig in enumerate(order)}
    n = len(order)
    adjacency = np.zeros((n, n))
    for u, v in edges:
        adjacency[dense[u], dense[v]] = 1.0
        adjacency[dense[v], dense[u]] = 1.0
    if attr_path is None:
        degrees = adjacency.sum(axis=1)
        # every loaded node appears in an edge, so max degree is >= 1
        attributes = (degrees / degrees.max())[:, None]
    else:
        try:
            rows = np.loadtxt(attr_path, delimiter=",", ndmin=2, dtype=float)
        except ValueError as exc:
            raise GraphParseError(f"{attr_path}: malformed attribute CSV ({exc})") from None
        expected = max(ids) + 1
        if rows.shape[0] != expected:
            raise GraphParseError(
                f"{attr_path}: {rows.shape[0]} attribute rows but max node id is "
                f"{max(ids)} (need {expected})"
            )
        attributes = rows[order]
    return Graph(adjacency, attributes, labels=tuple(order))


def load_alignment(path: str | Path, source: Graph, target: Graph) -> Alignment:
    """Load ground-truth pairs from a two-column TSV of original node ids."""
    p = Path(path)
    src_map = _label_map(source)
    tgt_map = _label_map(target)
    pairs: list[tuple[int, int]] = []
    for lineno, raw in enumerate(p.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphParseError(f"{p}:{lineno}: expected 'source_id target_id', got {raw!r}")
        try:
            s_id, t_id = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphParseError(f"{p}:{lineno}: non-integer node id in {raw!r}") from None
        if s_id not in src_map:
            raise GraphParseError(f"{p}:{lineno}: unknown source node id {s_id}")
        if t_id not in tgt_map:
            raise GraphParseError(f"{p}:{lineno}: unknown target node id {t_id}")
        pairs.append((src_map[s_id], tgt_map[t_id]))
    if not pairs:
        raise GraphParseError(f"{p}: no alignment pairs found")
    return Alignment(tuple(pairs), source.node_count, target.node_count)


def _label_map(g: Graph) -> dict[int, int]:
    labels = g.labels if g.labels is not None else tuple(range(g.node_count))
    return {orig: i for i, orig in enumerate(labels)}


def save_graph(g: Graph, edge_path: str | Path, attr_path: str | Path | None = None) -> None:
    """Write the graph back out in the formats ``load_graph`` accepts."""
    labels = g.labels if g.labels is not None else tuple(range(g.node_count))
    lines = [f"{labels[i]} {labels[j]}" for i, j in g.edge_array()]
    Path(edge_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    if attr_path is not None:
        # rows must be indexed by original id, densest possible table
        table = np.zeros((max(labels) + 1, g.attr_dim))
        for i, orig in enumerate(labels):
            table[orig] = g.attributes[i]
        np.savetxt(attr_path, table, delimiter=",")


def perturb_edges(g: Graph, spec: NoiseSpec) -> Graph:
    """Rewire floor(level/100 * |E|) edges, keeping the edge count constant.

    Removed edges are drawn uniformly from the existing ones; the same number
    of new edges is drawn uniformly from the absent pairs (self-loops and the
    just-removed slots stay vacant). Attributes and node count are untouched.
    Deterministic for a fixed seed.
    """
    rng = np.random.default_rng(spec.seed)
    n = g.node_count
    iu, ju = np.triu_indices(n, k=1)
    present = g.adjacency[iu, ju] > 0
    edge_idx = np.flatnonzero(present)
    hole_idx = np.flatnonzero(~present)
    m = edge_idx.size
    k = int(math.floor(spec.level_percent * m / 100.0 + 1e-9))
    if k > hole_idx.size:
        raise ValueError(
            f"cannot rewire {k} edges: only {hole_idx.size} non-edge slots available"
        )
    adjacency = g.adjacency.copy()
    if k > 0:
        drop = edge_idx[rng.choice(m, size=k, replace=False)]
        grow = hole_idx[rng.choice(hole_idx.size, size=k, replace=False)]
        adjacency[iu[drop], ju[drop]] = 0.0
        adjacency[ju[drop], iu[drop]] = 0.0
        adjacency[iu[grow], ju[grow]] = 1.0
        adjacency[ju[grow], iu[grow]] = 1.0
    return Graph(adjacency, g.attributes, labels=g.labels)


def permute_graph(g: Graph, perm: np.ndarray) -> tuple[Graph, Alignment]:
    """Relabel nodes so that node i of the input becomes node perm[i].

    Returns the relabeled graph and the ground-truth alignment mapping
    original indices to their new positions.
    """
    perm = np.asarray(perm, dtype=int)
    n = g.node_count
    if perm.shape != (n,) or not np.array_equal(np.sort(perm), np.arange(n)):
        raise ValueError("perm must be a bijection on 0..n-1")
    inv = np.argsort(perm)
    adjacency = g.adjacency[np.ix_(inv, inv)]
    attributes = g.attributes[inv]
    labels = tuple(g.labels[i] for i in inv) if g.labels is not None else None
    pairs = tuple((i, int(perm[i])) for i in range(n))
    return Graph(adjacency, attributes, labels=labels), Alignment(pairs, n, n)
