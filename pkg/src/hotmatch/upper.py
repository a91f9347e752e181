"""Upper-level entropic transport across modalities, with learnable marginals.

The K x K grid of pairwise relational-matrix distances acts as the cost of an
entropic optimal transport problem between two distributions over modalities.
The marginals of that problem are free variables: they follow multiplicative
gradient steps whose transport part comes from the Sinkhorn dual potentials
and whose prior part is a KL pull toward the uniform distribution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericInstabilityError
from .gw import DIV_FLOOR, EXP_CLAMP, _round_to_marginals

__all__ = [
    "ModalityCoupling",
    "project_simplex",
    "entropic_wasserstein",
    "marginal_gradient",
    "update_marginals",
]

LOG_FLOOR = 1e-300  # keeps log() finite if a scaling or marginal hits exact zero
BALANCE_TOL = 1e-9  # continue sweeping past iters until rows are this close
SWEEP_CAP = 5000  # hard stop for the continuation on slow-mixing kernels


@dataclass(frozen=True, eq=False)
class ModalityCoupling:
    """Entropic coupling over modality pairs.

    ``entropic_cost`` is the plain transport cost <cost, theta>;
    ``regularized_cost`` adds the entropy term lambda * <theta, log theta>,
    which is the quantity the marginal gradients differentiate. The final
    Sinkhorn scalings are kept for gradient evaluation.
    """

    theta: np.ndarray
    nu_s: np.ndarray
    nu_t: np.ndarray
    entropic_cost: float
    regularized_cost: float
    scaling_a: np.ndarray
    scaling_b: np.ndarray


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise ValueError("expected a non-empty vector")
    u = np.sort(v)[::-1]
    shifted = np.cumsum(u) - 1.0
    counts = np.arange(1, v.size + 1)
    rho = np.nonzero(u - shifted / counts > 0.0)[0][-1]
    theta = shifted[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def _check_marginal(nu: np.ndarray, name: str) -> np.ndarray:
    nu = np.asarray(nu, dtype=float)
    if nu.ndim != 1:
        raise ValueError(f"{name} must be a vector")
    if (nu < 0.0).any() or abs(nu.sum() - 1.0) > 1e-8:
        raise ValueError(f"{name} must lie on the probability simplex")
    return nu


def entropic_wasserstein(
    cost: np.ndarray,
    nu_s: np.ndarray,
    nu_t: np.ndarray,
    lambda_up: float = 0.05,
    iters: int = 100,
) -> ModalityCoupling:
    """Sinkhorn on the kernel exp(-cost / lambda_up), scaled to (nu_s, nu_t).

    Runs at least ``iters`` sweeps of a = nu_s / (Q b) followed by
    b = nu_t / (Q^T a), continuing while the row marginals of
    diag(a) Q diag(b) are further than BALANCE_TOL from nu_s (hard cap
    max(iters, SWEEP_CAP) sweeps; wide cost ranges make the kernel mix
    slowly and can leave a visible residual after any fixed count). The
    coupling is then rounded onto the transport polytope so theta meets both
    marginals to machine precision, both reported costs are evaluated at the
    rounded theta, and the final scalings are kept for gradient evaluation.
    """
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2:
        raise ValueError("cost must be a matrix")
    if not np.isfinite(cost).all():
        raise ValueError("cost must be finite")
    nu_s = _check_marginal(nu_s, "nu_s")
    nu_t = _check_marginal(nu_t, "nu_t")
    if cost.shape != (nu_s.size, nu_t.size):
        raise ValueError("cost shape must match the marginal lengths")
    if lambda_up <= 0.0:
        raise ValueError("lambda_up must be > 0")
    if iters < 1:
        raise ValueError("iters must be >= 1")
    with np.errstate(over="ignore"):
        kernel = np.exp(np.maximum(-cost / lambda_up, EXP_CLAMP))
    if (kernel.sum(axis=1) == 0.0).any() or (kernel.sum(axis=0) == 0.0).any():
        raise NumericInstabilityError(
            "modality kernel has an all-zero row or column", lam=lambda_up
        )
    b = np.full(nu_t.size, 1.0 / nu_t.size)
    # overflowed kernels produce inf/nan scalings; the explicit check below
    # turns that into a typed error, so silence the intermediate warnings
    with np.errstate(invalid="ignore", over="ignore"):
        for sweep in range(max(iters, SWEEP_CAP)):
            a = nu_s / np.maximum(kernel @ b, DIV_FLOOR)
            b = nu_t / np.maximum(kernel.T @ a, DIV_FLOOR)
            if sweep + 1 >= iters:
                row_gap = float(np.abs(a * (kernel @ b) - nu_s).sum())
                # a nan gap also exits; the finiteness check below handles it
                if not row_gap > BALANCE_TOL:
                    break
        theta = a[:, None] * kernel * b[None, :]
    if not np.isfinite(theta).all():
        raise NumericInstabilityError("modality coupling went non-finite", lam=lambda_up)
    theta = _round_to_marginals(theta, nu_s, nu_t)
    linear = float(np.sum(cost * theta))
    entropy_term = float(np.sum(theta * np.log(np.maximum(theta, LOG_FLOOR))))
    return ModalityCoupling(
        theta=theta,
        nu_s=np.array(nu_s),
        nu_t=np.array(nu_t),
        entropic_cost=linear,
        regularized_cost=linear + lambda_up * entropy_term,
        scaling_a=a,
        scaling_b=b,
    )


def marginal_gradient(
    a: np.ndarray,
    b: np.ndarray,
    lambda_up: float,
    nu_s: np.ndarray,
    nu_t: np.ndarray,
    kl_weight: float = 1.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of the regularized transport value plus KL priors w.r.t. the marginals.

    The transport part is the dual potential lambda_up * log(a) (resp. log(b))
    read off the final Sinkhorn scalings; the KL-to-uniform part contributes
    kl_weight * (log(K nu) + 1). Both parts are mean-centered so a gradient
    step stays tangent to the simplex. Scalings that hit exact zero (a marginal
    component at the simplex boundary) are floored, which keeps the gradient
    finite and pointing back into the interior.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise NumericInstabilityError("non-finite Sinkhorn scaling vector", lam=lambda_up)
    nu_s = _check_marginal(nu_s, "nu_s")
    nu_t = _check_marginal(nu_t, "nu_t")
    if a.shape != nu_s.shape or b.shape != nu_t.shape:
        raise ValueError("scaling vectors must match the marginal lengths")
    if lambda_up <= 0.0:
        raise ValueError("lambda_up must be > 0")
    if kl_weight < 0.0:
        raise ValueError("kl_weight must be >= 0")

    def centered(x: np.ndarray) -> np.ndarray:
        return x - x.mean()

    grad_s = lambda_up * centered(np.log(np.maximum(a, LOG_FLOOR)))
    grad_t = lambda_up * centered(np.log(np.maximum(b, LOG_FLOOR)))
    if kl_weight > 0.0:
        k_s = nu_s.size
        k_t = nu_t.size
        grad_s = grad_s + kl_weight * centered(np.log(np.maximum(k_s * nu_s, LOG_FLOOR)) + 1.0)
        grad_t = grad_t + kl_weight * centered(np.log(np.maximum(k_t * nu_t, LOG_FLOOR)) + 1.0)
    return grad_s, grad_t


def update_marginals(
    nu_s: np.ndarray,
    nu_t: np.ndarray,
    grads: tuple[np.ndarray, np.ndarray],
    gamma: float,
) -> tuple[np.ndarray, np.ndarray]:
    """One multiplicative gradient step on each marginal; gamma = 0 is a no-op.

    The step is exponentiated-gradient descent: nu <- nu * exp(-gamma * grad),
    renormalized to sum 1. The iterate stays strictly inside the simplex, which
    matters because the regularized objective's minimizer is interior but can
    sit within e^(-gap/lambda) of a vertex: an additive step with Euclidean
    projection overshoots that thin basin, snaps onto the vertex, and the
    floored log-gradients then kick it across the simplex. The multiplicative
    step contracts the log-coordinates geometrically instead, so mass
    concentrates monotonically and never leaves the feasible set.
    """
    if gamma < 0.0:
        raise ValueError("gamma must be >= 0")
    nu_s = np.asarray(nu_s, dtype=float)
    nu_t = np.asarray(nu_t, dtype=float)
    if gamma == 0.0:
        return np.array(nu_s), np.array(nu_t)
    grad_s, grad_t = grads

    def step(nu: np.ndarray, grad: np.ndarray) -> np.ndarray:
        scaled = nu * np.exp(np.clip(-gamma * grad, EXP_CLAMP, -EXP_CLAMP))
        total = scaled.sum()
        if not np.isfinite(total) or total <= 0.0:
            raise NumericInstabilityError("marginal update lost all mass")
        return scaled / total

    return step(nu_s, grad_s), step(nu_t, grad_t)
