"""Sigma-transformed dual norms, their subgradients, and extrema over a cost box.

With a diagonal cost ``Sigma = diag(eig)`` the dual norm of ``beta`` is
``||beta / sqrt(eig)||_q``, which is coordinatewise non-increasing in each
eigenvalue. Everything downstream leans on that monotonicity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import CostModel, CostUncertaintySet, PNormSpec, p_norm

__all__ = [
    "DualNormExtrema",
    "ReachabilityError",
    "TargetRangeError",
    "cost_achieving_dual_norm",
    "dual_direction",
    "dual_norm",
    "dual_norm_extrema",
    "dual_norm_subgradient",
    "dual_norms_inverse",
]


class TargetRangeError(ValueError):
    """Requested dual-norm value is not achievable inside the cost box."""


class ReachabilityError(ArithmeticError):
    """The eigenvalue sweep failed to reproduce the target to tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class DualNormExtrema:
    min_val: float
    max_val: float


def _check_dims(weights: np.ndarray, d: int) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size != d:
        raise ValueError(f"weights have shape {w.shape}, cost expects dimension {d}")
    return w


def dual_norm(weights, cost: CostModel) -> float:
    """``||Sigma^{-1/2} weights||_q`` for the cost's dual exponent q."""
    w = _check_dims(weights, cost.dim)
    return float(p_norm(w / np.sqrt(cost.eigenvalues), cost.norm.q))


def dual_norms_inverse(weights: np.ndarray, inv_eig: np.ndarray, norm: PNormSpec) -> np.ndarray:
    """Dual norms for each row of a matrix of inverse eigenvalues."""
    return p_norm(np.asarray(weights) * np.sqrt(inv_eig), norm.q, axis=-1)


def dual_direction(w: np.ndarray, norm: PNormSpec) -> np.ndarray:
    """Unit-p-norm maximizer ``s`` of ``w @ s``, along the last axis.

    This is also a subgradient of ``||w||_q``. Ties for q = inf go to the
    lowest index; zero rows map to zero.
    """
    w = np.asarray(w, dtype=float)
    if norm.regime == "inf":  # q = 1
        return np.sign(w)
    if norm.regime == "one":  # q = inf
        a = np.abs(w)
        j = np.argmax(a, axis=-1)
        s = np.zeros_like(w)
        picked = np.take_along_axis(w, np.expand_dims(j, -1), axis=-1)
        np.put_along_axis(s, np.expand_dims(j, -1), np.sign(picked), axis=-1)
        return s
    q = norm.q
    nrm = np.expand_dims(p_norm(w, q, axis=-1), -1)
    safe = np.where(nrm > 0, nrm, 1.0)
    return np.where(nrm > 0, np.sign(w) * (np.abs(w) / safe) ** (q - 1), 0.0)


def dual_norm_subgradient(weights, cost: CostModel) -> np.ndarray:
    """A subgradient of ``beta -> ||Sigma^{-1/2} beta||_q`` at ``weights``."""
    w = _check_dims(weights, cost.dim)
    root = np.sqrt(cost.eigenvalues)
    return dual_direction(w / root, cost.norm) / root


def dual_norm_extrema(weights, cost_set: CostUncertaintySet) -> DualNormExtrema:
    """Minimum (all eigenvalues at ``hi``) and maximum (all at ``lo``) dual norm."""
    w = _check_dims(weights, cost_set.dim)
    q = cost_set.norm.q
    return DualNormExtrema(
        float(p_norm(w / np.sqrt(cost_set.hi), q)), float(p_norm(w / np.sqrt(cost_set.lo), q))
    )


def _solve_eigenvalue(beta_i: float, rest: np.ndarray, target: float, q: float) -> float:
    # rest holds |beta_j| / sqrt(eig_j) for the other coordinates.
    if math.isinf(q):
        return (beta_i / target) ** 2
    if q == 1:
        return (beta_i / (target - float(np.sum(rest)))) ** 2
    frac = float(np.sum((rest / target) ** q))
    return (beta_i / target) ** 2 / (1.0 - frac) ** (2.0 / q)


def cost_achieving_dual_norm(
    weights,
    cost_set: CostUncertaintySet,
    target_k: float,
    tolerance: float = 1e-9,
) -> CostModel:
    """Cost in the box whose dual norm of ``weights`` equals ``target_k``.

    Greedy sweep: start every eigenvalue at ``hi``; drop coordinate ``i`` to
    ``lo[i]`` while that keeps the dual norm below the target, otherwise solve
    for that one eigenvalue in closed form and stop.
    """
    w = _check_dims(weights, cost_set.dim)
    ext = dual_norm_extrema(w, cost_set)
    slack = tolerance * (1.0 + abs(ext.max_val))
    if not ext.min_val - slack <= target_k <= ext.max_val + slack:
        raise TargetRangeError(
            f"target {target_k!r} outside achievable range [{ext.min_val!r}, {ext.max_val!r}]"
        )
    if target_k >= ext.max_val:
        return cost_set.cost_at_lo()
    if target_k <= ext.min_val:
        return cost_set.cost_at_hi()

    norm = cost_set.norm
    eig = np.array(cost_set.hi, dtype=float)
    for i in range(w.size):
        trial = eig.copy()
        trial[i] = cost_set.lo[i]
        if p_norm(w / np.sqrt(trial), norm.q) < target_k:
            eig = trial
            continue
        if w[i] != 0:
            rest = np.abs(np.delete(w / np.sqrt(eig), i))
            sol = _solve_eigenvalue(abs(w[i]), rest, target_k, norm.q)
            eig[i] = min(max(sol, cost_set.lo[i]), cost_set.hi[i])
        break
    else:
        eig = np.array(cost_set.lo, dtype=float)

    result = CostModel(norm, eig)
    achieved = dual_norm(w, result)
    residual = abs(achieved - target_k) / max(abs(target_k), np.finfo(float).tiny)
    if residual > 1e-7:
        raise ReachabilityError(
            f"sweep reached dual norm {achieved!r} for target {target_k!r}", residual
        )
    return result
