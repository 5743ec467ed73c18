"""Worst-case cost for a fixed classifier.

For fixed weights the regularized strategic hinge risk depends on the cost only
through the scalar ``k = ||w||_*``, and as a function of ``k`` it is piecewise
linear with one breakpoint per sample. :func:`max_loss_cost` walks those
breakpoints in sorted order, so the maximization over the whole box is exact
and costs ``O(nd + n log n)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Classifier, CostModel, CostUncertaintySet, LabeledDataset, StrategicParams
from .norms import cost_achieving_dual_norm, dual_norm_extrema
from .response import k_shifted_hinge_losses

__all__ = [
    "MaxLossResult",
    "adversarial_risk_certificate",
    "brute_force_max_loss",
    "generalization_slack",
    "max_loss_cost",
    "shifted_risk",
]

_TIE_RTOL = 1e-12


@dataclass(frozen=True)
class MaxLossResult:
    worst_cost: CostModel
    k_star: float
    worst_risk: float
    breakpoints_visited: int


def shifted_risk(
    data: LabeledDataset, clf: Classifier, params: StrategicParams, k
) -> float | np.ndarray:
    """Regularized k-shifted risk ``mean(hinge(s + u k)) + lambda u k``.

    ``k`` is a dual-norm value (not yet multiplied by ``u_star``); array ``k``
    is evaluated elementwise.
    """
    u, lam = params.u_star, params.reg_lambda
    k_arr = np.atleast_1d(np.asarray(k, dtype=float))
    s = clf.scores(data.features)
    losses = np.maximum(0.0, 1.0 - data.labels[None, :] * (s[None, :] + u * k_arr[:, None]))
    out = losses.mean(axis=1) + lam * u * k_arr
    return float(out[0]) if np.ndim(k) == 0 else out


def _breakpoints(data: LabeledDataset, clf: Classifier, u: float) -> np.ndarray:
    # Sample i changes slope where u * k = y_i (1 - y_i s_i).
    y = data.labels
    return y * (1.0 - y * clf.scores(data.features)) / u


def max_loss_cost(
    data: LabeledDataset,
    clf: Classifier,
    cost_set: CostUncertaintySet,
    params: StrategicParams,
) -> MaxLossResult:
    """Exact maximizer over the box of the regularized strategic hinge risk.

    Flat maxima resolve to the largest maximizing ``k``; with ``u_star = 0``
    the risk is constant and the all-``hi`` cost is returned.
    """
    if data.n == 0:
        raise ValueError("max_loss_cost needs a non-empty dataset")
    w = clf.weights
    ext = dual_norm_extrema(w, cost_set)
    kmin, kmax = ext.min_val, ext.max_val
    u, lam, n = params.u_star, params.reg_lambda, data.n

    if u == 0 or kmax <= kmin:
        k_star = kmin
        return MaxLossResult(
            cost_set.cost_at_hi(), k_star, shifted_risk(data, clf, params, k_star), 0
        )

    kb = _breakpoints(data, clf, u)
    pos = np.sort(kb[data.labels == 1])
    neg = np.sort(kb[data.labels == -1])
    interior = np.sort(kb[(kb > kmin) & (kb < kmax)])
    ks = np.concatenate(([kmin], interior, [kmax]))

    # Slope on (ks[j], ks[j+1]): negatives already past their breakpoint add
    # u/n, positives not yet past theirs subtract u/n.
    starts = ks[:-1]
    active_pos = pos.size - np.searchsorted(pos, starts, side="right")
    active_neg = np.searchsorted(neg, starts, side="right")
    slopes = u * (lam + (active_neg - active_pos) / n)
    r = shifted_risk(data, clf, params, kmin) + np.concatenate(
        ([0.0], np.cumsum(slopes * np.diff(ks)))
    )

    r_max = float(np.max(r))
    near = np.flatnonzero(r >= r_max - _TIE_RTOL * (1.0 + abs(r_max)))
    j = int(near[-1])
    k_star = float(ks[j])
    if j == ks.size - 1:
        worst = cost_set.cost_at_lo()
    elif j == 0:
        worst = cost_set.cost_at_hi()
    else:
        worst = cost_achieving_dual_norm(w, cost_set, k_star)
    return MaxLossResult(worst, k_star, shifted_risk(data, clf, params, k_star), int(interior.size))


def brute_force_max_loss(
    data: LabeledDataset,
    clf: Classifier,
    cost_set: CostUncertaintySet,
    params: StrategicParams,
    grid_size: int = 1000,
) -> tuple[float, float]:
    """Direct evaluation on a uniform grid plus every interior breakpoint."""
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    if data.n == 0:
        raise ValueError("brute_force_max_loss needs a non-empty dataset")
    ext = dual_norm_extrema(clf.weights, cost_set)
    if ext.max_val <= ext.min_val:
        return ext.min_val, shifted_risk(data, clf, params, ext.min_val)
    ks = np.linspace(ext.min_val, ext.max_val, grid_size)
    if params.u_star > 0:
        kb = _breakpoints(data, clf, params.u_star)
        ks = np.union1d(ks, kb[(kb > ext.min_val) & (kb < ext.max_val)])
    risks = shifted_risk(data, clf, params, ks)
    j = int(np.flatnonzero(risks == risks.max())[-1])
    return float(ks[j]), float(risks[j])


def generalization_slack(
    dual_norm_bound: float, x_max: float, u_star: float, confidence_delta: float, n: int
) -> float:
    """``(B (4X + u_star) + 3 sqrt(ln(1/delta))) / sqrt(n)``."""
    if not 0 < confidence_delta < 1:
        raise ValueError("confidence_delta must lie in (0, 1)")
    if n < 1:
        raise ValueError("need at least one sample")
    num = dual_norm_bound * (4.0 * x_max + u_star) + 3.0 * math.sqrt(math.log(1.0 / confidence_delta))
    return num / math.sqrt(n)


def adversarial_risk_certificate(
    data: LabeledDataset,
    clf: Classifier,
    cost_set: CostUncertaintySet,
    params: StrategicParams,
    confidence_delta: float,
    dual_norm_bound: float,
) -> float:
    """High-probability upper bound on the worst-case strategic 0-1 risk.

    Uses the unregularized worst-case empirical hinge risk; the bound holds
    uniformly over the box, so the regularizer is not needed here.
    """
    slack = generalization_slack(
        dual_norm_bound, data.feature_bound(cost_set.norm), params.u_star, confidence_delta, data.n
    )
    worst = max_loss_cost(data, clf, cost_set, params.unregularized()).worst_risk
    return worst + slack
