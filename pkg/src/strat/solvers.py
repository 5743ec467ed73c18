"""Minimax training: full-batch subgradient method and stochastic mirror descent-ascent.

Both minimize ``max_{c in C} [R_c(beta) + lambda u* ||beta||_{*,c}]``.

The subgradient method uses the exact inner maximizer from
:func:`strat.adversary.max_loss_cost` and Danskin's rule: a subgradient of the
max is the subgradient at any maximizing cost. SMDA cannot find the population
maximizer from a minibatch, so it plays exponentiated-gradient ascent over a
finite net of costs laid along the diagonal of the inverse-eigenvalue box.
"""

from __future__ import annotations

import math
import warnings
from collections.abc import Iterable, Iterator
from dataclasses import dataclass

import numpy as np

from .adversary import adversarial_risk_certificate, max_loss_cost
from .core import (
    Classifier,
    CostModel,
    CostUncertaintySet,
    LabeledDataset,
    SolveConfig,
    StrategicParams,
    lipschitz_constants,
)
from .norms import dual_direction, dual_norm, dual_norm_extrema, dual_norm_subgradient, dual_norms_inverse

__all__ = [
    "DiscretizedCostSet",
    "NumericalAbort",
    "SolveReport",
    "build_discretization",
    "dataset_minibatches",
    "hinge_subgradient_at_fixed_cost",
    "solve_smda",
    "solve_subgradient",
]

EPSILON_MIN = 1e-4


class NumericalAbort(ArithmeticError):
    """Raised when an iterate or gradient stops being finite."""

    def __init__(self, message: str, trace: np.ndarray):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class DiscretizedCostSet:
    costs: tuple[CostModel, ...]
    epsilon: float
    direction: np.ndarray
    inverse_eigenvalues: np.ndarray  # one row per cost, nondecreasing down the rows

    def __len__(self) -> int:
        return len(self.costs)


@dataclass(frozen=True)
class SolveReport:
    classifier: Classifier
    worst_empirical_risk: float
    risk_trace: np.ndarray
    iterations_run: int
    certificate: float


def build_discretization(
    cost_set: CostUncertaintySet,
    T: int,
    explicit_epsilon: float | None = None,
    epsilon_min: float = EPSILON_MIN,
) -> DiscretizedCostSet:
    """Net of ``ceil(1/eps)`` costs with inverse eigenvalues ``1/hi + k * v``.

    ``v = eps * (1/lo - 1/hi)``, ``k = 1..ceil(1/eps)``. Without an explicit
    ``eps`` the default is ``ln T / (T * max(D, ln T / T))`` clamped to
    ``[epsilon_min, 1]``; a zero-diameter box gives a single cost.
    """
    if T < 2:
        raise ValueError("discretization needs T >= 2")
    inv_lo, inv_hi = 1.0 / cost_set.lo, 1.0 / cost_set.hi
    width = inv_lo - inv_hi
    D = cost_set.diameter
    if D == 0:
        eps = 1.0
    elif explicit_epsilon is not None:
        if not 0 < explicit_epsilon <= 1:
            raise ValueError("epsilon must lie in (0, 1]")
        eps = float(explicit_epsilon)
    else:
        lnT = math.log(T)
        eps = min(max(lnT / (T * max(D, lnT / T)), epsilon_min), 1.0)
    size = max(1, math.ceil(1.0 / eps - 1e-9))
    v = eps * width
    k = np.arange(1, size + 1, dtype=float)[:, None]
    # The last step can overshoot 1/lo when 1/eps is not an integer.
    inv = np.minimum(inv_hi[None, :] + k * v[None, :], inv_lo[None, :])
    inv.setflags(write=False)
    v.setflags(write=False)
    costs = tuple(CostModel(cost_set.norm, 1.0 / row) for row in inv)
    return DiscretizedCostSet(costs, eps, v, inv)


def hinge_subgradient_at_fixed_cost(
    data: LabeledDataset, clf: Classifier, cost: CostModel, params: StrategicParams
) -> tuple[np.ndarray, float]:
    """Subgradient of ``R_c(beta) + lambda u* ||beta||_*`` with the cost held fixed.

    Samples sitting exactly on the hinge kink count as inactive.
    """
    X, y, n = data.features, data.labels, data.n
    u = params.u_star
    k = u * dual_norm(clf.weights, cost)
    active = 1.0 - y * (clf.scores(X) + k) > 0
    ya = np.where(active, y, 0.0)
    g_w = -(ya @ X) / n
    g_b = -float(np.sum(ya)) / n
    n_neg = np.count_nonzero(active & (y < 0))
    n_pos = np.count_nonzero(active & (y > 0))
    coef = u * ((n_neg - n_pos) / n + params.reg_lambda)
    if coef != 0:
        g_w = g_w + coef * dual_norm_subgradient(clf.weights, cost)
    return g_w, g_b


def _project_weights(w: np.ndarray, cost_set: CostUncertaintySet, bound: float) -> np.ndarray:
    top = dual_norm_extrema(w, cost_set).max_val
    return w * (bound / top) if top > bound else w


def _check_finite(trace: list[float], *arrays) -> None:
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NumericalAbort("non-finite gradient or iterate", np.asarray(trace))


def solve_subgradient(
    data: LabeledDataset,
    cost_set: CostUncertaintySet,
    params: StrategicParams,
    cfg: SolveConfig,
) -> SolveReport:
    """Preconditioned subgradient method on the worst-case regularized risk.

    Step ``eta = step_scale * B / (L sqrt(T))``; the weight block is scaled by
    ``diag(lo)`` and the bias takes a plain step. Returns the iterate with the
    smallest worst-case regularized risk.
    """
    if data.n == 0:
        raise ValueError("training data is empty")
    if params.reg_lambda < data.positive_fraction:
        warnings.warn(
            f"reg_lambda={params.reg_lambda} is below the positive-label fraction "
            f"{data.positive_fraction:.4g}; the objective may be non-convex",
            stacklevel=2,
        )
    T, B = cfg.iterations, cfg.dual_norm_bound
    _, L = lipschitz_constants(cost_set.norm, data.d, params, data.feature_bound(cost_set.norm))
    eta = cfg.step_scale * B / (L * math.sqrt(T))
    precond = cost_set.lo

    w, b = np.zeros(data.d), 0.0
    trace: list[float] = []
    best_risk, best = math.inf, None
    for _ in range(T):
        clf = Classifier(w, b)
        inner = max_loss_cost(data, clf, cost_set, params)
        trace.append(inner.worst_risk)
        if inner.worst_risk < best_risk:
            best_risk, best = inner.worst_risk, clf
        g_w, g_b = hinge_subgradient_at_fixed_cost(data, clf, inner.worst_cost, params)
        _check_finite(trace, g_w, g_b)
        w = w - eta * precond * g_w
        b = b - eta * g_b
        if cfg.project_to_ball:
            w = _project_weights(w, cost_set, B)
        _check_finite(trace, w, b)

    cert = adversarial_risk_certificate(data, best, cost_set, params, cfg.confidence_delta, B)
    return SolveReport(best, best_risk, np.asarray(trace), T, cert)


def dataset_minibatches(
    data: LabeledDataset, batch_size: int, rng: np.random.Generator
) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Endless with-replacement minibatches from a finite dataset."""
    while True:
        idx = rng.integers(0, data.n, size=batch_size)
        yield data.features[idx], data.labels[idx]


class _NetSegments:
    """Batch hinge terms for every net cost at once.

    Along the net the thresholds ``t_k = u* ||w||_{*,c_k}`` are sorted, and
    each sample switches on or off at a single index: a positive is active
    while ``t_k < v_i``, a negative once ``t_k > v_i`` (``v = y (1 - y s)``).
    That cuts the net into at most ``m + 1`` runs with a constant active set,
    so everything S-long is a repeat or an elementwise op.
    """

    def __init__(self, v: np.ndarray, y: np.ndarray, thresh: np.ndarray):
        m, S = v.size, thresh.size
        pos = y > 0
        toggle = np.where(
            pos, np.searchsorted(thresh, v, side="left"), np.searchsorted(thresh, v, side="right")
        )
        order = np.argsort(toggle, kind="stable")
        ts, vs, ps = toggle[order], v[order], pos[order]
        zero = np.zeros(1)
        # Run j has the first j sorted toggles applied.
        off_pos = np.concatenate((zero, np.cumsum(ps)))
        off_pos_v = np.concatenate((zero, np.cumsum(np.where(ps, vs, 0.0))))
        on_neg = np.concatenate((zero, np.cumsum(~ps)))
        on_neg_v = np.concatenate((zero, np.cumsum(np.where(ps, 0.0, vs))))
        n_pos = np.count_nonzero(pos) - off_pos
        sum_pos = float(np.sum(v[pos])) - off_pos_v
        self.lengths = np.diff(np.concatenate(([0], ts, [S])))
        self.slope = np.repeat(on_neg - n_pos, self.lengths)  # (#neg - #pos) active
        intercept = np.repeat(sum_pos - on_neg_v, self.lengths)
        self.hinge = (intercept + self.slope * thresh) / m
        self._order, self._pos_sorted, self._m = order, ps, m

    def active_mass(self, q: np.ndarray) -> np.ndarray:
        """For each sample, the total weight of net costs under which it is active."""
        nonempty = self.lengths > 0
        starts = np.concatenate(([0], np.cumsum(self.lengths)[:-1]))[nonempty]
        run_q = np.zeros(self.lengths.size)
        run_q[nonempty] = np.add.reduceat(q, starts)
        before = np.cumsum(run_q)[:-1]  # mass of k < toggle
        after = np.cumsum(run_q[::-1])[::-1][1:]  # mass of k >= toggle
        mass = np.empty(self._m)
        mass[self._order] = np.where(self._pos_sorted, before, after)
        return mass


def _net_dual_gradient(
    w: np.ndarray, coef: np.ndarray, K: np.ndarray, inv: np.ndarray, root_inv: np.ndarray, norm
) -> np.ndarray:
    """``sum_k coef_k * d||w||_{*,c_k}`` over the net rows, reusing the dual norms ``K``."""
    if norm.q == 2:
        # d||w||_* = inv * w / K for the Euclidean case.
        scale = np.divide(coef, K, out=np.zeros_like(coef), where=K > 0)
        return w * (scale @ inv)
    return coef @ (root_inv * dual_direction(w[None, :] * root_inv, norm))


def solve_smda(
    sample_source: LabeledDataset | Iterable[tuple[np.ndarray, np.ndarray]],
    cost_set: CostUncertaintySet,
    params: StrategicParams,
    cfg: SolveConfig,
    batch_size: int = 32,
    eval_data: LabeledDataset | None = None,
) -> SolveReport:
    """Stochastic mirror descent-ascent over the diagonal cost net.

    ``sample_source`` is either a dataset (sampled with replacement using
    ``cfg.seed``) or any iterable of ``(X, y)`` minibatches, in which case
    ``eval_data`` supplies ``X`` for the step sizes and the final report.
    Default steps: ``eta_beta = B / (L sqrt T)`` and
    ``eta_q = sqrt(2 ln|S| / T) / (1 + B (X + u*))``, both times ``step_scale``.
    Returns the uniform average of the iterates.
    """
    T, B = cfg.iterations, cfg.dual_norm_bound
    if T < 2:
        raise ValueError("solve_smda needs at least 2 iterations")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    if isinstance(sample_source, LabeledDataset):
        eval_data = sample_source if eval_data is None else eval_data
        batches = dataset_minibatches(sample_source, batch_size, np.random.default_rng(cfg.seed))
    else:
        if eval_data is None:
            raise ValueError("a minibatch stream needs eval_data for step sizes and reporting")
        batches = iter(sample_source)

    norm, u, lam = cost_set.norm, params.u_star, params.reg_lambda
    x_max = eval_data.feature_bound(norm)
    _, L = lipschitz_constants(norm, cost_set.dim, params, x_max)
    net = build_discretization(cost_set, T, cfg.epsilon)
    inv = net.inverse_eigenvalues
    root_inv = np.sqrt(inv)
    S = len(net)
    eta_b = cfg.step_scale * B / (L * math.sqrt(T))
    eta_q = cfg.step_scale * math.sqrt(2.0 * math.log(S) / T) / (1.0 + B * (x_max + u))

    d = cost_set.dim
    w, b = np.zeros(d), 0.0
    sum_w, sum_b = np.zeros(d), 0.0
    log_q = np.full(S, -math.log(S))
    # With q in {1, 2, inf} each rounded step is monotone, so K stays sorted
    # along the net; the generic rescaled path needs an explicit fix-up.
    monotone_k = norm.q in (1.0, 2.0, math.inf)
    trace: list[float] = []
    for _ in range(T):
        try:
            Xb, yb = next(batches)
        except StopIteration:
            raise ValueError("minibatch stream ran out before T iterations") from None
        Xb, yb = np.asarray(Xb, dtype=float), np.asarray(yb, dtype=float)
        m = yb.size
        if m == 0:
            raise ValueError("received an empty minibatch")

        s = Xb @ w + b
        v = yb * (1.0 - yb * s)
        K = dual_norms_inverse(w, inv, norm)
        if not monotone_k:
            K = np.maximum.accumulate(K)
        thresh = u * K
        seg = _NetSegments(v, yb, thresh)
        reg_risk = seg.hinge + lam * thresh
        trace.append(float(np.max(reg_risk)))

        log_q = log_q + eta_q * (reg_risk if cfg.q_regularized else seg.hinge)
        top = log_q.max()
        q = np.exp(log_q - top)
        total = q.sum()
        q /= total
        log_q -= top + math.log(total)

        omega = seg.active_mass(q) * yb
        g_w = -(omega @ Xb) / m
        g_b = -float(np.sum(omega)) / m
        if u > 0 and K[-1] > 0:
            coef = q * (u * (lam + seg.slope / m))
            g_w = g_w + _net_dual_gradient(w, coef, K, inv, root_inv, norm)
        _check_finite(trace, g_w, g_b)

        w = w - eta_b * g_w
        b = b - eta_b * g_b
        if cfg.project_to_ball:
            w = _project_weights(w, cost_set, B)
        _check_finite(trace, w, b)
        sum_w += w
        sum_b += b

    avg = Classifier(sum_w / T, sum_b / T)
    worst = max_loss_cost(eval_data, avg, cost_set, params).worst_risk
    cert = adversarial_risk_certificate(eval_data, avg, cost_set, params, cfg.confidence_delta, B)
    return SolveReport(avg, worst, np.asarray(trace), T, cert)
