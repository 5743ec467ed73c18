"""Empirical convexity checks for the strategic hinge objective.

The shift ``u* ||beta||_*`` enters positive examples with a minus sign, so the
unregularized risk is concave along some directions. Adding
``lambda u* ||beta||_*`` with ``lambda`` at least the positive fraction cancels
that; an l2 penalty of the same size does not, unless it outweighs the
steepest direction of the dual norm.
"""

from __future__ import annotations

from collections.abc import Callable

import numpy as np

from .core import Classifier, CostModel, LabeledDataset, StrategicParams
from .response import movement_budget, strategic_hinge_risk

__all__ = [
    "build_nonconvexity_witness",
    "l2_convexity_threshold",
    "midpoint_convexity_probe",
    "strategic_objective",
]

Objective = Callable[[Classifier], float]
_SLACK = 1e-9


def strategic_objective(
    data: LabeledDataset, cost: CostModel, params: StrategicParams, regularizer: str = "dual"
) -> Objective:
    """Empirical strategic hinge risk plus ``lambda u*`` times a weight norm.

    ``regularizer`` is ``"dual"`` for the cost's dual norm or ``"l2"`` for the
    plain Euclidean norm.
    """
    if regularizer == "dual":
        return lambda clf: strategic_hinge_risk(data, clf, cost, params, regularized=True)
    if regularizer == "l2":
        scale = params.reg_lambda * params.u_star
        return lambda clf: strategic_hinge_risk(data, clf, cost, params) + scale * float(
            np.linalg.norm(clf.weights)
        )
    raise ValueError(f"unknown regularizer {regularizer!r}; expected 'dual' or 'l2'")


def midpoint_convexity_probe(
    objective: Objective,
    domain_bound: float,
    trials: int,
    rng_seed: int,
    dim: int,
) -> tuple[bool, float, tuple[Classifier, Classifier]]:
    """Check ``f((a+b)/2) <= (f(a)+f(b))/2`` on random pairs in a ball.

    Pairs ``(weights, bias)`` are drawn uniformly from the ball of radius
    ``domain_bound`` in ``dim + 1`` dimensions. Returns whether every probe
    passed (up to 1e-9), the largest signed violation, and the pair that
    produced it.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if dim < 1:
        raise ValueError("dim must be >= 1")
    rng = np.random.default_rng(rng_seed)
    k = dim + 1

    def draw() -> np.ndarray:
        g = rng.standard_normal(k)
        return g / np.linalg.norm(g) * domain_bound * rng.random() ** (1.0 / k)

    worst, witness = -np.inf, None
    for _ in range(trials):
        a, b = draw(), draw()
        ca, cb = Classifier.from_vector(a), Classifier.from_vector(b)
        gap = objective(Classifier.from_vector(0.5 * (a + b))) - 0.5 * (objective(ca) + objective(cb))
        if gap > worst:
            worst, witness = gap, (ca, cb)
    return bool(worst <= _SLACK), float(worst), witness


def l2_convexity_threshold(cost: CostModel, tau_plus: float) -> float:
    """``tau_plus / sigma_d``: the l2 strength below which the witness breaks convexity."""
    return float(tau_plus * np.max(1.0 / np.sqrt(cost.eigenvalues)))


def build_nonconvexity_witness(
    set_sigma: CostModel,
    tau_plus: float,
    u_star: float = 1.0,
    n: int = 200,
    spread: float = 1.0,
    anchor: float = 1e-2,
    seed: int = 0,
) -> tuple[LabeledDataset, tuple[Classifier, Classifier]]:
    """Dataset and classifier pair on which l2 regularization fails to convexify.

    The pair is ``(anchor * e_top + spread * e_d, b0)`` and
    ``(anchor * e_top - spread * e_d, b0)``: ``e_d`` is the axis with the
    smallest eigenvalue (the steepest dual-norm direction) and ``e_top`` the
    largest-eigenvalue axis among the rest. ``b0`` is negative enough that
    every negative is inactive and every positive active at all three probe
    points, so the risk there is affine minus ``tau_plus u* ||beta||_*``.
    Midpoint convexity then fails for an l2 strength ``lambda`` with
    ``lambda < tau_plus / sigma_d`` once ``anchor`` is small against ``spread``.
    """
    eig = set_sigma.eigenvalues
    d = eig.size
    if d < 2:
        raise ValueError("the witness needs d >= 2")
    if not 0 < tau_plus <= 1:
        raise ValueError("tau_plus must lie in (0, 1]")
    if n < 1:
        raise ValueError("n must be >= 1")

    rng = np.random.default_rng(seed)
    n_pos = max(1, round(tau_plus * n))
    labels = np.where(np.arange(n) < n_pos, 1.0, -1.0)
    features = rng.uniform(-1.0, 1.0, size=(n, d))

    steep = int(np.argmin(eig))
    others = np.delete(np.arange(d), steep)
    top = int(others[np.argmax(eig[others])])
    w_plus, w_minus = np.zeros(d), np.zeros(d)
    w_plus[top] = w_minus[top] = anchor
    w_plus[steep], w_minus[steep] = spread, -spread

    params = StrategicParams(u_star)
    x_bound = float(np.max(np.linalg.norm(features, axis=1)))
    reach = max(
        movement_budget(Classifier(w), set_sigma, params) + x_bound * np.linalg.norm(w)
        for w in (w_plus, w_minus, 0.5 * (w_plus + w_minus))
    )
    b0 = -(2.0 + reach)
    data = LabeledDataset(features, labels, set_sigma.norm.p)
    return data, (Classifier(w_plus, b0), Classifier(w_minus, b0))
