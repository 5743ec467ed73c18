"""Agent best responses and the losses and risks built on them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Classifier, CostModel, LabeledDataset, StrategicParams
from .norms import dual_direction, dual_norm

__all__ = [
    "ResponseOutcome",
    "best_response",
    "k_shifted_hinge",
    "k_shifted_hinge_losses",
    "movement_budget",
    "nonstrategic_01_risk",
    "respond",
    "shift_bias_for_known_cost",
    "strategic_01_loss",
    "strategic_01_risk",
    "strategic_hinge_risk",
    "strategic_predictions",
]

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class ResponseOutcome:
    moved: bool
    new_point: np.ndarray
    shift: np.ndarray
    score_before: float
    score_after: float

    @property
    def prediction(self) -> int:
        # A mover lands on the boundary, which counts as positive even if the
        # recomputed score rounds a hair below zero.
        return 1 if self.moved or self.score_before >= 0 else -1


def movement_budget(clf: Classifier, cost: CostModel, params: StrategicParams) -> float:
    """Largest score increase any agent can buy: ``u_star * ||w||_*``."""
    return params.u_star * dual_norm(clf.weights, cost)


def _move_mask(scores: np.ndarray, budget: float, tolerance: float) -> np.ndarray:
    # Spending exactly the full budget has zero net utility, so it is excluded;
    # the slack is relative so that tiny budgets keep their movers.
    return (scores < 0) & (-scores <= budget * (1.0 - tolerance))


def _unit_score_direction(clf: Classifier, cost: CostModel) -> np.ndarray:
    """Cheapest displacement raising the score by exactly one."""
    root = np.sqrt(cost.eigenvalues)
    dn = dual_norm(clf.weights, cost)
    if dn == 0:
        return np.zeros(clf.dim)
    return dual_direction(clf.weights / root, cost.norm) / root / dn


def respond(
    X: np.ndarray,
    clf: Classifier,
    cost: CostModel,
    params: StrategicParams,
    tolerance: float = DEFAULT_TOL,
) -> tuple[np.ndarray, np.ndarray]:
    """Best responses for every row of ``X``; returns ``(moved, new_points)``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != clf.dim or cost.dim != clf.dim:
        raise ValueError("feature, classifier and cost dimensions disagree")
    s = clf.scores(X)
    moved = _move_mask(s, movement_budget(clf, cost, params), tolerance)
    step = np.where(moved, -s, 0.0)
    return moved, X + step[:, None] * _unit_score_direction(clf, cost)


def best_response(
    x,
    clf: Classifier,
    cost: CostModel,
    params: StrategicParams,
    tolerance: float = DEFAULT_TOL,
) -> ResponseOutcome:
    x = np.asarray(x, dtype=float)
    moved, new = respond(x[None, :], clf, cost, params, tolerance)
    new_point = new[0]
    before = float(x @ clf.weights + clf.bias)
    after = float(new_point @ clf.weights + clf.bias) if moved[0] else before
    return ResponseOutcome(bool(moved[0]), new_point, new_point - x, before, after)


def strategic_predictions(
    X: np.ndarray,
    clf: Classifier,
    cost: CostModel,
    params: StrategicParams,
    tolerance: float = DEFAULT_TOL,
) -> np.ndarray:
    """+-1 predictions after every agent best-responds; ``sign(0) = +1``."""
    s = clf.scores(X)
    moved = _move_mask(s, movement_budget(clf, cost, params), tolerance)
    return np.where((s >= 0) | moved, 1.0, -1.0)


def strategic_01_loss(x, y, clf, cost, params, tolerance: float = DEFAULT_TOL) -> int:
    return int(best_response(x, clf, cost, params, tolerance).prediction != y)


def k_shifted_hinge(x, y, clf: Classifier, k: float) -> float:
    """``max(0, 1 - y (w @ x + bias + k))``."""
    score = float(np.asarray(x, dtype=float) @ clf.weights + clf.bias)
    return max(0.0, 1.0 - y * (score + k))


def k_shifted_hinge_losses(X, y, clf: Classifier, k: float) -> np.ndarray:
    return np.maximum(0.0, 1.0 - np.asarray(y) * (clf.scores(X) + k))


def _require_nonempty(data: LabeledDataset):
    if data.n == 0:
        raise ValueError("risk of an empty dataset is undefined")


def strategic_hinge_risk(
    data: LabeledDataset,
    clf: Classifier,
    cost: CostModel,
    params: StrategicParams,
    regularized: bool = False,
) -> float:
    """Mean strategic hinge loss, plus ``lambda * u_star * ||w||_*`` if regularized."""
    _require_nonempty(data)
    k = movement_budget(clf, cost, params)
    risk = float(np.mean(k_shifted_hinge_losses(data.features, data.labels, clf, k)))
    if regularized:
        risk += params.reg_lambda * k
    return risk


def strategic_01_risk(
    data: LabeledDataset,
    clf: Classifier,
    cost: CostModel,
    params: StrategicParams,
    tolerance: float = DEFAULT_TOL,
) -> float:
    _require_nonempty(data)
    pred = strategic_predictions(data.features, clf, cost, params, tolerance)
    return float(np.mean(pred != data.labels))


def nonstrategic_01_risk(data: LabeledDataset, clf: Classifier) -> float:
    _require_nonempty(data)
    pred = np.where(clf.scores(data.features) >= 0, 1.0, -1.0)
    return float(np.mean(pred != data.labels))


def shift_bias_for_known_cost(
    clf: Classifier, cost: CostModel, params: StrategicParams
) -> Classifier:
    """Same weights, bias lowered by the movement budget ``u_star * ||w||_*``."""
    return clf.with_bias(clf.bias - movement_budget(clf, cost, params))
