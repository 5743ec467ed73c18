"""Shared domain types and derived constants.

Every type here is a frozen dataclass; array fields are copied on construction
and marked read-only, so instances can be shared freely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Classifier",
    "CostModel",
    "CostUncertaintySet",
    "LabeledDataset",
    "PNormSpec",
    "SolveConfig",
    "StrategicParams",
    "lipschitz_constants",
    "p_norm",
]

INF = math.inf


def _frozen_array(values, name: str, ndim: int) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PNormSpec:
    """A p-norm exponent together with its dual exponent q."""

    p: float
    q: float = field(init=False)

    def __post_init__(self):
        p = float(self.p)
        if math.isnan(p) or p < 1:
            raise ValueError(f"norm exponent must satisfy p >= 1, got {self.p}")
        if p == 1:
            q = INF
        elif math.isinf(p):
            q = 1.0
        else:
            q = p / (p - 1)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @property
    def regime(self) -> str:
        """One of ``"one"``, ``"finite"``, ``"inf"`` for p = 1, 1 < p < inf, p = inf."""
        if self.p == 1:
            return "one"
        if math.isinf(self.p):
            return "inf"
        return "finite"


def p_norm(x: np.ndarray, p: float, axis: int = -1) -> np.ndarray:
    """p-norm along ``axis``, rescaled by the max magnitude so large p cannot overflow."""
    a = np.abs(np.asarray(x, dtype=float))
    if p == 1:
        return np.sum(a, axis=axis)
    if p == 2:
        with np.errstate(over="ignore", under="ignore"):
            r = np.sqrt(np.sum(a * a, axis=axis))
        if np.all((r > 1e-150) & (r < 1e150)):
            return r
    m = np.max(a, axis=axis)
    if math.isinf(p):
        return m
    safe = np.where(m > 0, m, 1.0)
    scaled = a / np.expand_dims(safe, axis)
    # A norm past the float range is reported as inf.
    with np.errstate(over="ignore"):
        return np.where(m > 0, safe * np.sum(scaled**p, axis=axis) ** (1.0 / p), 0.0)


@dataclass(frozen=True)
class Classifier:
    """Linear rule ``sign(weights @ x + bias)``; norms never touch the bias."""

    weights: np.ndarray
    bias: float = 0.0

    def __post_init__(self):
        w = _frozen_array(self.weights, "weights", 1)
        if w.size < 1:
            raise ValueError("classifier needs at least one weight")
        b = float(self.bias)
        if not math.isfinite(b):
            raise ValueError("bias must be finite")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def dim(self) -> int:
        return self.weights.size

    @classmethod
    def zeros(cls, d: int) -> "Classifier":
        return cls(np.zeros(d), 0.0)

    def scores(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.weights + self.bias

    def with_bias(self, bias: float) -> "Classifier":
        return Classifier(self.weights, bias)

    def as_vector(self) -> np.ndarray:
        return np.append(self.weights, self.bias)

    @classmethod
    def from_vector(cls, theta: np.ndarray) -> "Classifier":
        theta = np.asarray(theta, dtype=float)
        return cls(theta[:-1], float(theta[-1]))


@dataclass(frozen=True)
class CostModel:
    """Cost ``phi(||diag(eigenvalues)^{1/2} (x' - x)||_p)`` in the identity basis."""

    norm: PNormSpec
    eigenvalues: np.ndarray

    def __post_init__(self):
        eig = _frozen_array(self.eigenvalues, "eigenvalues", 1)
        if eig.size < 1 or np.any(eig <= 0):
            raise ValueError("cost eigenvalues must be strictly positive")
        object.__setattr__(self, "eigenvalues", eig)

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    @classmethod
    def identity(cls, d: int, p: float = 2.0) -> "CostModel":
        return cls(PNormSpec(p), np.ones(d))


@dataclass(frozen=True)
class CostUncertaintySet:
    """Box of per-dimension eigenvalue intervals ``[lo[i], hi[i]]``."""

    norm: PNormSpec
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = _frozen_array(self.lo, "lo", 1)
        hi = _frozen_array(self.hi, "hi", 1)
        if lo.shape != hi.shape or lo.size < 1:
            raise ValueError("lo and hi must be non-empty vectors of equal length")
        if np.any(lo <= 0):
            raise ValueError("eigenvalue lower bounds must be strictly positive")
        if np.any(lo > hi):
            raise ValueError("every interval needs lo[i] <= hi[i]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.size

    @property
    def diameter(self) -> float:
        """Largest width of the inverse-eigenvalue box, ``max_i 1/lo[i] - 1/hi[i]``."""
        return float(np.max(1.0 / self.lo - 1.0 / self.hi))

    @property
    def is_singleton(self) -> bool:
        return bool(np.all(self.lo == self.hi))

    def cost_at_lo(self) -> CostModel:
        return CostModel(self.norm, self.lo)

    def cost_at_hi(self) -> CostModel:
        return CostModel(self.norm, self.hi)

    def contains(self, cost: CostModel, rtol: float = 1e-12) -> bool:
        e = cost.eigenvalues
        return bool(
            e.shape == self.lo.shape
            and np.all(e >= self.lo * (1 - rtol))
            and np.all(e <= self.hi * (1 + rtol))
        )

    @classmethod
    def singleton(cls, cost: CostModel) -> "CostUncertaintySet":
        return cls(cost.norm, cost.eigenvalues, cost.eigenvalues)


@dataclass(frozen=True)
class StrategicParams:
    """Movement radius ``u_star`` and dual-norm regularization strength."""

    u_star: float
    reg_lambda: float = 0.0

    def __post_init__(self):
        u, lam = float(self.u_star), float(self.reg_lambda)
        if not (math.isfinite(u) and u >= 0):
            raise ValueError(f"u_star must be finite and >= 0, got {self.u_star}")
        if not (math.isfinite(lam) and lam >= 0):
            raise ValueError(f"reg_lambda must be finite and >= 0, got {self.reg_lambda}")
        object.__setattr__(self, "u_star", u)
        object.__setattr__(self, "reg_lambda", lam)

    def unregularized(self) -> "StrategicParams":
        return StrategicParams(self.u_star, 0.0)


@dataclass(frozen=True)
class LabeledDataset:
    """Feature matrix with +-1 labels.

    ``x_max`` is cached for the dataset's own norm ``p``; use
    :meth:`feature_bound` when a different cost norm is in play.
    """

    features: np.ndarray
    labels: np.ndarray
    p: float = 2.0
    x_max: float = field(init=False)

    def __post_init__(self):
        X = _frozen_array(self.features, "features", 2)
        y = np.array(self.labels, dtype=float, copy=True)
        if y.ndim != 1 or y.size != X.shape[0]:
            raise ValueError("labels must be a vector with one entry per row")
        if X.shape[1] < 1:
            raise ValueError("features need at least one column")
        bad = np.flatnonzero((y != 1) & (y != -1))
        if bad.size:
            raise ValueError(f"label at row {bad[0]} is {y[bad[0]]!r}, expected -1 or +1")
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "p", PNormSpec(self.p).p)
        object.__setattr__(self, "x_max", self.feature_bound(PNormSpec(self.p)))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def positive_fraction(self) -> float:
        return float(np.mean(self.labels == 1)) if self.n else 0.0

    def feature_bound(self, norm: PNormSpec) -> float:
        """``max_i max(||x_i||_p, ||x_i||_2)``; 0 for an empty dataset."""
        if self.n == 0:
            return 0.0
        return float(max(np.max(p_norm(self.features, norm.p)), np.max(p_norm(self.features, 2))))

    def subset(self, idx) -> "LabeledDataset":
        return LabeledDataset(self.features[idx], self.labels[idx], self.p)


@dataclass(frozen=True)
class SolveConfig:
    iterations: int
    dual_norm_bound: float
    step_scale: float = 1.0
    seed: int = 0
    tolerance: float = 1e-9
    epsilon: float | None = None
    project_to_ball: bool = False
    q_regularized: bool = True
    confidence_delta: float = 0.05

    def __post_init__(self):
        if int(self.iterations) != self.iterations or self.iterations < 1:
            raise ValueError(f"iterations must be a positive integer, got {self.iterations}")
        if not self.dual_norm_bound > 0:
            raise ValueError("dual_norm_bound must be positive")
        if not self.step_scale > 0:
            raise ValueError("step_scale must be positive")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.epsilon is not None and not 0 < self.epsilon <= 1:
            raise ValueError("epsilon must lie in (0, 1]")
        if not 0 < self.confidence_delta < 1:
            raise ValueError("confidence_delta must lie in (0, 1)")
        object.__setattr__(self, "iterations", int(self.iterations))
        object.__setattr__(self, "seed", int(self.seed) & 0xFFFFFFFFFFFFFFFF)


def lipschitz_constants(
    norm: PNormSpec, d: int, params: StrategicParams, x_max: float
) -> tuple[float, float]:
    """Return ``(L_star, L)``.

    ``L_star = max(1, d^(1/2 - 1/p))`` is the Lipschitz constant of the dual
    norm and ``L = x_max + u_star * (1 + reg_lambda) * L_star`` bounds the
    (preconditioned) loss subgradient.
    """
    if not isinstance(norm, PNormSpec):
        norm = PNormSpec(norm)
    if d < 1:
        raise ValueError("dimension must be >= 1")
    if x_max < 0:
        raise ValueError("x_max must be >= 0")
    if norm.p <= 2:
        l_star = 1.0
    elif math.isinf(norm.p):
        l_star = math.sqrt(d)
    else:
        l_star = max(1.0, d ** (0.5 - 1.0 / norm.p))
    lip = x_max + params.u_star * (1.0 + params.reg_lambda) * l_star
    return l_star, lip
