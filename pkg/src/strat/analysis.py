"""Hardness constructions and the Gaussian excess-risk closed form.

Two results live here. Two costs whose dual norms differ admit a distribution
on which every zero-error classifier for one cost fails badly under the other
(:func:`build_two_plane`, :func:`zero_error_band`). For an isotropic Gaussian
mixture, the excess 0-1 risk of the plug-in classifier built from a wrong
cost has a closed form (:func:`gaussian_excess_risk`).
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .core import Classifier, CostModel, LabeledDataset, PNormSpec, StrategicParams
from .data import RngSpec, sample_gaussian_mixture
from .norms import dual_norm
from .response import strategic_predictions

__all__ = [
    "SPECTRA",
    "GaussianSetup",
    "TwoPlaneDistribution",
    "build_two_plane",
    "excess_risk_curve",
    "gaussian_excess_risk",
    "monte_carlo_excess_risk",
    "plug_in_classifiers",
    "zero_error_band",
]

_THICKNESS_FRACTION = 0.01


@dataclass(frozen=True)
class TwoPlaneDistribution:
    """Negatives on ``beta_star @ x = -r``, positives on ``+r``, slab-thickened.

    ``c1`` and ``c2`` are stored in the order that makes ``r > 0``;
    ``swapped`` records whether the caller's order was reversed.
    """

    beta_star: np.ndarray
    r: float
    eps_mix: float
    thickness: float
    c1: CostModel
    c2: CostModel
    dual_norm_bound: float
    swapped: bool = False

    def __post_init__(self):
        beta = np.array(self.beta_star, dtype=float)
        if beta.ndim != 1 or not np.any(beta != 0):
            raise ValueError("beta_star must be a non-zero vector")
        if not self.r > 0:
            raise ValueError("plane offset r must be positive")
        if not 0 <= self.eps_mix <= 0.5:
            raise ValueError("eps_mix must lie in [0, 1/2]")
        if not 0 < self.thickness < 2 * self.r:
            raise ValueError("thickness must lie in (0, 2r)")
        beta.setflags(write=False)
        object.__setattr__(self, "beta_star", beta)

    @property
    def dim(self) -> int:
        return self.beta_star.size


def build_two_plane(
    c1: CostModel,
    c2: CostModel,
    eps_mix: float,
    B: float,
    params: StrategicParams,
    beta_star,
    tolerance: float = 1e-9,
) -> TwoPlaneDistribution:
    """``r = u* ||beta*||_2 / (3B) * (||beta*||_{*,c1} - ||beta*||_{*,c2})``."""
    beta = np.asarray(beta_star, dtype=float)
    if not B > 0:
        raise ValueError("B must be positive")
    if np.linalg.norm(beta) > B * (1 + 1e-12):
        raise ValueError("beta_star must satisfy ||beta_star||_2 <= B")
    n1, n2 = dual_norm(beta, c1), dual_norm(beta, c2)
    if abs(n1 - n2) <= tolerance * (1.0 + max(n1, n2)):
        raise ValueError("the two costs give beta_star the same dual norm; no separating construction")
    if params.u_star <= 0:
        raise ValueError("u_star must be positive for the construction")
    r = params.u_star * float(np.linalg.norm(beta)) / (3.0 * B) * (n1 - n2)
    swapped = r < 0
    if swapped:
        c1, c2, r = c2, c1, -r
    return TwoPlaneDistribution(beta, r, eps_mix, _THICKNESS_FRACTION * r, c1, c2, B, swapped)


def zero_error_band(
    dist: TwoPlaneDistribution, cost: CostModel, params: StrategicParams, alpha: float
) -> tuple[float, float]:
    """Half-open bias interval ``[lo, hi)`` on which ``alpha * beta_star`` errs nowhere.

    With budget ``K = u* ||beta_star||_{*,c}`` the band is
    ``[-alpha (K + r), -alpha (K - r))``.
    """
    a_max = dist.dual_norm_bound / float(np.linalg.norm(dist.beta_star))
    if not 0 < alpha <= a_max * (1 + 1e-12):
        raise ValueError(f"alpha must lie in (0, {a_max!r}]")
    k = params.u_star * dual_norm(dist.beta_star, cost)
    return -alpha * (k + dist.r), -alpha * (k - dist.r)


@dataclass(frozen=True)
class GaussianSetup:
    """Mixture ``x | y ~ N(y mu0, sigma_sq I)`` with balanced labels."""

    mu0: np.ndarray
    sigma_sq: float
    true_cost: CostModel
    assumed_cost: CostModel
    u_star: float
    mu_norm: float = field(init=False)

    def __post_init__(self):
        mu = np.array(self.mu0, dtype=float)
        if mu.ndim != 1:
            raise ValueError("mu0 must be a vector")
        if not self.sigma_sq > 0:
            raise ValueError("sigma_sq must be positive")
        if self.true_cost.dim != mu.size or self.assumed_cost.dim != mu.size:
            raise ValueError("cost and mean dimensions disagree")
        if self.u_star < 0:
            raise ValueError("u_star must be >= 0")
        mu.setflags(write=False)
        object.__setattr__(self, "mu0", mu)
        object.__setattr__(self, "mu_norm", float(np.linalg.norm(mu)))

    @property
    def dim(self) -> int:
        return self.mu0.size

    @property
    def shift(self) -> float:
        """``u* |dual norm under the assumed cost - under the true cost| / ||mu0||``."""
        if self.mu_norm == 0:
            raise ValueError("mu0 = 0 leaves the threshold shift undefined")
        gap = dual_norm(self.mu0, self.assumed_cost) - dual_norm(self.mu0, self.true_cost)
        return self.u_star * abs(gap) / self.mu_norm


def gaussian_excess_risk(setup: GaussianSetup) -> float:
    """``Phi(m/s) - (Phi((m - e)/s) + Phi((m + e)/s)) / 2`` with ``m = ||mu0||``."""
    m, s, e = setup.mu_norm, math.sqrt(setup.sigma_sq), setup.shift
    return float(ndtr(m / s) - 0.5 * (ndtr((m - e) / s) + ndtr((m + e) / s)))


def plug_in_classifiers(setup: GaussianSetup) -> tuple[Classifier, Classifier]:
    """``(beta_hat, beta_star)``: weights ``2 mu0`` with bias ``-2 u* ||mu0||_*`` per cost."""
    w = 2.0 * setup.mu0
    hat = Classifier(w, -2.0 * setup.u_star * dual_norm(setup.mu0, setup.assumed_cost))
    star = Classifier(w, -2.0 * setup.u_star * dual_norm(setup.mu0, setup.true_cost))
    return hat, star


def monte_carlo_excess_risk(
    setup: GaussianSetup, n_samples: int, seed: int, stream_id: int = 0
) -> tuple[float, float]:
    """Paired estimate of the excess strategic 0-1 risk under the true cost.

    Both plug-in classifiers are scored on the same draws; the standard error
    is that of the per-sample loss difference.
    """
    if n_samples < 1000:
        raise ValueError("n_samples must be >= 1000")
    data = sample_gaussian_mixture(setup, n_samples, RngSpec(seed, stream_id))
    params = StrategicParams(setup.u_star)
    hat, star = plug_in_classifiers(setup)
    wrong = [
        strategic_predictions(data.features, clf, setup.true_cost, params) != data.labels
        for clf in (hat, star)
    ]
    diff = wrong[0].astype(float) - wrong[1].astype(float)
    return float(diff.mean()), float(diff.std(ddof=1) / math.sqrt(n_samples))


SPECTRA: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "constant": lambda k: np.ones_like(k),
    "harmonic": lambda k: 1.0 / k,
    "geometric": lambda k: 2.0**-k,
    "polynomial": lambda k: k**-2.0,
}


def spectrum(name: str, d: int) -> np.ndarray:
    if name not in SPECTRA:
        raise ValueError(f"unknown spectrum {name!r}; supported: {', '.join(sorted(SPECTRA))}")
    return SPECTRA[name](np.arange(1, d + 1, dtype=float))


def curve_setup(d: int, spectrum_name: str, eigen_error: float, u_star: float, p: float = 2.0) -> GaussianSetup:
    """``mu0 = d^{-1/2} 1``, ``sigma^2 = 1/d``, assumed cost ``(1 - eigen_error)`` times the true one."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if not 0 <= eigen_error < 1:
        raise ValueError("eigen_error must lie in [0, 1)")
    eig = spectrum(spectrum_name, d)
    norm = PNormSpec(p)
    return GaussianSetup(
        np.full(d, d**-0.5),
        1.0 / d,
        CostModel(norm, eig),
        CostModel(norm, (1.0 - eigen_error) * eig),
        u_star,
    )


def excess_risk_curve(
    d_values: Sequence[int],
    spectrum_fn: str,
    eigen_error: float,
    params: StrategicParams,
    p: float = 2.0,
) -> list[tuple[int, float]]:
    return [
        (int(d), gaussian_excess_risk(curve_setup(int(d), spectrum_fn, eigen_error, params.u_star, p)))
        for d in d_values
    ]


def two_plane_sample_check(dist: TwoPlaneDistribution, data: LabeledDataset) -> float:
    """Largest distance of a sample's projected offset from its own plane."""
    offset = data.features @ dist.beta_star
    return float(np.max(np.abs(offset - data.labels * dist.r)))
