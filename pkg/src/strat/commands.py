"""Implementations behind the ``strat`` subcommands.

Each command takes a parsed :class:`~strat.config.ExperimentConfig` and an
output directory, writes its files there, and returns nothing; errors
propagate to :mod:`strat.cli`, which maps them to exit codes.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .adversary import adversarial_risk_certificate, generalization_slack, max_loss_cost
from .analysis import (
    GaussianSetup,
    build_two_plane,
    curve_setup,
    gaussian_excess_risk,
    monte_carlo_excess_risk,
    zero_error_band,
)
from .config import ConfigError, ExperimentConfig
from .core import (
    Classifier,
    CostModel,
    CostUncertaintySet,
    LabeledDataset,
    PNormSpec,
    SolveConfig,
    StrategicParams,
)
from .data import (
    RngSpec,
    format_number,
    load_csv,
    load_model,
    sample_gaussian_mixture,
    sample_two_plane,
    save_model,
    write_table,
)
from .response import nonstrategic_01_risk, shift_bias_for_known_cost, strategic_01_risk
from .solvers import solve_smda, solve_subgradient

__all__ = ["cmd_eval", "cmd_hardness", "cmd_shift", "cmd_train"]


def _header(cfg: ExperimentConfig) -> list[str]:
    return [f"config_hash=sha256:{cfg.digest}"]


def _cost_set(cfg: ExperimentConfig) -> CostUncertaintySet:
    p = cfg.get("cost_set", "p", 2.0)
    lo, hi = cfg.require("cost_set", "lo"), cfg.require("cost_set", "hi")
    try:
        return CostUncertaintySet(PNormSpec(p), lo, hi)
    except ValueError as exc:
        raise ConfigError(f"[cost_set] {exc}") from None


def _params(cfg: ExperimentConfig) -> StrategicParams:
    try:
        return StrategicParams(cfg.require("strategic", "u_star"), cfg.get("strategic", "lambda", 0.0))
    except ValueError as exc:
        raise ConfigError(f"[strategic] {exc}") from None


def _solve_config(cfg: ExperimentConfig) -> SolveConfig:
    s = cfg.section("solve")
    try:
        return SolveConfig(
            iterations=cfg.require("solve", "T"),
            dual_norm_bound=cfg.require("solve", "B"),
            step_scale=s["step_scale"],
            seed=s["seed"],
            epsilon=s.get("epsilon"),
            project_to_ball=s["project_to_ball"],
            q_regularized=s["q_regularized"],
            confidence_delta=s["delta"],
        )
    except ValueError as exc:
        raise ConfigError(f"[solve] {exc}") from None


def _dataset(cfg: ExperimentConfig, p: float) -> LabeledDataset:
    if "path" in cfg.section("data"):
        path = cfg.resolve(cfg.require("data", "path"))
        if not path.is_file():
            raise ConfigError(f"[data] path does not exist: {path}")
        return load_csv(path, p)
    gen = cfg.require("data", "generator")
    if gen != "gaussian":
        raise ConfigError(f"[data] generator must be 'gaussian', got {gen!r}")
    mu0 = np.asarray(cfg.require("data", "mu0"))
    ident = CostModel(PNormSpec(p), np.ones(mu0.size))
    setup = GaussianSetup(mu0, cfg.require("data", "sigma_sq"), ident, ident, 0.0)
    return sample_gaussian_mixture(setup, cfg.require("data", "n"), RngSpec(cfg.get("data", "seed", 0)))


def _check_dims(data: LabeledDataset, cost_set: CostUncertaintySet, clf: Classifier | None = None):
    if data.d != cost_set.dim:
        raise ConfigError(f"dataset has d={data.d} but [cost_set] has {cost_set.dim} intervals")
    if clf is not None and clf.dim != data.d:
        raise ConfigError(f"model has d={clf.dim} but dataset has d={data.d}")


def cmd_train(cfg: ExperimentConfig, out: Path) -> None:
    cost_set, params, solve = _cost_set(cfg), _params(cfg), _solve_config(cfg)
    data = _dataset(cfg, cost_set.norm.p)
    _check_dims(data, cost_set)
    if cfg.get("solve", "method") == "smda":
        report = solve_smda(data, cost_set, params, solve, batch_size=cfg.get("solve", "batch_size"))
    else:
        report = solve_subgradient(data, cost_set, params, solve)

    head = _header(cfg)
    save_model(report.classifier, out / "model.csv", head)
    rows = [[i, r] for i, r in enumerate(report.risk_trace, start=1)]
    rows.append(["final", report.worst_empirical_risk])
    write_table(out / "report.csv", ["iteration", "worst_risk"], rows, head)

    slack = generalization_slack(
        solve.dual_norm_bound, data.feature_bound(cost_set.norm), params.u_star, solve.confidence_delta, data.n
    )
    plain = max_loss_cost(data, report.classifier, cost_set, params.unregularized()).worst_risk
    lines = [f"# {c}" for c in head] + [
        f"certificate={format_number(report.certificate)}",
        f"worst_hinge_unregularized={format_number(plain)}",
        f"slack={format_number(slack)}",
        f"B={format_number(solve.dual_norm_bound)}",
        f"X={format_number(data.feature_bound(cost_set.norm))}",
        f"u_star={format_number(params.u_star)}",
        f"delta={format_number(solve.confidence_delta)}",
        f"n={data.n}",
    ]
    (out / "certificate.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_eval(cfg: ExperimentConfig, model_path: Path, out: Path) -> None:
    cost_set, params = _cost_set(cfg), _params(cfg)
    data = _dataset(cfg, cost_set.norm.p)
    clf = load_model(model_path)
    _check_dims(data, cost_set, clf)
    delta = cfg.get("solve", "delta", 0.05)
    B = cfg.get("solve", "B")
    if B is None:
        raise ConfigError("[solve] is missing required key 'B'")

    reg = max_loss_cost(data, clf, cost_set, params)
    plain = max_loss_cost(data, clf, cost_set, params.unregularized())
    zero_one = strategic_01_risk(data, clf, plain.worst_cost, params)
    cert = adversarial_risk_certificate(data, clf, cost_set, params, delta, B)
    eig_cols = [f"eig{j}" for j in range(cost_set.dim)]
    columns = ["k_star", *eig_cols, "worst_hinge_regularized", "worst_hinge", "worst_01", "certificate"]
    row = [plain.k_star, *plain.worst_cost.eigenvalues, reg.worst_risk, plain.worst_risk, zero_one, cert]
    write_table(out / "eval.csv", columns, [row], _header(cfg))


def _cost(section: str, key: str, eig, p: float) -> CostModel:
    try:
        return CostModel(PNormSpec(p), eig)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: {exc}") from None


def _hardness_twoplane(cfg: ExperimentConfig, out: Path) -> None:
    h = cfg.section("hardness")
    params = _params(cfg)
    p = cfg.get("cost_set", "p", 2.0)
    c1 = _cost("hardness", "c1", cfg.require("hardness", "c1"), p)
    c2 = _cost("hardness", "c2", cfg.require("hardness", "c2"), p)
    beta = cfg.require("hardness", "beta_star")
    try:
        dist = build_two_plane(c1, c2, h["eps_mix"], h["B"], params, beta)
    except ValueError as exc:
        raise ConfigError(f"[hardness] {exc}") from None
    data = sample_two_plane(dist, h["n_samples"], RngSpec(h["seed"]))
    rows = []
    for name, own, cross in (("c1", dist.c1, dist.c2), ("c2", dist.c2, dist.c1)):
        lo, hi = zero_error_band(dist, own, params, h["alpha"])
        clf = Classifier(h["alpha"] * dist.beta_star, 0.5 * (lo + hi))
        errs = [strategic_01_risk(data, clf, c, params) for c in (own, cross)]
        se = [math.sqrt(e * (1 - e) / data.n) for e in errs]
        rows.append([name, lo, hi, clf.bias, errs[0], se[0], errs[1], se[1]])
    columns = ["band_cost", "band_lo", "band_hi", "bias", "own_error", "own_se", "cross_error", "cross_se"]
    comments = _header(cfg) + [f"r={format_number(dist.r)} swapped={str(dist.swapped).lower()}"]
    write_table(out / "twoplane.csv", columns, rows, comments)


def _hardness_gaussian_curve(cfg: ExperimentConfig, out: Path) -> None:
    h = cfg.section("hardness")
    params = _params(cfg)
    p = cfg.get("cost_set", "p", 2.0)
    d_values = cfg.require("hardness", "d_values")
    errors = cfg.require("hardness", "eigen_errors")
    rows, index = [], 0
    for spec in h["spectra"]:
        for e in errors:
            for d in d_values:
                try:
                    setup = curve_setup(d, spec, e, params.u_star, p)
                except ValueError as exc:
                    raise ConfigError(f"[hardness] {exc}") from None
                est, se = monte_carlo_excess_risk(setup, h["n_samples"], h["seed"] + index)
                rows.append([d, spec, e, gaussian_excess_risk(setup), est, se])
                index += 1
    columns = ["d", "spectrum", "eigen_error", "closed_form", "monte_carlo", "std_err"]
    write_table(out / "gaussian_curve.csv", columns, rows, _header(cfg))


def cmd_hardness(cfg: ExperimentConfig, which: str, out: Path) -> None:
    if which == "twoplane":
        _hardness_twoplane(cfg, out)
    elif which == "gaussian-curve":
        _hardness_gaussian_curve(cfg, out)
    else:
        raise ConfigError(f"unknown hardness construction {which!r}")


def cmd_shift(cfg: ExperimentConfig, model_path: Path, out: Path) -> None:
    cost_set, params = _cost_set(cfg), _params(cfg)
    if not cost_set.is_singleton:
        raise ConfigError("bias shift requires a known cost: [cost_set] lo must equal hi")
    cost = cost_set.cost_at_lo()
    clf = load_model(model_path)
    data = _dataset(cfg, cost_set.norm.p)
    _check_dims(data, cost_set, clf)
    shifted = shift_bias_for_known_cost(clf, cost, params)
    save_model(shifted, out / "shifted_model.csv", _header(cfg))
    before = nonstrategic_01_risk(data, clf)
    after = strategic_01_risk(data, shifted, cost, params)
    line = (
        f"nonstrategic_risk_original={format_number(before)} "
        f"strategic_risk_shifted={format_number(after)} equal={str(before == after).lower()}"
    )
    (out / "shift_check.txt").write_text(f"# {_header(cfg)[0]}\n{line}\n", encoding="utf-8")
