import math
from pathlib import Path

import numpy as np
import pytest

from strat.adversary import max_loss_cost
from strat.cli import main
from strat.config import ConfigError, load_config
from strat.core import CostModel, CostUncertaintySet, PNormSpec, StrategicParams
from strat.data import load_csv, load_model, read_table, save_model
from strat.core import Classifier

ONE_D_CSV = "x0,y\n2,1\n-2,-1\n0.5,1\n-0.25,-1\n"

TRAIN = """
[cost_set]
p = 2
lo = [0.25]
hi = [4.0]

[strategic]
u_star = 0.5
lambda = 0.5

[solve]
T = 300
B = 1.0

[data]
path = "data.csv"
"""


def _setup(tmp_path, body=TRAIN, data=ONE_D_CSV):
    (tmp_path / "data.csv").write_text(data)
    cfg = tmp_path / "cfg.toml"
    cfg.write_text(body)
    return cfg


def _run(*args):
    return main([str(a) for a in args])


def _last_row(path):
    header, rows = read_table(path)
    return dict(zip(header, rows[-1][1]))


class TestConfig:
    def test_defaults_and_digest(self, tmp_path):
        cfg = load_config(_setup(tmp_path), env={})
        assert cfg.get("solve", "method") == "subgradient"
        assert cfg.get("solve", "seed") == 0
        assert len(cfg.digest) == 64
        override = load_config(_setup(tmp_path), env={"STRAT_SEED": "11"})
        assert override.get("solve", "seed") == 11 and override.digest != cfg.digest

    @pytest.mark.parametrize(
        "edit, match",
        [
            ("[extra]\nx = 1\n", "unknown section"),
            ("[output]\ncolour = 'red'\n", "unknown key"),
        ],
    )
    def test_rejects_unknown(self, tmp_path, edit, match):
        with pytest.raises(ConfigError, match=match):
            load_config(_setup(tmp_path, TRAIN + edit), env={})

    @pytest.mark.parametrize(
        "old, new, match",
        [
            ("T = 300", "T = 2.5", "integer"),
            ("p = 2", "p = 0.5", ">= 1"),
            ("p = 2", 'p = "inf"', None),
            ("B = 1.0", 'B = "one"', "finite number"),
            ('path = "data.csv"', 'path = "data.csv"\ngenerator = "gaussian"', "exactly one"),
            ("T = 300", 'T = 300\nmethod = "newton"', "method"),
        ],
    )
    def test_type_checks(self, tmp_path, old, new, match):
        path = _setup(tmp_path, TRAIN.replace(old, new))
        if match is None:
            assert math.isinf(load_config(path, env={}).get("cost_set", "p"))
        else:
            with pytest.raises(ConfigError, match=match):
                load_config(path, env={})

    def test_bad_seed_override_and_syntax(self, tmp_path):
        with pytest.raises(ConfigError, match="STRAT_SEED"):
            load_config(_setup(tmp_path), env={"STRAT_SEED": "x"})
        with pytest.raises(ConfigError):
            load_config(_setup(tmp_path, "[cost_set\n"), env={})


class TestTrainEval:
    def test_train_outputs(self, tmp_path):
        cfg = _setup(tmp_path)
        assert _run("train", "--config", cfg, "--out", tmp_path / "o") == 0
        out = tmp_path / "o"
        clf = load_model(out / "model.csv")
        final = float(_last_row(out / "report.csv")["worst_risk"])
        box = CostUncertaintySet(PNormSpec(2), [0.25], [4.0])
        fresh = max_loss_cost(load_csv(tmp_path / "data.csv"), clf, box, StrategicParams(0.5, 0.5)).worst_risk
        assert final == pytest.approx(fresh, abs=1e-9)
        for name in ("model.csv", "report.csv", "certificate.txt"):
            assert (out / name).read_text().startswith("# config_hash=sha256:")
        cert = (out / "certificate.txt").read_text()
        assert "certificate=" in cert and "delta=0.050000000000000003" in cert

        assert _run("eval", "--config", cfg, "--model", out / "model.csv", "--out", out) == 0
        row = _last_row(out / "eval.csv")
        assert float(row["worst_hinge_regularized"]) == pytest.approx(final, abs=1e-12)
        assert float(row["certificate"]) >= float(row["worst_01"])

    def test_smda_method(self, tmp_path):
        cfg = _setup(tmp_path, TRAIN.replace("T = 300", 'T = 300\nmethod = "smda"\nbatch_size = 2'))
        assert _run("train", "--config", cfg, "--out", tmp_path) == 0
        assert (tmp_path / "report.csv").is_file()

    def test_output_directory_from_config(self, tmp_path):
        cfg = _setup(tmp_path, TRAIN + '\n[output]\ndirectory = "res"\n')
        assert _run("train", "--config", cfg, "--threads", 1) == 0
        assert (tmp_path / "res" / "model.csv").is_file()

    def test_zero_classifier_eval(self, tmp_path):
        cfg = _setup(tmp_path)
        save_model(Classifier([0.0], 0.0), tmp_path / "zero.csv")
        assert _run("eval", "--config", cfg, "--model", tmp_path / "zero.csv", "--out", tmp_path) == 0
        row = _last_row(tmp_path / "eval.csv")
        assert float(row["worst_hinge"]) == 1.0
        assert float(row["certificate"]) >= float(row["worst_01"])

    @pytest.mark.filterwarnings("ignore:reg_lambda")
    def test_generated_data(self, tmp_path):
        body = TRAIN.replace('path = "data.csv"', 'generator = "gaussian"\nn = 200\nmu0 = [0.5]\nsigma_sq = 0.25')
        assert _run("train", "--config", _setup(tmp_path, body), "--out", tmp_path) == 0

    @pytest.mark.parametrize(
        "body, extra",
        [
            (TRAIN.replace("data.csv", "missing.csv"), ()),
            (TRAIN.replace("u_star = 0.5", "u_star = -1"), ()),
            (TRAIN.replace("lo = [0.25]", "lo = [8.0]"), ()),
            (TRAIN.replace("lo = [0.25]", "lo = [0.25, 1]").replace("hi = [4.0]", "hi = [4.0, 1]"), ()),
            (TRAIN.replace("[solve]", "[solve]\nbogus = 1"), ()),
            (TRAIN, ("--threads", 0)),
        ],
    )
    def test_config_errors_exit_2(self, tmp_path, body, extra):
        assert _run("train", "--config", _setup(tmp_path, body), "--out", tmp_path, *extra) == 2

    def test_eval_dimension_mismatch(self, tmp_path):
        save_model(Classifier([1.0, 2.0], 0.0), tmp_path / "m.csv")
        assert _run("eval", "--config", _setup(tmp_path), "--model", tmp_path / "m.csv", "--out", tmp_path) == 2

    def test_command_argument_errors(self, tmp_path):
        cfg = _setup(tmp_path)
        assert _run("eval", "--config", cfg, "--out", tmp_path) == 2
        assert _run("eval", "--config", cfg, "--model", tmp_path / "none.csv", "--out", tmp_path) == 2
        assert _run("hardness", "--config", cfg, "--out", tmp_path) == 2
        assert _run("train", "twoplane", "--config", cfg, "--out", tmp_path) == 2

    def test_numerical_abort_exit_3(self, tmp_path, monkeypatch):
        import strat.commands

        def boom(*a, **k):
            from strat.solvers import NumericalAbort

            raise NumericalAbort("non-finite", np.zeros(0))

        monkeypatch.setattr(strat.commands, "solve_subgradient", boom)
        assert _run("train", "--config", _setup(tmp_path), "--out", tmp_path) == 3

    def test_seed_override_changes_header_only(self, tmp_path, monkeypatch):
        cfg = _setup(tmp_path)
        _run("train", "--config", cfg, "--out", tmp_path / "a")
        monkeypatch.setenv("STRAT_SEED", "99")
        _run("train", "--config", cfg, "--out", tmp_path / "b")
        a, b = ((tmp_path / d / "model.csv").read_text().splitlines() for d in "ab")
        assert a[0] != b[0] and a[1:] == b[1:]  # subgradient ignores the seed


HARDNESS = """
[cost_set]
p = 2
lo = [1.0]
hi = [1.0]

[strategic]
u_star = 1.0

[hardness]
c1 = [1.0]
c2 = [4.0]
beta_star = [1.0]
eps_mix = 0.3
n_samples = 100000
seed = 3
d_values = [1, 4, 16]
spectra = ["harmonic", "constant"]
eigen_errors = [0.0, 0.5, 0.9]
"""


class TestHardness:
    def test_twoplane(self, tmp_path):
        cfg = _setup(tmp_path, HARDNESS)
        assert _run("hardness", "twoplane", "--config", cfg, "--out", tmp_path) == 0
        text = (tmp_path / "twoplane.csv").read_text()
        assert "# r=0.1666" in text
        header, rows = read_table(tmp_path / "twoplane.csv")
        table = {r[0]: dict(zip(header, r)) for _, r in rows}
        assert float(table["c1"]["own_error"]) <= 0.002
        assert float(table["c2"]["own_error"]) <= 0.002
        assert float(table["c1"]["cross_error"]) == pytest.approx(0.3, abs=0.01)
        assert float(table["c2"]["cross_error"]) == pytest.approx(0.7, abs=0.01)

    def test_twoplane_equal_costs_exit_2(self, tmp_path):
        cfg = _setup(tmp_path, HARDNESS.replace("c2 = [4.0]", "c2 = [1.0]"))
        assert _run("hardness", "twoplane", "--config", cfg, "--out", tmp_path) == 2

    def test_gaussian_curve(self, tmp_path):
        cfg = _setup(tmp_path, HARDNESS.replace("n_samples = 100000", "n_samples = 20000"))
        assert _run("hardness", "gaussian-curve", "--config", cfg, "--out", tmp_path) == 0
        header, rows = read_table(tmp_path / "gaussian_curve.csv")
        assert header == ["d", "spectrum", "eigen_error", "closed_form", "monte_carlo", "std_err"]
        assert len(rows) == 2 * 3 * 3
        recs = [dict(zip(header, r)) for _, r in rows]
        assert all(float(r["closed_form"]) == 0.0 for r in recs if float(r["eigen_error"]) == 0.0)
        inside = [
            abs(float(r["closed_form"]) - float(r["monte_carlo"])) <= 3 * float(r["std_err"]) + 1e-15 for r in recs
        ]
        assert np.mean(inside) >= 0.95

    def test_unknown_spectrum_exit_2(self, tmp_path):
        cfg = _setup(tmp_path, HARDNESS.replace('"constant"', '"cubic"'))
        assert _run("hardness", "gaussian-curve", "--config", cfg, "--out", tmp_path) == 2


SHIFT = """
[cost_set]
p = {p}
lo = [0.5, 2.0]
hi = [0.5, 2.0]

[strategic]
u_star = {u}

[data]
generator = "gaussian"
n = 10000
mu0 = [0.4, -0.3]
sigma_sq = 1.0
seed = 2
"""


class TestShift:
    @pytest.mark.parametrize("p", ["1", "2", '"inf"'])
    def test_equal_risks(self, tmp_path, p):
        cfg = _setup(tmp_path, SHIFT.format(p=p, u=0.8))
        save_model(Classifier([1.0, 0.5], 0.1), tmp_path / "m.csv")
        assert _run("shift", "--config", cfg, "--model", tmp_path / "m.csv", "--out", tmp_path) == 0
        line = (tmp_path / "shift_check.txt").read_text().splitlines()[-1]
        assert line.endswith("equal=true")

    def test_zero_radius_keeps_model(self, tmp_path):
        cfg = _setup(tmp_path, SHIFT.format(p=2, u=0.0))
        save_model(Classifier([1.0, 0.5], 0.1), tmp_path / "m.csv")
        assert _run("shift", "--config", cfg, "--model", tmp_path / "m.csv", "--out", tmp_path) == 0
        back = load_model(tmp_path / "shifted_model.csv")
        assert back.weights.tolist() == [1.0, 0.5] and back.bias == 0.1

    def test_unknown_cost_exit_2(self, tmp_path, capsys):
        cfg = _setup(tmp_path, SHIFT.format(p=2, u=1.0).replace("hi = [0.5, 2.0]", "hi = [1.0, 2.0]"))
        save_model(Classifier([1.0, 0.5], 0.1), tmp_path / "m.csv")
        assert _run("shift", "--config", cfg, "--model", tmp_path / "m.csv", "--out", tmp_path) == 2
        assert "bias shift requires a known cost" in capsys.readouterr().err

    def test_dimension_mismatch_exit_2(self, tmp_path):
        cfg = _setup(tmp_path, SHIFT.format(p=2, u=1.0))
        save_model(Classifier([1.0], 0.1), tmp_path / "m.csv")
        assert _run("shift", "--config", cfg, "--model", tmp_path / "m.csv", "--out", tmp_path) == 2
