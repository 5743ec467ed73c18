"""Dataset and model CSV I/O, seeded generators, and synthetic samplers.

Numbers are written with 17 significant digits so a float64 survives the
text round trip unchanged. Lines starting with ``#`` are comments; writers
use them for provenance headers and readers skip them.
"""

from __future__ import annotations

import csv
import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np
from scipy.linalg import null_space

from .core import Classifier, LabeledDataset

if TYPE_CHECKING:
    from .analysis import GaussianSetup, TwoPlaneDistribution

__all__ = [
    "DataFormatError",
    "RngSpec",
    "format_number",
    "load_csv",
    "load_model",
    "read_table",
    "sample_gaussian_mixture",
    "sample_two_plane",
    "save_csv",
    "save_model",
    "write_table",
]

log = logging.getLogger(__name__)


class DataFormatError(ValueError):
    """A data or model file does not follow the expected layout."""


@dataclass(frozen=True)
class RngSpec:
    """PCG64 seeded through ``SeedSequence(seed, spawn_key=(stream_id,))``.

    Distinct ``stream_id`` values give statistically independent streams from
    one seed.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        if self.seed < 0 or self.stream_id < 0:
            raise ValueError("seed and stream_id must be non-negative")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.PCG64(ss))


def format_number(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


def write_table(
    path: str | Path,
    columns: Sequence[str],
    rows: Iterable[Sequence],
    comments: Sequence[str] = (),
) -> None:
    """Write a CSV with optional ``#`` comment lines above the header."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([v if isinstance(v, str) else format_number(v) for v in row])


def read_table(path: str | Path) -> tuple[list[str], list[tuple[int, list[str]]]]:
    """Header and ``(line_number, fields)`` rows, skipping comments and blank lines."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    header, rows = None, []
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, fields in enumerate(csv.reader(fh), start=1):
            if not fields or (len(fields) == 1 and not fields[0].strip()):
                continue
            if fields[0].lstrip().startswith("#"):
                continue
            fields = [f.strip() for f in fields]
            if header is None:
                header = fields
            else:
                rows.append((lineno, fields))
    if header is None:
        raise DataFormatError(f"{path}: file is empty")
    return header, rows


def _parse_row(path, lineno: int, fields: list[str], width: int) -> list[float]:
    if len(fields) != width:
        raise DataFormatError(f"{path}:{lineno}: expected {width} fields, found {len(fields)}")
    try:
        vals = [float(f) for f in fields]
    except ValueError:
        raise DataFormatError(f"{path}:{lineno}: non-numeric field") from None
    if not all(math.isfinite(v) for v in vals):
        raise DataFormatError(f"{path}:{lineno}: non-finite value")
    return vals


def load_csv(path: str | Path, p: float = 2.0) -> LabeledDataset:
    """Read a dataset with header ``x0,...,x{d-1},y``.

    Labels must be -1/+1; a file whose labels are all 0/1 is accepted with 0
    mapped to -1.
    """
    header, rows = read_table(path)
    d = len(header) - 1
    if d < 1 or header != [f"x{j}" for j in range(d)] + ["y"]:
        raise DataFormatError(f"{path}: header must be x0,...,x{{d-1}},y, got {','.join(header)}")
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    values = np.array([_parse_row(path, ln, f, d + 1) for ln, f in rows])
    X, y = values[:, :d], values[:, d]

    if np.all((y == 0) | (y == 1)) and np.any(y == 0):
        log.info("%s: labels are 0/1; mapping 0 to -1", path)
        y = np.where(y == 0, -1.0, 1.0)
    bad = np.flatnonzero((y != 1) & (y != -1))
    if bad.size:
        i = int(bad[0])
        raise DataFormatError(f"{path}:{rows[i][0]}: label {rows[i][1][-1]!r} is not -1 or +1")
    return LabeledDataset(X, y, p)


def save_csv(data: LabeledDataset, path: str | Path, comments: Sequence[str] = ()) -> None:
    columns = [f"x{j}" for j in range(data.d)] + ["y"]
    rows = (list(x) + [int(lab)] for x, lab in zip(data.features, data.labels))
    write_table(path, columns, rows, comments)


def save_model(clf: Classifier, path: str | Path, comments: Sequence[str] = ()) -> None:
    columns = [f"w{j}" for j in range(clf.dim)] + ["bias"]
    write_table(path, columns, [list(clf.weights) + [clf.bias]], comments)


def load_model(path: str | Path) -> Classifier:
    header, rows = read_table(path)
    d = len(header) - 1
    if d < 1 or header != [f"w{j}" for j in range(d)] + ["bias"]:
        raise DataFormatError(f"{path}: model header must be w0,...,w{{d-1}},bias")
    if len(rows) != 1:
        raise DataFormatError(f"{path}: expected exactly one model row, found {len(rows)}")
    vals = _parse_row(path, rows[0][0], rows[0][1], d + 1)
    return Classifier(vals[:d], vals[d])


def sample_gaussian_mixture(setup: GaussianSetup, n: int, rng: RngSpec) -> LabeledDataset:
    """Balanced labels, ``x | y ~ N(y mu0, sigma_sq I)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    g = rng.generator()
    y = np.where(g.integers(0, 2, size=n) == 1, 1.0, -1.0)
    noise = g.standard_normal((n, setup.dim))
    X = y[:, None] * setup.mu0[None, :] + math.sqrt(setup.sigma_sq) * noise
    return LabeledDataset(X, y, setup.true_cost.norm.p)


def sample_two_plane(dist: TwoPlaneDistribution, n: int, rng: RngSpec) -> LabeledDataset:
    """Positives with probability ``eps_mix`` near ``beta* @ x = r``, negatives near ``-r``.

    The offset along ``beta*`` is uniform within ``thickness / 2`` of the
    plane; the remaining coordinates are uniform on ``[-1, 1]`` in an
    orthonormal basis of the complement.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    g = rng.generator()
    beta = dist.beta_star
    y = np.where(g.random(n) < dist.eps_mix, 1.0, -1.0)
    offset = y * dist.r + g.uniform(-0.5, 0.5, size=n) * dist.thickness
    X = np.outer(offset, beta / float(beta @ beta))
    if dist.dim > 1:
        basis = null_space(beta[None, :])
        X = X + g.uniform(-1.0, 1.0, size=(n, dist.dim - 1)) @ basis.T
    return LabeledDataset(X, y, dist.c1.norm.p)
