"""Finite-population study on the bodyfat data.

The 252 records are treated as the population.  Measured units and their
comparison sets are drawn with replacement and ranked by one concomitant
variable (or by body fat itself, which gives perfect ranking).

Two file layouts are accepted:

* CSV with a header naming ``bodyfat``, ``abdomen``, ``chest`` and
  ``weight`` (case-insensitive; extra columns are ignored);
* the whitespace-delimited StatLib layout, one record per line with 15
  numeric fields in the order density, body fat (Siri), age, weight,
  height, neck, chest, abdomen, hip, thigh, knee, ankle, biceps, forearm,
  wrist.  Non-numeric lines (the text preamble) are skipped.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .distributions import Support
from .estimators import JpsSample
from .sim import re_from_design, rank_within_sets

__all__ = [
    "Concomitant",
    "FinitePopulation",
    "BodyfatFormatError",
    "POPULATION_SIZE",
    "load_bodyfat",
    "population_cdf",
    "population_quantile",
    "draw_jps_finite",
    "FiniteDesign",
    "Table1Row",
    "table1",
]

POPULATION_SIZE = 252

# 0-based field positions in the whitespace layout
_WS_FIELDS = 15
_WS_COLUMNS = {"bodyfat": 1, "weight": 3, "chest": 6, "abdomen": 7}


class Concomitant(str, Enum):
    BODYFAT = "bodyfat"
    ABDOMEN = "abdomen"
    CHEST = "chest"
    WEIGHT = "weight"


class BodyfatFormatError(ValueError):
    """Malformed bodyfat file; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class FinitePopulation:
    bodyfat: np.ndarray
    abdomen: np.ndarray
    chest: np.ndarray
    weight: np.ndarray

    @property
    def size(self) -> int:
        return self.bodyfat.size

    def column(self, which) -> np.ndarray:
        return getattr(self, Concomitant(which).value)


def _parse_csv(text: str) -> dict[str, list[float]]:
    reader = csv.reader(io.StringIO(text))
    header = None
    cols: dict[str, list[float]] = {k: [] for k in _WS_COLUMNS}
    index: dict[str, int] = {}
    for lineno, row in enumerate(reader, start=1):
        if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
            continue
        if header is None:
            header = [h.strip().lower() for h in row]
            missing = [k for k in cols if k not in header]
            if missing:
                raise BodyfatFormatError(f"CSV header lacks column(s) {', '.join(missing)}", lineno)
            index = {k: header.index(k) for k in cols}
            continue
        for k, i in index.items():
            try:
                value = float(row[i])
            except (IndexError, ValueError):
                raise BodyfatFormatError(f"bad or missing value for {k!r}", lineno) from None
            cols[k].append(value)
    if header is None:
        raise BodyfatFormatError("empty file")
    return cols


def _is_number(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def _parse_whitespace(text: str) -> dict[str, list[float]]:
    cols: dict[str, list[float]] = {k: [] for k in _WS_COLUMNS}
    for lineno, line in enumerate(text.splitlines(), start=1):
        toks = line.split()
        if not toks or not all(_is_number(t) for t in toks):
            continue
        if len(toks) != _WS_FIELDS:
            raise BodyfatFormatError(f"expected {_WS_FIELDS} numeric fields, found {len(toks)}", lineno)
        for k, i in _WS_COLUMNS.items():
            cols[k].append(float(toks[i]))
    return cols


def load_bodyfat(path, *, expected_size: int = POPULATION_SIZE) -> FinitePopulation:
    """Read the bodyfat data; values are kept exactly as given.

    Raises :class:`BodyfatFormatError` on malformed lines or when the
    record count differs from ``expected_size``.
    """
    text = Path(path).read_text(encoding="utf-8", errors="replace")
    first = next((ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")), "")
    cols = _parse_csv(text) if "," in first and not _is_number(first.split(",")[0].strip()) else _parse_whitespace(text)
    count = len(cols["bodyfat"])
    if count != expected_size:
        raise BodyfatFormatError(
            f"expected {expected_size} records, found {count} ({expected_size - count} missing)"
            if count < expected_size
            else f"expected {expected_size} records, found {count}"
        )
    arrays = {k: np.asarray(v, dtype=float) for k, v in cols.items()}
    if not np.all(np.isfinite(arrays["bodyfat"])):
        raise BodyfatFormatError("non-finite body fat value")
    return FinitePopulation(**arrays)


def _finite_cdf(values: np.ndarray, t) -> np.ndarray:
    xs = np.sort(values)
    return np.searchsorted(xs, np.atleast_1d(np.asarray(t, dtype=float)), side="right") / xs.size


def _finite_quantile(values: np.ndarray, p) -> np.ndarray:
    pp = np.atleast_1d(np.asarray(p, dtype=float))
    if np.any((pp <= 0) | (pp > 1)):
        raise ValueError("p must lie in (0, 1]")
    xs = np.sort(values)
    F = np.searchsorted(xs, xs, side="right") / xs.size
    # tolerance absorbs decimal p that is not exactly k/N in binary
    return xs[np.searchsorted(F, pp - 1e-12, side="left")]


def population_cdf(pop: FinitePopulation, t):
    """Finite-population CDF ``(1/N) sum 1{X_i <= t}`` of body fat."""
    v = _finite_cdf(pop.bodyfat, t)
    return v if np.ndim(t) else float(v[0])


def population_quantile(pop: FinitePopulation, p):
    """Smallest population value ``x`` with ``F(x) >= p``."""
    v = _finite_quantile(pop.bodyfat, p)
    return v if np.ndim(p) else float(v[0])


def _draw_finite_arrays(values: np.ndarray, ranker: np.ndarray, n: int, H: int, rng: np.random.Generator):
    idx = rng.integers(0, values.size, size=(n, H))
    return values[idx[:, 0]], rank_within_sets(ranker[idx], rng)


def draw_jps_finite(pop: FinitePopulation, n: int, H: int, concomitant, rng: np.random.Generator) -> JpsSample:
    """JPS sample with replacement, ranked by ascending concomitant value."""
    if n < 1 or H < 2:
        raise ValueError("need n >= 1 and H >= 2")
    x, r = _draw_finite_arrays(pop.bodyfat, pop.column(concomitant), n, H, rng)
    return JpsSample(x, r, H)


@dataclass(frozen=True)
class FiniteDesign:
    """Paired SRS/JPS draws with replacement from a finite population."""

    values: np.ndarray
    ranker: np.ndarray
    n: int
    H: int
    concomitant: str = "bodyfat"
    coupled: bool = False

    support = Support.POSITIVE
    # body fat contains a zero record; only the sample mean enters the fit
    allow_zero = True

    def draw(self, rng: np.random.Generator):
        x, r = _draw_finite_arrays(self.values, self.ranker, self.n, self.H, rng)
        srs = x if self.coupled else self.values[rng.integers(0, self.values.size, size=self.n)]
        return x, r, srs

    def eval_points(self, p_grid) -> np.ndarray:
        return _finite_quantile(self.values, p_grid)

    def truth(self, p_grid) -> np.ndarray:
        return _finite_cdf(self.values, self.eval_points(p_grid))

    def describe(self) -> dict:
        return {"population": self.values.size, "concomitant": self.concomitant, "n": self.n, "H": self.H,
                "coupled": self.coupled}


@dataclass(frozen=True)
class Table1Row:
    concomitant: str
    n: int
    H: int
    p: float
    mse_srs: float
    se_srs: float
    mse_jps: float
    se_jps: float
    re: float
    re_se: float


def table1(pop: FinitePopulation, n: int, H: int, concomitant, p_list: Sequence[float] = (0.1, 0.25, 0.5, 0.75, 0.9),
           reps: int = 100_000, seed: int = 0, kernel="epanechnikov", *, workers: Optional[int] = None,
           bandwidth="pointwise") -> list[Table1Row]:
    """RE of the SRS to the JPS kernel CDF estimator at population quantiles."""
    conc = Concomitant(concomitant)
    design = FiniteDesign(pop.bodyfat, pop.column(conc), n, H, conc.value)
    curve = re_from_design(design, p_list, kernel, bandwidth, reps, seed, workers)
    return [
        Table1Row(conc.value, n, H, float(p), float(a), float(sa), float(b), float(sb), float(r), float(rs))
        for p, a, sa, b, sb, r, rs in zip(curve.p_grid, curve.mse_srs, curve.se_srs, curve.mse_jps,
                                          curve.se_jps, curve.re, curve.re_se)
    ]
