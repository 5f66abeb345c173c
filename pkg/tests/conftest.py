import os
from pathlib import Path

import numpy as np
import pytest

DATA_DIR = Path(__file__).parent / "data"

WS_PREAMBLE = """\
Synthetic stand-in for the bodyfat layout: 15 numeric fields per record.
Fields: density, bodyfat, age, weight, height, neck, chest, abdomen, hip,
thigh, knee, ankle, biceps, forearm, wrist

"""


def pytest_collection_modifyitems(config, items):
    if os.environ.get("JPSCDF_LONG") == "1":
        return
    skip = pytest.mark.skip(reason="long run; set JPSCDF_LONG=1 to enable")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def real_bodyfat_path():
    """Location of the real bodyfat file, or None when it is not available."""
    env = os.environ.get("BODYFAT_DATA")
    if env:
        return Path(env)
    for name in ("bodyfat.csv", "bodyfat.txt", "bodyfat.dat"):
        if (DATA_DIR / name).exists():
            return DATA_DIR / name
    return None


def synthetic_records(size=252, seed=2024):
    """Rows shaped like the bodyfat file, with concomitants correlated at
    roughly 0.8, 0.7 and 0.6 with body fat, values rounded to one decimal
    (so ties occur) and one zero body-fat entry."""
    rng = np.random.default_rng(seed)
    fat = np.clip(rng.gamma(5.5, 3.5, size=size), 0.5, 47.5).round(1)
    fat[17] = 0.0
    z = (fat - fat.mean()) / fat.std()

    def concomitant(rho, centre, spread):
        return (centre + spread * (rho * z + np.sqrt(1 - rho * rho) * rng.standard_normal(size))).round(1)

    abdomen, chest, weight = concomitant(0.82, 92.6, 10.8), concomitant(0.71, 100.8, 8.4), concomitant(0.62, 178.9, 29.4)
    rows = np.zeros((size, 15))
    rows[:, 0] = (1.0761 - 0.00217 * fat).round(4)
    rows[:, 1], rows[:, 3], rows[:, 6], rows[:, 7] = fat, weight, chest, abdomen
    rows[:, 2] = rng.integers(22, 81, size=size)
    filler = [(4, 70.1), (5, 37.9), (8, 99.9), (9, 59.4), (10, 38.6), (11, 23.1), (12, 32.3), (13, 28.7), (14, 18.2)]
    for col, centre in filler:
        rows[:, col] = (centre * (1 + 0.05 * rng.standard_normal(size))).round(1)
    return rows


def write_csv(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# synthetic fixture\nDensity,BodyFat,Age,Weight,Height,Neck,Chest,Abdomen,Hip,Thigh,Knee,Ankle,Biceps,Forearm,Wrist\n")
        for r in rows:
            fh.write(",".join(repr(float(v)) for v in r) + "\n")
    return path


def write_whitespace(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(WS_PREAMBLE)
        for r in rows:
            fh.write("  ".join(f"{v:g}" for v in r) + "\n")
    return path


@pytest.fixture(scope="session")
def synthetic_rows():
    return synthetic_records()


@pytest.fixture(scope="session")
def synthetic_csv(tmp_path_factory, synthetic_rows):
    return write_csv(tmp_path_factory.mktemp("bodyfat") / "bodyfat.csv", synthetic_rows)


@pytest.fixture(scope="session")
def synthetic_whitespace(tmp_path_factory, synthetic_rows):
    return write_whitespace(tmp_path_factory.mktemp("bodyfat") / "bodyfat.txt", synthetic_rows)


# One line per acceptance criterion, printed at the end of the run.
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
