"""The 64-column diabetes design: 10 baseline variables, 9 squares, 45 interactions.

Column names and order follow the extended ``x2`` matrix of the R ``lars``
package.  ``sex`` is binary, so it has no square term.

    python -m l0kit.datasets diabetes.csv      # needs scikit-learn
"""

from __future__ import annotations

import argparse
import itertools
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from .csvio import write_table

BASE_NAMES = ("age", "sex", "bmi", "map", "tc", "ldl", "hdl", "tch", "ltg", "glu")
# scikit-learn's names for the same ten columns
_SKLEARN_NAMES = {"bp": "map", "s1": "tc", "s2": "ldl", "s3": "hdl", "s4": "tch", "s5": "ltg", "s6": "glu"}
CONSENSUS = ("sex", "bmi", "map", "hdl", "ltg")
FIXTURE = "diabetes_fixture.csv"
FIXTURE_PLANTED = "bmi"


def expanded_names(base=BASE_NAMES) -> list:
    squares = [f"{b}^2" for b in base if b != "sex"]
    inter = [f"{a}:{b}" for a, b in itertools.combinations(base, 2)]
    return list(base) + squares + inter


def expand_design(base: np.ndarray, names=BASE_NAMES) -> np.ndarray:
    """Append squares (all but ``sex``) and pairwise products to a 10-column matrix.

    Base columns are standardized first so squares and products are built from
    centered variables rather than raw units.
    """
    base = np.asarray(base, dtype=float)
    if base.shape[1] != len(names):
        raise ValueError(f"expected {len(names)} base columns, got {base.shape[1]}")
    z = (base - base.mean(axis=0)) / base.std(axis=0)
    cols = [z[:, j] for j in range(z.shape[1])]
    cols += [z[:, j] ** 2 for j, b in enumerate(names) if b != "sex"]
    cols += [z[:, a] * z[:, b] for a, b in itertools.combinations(range(z.shape[1]), 2)]
    return np.column_stack(cols)


def load_diabetes_base() -> tuple[np.ndarray, np.ndarray]:
    """The 442 x 10 raw diabetes table and its response (requires scikit-learn)."""
    try:
        from sklearn.datasets import load_diabetes
    except ImportError as exc:  # pragma: no cover - depends on environment
        raise ImportError("building the diabetes table needs scikit-learn") from exc
    bunch = load_diabetes(scaled=False)
    names = [_SKLEARN_NAMES.get(n, n) for n in bunch.feature_names]
    if tuple(names) != BASE_NAMES:
        raise ValueError(f"unexpected diabetes columns {names}")
    return np.asarray(bunch.data, dtype=float), np.asarray(bunch.target, dtype=float)


def diabetes_table() -> tuple[list, np.ndarray, np.ndarray]:
    base, y = load_diabetes_base()
    return expanded_names(), expand_design(base), y


def write_diabetes_csv(path, response: str = "y") -> Path:
    names, X, y = diabetes_table()
    return write_table(path, names + [response], (list(r) + [v] for r, v in zip(X, y)))


def fixture_path() -> Path:
    return Path(str(resources.files("l0kit") / "data" / FIXTURE))


def make_fixture(n: int = 20, seed: int = 20) -> tuple[list, np.ndarray, np.ndarray]:
    """Synthetic rows with the diabetes schema; y depends on ``bmi`` alone."""
    rng = np.random.default_rng(seed)
    base = np.column_stack([
        rng.uniform(20, 70, n),
        rng.integers(1, 3, n).astype(float),
        rng.uniform(18, 40, n),
        rng.uniform(60, 130, n),
        *(rng.normal(0, 1, (6, n))),
    ])
    X = expand_design(base)
    names = expanded_names()
    j = names.index(FIXTURE_PLANTED)
    y = 150.0 + 40.0 * X[:, j] + 0.5 * rng.standard_normal(n)
    return names, X, y


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="python -m l0kit.datasets", description=__doc__.split("\n")[0])
    ap.add_argument("out", help="destination CSV")
    ap.add_argument("--fixture", action="store_true", help="write the synthetic 20-row fixture instead")
    args = ap.parse_args(argv)
    if args.fixture:
        names, X, y = make_fixture()
        write_table(args.out, names + ["y"], (list(r) + [v] for r, v in zip(X, y)))
    else:
        try:
            write_diabetes_csv(args.out)
        except ImportError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
