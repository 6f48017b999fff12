"""Regression datasets with cached inner products."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

import numpy as np


def center_and_normalize(X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Center each column to mean zero and scale it to unit Euclidean norm.

    Constant columns are centered but left unscaled (they become all zero).

    Returns
    -------
    Xn, means, norms
    """
    X = np.asarray(X, dtype=float)
    means = X.mean(axis=0)
    Xc = X - means
    norms = np.linalg.norm(Xc, axis=0)
    scale = np.where(norms > 0, norms, 1.0)
    return Xc / scale, means, norms


@dataclass(eq=False)
class Dataset:
    """Design matrix ``X`` (n x p) and response ``y`` (n,).

    ``gram``, ``xty`` and ``yty`` are computed once on first access; solvers
    that sweep many supports rely on them.
    """

    X: np.ndarray
    y: np.ndarray
    names: Optional[Sequence[str]] = None
    x_mean: Optional[np.ndarray] = None
    x_norm: Optional[np.ndarray] = None
    y_mean: float = 0.0

    def __post_init__(self):
        self.X = np.ascontiguousarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float).ravel()
        if self.X.ndim != 2:
            raise ValueError("X must be two-dimensional")
        if self.X.shape[0] != self.y.shape[0]:
            raise ValueError(
                f"X has {self.X.shape[0]} rows but y has {self.y.shape[0]} entries"
            )
        if self.names is None:
            self.names = [f"x{j + 1}" for j in range(self.X.shape[1])]
        elif len(self.names) != self.X.shape[1]:
            raise ValueError("names must have one entry per column of X")

    @classmethod
    def from_arrays(cls, X, y, names=None, normalize: bool = True) -> "Dataset":
        """Build a dataset, optionally centering/normalizing X and centering y."""
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float).ravel()
        if not normalize:
            return cls(X, y, names=names)
        Xn, means, norms = center_and_normalize(X)
        y_mean = float(y.mean())
        return cls(Xn, y - y_mean, names=names, x_mean=means, x_norm=norms, y_mean=y_mean)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @cached_property
    def gram(self) -> np.ndarray:
        return self.X.T @ self.X

    @cached_property
    def xty(self) -> np.ndarray:
        return self.X.T @ self.y

    @cached_property
    def yty(self) -> float:
        return float(self.y @ self.y)

    def subset_rows(self, rows) -> "Dataset":
        return Dataset(self.X[rows], self.y[rows], names=self.names)

    def loss(self, beta: np.ndarray) -> float:
        """Half the residual sum of squares at ``beta``."""
        r = self.y - self.X @ beta
        return 0.5 * float(r @ r)
