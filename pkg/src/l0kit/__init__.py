"""Sparse linear regression with l0 penalties and spike-and-slab shrinkage."""

from .data import Dataset, center_and_normalize
from .errors import *  # noqa: F401,F403
from .shrinkage import PriorSpec, Slab
from .solvers import IhtConfig, SbrConfig, SparseFit, iht_constrained, pgd_l0, sbr_solve

__version__ = "0.1.0"
