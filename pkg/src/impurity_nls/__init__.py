"""Bosons with an impurity-mediated three-body interaction in one dimension.

Three levels of dynamics on a common periodic grid:

* :mod:`~impurity_nls.manybody` -- exact small-N evolution and reduced densities;
* :mod:`~impurity_nls.hartree` -- the concentrated Hartree equation;
* :mod:`~impurity_nls.delta` -- the NLS with nonlinearity concentrated at the origin.

:mod:`~impurity_nls.experiments` compares them.
"""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    Grid1D,
    WaveFunction,
    energy_delta,
    free_kernel,
    free_step,
    gaussian,
    h1_norm,
    inner,
    l2_norm,
)
from .potentials import BumpProfile, ScaledBump, coupling, epsilon_of_N  # noqa: E402

__all__ = [
    "BumpProfile",
    "Grid1D",
    "ScaledBump",
    "WaveFunction",
    "coupling",
    "energy_delta",
    "epsilon_of_N",
    "free_kernel",
    "free_step",
    "gaussian",
    "h1_norm",
    "inner",
    "l2_norm",
]
