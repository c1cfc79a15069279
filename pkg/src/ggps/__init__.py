"""Generalized Gompertz power-series (GGPS) lifetime distributions.

Evaluation, sampling and moments live in :mod:`ggps.ggps_dist`; fitting in
:mod:`ggps.estimation`; goodness of fit in :mod:`ggps.gof`; the ``ggps``
command line in :mod:`ggps.cli`.
"""

__version__ = "0.1.0"

from .errors import (
    DomainError,
    EmptyDataset,
    GgpsError,
    NonConvergence,
    ParseError,
    RootNotBracketed,
    SeriesDivergence,
    SingularInformation,
)
from .gg_core import GgParams
from .ggps_dist import GggExtendedModel, GgModel, GgpsModel, HazardShape, make_model
from .power_series import Binomial, Geometric, Logarithmic, Poisson, PowerSeriesFamily, get_family

__all__ = [
    "__version__",
    "Binomial",
    "DomainError",
    "EmptyDataset",
    "Geometric",
    "GgModel",
    "GgParams",
    "GggExtendedModel",
    "GgpsError",
    "GgpsModel",
    "HazardShape",
    "Logarithmic",
    "NonConvergence",
    "ParseError",
    "Poisson",
    "PowerSeriesFamily",
    "RootNotBracketed",
    "SeriesDivergence",
    "SingularInformation",
    "get_family",
    "make_model",
]
