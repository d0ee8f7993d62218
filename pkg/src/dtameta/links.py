"""Link functions: strictly increasing CDFs with computable inverses.

The model is written in terms of a generic CDF G. Two choices are
supported: the standard logistic (default) and the standard normal.
Each link also exposes the density and its derivative, needed by the
mode-finding step of the adaptive quadrature.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import expit, log_expit, logit, log_ndtr, ndtr, ndtri

LINK_LOGISTIC = 0
LINK_PROBIT = 1


def _logistic_pdf(x):
    p = expit(x)
    return p * (1.0 - p)


def _normal_pdf(x):
    return np.exp(-0.5 * np.asarray(x) ** 2) / np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class LinkFunction:
    """A known CDF G with its inverse, density, and density derivative."""

    name: str
    kind: int
    cdf: Callable = field(repr=False)
    inv_cdf: Callable = field(repr=False)
    log_cdf: Callable = field(repr=False)
    pdf: Callable = field(repr=False)
    dpdf: Callable = field(repr=False)


LOGISTIC = LinkFunction(
    name="logistic",
    kind=LINK_LOGISTIC,
    cdf=expit,
    inv_cdf=logit,
    log_cdf=log_expit,
    pdf=_logistic_pdf,
    dpdf=lambda x: _logistic_pdf(x) * (1.0 - 2.0 * expit(x)),
)

PROBIT = LinkFunction(
    name="probit",
    kind=LINK_PROBIT,
    cdf=ndtr,
    inv_cdf=ndtri,
    log_cdf=log_ndtr,
    pdf=_normal_pdf,
    dpdf=lambda x: -np.asarray(x) * _normal_pdf(x),
)

_BY_NAME = {"logistic": LOGISTIC, "probit": PROBIT}


def get_link(name):
    """Look up a link function by name ('logistic' or 'probit')."""
    try:
        return _BY_NAME[name]
    except KeyError:
        raise ValueError(f"unknown link {name!r}; expected one of {sorted(_BY_NAME)}")
