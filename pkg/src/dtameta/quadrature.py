"""Gauss-Hermite quadrature rules for the random-effect integrals."""

from dataclasses import dataclass

import numpy as np

DEFAULT_ORDER = 21


@dataclass(frozen=True)
class QuadratureRule:
    """Physicists' Gauss-Hermite nodes and weights of a given order.

    ``nodes``/``weights`` integrate against exp(-x^2); dividing the
    weights by sqrt(pi) turns the rule into an expectation against a
    standard normal density (see :meth:`normalized_weights`).
    """

    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def __post_init__(self):
        if self.order < 5:
            raise ValueError(f"quadrature order must be >= 5, got {self.order}")
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")
        total = self.weights.sum() / np.sqrt(np.pi)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"normalized weights sum to {total}, expected 1")

    def normalized_weights(self):
        """Weights rescaled so that E[1] under N(0,1) evaluates to 1."""
        return self.weights / np.sqrt(np.pi)


def gauss_hermite(order=DEFAULT_ORDER):
    """Build a Gauss-Hermite rule of the given order."""
    nodes, weights = np.polynomial.hermite.hermgauss(order)
    return QuadratureRule(nodes=nodes, weights=weights, order=order)
