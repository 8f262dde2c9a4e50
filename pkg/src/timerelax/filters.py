"""Differential filter and iterated modified Lavrentiev deconvolution.

Every operator here is diagonal in Fourier space.  With ``s = z^2/(1+z^2)``
and ``z = sqrt(alpha) * delta * |k|``:

    G      1/(1 + delta^2 k^2)
    A      1 + delta^2 k^2
    D_0    (1 + delta^2 k^2)/(1 + alpha delta^2 k^2)
    D_N    D_0 * sum_{j<=N} s^j
    H_N    D_N G = 1 - s^(N+1)
"""

from __future__ import annotations

import io
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .spectral import SpectralField


@dataclass(frozen=True)
class FilterParams:
    delta: float
    alpha: float
    N: int = 0

    def __post_init__(self):
        if not self.delta >= 0:
            raise InvalidInputError(f"delta must be nonnegative, got {self.delta}")
        if not 0 <= self.alpha <= 1:
            raise InvalidInputError(f"alpha must lie in [0, 1], got {self.alpha}")
        if int(self.N) != self.N or self.N < 0:
            raise InvalidInputError(f"N must be a nonnegative integer, got {self.N}")
        object.__setattr__(self, "N", int(self.N))

    def to_dict(self) -> dict:
        return {"delta": self.delta, "alpha": self.alpha, "N": self.N}


def g_hat(k, params: FilterParams):
    k = np.asarray(k, dtype=float)
    return 1.0 / (1.0 + (params.delta * k) ** 2)


def a_hat(k, params: FilterParams):
    k = np.asarray(k, dtype=float)
    return 1.0 + (params.delta * k) ** 2


def regularized_hat(k, params: FilterParams):
    """Symbol of (1 - alpha) G + alpha I."""
    return (1.0 - params.alpha) * g_hat(k, params) + params.alpha


def d0_hat(k, params: FilterParams):
    k = np.asarray(k, dtype=float)
    dk2 = (params.delta * k) ** 2
    return (1.0 + dk2) / (1.0 + params.alpha * dk2)


def _s(k, params: FilterParams):
    z2 = params.alpha * (params.delta * np.asarray(k, dtype=float)) ** 2
    return z2 / (1.0 + z2)


def fluctuation_hat(k, params: FilterParams):
    """Symbol of I - H_N, i.e. (z^2/(1+z^2))^(N+1)."""
    return _s(k, params) ** (params.N + 1)


def h_hat(k, params: FilterParams):
    """Closed-form transfer function of H_N = D_N G."""
    return 1.0 - fluctuation_hat(k, params)


def dn_hat(k, params: FilterParams):
    """Closed-form symbol of D_N from the truncated geometric series."""
    s = _s(k, params)
    total = np.zeros_like(s)
    for j in range(params.N + 1):
        total = total + s**j
    return d0_hat(k, params) * total


def _multiply(field: SpectralField, symbol) -> SpectralField:
    return field.with_coeffs(field.coeffs * symbol[np.newaxis])


def apply_filter(field: SpectralField, params: FilterParams) -> SpectralField:
    """Return u_bar solving -delta^2 Lap(u_bar) + u_bar = u on the grid."""
    return _multiply(field, g_hat(field.grid.kmag, params))


def apply_inverse_filter(field: SpectralField, params: FilterParams) -> SpectralField:
    return _multiply(field, a_hat(field.grid.kmag, params))


def _warn_if_unregularized(field: SpectralField, params: FilterParams):
    if params.alpha == 0 and params.delta > 0 and np.any(field.coeffs != 0):
        warnings.warn("alpha = 0: Lavrentiev regularization disabled", RuntimeWarning, stacklevel=3)


def apply_d0(field: SpectralField, params: FilterParams) -> SpectralField:
    _warn_if_unregularized(field, params)
    return _multiply(field, d0_hat(field.grid.kmag, params))


def deconvolve(filtered: SpectralField, params: FilterParams) -> SpectralField:
    """Approximate G^{-1} by N steps of the fixed-point iteration.

    Runs the recursion

        ((1-a)G + aI) u_0 = u_bar
        ((1-a)G + aI)(u_n - u_{n-1}) = u_bar - G u_{n-1}

    with each solve done as a per-mode division.
    """
    _warn_if_unregularized(filtered, params)
    kmag = filtered.grid.kmag
    lhs = regularized_hat(kmag, params)[np.newaxis]
    g = g_hat(kmag, params)[np.newaxis]
    ubar = filtered.coeffs
    u = ubar / lhs
    for _ in range(params.N):
        u = u + (ubar - g * u) / lhs
    return filtered.with_coeffs(u)


def apply_hn(field: SpectralField, params: FilterParams) -> SpectralField:
    """Apply H_N = D_N G through its closed-form transfer function."""
    return _multiply(field, h_hat(field.grid.kmag, params))


def fluctuation(field: SpectralField, params: FilterParams) -> SpectralField:
    """The generalized fluctuation u - H_N u."""
    return _multiply(field, fluctuation_hat(field.grid.kmag, params))


def consistency_error_estimate(params: FilterParams, k) -> np.ndarray:
    """Relative single-mode error |u - D_N G u|/|u| at wavenumber k."""
    k = np.asarray(k, dtype=float)
    if np.any(k <= 0):
        raise InvalidInputError("wavenumber must be positive")
    return fluctuation_hat(k, params)


@dataclass
class TransferTable:
    wavenumbers: np.ndarray
    g_hat: np.ndarray
    d0_hat: np.ndarray
    h_hat: np.ndarray

    HEADER = ("k", "g_hat", "d0_hat", "h_hat")

    def rows(self):
        for row in zip(self.wavenumbers, self.g_hat, self.d0_hat, self.h_hat):
            yield tuple(float(v) for v in row)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(self.HEADER) + "\n")
        for row in self.rows():
            buf.write(",".join(repr(v) for v in row) + "\n")
        return buf.getvalue()


def transfer_table(params: FilterParams, wavenumbers) -> TransferTable:
    k = np.atleast_1d(np.asarray(wavenumbers, dtype=float))
    if k.size == 0:
        raise InvalidInputError("wavenumber list is empty")
    if np.any(k < 0) or not np.all(np.isfinite(k)):
        raise InvalidInputError("wavenumbers must be finite and nonnegative")
    return TransferTable(k, g_hat(k, params), d0_hat(k, params), h_hat(k, params))
