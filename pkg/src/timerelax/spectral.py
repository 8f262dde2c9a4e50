"""Fourier representation of zero-mean fields on a periodic cube.

Coefficients are stored on the full FFT lattice (not the half-spectrum of
``rfftn``) with the normalization

    u_hat(k) = (1/L^d) * integral of u(x) exp(-i k.x) dx ~ fftn(u) / n^d,

so that ``u(x) = sum_k u_hat(k) exp(i k.x)`` and Parseval reads
``mean(|u|^2)/2 == sum(|u_hat|^2)/2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft

from .errors import InvalidInputError

SYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class GridSpec:
    """Uniform collocation grid on the cube ``(0, L)^dim``."""

    dim: int
    n: int
    L: float = 2 * np.pi

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise InvalidInputError(f"dim must be 2 or 3, got {self.dim}")
        if self.n < 4 or self.n % 2:
            raise InvalidInputError(f"n must be even and >= 4, got {self.n}")
        if not self.L > 0:
            raise InvalidInputError(f"L must be positive, got {self.L}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def axes(self) -> tuple[int, ...]:
        """Spatial axes of a ``(components, n, ..., n)`` coefficient array."""
        return tuple(range(1, self.dim + 1))

    @property
    def dk(self) -> float:
        """Lattice spacing in wavenumber, 2*pi/L."""
        return 2 * np.pi / self.L

    @property
    def dx(self) -> float:
        return self.L / self.n

    @cached_property
    def index(self) -> np.ndarray:
        """Integer multi-index m, shape ``(dim, n, ..., n)``, entries in [-n/2, n/2)."""
        m = np.rint(np.fft.fftfreq(self.n, 1.0 / self.n)).astype(int)
        return np.array(np.meshgrid(*([m] * self.dim), indexing="ij"))

    @cached_property
    def k(self) -> np.ndarray:
        """Wavevectors 2*pi*m/L."""
        return self.dk * self.index

    @cached_property
    def k_deriv(self) -> np.ndarray:
        """Wavevectors used for derivatives: Nyquist components set to zero.

        Keeps ``i k`` odd under m -> -m on the discrete lattice so derivatives
        and the Leray projector preserve conjugate symmetry.
        """
        kd = self.k.copy()
        kd[self.index == -self.n // 2] = 0.0
        return kd

    @cached_property
    def k_deriv_scaled(self) -> np.ndarray:
        """k_deriv / |k_deriv|^2, zero where k_deriv vanishes (Leray projector factor)."""
        k2 = np.sum(self.k_deriv**2, axis=0)
        safe = np.where(k2 > 0, k2, 1.0)
        return np.where(k2 > 0, self.k_deriv / safe, 0.0)

    @cached_property
    def kmag(self) -> np.ndarray:
        """Euclidean magnitude |k|."""
        return np.sqrt(np.sum(self.k**2, axis=0))

    @cached_property
    def kmag_inf(self) -> np.ndarray:
        """Max-norm magnitude |k|_inf."""
        return np.max(np.abs(self.k), axis=0)

    @cached_property
    def length_scale(self) -> np.ndarray:
        """Mode length scale l = 2*pi/|k|_inf (inf at k = 0)."""
        with np.errstate(divide="ignore"):
            return np.where(self.kmag_inf > 0, 2 * np.pi / self.kmag_inf, np.inf)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """2/3-rule mask: keep modes with 3|m_i| < n in every direction."""
        return np.all(3 * np.abs(self.index) < self.n, axis=0)

    def coordinates(self) -> np.ndarray:
        """Collocation points x_j = j*L/n, shape ``(dim, n, ..., n)``."""
        x = np.arange(self.n) * self.dx
        return np.array(np.meshgrid(*([x] * self.dim), indexing="ij"))

    def to_dict(self) -> dict:
        return {"dim": self.dim, "n": self.n, "L": self.L}


@dataclass(eq=False)
class SpectralField:
    """Fourier coefficients of a real, zero-mean scalar or vector field."""

    grid: GridSpec
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim == self.grid.dim:
            c = c[np.newaxis]
        if c.shape[1:] != self.grid.shape:
            raise InvalidInputError(
                f"coefficient shape {c.shape} does not match grid {self.grid.shape}"
            )
        self.coeffs = c

    @property
    def components(self) -> int:
        return self.coeffs.shape[0]

    @property
    def is_vector(self) -> bool:
        return self.components == self.grid.dim

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs.copy())

    def with_coeffs(self, coeffs: np.ndarray) -> "SpectralField":
        return SpectralField(self.grid, coeffs)

    @classmethod
    def zeros(cls, grid: GridSpec, components: int = 1) -> "SpectralField":
        return cls(grid, np.zeros((components,) + grid.shape, dtype=complex))


def reflect(coeffs: np.ndarray, axes) -> np.ndarray:
    """Return the array indexed at -m (mod n) along ``axes``."""
    return np.roll(np.flip(coeffs, axis=axes), 1, axis=axes)


def hermitian_part(coeffs: np.ndarray, axes) -> np.ndarray:
    """Project coefficients onto the conjugate-symmetric (real-field) subspace."""
    return 0.5 * (coeffs + np.conj(reflect(coeffs, axes)))


def symmetry_defect(field: SpectralField) -> float:
    """Largest violation of u_hat(-k) = conj(u_hat(k)), relative to max |u_hat|."""
    c = field.coeffs
    scale = max(float(np.max(np.abs(c), initial=0.0)), 1e-300)
    return float(np.max(np.abs(c - np.conj(reflect(c, field.grid.axes))), initial=0.0)) / scale


def forward_transform(samples, grid: GridSpec) -> SpectralField:
    """Transform real grid samples to zero-mean Fourier coefficients.

    ``samples`` has shape ``grid.shape`` (scalar) or ``(components,) + grid.shape``.
    The mean (k = 0 coefficient) is removed.
    """
    u = np.asarray(samples)
    if np.iscomplexobj(u):
        if np.any(u.imag != 0):
            raise InvalidInputError("samples must be real")
        u = u.real
    u = np.asarray(u, dtype=float)
    if u.ndim == grid.dim:
        u = u[np.newaxis]
    if u.shape[1:] != grid.shape:
        raise InvalidInputError(f"sample shape {u.shape} does not match grid {grid.shape}")
    c = scipy.fft.fftn(u, axes=grid.axes) / grid.n**grid.dim
    c[(slice(None),) + (0,) * grid.dim] = 0.0
    return SpectralField(grid, c)


def inverse_transform(field: SpectralField, check: bool = True) -> np.ndarray:
    """Evaluate a field on the collocation grid; returns shape ``(components, n, ..., n)``."""
    if check and symmetry_defect(field) > SYMMETRY_TOL:
        raise InvalidInputError("coefficients are not conjugate symmetric")
    grid = field.grid
    u = scipy.fft.ifftn(field.coeffs * grid.n**grid.dim, axes=grid.axes)
    return u.real


def to_physical(coeffs: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Real samples from conjugate-symmetric coefficients of shape ``(..., n, ..., n)``.

    Uses the half spectrum along the last axis; the spatial axes are the last ``dim``.
    """
    h = grid.n // 2 + 1
    axes = tuple(range(-grid.dim, 0))
    return scipy.fft.irfftn(coeffs[..., :h] * grid.n**grid.dim, s=grid.shape, axes=axes)


def to_spectral(samples: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Full-lattice coefficients of real samples (inverse of ``to_physical``)."""
    n, h = grid.n, grid.n // 2 + 1
    axes = tuple(range(-grid.dim, 0))
    half = scipy.fft.rfftn(samples, axes=axes) / n**grid.dim
    full = np.empty(samples.shape, dtype=complex)
    full[..., :h] = half
    rest = half[..., n // 2 - 1 : 0 : -1]
    other = axes[:-1]
    if other:
        rest = np.roll(np.flip(rest, axis=other), 1, axis=other)
    full[..., h:] = np.conj(rest)
    return full


def _require_vector(field: SpectralField):
    if not field.is_vector:
        raise InvalidInputError(
            f"expected a vector field with {field.grid.dim} components, got {field.components}"
        )


def leray_project(field: SpectralField) -> SpectralField:
    """Project a vector field onto divergence-free fields, mode by mode."""
    _require_vector(field)
    grid = field.grid
    kdotu = np.sum(grid.k_deriv_scaled * field.coeffs, axis=0)
    return field.with_coeffs(field.coeffs - grid.k_deriv * kdotu)


def divergence(field: SpectralField) -> SpectralField:
    """Coefficients of div u, i.e. i k.u_hat."""
    _require_vector(field)
    return SpectralField(field.grid, 1j * np.sum(field.grid.k_deriv * field.coeffs, axis=0))


def gradient_coeffs(field: SpectralField) -> np.ndarray:
    """Coefficients of d u_i / d x_j, shape ``(components, dim, n, ..., n)``."""
    kd = field.grid.k_deriv
    return 1j * kd[np.newaxis] * field.coeffs[:, np.newaxis]


def inner(a: SpectralField, b: SpectralField) -> float:
    """Volume-averaged L2 inner product (1/L^d) * integral of a.b dx."""
    return float(np.real(np.sum(a.coeffs * np.conj(b.coeffs))))


def parseval_energy(field: SpectralField) -> float:
    """Energy density sum_k |u_hat|^2 / 2, equal to (1/L^d) * integral of |u|^2/2."""
    return 0.5 * float(np.sum(np.abs(field.coeffs) ** 2))
