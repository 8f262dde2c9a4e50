"""Energy spectra, time averages and energy-budget terms."""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson

from .errors import InvalidInputError, UndefinedRatioError
from .filters import FilterParams, fluctuation_hat
from .spectral import SpectralField, divergence, inverse_transform, parseval_energy


def shell_index(field_or_grid) -> np.ndarray:
    """Shell number of every lattice point: nearest integer to |k|/(2pi/L), ties down."""
    grid = getattr(field_or_grid, "grid", field_or_grid)
    return np.ceil(grid.kmag / grid.dk - 0.5).astype(int)


def shell_spectrum(field: SpectralField):
    """Return ``(k, E)`` with E(k) = (L/2pi) * sum over the shell of |u_hat|^2/2.

    Shell centers are k_j = j * 2pi/L, j = 0 .. max shell.
    """
    grid = field.grid
    idx = shell_index(grid)
    density = 0.5 * np.sum(np.abs(field.coeffs) ** 2, axis=0)
    nshell = int(idx.max()) + 1
    E = np.bincount(idx.ravel(), weights=density.ravel(), minlength=nshell) / grid.dk
    return np.arange(nshell) * grid.dk, E


@dataclass
class SpectrumSeries:
    k: np.ndarray
    times: list
    spectra: list

    @classmethod
    def empty(cls, k=None):
        return cls(k, [], [])

    def append(self, t: float, field: SpectralField):
        k, E = shell_spectrum(field)
        if self.k is None:
            self.k = k
        self.times.append(float(t))
        self.spectra.append(E)

    def averaged(self, t_start: float = 0.0) -> np.ndarray:
        """Finite-horizon time average of E(k, t) over samples with t >= t_start."""
        t = np.asarray(self.times)
        keep = t >= t_start
        return time_average(t[keep], np.asarray(self.spectra)[keep])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,k,E\n")
        for t, E in zip(self.times, self.spectra):
            for k, e in zip(self.k, E):
                buf.write(f"{t!r},{float(k)!r},{float(e)!r}\n")
        return buf.getvalue()


def averaged_spectrum_csv(k, E_avg) -> str:
    lines = ["k,E_avg"] + [f"{float(a)!r},{float(b)!r}" for a, b in zip(k, E_avg)]
    return "\n".join(lines) + "\n"


def time_average(times, values):
    """Trapezoidal (1/T) * integral of values over the sampled horizon.

    ``values`` may carry extra trailing axes (e.g. one spectrum per sample).
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise InvalidInputError("time_average needs at least 2 samples")
    if v.shape[0] != t.size:
        raise InvalidInputError("times and values have different lengths")
    if np.any(np.diff(t) < 0):
        raise InvalidInputError("sample times must be nondecreasing")
    span = t[-1] - t[0]
    if span <= 0:
        raise InvalidInputError("sample times span a zero-length horizon")
    return np.trapezoid(v, t, axis=0) / span


def eps_model(field: SpectralField, params: FilterParams, chi: float) -> float:
    """Relaxation dissipation rate (chi/delta) * (1/L^d) * integral of (u - H_N u).u dx."""
    if chi == 0:
        return 0.0
    w = fluctuation_hat(field.grid.kmag, params)
    return chi / params.delta * float(np.sum(w * np.abs(field.coeffs) ** 2))


def fluctuation_energy(field: SpectralField, params: FilterParams) -> float:
    """(1/L^d) * integral of |u - H_N u|^2 dx."""
    w = fluctuation_hat(field.grid.kmag, params)
    return float(np.sum(w**2 * np.abs(field.coeffs) ** 2))


def viscous_dissipation(field: SpectralField, nu: float) -> float:
    """nu * (1/L^d) * integral of |grad u|^2 dx."""
    return nu * float(np.sum(field.grid.kmag**2 * np.abs(field.coeffs) ** 2))


def forcing_input(field: SpectralField, forcing: SpectralField | None) -> float:
    """(1/L^d) * integral of f.u dx."""
    if forcing is None:
        return 0.0
    return float(np.real(np.sum(forcing.coeffs * np.conj(field.coeffs))))


def max_divergence(field: SpectralField) -> float:
    return float(np.max(np.abs(inverse_transform(divergence(field), check=False))))


def truncation_ratio(k, E_relaxed, E_reference, k_cut: float) -> float:
    """Tail energy above ``k_cut`` with relaxation over the same tail without it."""
    k = np.asarray(k, dtype=float)
    a = np.asarray(E_relaxed, dtype=float)
    b = np.asarray(E_reference, dtype=float)
    if a.shape != k.shape or b.shape != k.shape:
        raise InvalidInputError("spectra must share the shell grid")
    if not k[0] <= k_cut < k[-1]:
        raise InvalidInputError(f"cutoff {k_cut} outside shell range [{k[0]}, {k[-1]})")
    tail = k > k_cut
    denom = float(b[tail].sum())
    if denom == 0:
        raise UndefinedRatioError("reference spectrum has no energy beyond the cutoff")
    return float(a[tail].sum()) / denom


@dataclass
class EnergyRecord:
    t: float
    E_model: float
    eps_model: float
    viscous_dissipation: float
    forcing_input: float
    max_div: float
    fluctuation: float = 0.0

    CSV_COLUMNS = ("t", "E_model", "eps_model", "viscous_dissipation", "forcing_input", "max_div")


def energy_record(t, u: SpectralField, params: FilterParams, chi, nu, forcing=None) -> EnergyRecord:
    return EnergyRecord(
        t=float(t),
        E_model=parseval_energy(u),
        eps_model=eps_model(u, params, chi),
        viscous_dissipation=viscous_dissipation(u, nu),
        forcing_input=forcing_input(u, forcing),
        max_div=max_divergence(u),
        fluctuation=fluctuation_energy(u, params),
    )


def records_to_csv(records) -> str:
    buf = io.StringIO()
    buf.write(",".join(EnergyRecord.CSV_COLUMNS) + "\n")
    for r in records:
        buf.write(",".join(repr(float(getattr(r, c))) for c in EnergyRecord.CSV_COLUMNS) + "\n")
    return buf.getvalue()


def records_array(records, name: str) -> np.ndarray:
    return np.array([getattr(r, name) for r in records], dtype=float)


@dataclass
class EnergyBudget:
    delta_E: float
    viscous: float
    relaxation: float
    forcing: float
    residual: float

    @property
    def largest_term(self) -> float:
        return max(abs(self.delta_E), abs(self.viscous), abs(self.relaxation), abs(self.forcing))

    @property
    def relative_residual(self) -> float:
        scale = self.largest_term
        return self.residual / scale if scale > 0 else self.residual


def energy_budget(records) -> EnergyBudget:
    """Check dE/dt = -viscous - eps_model + forcing on the recorded samples.

    The right-hand side is integrated with cumulative Simpson quadrature; the
    residual is the largest |E(t_j) - E(0) - integral| over all sample times.
    """
    if len(records) < 3:
        raise InvalidInputError("energy budget needs at least 3 records")
    t = records_array(records, "t")
    E = records_array(records, "E_model")
    names = ("viscous_dissipation", "eps_model", "forcing_input")
    cums = {n: cumulative_simpson(records_array(records, n), x=t, initial=0.0) for n in names}
    predicted = cums["forcing_input"] - cums["viscous_dissipation"] - cums["eps_model"]
    residual = float(np.max(np.abs((E - E[0]) - predicted)))
    return EnergyBudget(
        delta_E=float(E[-1] - E[0]),
        viscous=float(cums["viscous_dissipation"][-1]),
        relaxation=float(cums["eps_model"][-1]),
        forcing=float(cums["forcing_input"][-1]),
        residual=residual,
    )

