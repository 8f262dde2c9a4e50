"""Convergence and decay studies built on the filter and solver modules."""

from __future__ import annotations

import io
from dataclasses import dataclass, replace

import numpy as np

from .diagnostics import records_array, time_average
from .errors import InvalidInputError
from .filters import FilterParams, apply_filter, deconvolve, fluctuation_hat
from .solver import FlowState, SolverConfig, linear_symbol, run
from .spectral import GridSpec, SpectralField, forward_transform, parseval_energy

# one mode from each of the three lowest nonzero shells
SMOOTH_MODES = {2: ((1, 0), (1, 1), (2, 0)), 3: ((1, 0, 0), (1, 1, 0), (1, 1, 1))}


def smooth_field(grid: GridSpec) -> SpectralField:
    """Scalar superposition of one mode from each of the three lowest shells."""
    x = grid.coordinates() * grid.dk
    u = np.zeros(grid.shape)
    for j, m in enumerate(SMOOTH_MODES[grid.dim]):
        phase = sum(mi * xi for mi, xi in zip(m, x))
        u += np.cos(phase + 0.3 * j) / (j + 1)
    return forward_transform(u, grid)


def deconvolution_error(u: SpectralField, params: FilterParams) -> float:
    """Relative L2 error ||u - D_N G u|| / ||u||, computed by the iteration."""
    r = deconvolve(apply_filter(u, params), params)
    diff = u.with_coeffs(u.coeffs - r.coeffs)
    return float(np.sqrt(parseval_energy(diff) / parseval_energy(u)))


def loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


def check_geometric(values, name):
    v = np.asarray(values, dtype=float)
    if v.size < 3:
        raise InvalidInputError(f"need at least 3 {name} values")
    if np.any(v <= 0):
        raise InvalidInputError(f"{name} values must be positive")
    r = v[1:] / v[:-1]
    if not (np.all(r > 1) or np.all(r < 1)):
        raise InvalidInputError(f"{name} sequence must be strictly monotone")
    if not np.allclose(r, r[0], rtol=1e-9):
        raise InvalidInputError(f"{name} sequence must be geometric")


@dataclass
class SlopeFit:
    N: int
    variable: str
    slope: float
    expected: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return abs(self.slope - self.expected) <= self.tolerance


@dataclass
class DeconvolutionStudy:
    rows: list  # (N, variable, value, error)
    fits: list

    def errors_csv(self) -> str:
        buf = io.StringIO()
        buf.write("N,variable,value,error\n")
        for N, var, value, err in self.rows:
            buf.write(f"{N},{var},{value!r},{err!r}\n")
        return buf.getvalue()

    def slopes_csv(self) -> str:
        buf = io.StringIO()
        buf.write("N,variable,slope,expected,tolerance,status\n")
        for f in self.fits:
            status = "PASS" if f.passed else "FAIL"
            buf.write(f"{f.N},{f.variable},{f.slope!r},{f.expected!r},{f.tolerance!r},{status}\n")
        return buf.getvalue()


def deconvolution_study(
    grid: GridSpec,
    Ns,
    deltas,
    alpha: float,
    alphas=None,
    delta_fixed: float | None = None,
    tolerance: float = 0.1,
) -> DeconvolutionStudy:
    """Fit the observed order of u - D_N G u in delta (and optionally alpha)."""
    check_geometric(deltas, "delta")
    u = smooth_field(grid)
    rows, fits = [], []
    for N in Ns:
        errs = [deconvolution_error(u, FilterParams(d, alpha, N)) for d in deltas]
        rows += [(N, "delta", float(d), e) for d, e in zip(deltas, errs)]
        fits.append(SlopeFit(N, "delta", loglog_slope(deltas, errs), 2 * N + 2.0, tolerance))
        if alphas is not None:
            check_geometric(alphas, "alpha")
            d = delta_fixed if delta_fixed is not None else min(deltas)
            errs = [deconvolution_error(u, FilterParams(d, a, N)) for a in alphas]
            rows += [(N, "alpha", float(a), e) for a, e in zip(alphas, errs)]
            fits.append(SlopeFit(N, "alpha", loglog_slope(alphas, errs), N + 1.0, tolerance))
    return DeconvolutionStudy(rows, fits)


@dataclass
class DecayRun:
    chi: float
    times: np.ndarray
    fluctuation: np.ndarray
    oracle: np.ndarray | None

    @property
    def integral(self) -> float:
        """Time integral of ||u - H_N u||^2 over the run."""
        if self.times.size < 2:
            return 0.0
        return float(time_average(self.times, self.fluctuation) * (self.times[-1] - self.times[0]))


def linear_fluctuation_oracle(state: FlowState, times) -> np.ndarray:
    """Exact ||u - H_N u||^2(t) for the unforced linear problem."""
    lam = linear_symbol(state.grid, state.nu, state.chi, state.filter)
    w2 = fluctuation_hat(state.grid.kmag, state.filter) ** 2
    amp = np.sum(np.abs(state.u.coeffs) ** 2, axis=0) * w2
    return np.array([float(np.sum(amp * np.exp(-2 * lam * (t - state.t)))) for t in times])


def decay_study(state: FlowState, config: SolverConfig, chis) -> list[DecayRun]:
    """Run the same setup for each chi and collect the fluctuation history."""
    out = []
    for chi in chis:
        s = replace(state, chi=float(chi))
        records, _ = run(s, config)
        t = records_array(records, "t")
        fl = records_array(records, "fluctuation")
        oracle = None
        if not config.nonlinear and s.forcing.kind == "none":
            oracle = linear_fluctuation_oracle(s, t)
        out.append(DecayRun(float(chi), t, fl, oracle))
    return out


def decay_series_csv(runs) -> str:
    with_oracle = all(r.oracle is not None for r in runs)
    buf = io.StringIO()
    buf.write("chi,t,fluctuation" + (",oracle" if with_oracle else "") + "\n")
    for r in runs:
        for i, (t, f) in enumerate(zip(r.times, r.fluctuation)):
            line = f"{r.chi!r},{float(t)!r},{float(f)!r}"
            if with_oracle:
                line += f",{float(r.oracle[i])!r}"
            buf.write(line + "\n")
    return buf.getvalue()


def decay_summary_csv(runs) -> str:
    lines = ["chi,fluctuation_integral"] + [f"{r.chi!r},{r.integral!r}" for r in runs]
    return "\n".join(lines) + "\n"


def strictly_decreasing(runs) -> bool | None:
    """Whether the fluctuation integral strictly decreases with chi (None for one run)."""
    if len(runs) < 2:
        return None
    ordered = sorted(runs, key=lambda r: r.chi)
    vals = [r.integral for r in ordered]
    return all(b < a for a, b in zip(vals, vals[1:]))
