"""Pseudo-spectral time integration of the time-relaxation model.

    u_t + u.grad(u) + grad(p) - nu Lap(u) + (chi/delta)(u - D_N u_bar) = f,   div u = 0

Pressure is removed by Leray projection.  The linear part has the per-mode
symbol ``nu |k|^2 + (chi/delta)(1 - H_N(k))`` and is integrated exactly with
an integrating factor; advection and forcing go through classical RK4 stages.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .diagnostics import EnergyRecord, energy_record, shell_index, shell_spectrum
from .errors import BlowUpError, InvalidInputError
from .filters import FilterParams, fluctuation, fluctuation_hat
from .spectral import (
    GridSpec,
    SpectralField,
    forward_transform,
    gradient_coeffs,
    hermitian_part,
    inverse_transform,
    leray_project,
    to_physical,
    to_spectral,
)

log = logging.getLogger(__name__)

FORCING_KINDS = ("none", "steady-low-mode", "custom-field")


@dataclass
class ForcingSpec:
    """Body force description.

    ``steady-low-mode`` drives every lattice mode in shell ``shell`` with fixed
    seeded phases, scaled to rms magnitude ``amplitude``.  ``amplitude="auto"``
    picks the value whose laminar (linear steady) response has rms speed 1.
    """

    kind: str = "none"
    amplitude: float | str = 1.0
    shell: int = 1
    seed: int = 12345
    custom: Optional[SpectralField] = None

    def __post_init__(self):
        if self.kind not in FORCING_KINDS:
            raise InvalidInputError(f"unknown forcing kind {self.kind!r}")
        if self.kind == "custom-field" and self.custom is None:
            raise InvalidInputError("custom-field forcing needs a field")
        if self.shell < 1:
            raise InvalidInputError("forcing shell must be >= 1")

    def build(self, grid: GridSpec, linear_symbol: np.ndarray | None = None) -> SpectralField | None:
        if self.kind == "none":
            return None
        if self.kind == "custom-field":
            f = leray_project(self.custom)
            f.coeffs[(slice(None),) + (0,) * grid.dim] = 0.0
            return f
        pattern = _shell_pattern(grid, self.shell, self.seed)
        if self.amplitude == "auto":
            if linear_symbol is None:
                raise InvalidInputError("auto amplitude needs the linear symbol")
            lam = np.where(linear_symbol > 0, linear_symbol, np.inf)[np.newaxis]
            response = math.sqrt(float(np.sum(np.abs(pattern.coeffs / lam) ** 2)))
            amp = 1.0 / response if response > 0 else 0.0
        else:
            amp = float(self.amplitude)
        return pattern.with_coeffs(amp * pattern.coeffs)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "amplitude": self.amplitude, "shell": self.shell, "seed": self.seed}


def _shell_pattern(grid: GridSpec, shell: int, seed: int) -> SpectralField:
    """Unit-rms divergence-free field supported on one wavenumber shell."""
    rng = np.random.default_rng(seed)
    shape = (grid.dim,) + grid.shape
    c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    c = c * (shell_index(grid) == shell)[np.newaxis]
    f = leray_project(SpectralField(grid, c))
    f = f.with_coeffs(hermitian_part(f.coeffs, grid.axes))
    norm = math.sqrt(float(np.sum(np.abs(f.coeffs) ** 2)))
    if norm == 0:
        raise InvalidInputError(f"forcing shell {shell} holds no divergence-free modes")
    return f.with_coeffs(f.coeffs / norm)


@dataclass
class FlowState:
    grid: GridSpec
    u: SpectralField
    nu: float
    chi: float
    filter: FilterParams
    t: float = 0.0
    forcing: ForcingSpec = field(default_factory=ForcingSpec)

    def __post_init__(self):
        if self.nu < 0 or self.chi < 0:
            raise InvalidInputError("nu and chi must be nonnegative")
        if self.chi > 0 and self.filter.delta <= 0:
            raise InvalidInputError("relaxation needs delta > 0")
        if not self.u.is_vector:
            raise InvalidInputError("velocity must have dim components")


@dataclass
class SolverConfig:
    dt: float
    t_end: float
    dealias: bool = True
    integrator: str = "rk4-if"
    linear_terms_exact: bool = True
    record_every: int = 1
    seed: int = 0
    nonlinear: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise InvalidInputError("dt must be positive")
        if not self.t_end >= 0:
            raise InvalidInputError("t_end must be nonnegative")
        if self.integrator != "rk4-if":
            raise InvalidInputError(f"unsupported integrator {self.integrator!r}")
        if self.record_every < 1:
            raise InvalidInputError("record_every must be >= 1")

    def step_sizes(self) -> list[float]:
        """Step lengths covering [0, t_end]; the last one is shortened if needed."""
        if self.t_end == 0:
            return []
        nfull = int(math.floor(self.t_end / self.dt * (1 + 1e-12)))
        steps = [self.dt] * nfull
        rest = self.t_end - nfull * self.dt
        if rest > 1e-12 * self.t_end:
            steps.append(rest)
        return steps


def linear_symbol(grid: GridSpec, nu: float, chi: float, params: FilterParams) -> np.ndarray:
    """Per-mode decay rate nu |k|^2 + (chi/delta)(1 - H_N(k))."""
    lam = nu * grid.kmag**2
    if chi:
        lam = lam + chi / params.delta * fluctuation_hat(grid.kmag, params)
    return lam


def relaxation_term(u: SpectralField, params: FilterParams, chi: float) -> SpectralField:
    """The damping force (chi/delta)(u - H_N u)."""
    if chi == 0:
        return u.with_coeffs(np.zeros_like(u.coeffs))
    f = fluctuation(u, params)
    return f.with_coeffs(chi / params.delta * f.coeffs)


def nonlinear_term(u: SpectralField, dealias: bool = True) -> SpectralField:
    """Leray-projected -(u.grad)u, products formed on the collocation grid."""
    grid = u.grid
    c = u.coeffs * grid.dealias_mask if dealias else u.coeffs
    vel = to_physical(c, grid)
    grad = to_physical(gradient_coeffs(SpectralField(grid, c)), grid)
    adv = np.einsum("j...,ij...->i...", vel, grad)
    out = to_spectral(-adv, grid)
    if dealias:
        out *= grid.dealias_mask
    out[(slice(None),) + (0,) * grid.dim] = 0.0
    return leray_project(SpectralField(grid, out))


class Stepper:
    """Caches the linear symbol, forcing and exponentials for one run."""

    def __init__(self, state: FlowState, config: SolverConfig):
        self.config = config
        self.grid = state.grid
        self.lam = linear_symbol(state.grid, state.nu, state.chi, state.filter)
        self.forcing = state.forcing.build(state.grid, self.lam)
        self._exp_cache: dict[float, tuple[np.ndarray, np.ndarray]] = {}

    def _exponentials(self, dt):
        if dt not in self._exp_cache:
            half = np.exp(-self.lam * (dt / 2))[np.newaxis]
            self._exp_cache[dt] = (half, half * half)
        return self._exp_cache[dt]

    def rhs(self, c: np.ndarray) -> np.ndarray:
        """Non-stiff part: projected advection plus forcing."""
        out = np.zeros_like(c)
        if self.config.nonlinear:
            out += nonlinear_term(SpectralField(self.grid, c), self.config.dealias).coeffs
        if self.forcing is not None:
            out += self.forcing.coeffs
        return out

    def advance(self, c: np.ndarray, dt: float) -> np.ndarray:
        if self.config.linear_terms_exact:
            e1, e2 = self._exponentials(dt)
            k1 = self.rhs(c)
            k2 = self.rhs(e1 * (c + 0.5 * dt * k1))
            k3 = self.rhs(e1 * c + 0.5 * dt * k2)
            k4 = self.rhs(e2 * c + dt * e1 * k3)
            new = e2 * c + dt / 6.0 * (e2 * k1 + 2.0 * e1 * (k2 + k3) + k4)
        else:
            lam = self.lam[np.newaxis]

            def f(v):
                return self.rhs(v) - lam * v

            k1 = f(c)
            k2 = f(c + 0.5 * dt * k1)
            k3 = f(c + 0.5 * dt * k2)
            k4 = f(c + dt * k3)
            new = c + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        new = leray_project(SpectralField(self.grid, new)).coeffs
        new[(slice(None),) + (0,) * self.grid.dim] = 0.0
        return new


def _check_finite(c, state, records):
    if not np.all(np.isfinite(c)):
        raise BlowUpError(state.t, records, state)


def _cfl_check(state: FlowState, dt: float):
    umax = float(np.max(np.sqrt(np.sum(inverse_transform(state.u, check=False) ** 2, axis=0))))
    if umax > 0 and dt > 0.5 * state.grid.dx / umax:
        warnings.warn(
            f"dt={dt:g} exceeds advisory CFL limit {0.5 * state.grid.dx / umax:g}",
            RuntimeWarning,
            stacklevel=3,
        )
        return True
    return False


def step(state: FlowState, config: SolverConfig, dt: float | None = None) -> FlowState:
    """Advance ``state`` by one step of length ``dt`` (default ``config.dt``)."""
    dt = config.dt if dt is None else dt
    stepper = Stepper(state, config)
    new = stepper.advance(state.u.coeffs, dt)
    _check_finite(new, state, [])
    return replace(state, u=SpectralField(state.grid, new), t=state.t + dt)


def record(state: FlowState, forcing: SpectralField | None = None) -> EnergyRecord:
    if forcing is None and state.forcing.kind != "none":
        forcing = state.forcing.build(state.grid, linear_symbol(state.grid, state.nu, state.chi, state.filter))
    return energy_record(state.t, state.u, state.filter, state.chi, state.nu, forcing)


Sink = Callable[[EnergyRecord, FlowState], None]


def run(state: FlowState, config: SolverConfig, sink: Sink | None = None):
    """Integrate to ``config.t_end``; returns ``(records, final_state)``.

    A record is taken at t = 0, every ``record_every`` steps and at the final
    time.  ``sink`` (if given) is called with each record and the state it
    was computed from.  On blow-up the BlowUpError carries the records so far.
    """
    stepper = Stepper(state, config)
    records: list[EnergyRecord] = []

    def emit(s):
        r = energy_record(s.t, s.u, s.filter, s.chi, s.nu, stepper.forcing)
        records.append(r)
        if sink is not None:
            sink(r, s)

    emit(state)
    steps = config.step_sizes()
    warned = _cfl_check(state, config.dt) if steps and config.nonlinear else True
    c = state.u.coeffs
    t0 = state.t
    for i, dt in enumerate(steps, start=1):
        new = stepper.advance(c, dt)
        _check_finite(new, state, records)
        c = new
        t = t0 + (i * config.dt if dt == config.dt else config.t_end)
        state = replace(state, u=SpectralField(state.grid, c), t=t)
        if i % config.record_every == 0 or i == len(steps):
            emit(state)
            if not warned:
                warned = _cfl_check(state, config.dt)
    return records, state


def make_initial_condition(
    kind: str,
    grid: GridSpec,
    seed: int = 0,
    slope: float = -5.0 / 3.0,
    band: tuple[int, int] = (1, 4),
    energy: float = 0.5,
) -> SpectralField:
    """Divergence-free, zero-mean initial velocity.

    ``taylor-green``: (sin x cos y, -cos x sin y) in 2D and the classical
    (sin x cos y cos z, -cos x sin y cos z, 0) in 3D, with x scaled by 2pi/L.
    ``random-spectrum``: random phases from ``seed`` with shell energy
    proportional to k**slope on the integer shell band, total energy ``energy``.
    """
    if kind == "taylor-green":
        x = grid.coordinates() * grid.dk
        if grid.dim == 2:
            u = np.array([np.sin(x[0]) * np.cos(x[1]), -np.cos(x[0]) * np.sin(x[1])])
        else:
            cz = np.cos(x[2])
            u = np.array(
                [np.sin(x[0]) * np.cos(x[1]) * cz, -np.cos(x[0]) * np.sin(x[1]) * cz, np.zeros(grid.shape)]
            )
        return forward_transform(u, grid)
    if kind != "random-spectrum":
        raise InvalidInputError(f"unknown initial condition {kind!r}")
    lo, hi = int(band[0]), int(band[1])
    if lo < 1 or hi < lo:
        raise InvalidInputError(f"empty or invalid band {band}")
    idx = shell_index(grid)
    rng = np.random.default_rng(seed)
    shape = (grid.dim,) + grid.shape
    c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    c = c * ((idx >= lo) & (idx <= hi))[np.newaxis]
    u = leray_project(SpectralField(grid, c))
    u = u.with_coeffs(hermitian_part(u.coeffs, grid.axes))
    k, E = shell_spectrum(u)
    shells = np.arange(lo, hi + 1)
    has = shells[(shells < E.size) & (E[np.minimum(shells, E.size - 1)] > 0)]
    if has.size == 0:
        raise InvalidInputError(f"band {band} holds no resolvable modes")
    target = np.zeros_like(E)
    target[has] = (has.astype(float)) ** slope
    target *= energy / (target.sum() * grid.dk)
    gain = np.zeros_like(E)
    gain[has] = np.sqrt(target[has] / E[has])
    return u.with_coeffs(u.coeffs * gain[idx][np.newaxis])
