"""Dimensionless groups, micro-scales and relaxation-parameter choices.

Every "of the order of" relation is taken as an equality with unit constant.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

from .errors import InvalidInputError

FULLY_RESOLVED = "fully-resolved"
UNDER_SMALL_ALPHA = "under-resolved-small-alpha"
UNDER_LARGE_ALPHA = "under-resolved-large-alpha"
UNDER_CRITICAL_ALPHA = "under-resolved-critical-alpha"
PERFECTLY_RESOLVED = "perfectly-resolved"
INDETERMINATE = "indeterminate"

# relative tolerance for "chi equals the case's prescribed value"
MATCH_RTOL = 1e-9


def _positive(**kwargs):
    for name, value in kwargs.items():
        if value is None or not value > 0 or not math.isfinite(value):
            raise InvalidInputError(f"{name} must be positive and finite, got {value}")


def _order(N):
    if int(N) != N or N < 0:
        raise InvalidInputError(f"N must be a nonnegative integer, got {N}")
    return int(N)


def reynolds_number(U, L, nu):
    _positive(U=U, L=L, nu=nu)
    return U * L / nu


def reynolds_n(U, L, chi, alpha, delta, N):
    """Re_N = U L^(2N+1) / (chi alpha^(N+1) delta^(2N+1))."""
    N = _order(N)
    _positive(U=U, L=L, chi=chi, alpha=alpha, delta=delta)
    return U * L ** (2 * N + 1) / (chi * alpha ** (N + 1) * delta ** (2 * N + 1))


def reynolds_n_small(u_small, eta_model, chi, alpha, delta, N):
    N = _order(N)
    _positive(eta_model=eta_model, chi=chi, alpha=alpha, delta=delta)
    if u_small < 0:
        raise InvalidInputError("u_small must be nonnegative")
    a = alpha * delta**2 / eta_model**2
    return (
        u_small * eta_model ** (2 * N + 1) / (chi * alpha ** (N + 1) * delta ** (2 * N + 1)) * (1 + a) ** (N + 1)
    )


def small_scale_velocity(eta_model, chi, alpha, delta, N):
    """u_small making Re_{N-small} = 1 at length eta_model."""
    N = _order(N)
    a = alpha * delta**2 / eta_model**2
    return chi * alpha ** (N + 1) * delta ** (2 * N + 1) / (eta_model ** (2 * N + 1) * (1 + a) ** (N + 1))


def microscale_balance(eta_model, chi, alpha, delta, N):
    """Small-scale dissipation with u_small eliminated; balances U^3/L at the micro-scale."""
    N = _order(N)
    _positive(eta_model=eta_model, chi=chi, alpha=alpha, delta=delta)
    a = alpha * delta**2 / eta_model**2
    us = small_scale_velocity(eta_model, chi, alpha, delta, N)
    return chi / delta * a ** (N + 1) * (1 + a) ** (-(N + 1)) * us**2


def microscale_balance_resolved(eta_model, chi, alpha, delta, N):
    """The balance with 1 + alpha delta^2/eta^2 replaced by 1 (delta < eta)."""
    N = _order(N)
    a = alpha * delta**2 / eta_model**2
    us = chi * alpha ** (N + 1) * delta ** (2 * N + 1) / eta_model ** (2 * N + 1)
    return chi / delta * a ** (N + 1) * us**2


@dataclass
class Microscale:
    eta: float
    consistent: bool


def microscale_case1(U, L, chi, alpha, delta, N) -> Microscale:
    """Fully resolved micro-scale; ``consistent`` iff eta > delta."""
    N = _order(N)
    _positive(U=U, L=L, chi=chi, alpha=alpha, delta=delta)
    p = 1.0 / (6 * N + 4)
    eta = (chi**3 * L / U**3) ** p * alpha ** (0.5 + p) * delta ** (1 - p)
    return Microscale(eta, eta > delta)


def microscale_case2_large_alpha(U, L, chi, delta, alpha=None) -> Microscale:
    """Under-resolved micro-scale for alpha > (eta/delta)^2.

    ``consistent`` requires eta < delta and, when ``alpha`` is supplied,
    alpha > (eta/delta)^2.
    """
    _positive(U=U, L=L, chi=chi, delta=delta)
    eta = math.sqrt(U**3 * delta**3 / (chi**3 * L))
    ok = eta < delta and (alpha is None or alpha > (eta / delta) ** 2)
    return Microscale(eta, ok)


def chi_critical_alpha(U, L, delta, alpha, N):
    """Relaxation parameter enforcing alpha = (eta/delta)^2; returns ``(chi, error)``.

    ``error`` is the relaxation consistency magnitude chi alpha^(N+1) delta^(2N+1).
    """
    N = _order(N)
    _positive(U=U, L=L, delta=delta, alpha=alpha)
    chi = U / L ** (1 / 3) * 2 ** (N + 1) * (delta / alpha) ** (1 / 3)
    return chi, relaxation_consistency_error(chi, alpha, delta, N)


def chi_perfectly_resolved(U, L, delta, alpha, N):
    """Relaxation parameter placing the micro-scale at delta; returns ``(chi, error)``.

    ``error`` is the displayed magnitude (1 + alpha)^(N+1) delta^(2N + 7/3).
    """
    N = _order(N)
    _positive(U=U, L=L, delta=delta, alpha=alpha)
    chi = U / L ** (1 / 3) * delta ** (1 / 3) * (1 + 1 / alpha) ** (N + 1)
    return chi, (1 + alpha) ** (N + 1) * delta ** (2 * N + 7 / 3)


def relaxation_consistency_error(chi, alpha, delta, N):
    """|(chi/delta)(u - D_N u_bar)| for smooth fields: chi alpha^(N+1) delta^(2N+1)."""
    N = _order(N)
    return chi * alpha ** (N + 1) * delta ** (2 * N + 1)


def kolmogorov_scale(L, Re):
    _positive(L=L, Re=Re)
    return Re ** (-0.75) * L


def chi_lower_bounds(U, L, Re, nu, alpha, delta, N, eta_model):
    """Lower bounds on chi for viscous dissipation to be negligible.

    The first follows from eta_model > eta_Kolmogorov, the second from
    Re_small >> Re_{N-small} at the Kolmogorov scale.
    """
    N = _order(N)
    _positive(U=U, L=L, Re=Re, nu=nu, alpha=alpha, delta=delta, eta_model=eta_model)
    eta_k = kolmogorov_scale(L, Re)
    bound1 = eta_k ** (2 * N + 4 / 3) * U / L ** (1 / 3) * alpha ** (-(N + 1)) * delta ** (-(2 * N + 1))
    a = alpha * delta**2 / eta_model**2
    bound2 = nu * (delta / eta_model) ** (-2 * N) / delta * alpha ** (-(N + 1)) * (1 + a) ** (N + 1)
    return bound1, bound2


def dof_and_speedup(L, delta, Re):
    """Returns ``(N_dof, speedup, N_dof_dns)``: (L/delta)^3, (delta/L)^4 Re^3, Re^(9/4)."""
    _positive(L=L, delta=delta, Re=Re)
    ratio = L / delta
    return ratio**3, Re**3 / ratio**4, Re**2.25


@dataclass
class SimilarityInputs:
    U: float
    L: float
    delta: float
    alpha: float
    N: int = 0
    nu: Optional[float] = None
    Re: Optional[float] = None
    chi: Optional[float] = None

    def __post_init__(self):
        _positive(U=self.U, L=self.L, delta=self.delta, alpha=self.alpha)
        self.N = _order(self.N)
        if (self.nu is None) == (self.Re is None):
            raise InvalidInputError("give exactly one of nu and Re")
        if self.nu is not None:
            _positive(nu=self.nu)
            self.Re = reynolds_number(self.U, self.L, self.nu)
        else:
            _positive(Re=self.Re)
            self.nu = self.U * self.L / self.Re
        if self.chi is not None:
            _positive(chi=self.chi)


@dataclass
class Candidate:
    case: str
    eta_model: float
    consistent: bool


@dataclass
class SimilarityReport:
    U: float
    L: float
    nu: float
    delta: float
    alpha: float
    N: int
    Re: float
    chi_selected: float
    chi_source: str
    Re_N: float
    case: str
    ambiguous: bool
    eta_model: Optional[float]
    u_small: Optional[float]
    Re_N_small: Optional[float]
    candidates: list = field(default_factory=list)
    consistency_error: float = 0.0
    consistency_error_display: Optional[float] = None
    eta_kolmogorov: float = 0.0
    chi_lower_bound_1: float = 0.0
    chi_lower_bound_2: Optional[float] = None
    satisfies_bound_1: bool = False
    satisfies_bound_2: Optional[bool] = None
    N_dof: float = 0.0
    N_dof_dns: float = 0.0
    speedup: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def table(self) -> str:
        rows = [(k, v) for k, v in self.to_dict().items() if k != "candidates"]
        width = max(len(k) for k, _ in rows)
        lines = [f"{k:<{width}}  {_fmt(v)}" for k, v in rows]
        for c in self.candidates:
            mark = "yes" if c["consistent"] else "no"
            lines.append(f"{'candidate':<{width}}  {c['case']}: eta={_fmt(c['eta_model'])} consistent={mark}")
        return "\n".join(lines)


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _close(a, b):
    return abs(a - b) <= MATCH_RTOL * abs(b)


def classify_case(inputs: SimilarityInputs) -> SimilarityReport:
    """Evaluate every micro-scale regime and fill a full report.

    Cases whose defining chi is matched exactly (perfectly resolved, critical
    alpha) take precedence.  Otherwise the self-consistent regimes are
    collected; when several are consistent the largest micro-scale is
    selected (the cascade is halted at the first balancing scale it reaches)
    and ``ambiguous`` is set.  No consistent regime gives "indeterminate".
    """
    U, L, delta, alpha, N = inputs.U, inputs.L, inputs.delta, inputs.alpha, inputs.N
    if inputs.chi is None:
        chi, _ = chi_perfectly_resolved(U, L, delta, alpha, N)
        source = "perfectly-resolved scaling"
    else:
        chi, source = inputs.chi, "input"

    cands = []
    chi3, err3 = chi_perfectly_resolved(U, L, delta, alpha, N)
    cands.append(Candidate(PERFECTLY_RESOLVED, delta, _close(chi, chi3)))
    chi2, _ = chi_critical_alpha(U, L, delta, alpha, N)
    cands.append(Candidate(UNDER_CRITICAL_ALPHA, delta * math.sqrt(alpha), _close(chi, chi2)))
    c1 = microscale_case1(U, L, chi, alpha, delta, N)
    cands.append(Candidate(FULLY_RESOLVED, c1.eta, c1.consistent))
    cands.append(
        Candidate(UNDER_SMALL_ALPHA, c1.eta, c1.eta < delta and alpha < (c1.eta / delta) ** 2)
    )
    c2 = microscale_case2_large_alpha(U, L, chi, delta, alpha)
    cands.append(Candidate(UNDER_LARGE_ALPHA, c2.eta, c2.consistent))

    exact = [c for c in cands[:2] if c.consistent]
    regimes = [c for c in cands[2:] if c.consistent]
    if exact:
        chosen, ambiguous = exact[0], len(exact) > 1
    elif regimes:
        chosen = max(regimes, key=lambda c: c.eta_model)
        ambiguous = len(regimes) > 1
    else:
        chosen, ambiguous = None, False

    eta = chosen.eta_model if chosen else None
    case = chosen.case if chosen else INDETERMINATE
    eta_k = kolmogorov_scale(L, inputs.Re)
    b1, b2 = chi_lower_bounds(U, L, inputs.Re, inputs.nu, alpha, delta, N, eta) if eta else (
        chi_lower_bounds(U, L, inputs.Re, inputs.nu, alpha, delta, N, delta)[0],
        None,
    )
    n_dof, speedup, n_dns = dof_and_speedup(L, delta, inputs.Re)
    u_small = small_scale_velocity(eta, chi, alpha, delta, N) if eta else None
    if case == PERFECTLY_RESOLVED:
        display = err3
    elif case == UNDER_CRITICAL_ALPHA:
        display = relaxation_consistency_error(chi, alpha, delta, N)
    else:
        display = None
    return SimilarityReport(
        U=U,
        L=L,
        nu=inputs.nu,
        delta=delta,
        alpha=alpha,
        N=N,
        Re=inputs.Re,
        chi_selected=chi,
        chi_source=source,
        Re_N=reynolds_n(U, L, chi, alpha, delta, N),
        case=case,
        ambiguous=ambiguous,
        eta_model=eta,
        u_small=u_small,
        Re_N_small=reynolds_n_small(u_small, eta, chi, alpha, delta, N) if eta else None,
        candidates=[asdict(c) for c in cands],
        consistency_error=relaxation_consistency_error(chi, alpha, delta, N),
        consistency_error_display=display,
        eta_kolmogorov=eta_k,
        chi_lower_bound_1=b1,
        chi_lower_bound_2=b2,
        satisfies_bound_1=chi > b1,
        satisfies_bound_2=(chi > b2) if b2 is not None else None,
        N_dof=n_dof,
        N_dof_dns=n_dns,
        speedup=speedup,
    )


SWEEP_COLUMNS = ("alpha", "delta", "N", "chi", "eta_model", "case", "ambiguous", "Re_N", "consistency_error", "N_dof", "speedup")


def sweep_csv(base: SimilarityInputs, alphas, deltas, Ns) -> str:
    """Classify every (alpha, delta, N) combination; one CSV row each."""
    buf = io.StringIO()
    buf.write(",".join(SWEEP_COLUMNS) + "\n")
    for N in Ns:
        for delta in deltas:
            for alpha in alphas:
                inp = SimilarityInputs(
                    U=base.U, L=base.L, delta=delta, alpha=alpha, N=N, Re=base.Re, chi=base.chi
                )
                r = classify_case(inp)
                row = [alpha, delta, N, r.chi_selected, r.eta_model, r.case, r.ambiguous, r.Re_N,
                       r.consistency_error, r.N_dof, r.speedup]
                buf.write(",".join(_csv_value(v) for v in row) + "\n")
    return buf.getvalue()


def _csv_value(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    return str(v)
