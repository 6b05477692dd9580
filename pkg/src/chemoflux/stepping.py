"""IMEX time stepping for the coupled hyperbolic-parabolic pair.

One step is a Lie splitting:

  1. explicit forward-Euler update with the hyperbolic fluxes in conservative
     central form, (f_{i+1} - f_{i-1}) / (2 dx) — the difference of
     arithmetic-mean midpoint fluxes;
  2. implicit backward-Euler treatment of the diffusion terms, one
     tridiagonal solve per diffusing field.

The stiff v-diffusion (unit coefficient) would force dt = O(dx^2) if explicit;
treating it implicitly leaves only the mild advective CFL constraint
dt = cfl * dx / max(1, sup(|2 eps u| + 1 + |u| + sqrt(v))).

Boundary closures:

  * truncated line: both fields pinned to the far-field constants (0, v_inf)
    at the end nodes, with a runtime monitor checking that the outer 10% of
    the domain actually stays at the far field;
  * unit interval: u = 0 at both walls (Dirichlet identity rows); v gets a
    mirror ghost (v_{-1} = v_1, u_{-1} = -u_1), under which the advective
    divergence at the wall collapses to -(u_1 v_1)/dx and the implicit rows
    become (1 + 2 lam, -2 lam).  With trapezoid weights both substeps then
    telescope exactly, so the discrete excess v-mass is conserved to
    rounding.  The wall value of u_xx is left free (a diagnostic, not an
    enforced condition): prescribing it on top of the Dirichlet data would
    over-determine the discrete system.

The splitting is first order in time.  Refinement studies in this package
therefore tie dt to dx^2 (or share one fixed dt across runs that get
compared), keeping temporal error below the second-order spatial error.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .diagnostics import DiagnosticsRecord, audit_record
from .model import Grid1D, Kind, ProblemSetup, State, make_initial
from .tridiag import TridiagonalSystem, solve_tridiagonal

__all__ = [
    "FluxForm",
    "SolverConfig",
    "TrajectoryRecorder",
    "PositivityLossError",
    "DivergenceError",
    "ProgressError",
    "step_viscous",
    "step_limit",
    "integrate",
    "coupled_imex_step",
]

FAR_FIELD_TOL = 1e-8


class FluxForm(enum.Enum):
    CONSERVATIVE_CENTRAL = "conservative-central"


class PositivityLossError(RuntimeError):
    """v dropped to <= 0 — dt too large or genuine blow-up.  Aborts rather
    than clips: clipping would silently destroy the entropy balance and the
    floor check."""

    def __init__(self, index: int, t: float):
        self.index = int(index)
        self.t = float(t)
        super().__init__(f"v <= 0 at node {self.index}, t = {self.t:.6g}")


class DivergenceError(RuntimeError):
    def __init__(self, t: float):
        self.t = float(t)
        super().__init__(f"non-finite values appeared at t = {self.t:.6g}")


class ProgressError(RuntimeError):
    def __init__(self, max_steps: int, t: float, t_final: float):
        self.t = float(t)
        super().__init__(
            f"max_steps = {max_steps} exhausted at t = {t:.6g} before t_final = {t_final:.6g}"
        )


@dataclass(frozen=True)
class SolverConfig:
    """Time-step policy.  Give dt (fixed) or cfl (derived each step), not both;
    with neither, cfl defaults to 0.4.  space_order is fixed at 2."""

    dt: Optional[float] = None
    cfl: Optional[float] = None
    flux_form: FluxForm = FluxForm.CONSERVATIVE_CENTRAL
    space_order: int = 2
    max_steps: int = 2_000_000

    def __post_init__(self):
        if self.dt is not None and self.cfl is not None:
            raise ValueError("dt and cfl are mutually exclusive")
        if self.dt is None and self.cfl is None:
            object.__setattr__(self, "cfl", 0.4)
        if self.dt is not None and not self.dt > 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.cfl is not None and not 0.0 < self.cfl <= 1.0:
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl}")
        if self.space_order != 2:
            raise ValueError("space_order is fixed at 2")
        if not isinstance(self.flux_form, FluxForm):
            raise ValueError(f"flux_form must be a FluxForm, got {self.flux_form!r}")
        if int(self.max_steps) != self.max_steps or self.max_steps < 1:
            raise ValueError(f"max_steps must be a positive integer, got {self.max_steps}")


@dataclass
class TrajectoryRecorder:
    """Collects (State, DiagnosticsRecord) pairs every `stride` steps plus the
    final state; the first record is always the initial state.  far_field_ok
    tracks the truncated-line contact monitor (always True for wall runs)."""

    stride: int = 1
    records: list = field(default_factory=list)
    far_field_ok: bool = True

    def __post_init__(self):
        if int(self.stride) != self.stride or self.stride < 1:
            raise ValueError(f"stride must be a positive integer, got {self.stride}")

    def add(self, state: State, diag: DiagnosticsRecord):
        if self.records and not state.t > self.records[-1][0].t:
            raise ValueError(
                f"record times must strictly increase "
                f"({self.records[-1][0].t} -> {state.t})"
            )
        self.records.append((state, diag))

    @property
    def states(self):
        return [s for s, _ in self.records]

    @property
    def diagnostics(self):
        return [d for _, d in self.records]

    @property
    def times(self):
        return [s.t for s, _ in self.records]


def _nominal_dt(state: State, setup: ProblemSetup, grid: Grid1D, cfg: SolverConfig) -> float:
    if cfg.dt is not None:
        return cfg.dt
    speed = float(
        np.max(
            2.0 * setup.epsilon * np.abs(state.u)
            + 1.0
            + np.abs(state.u)
            + np.sqrt(state.v)
        )
    )
    return cfg.cfl * grid.dx / max(1.0, speed)


def _diffuse(rhs: np.ndarray, lam: float, neumann: bool, pin_value: float) -> np.ndarray:
    """Backward-Euler diffusion solve (I - lam*L) x = rhs with wall closure:
    Neumann mirror rows (1+2lam, -2lam) or Dirichlet pinning to pin_value."""
    n = rhs.shape[0]
    lower = np.full(n - 1, -lam)
    upper = np.full(n - 1, -lam)
    diag = np.full(n, 1.0 + 2.0 * lam)
    b = rhs.copy()
    if neumann:
        upper[0] = -2.0 * lam
        lower[-1] = -2.0 * lam
    else:
        diag[0] = diag[-1] = 1.0
        upper[0] = 0.0
        lower[-1] = 0.0
        b[0] = b[-1] = pin_value
    return solve_tridiagonal(TridiagonalSystem(lower, diag, upper, b))


def coupled_imex_step(
    u: np.ndarray,
    v: np.ndarray,
    dt: float,
    dx: float,
    epsilon: float,
    *,
    ibvp: bool,
    v_inf: float,
    alpha: float = 1.0,
    chi: float = 1.0,
    dcoef: float = 1.0,
):
    """Raw one-step kernel (arrays in, arrays out, no validation) for

        u_t + (epsilon*u^2 - alpha*v)_x = epsilon * u_xx
        v_t - chi * (u*v)_x             = dcoef * v_xx

    The primary systems use alpha = chi = dcoef = 1; the general coefficients
    exist so pre-normalization parameter sets can be stepped with the exact
    same scheme.
    """
    fu = epsilon * u * u - alpha * v
    fv = -chi * u * v
    r = dt / (2.0 * dx)
    un = np.empty_like(u)
    vn = np.empty_like(v)
    un[1:-1] = u[1:-1] - r * (fu[2:] - fu[:-2])
    vn[1:-1] = v[1:-1] - r * (fv[2:] - fv[:-2])
    un[0] = un[-1] = 0.0
    if ibvp:
        # odd-u/even-v ghost: divergence at the wall reduces to +-fv[1]/dx
        vn[0] = v[0] - (dt / dx) * fv[1]
        vn[-1] = v[-1] + (dt / dx) * fv[-2]
    else:
        vn[0] = vn[-1] = v_inf
    # solve in the deviation w = v - v_inf: every matrix row sums to 1, so the
    # shift is exact, and the rest state stays a bitwise fixed point (zero rhs
    # propagates through the elimination without rounding)
    vn = v_inf + _diffuse(vn - v_inf, dcoef * dt / (dx * dx), neumann=ibvp, pin_value=0.0)
    if epsilon > 0.0:
        un = _diffuse(un, epsilon * dt / (dx * dx), neumann=False, pin_value=0.0)
    return un, vn


def _checked_step(state: State, setup: ProblemSetup, grid: Grid1D, dt: float) -> State:
    t_new = state.t + dt
    try:
        # blow-up is detected by value below, so silence overflow warnings here
        with np.errstate(all="ignore"):
            u, v = coupled_imex_step(
                state.u,
                state.v,
                dt,
                grid.dx,
                setup.epsilon,
                ibvp=setup.kind is Kind.IBVP,
                v_inf=setup.v_infinity,
            )
    except ValueError as exc:
        # non-finite intermediates reached the implicit stage: the explicit
        # stage already blew up
        raise DivergenceError(t_new) from exc
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
        raise DivergenceError(t_new)
    if np.any(v <= 0.0):
        raise PositivityLossError(int(np.argmin(v)), t_new)
    return State(u, v, t_new)


def step_viscous(state: State, setup: ProblemSetup, grid: Grid1D, cfg: SolverConfig) -> State:
    """One IMEX step of the viscous system (requires setup.epsilon > 0)."""
    if not setup.epsilon > 0.0:
        raise ValueError("step_viscous needs epsilon > 0; use step_limit at epsilon = 0")
    return _checked_step(state, setup, grid, _nominal_dt(state, setup, grid, cfg))


def step_limit(state: State, setup: ProblemSetup, grid: Grid1D, cfg: SolverConfig) -> State:
    """One IMEX step of the limit system (requires setup.epsilon == 0): the
    u-flux degenerates to -v and u undergoes no diffusion."""
    if setup.epsilon != 0.0:
        raise ValueError("step_limit needs epsilon = 0; use step_viscous otherwise")
    return _checked_step(state, setup, grid, _nominal_dt(state, setup, grid, cfg))


def _far_field_contact(state: State, v_inf: float) -> bool:
    edge = max(1, state.u.shape[0] // 10)
    for sl in (slice(0, edge), slice(-edge, None)):
        if np.max(np.abs(state.u[sl])) > FAR_FIELD_TOL:
            return False
        if np.max(np.abs(state.v[sl] - v_inf)) > FAR_FIELD_TOL:
            return False
    return True


def integrate(
    setup: ProblemSetup,
    grid: Grid1D,
    cfg: SolverConfig,
    rec: Optional[TrajectoryRecorder] = None,
) -> TrajectoryRecorder:
    """Drive the appropriate stepper to t_final (last step clipped to land
    exactly there), recording every rec.stride steps plus the final state.

    Stepper failures propagate with the failing time attached; running out
    of max_steps raises ProgressError.  t_final = 0 yields a recorder holding
    only the initial state.
    """
    if rec is None:
        rec = TrajectoryRecorder(stride=1)
    cauchy = setup.kind is Kind.CAUCHY_TRUNCATED
    state = make_initial(setup, grid)
    rec.add(state, audit_record(state, grid, setup))
    if cauchy:
        rec.far_field_ok = rec.far_field_ok and _far_field_contact(state, setup.v_infinity)
    t_final = setup.t_final
    steps = 0
    while state.t < t_final:
        if steps >= cfg.max_steps:
            raise ProgressError(cfg.max_steps, state.t, t_final)
        dt = _nominal_dt(state, setup, grid, cfg)
        remaining = t_final - state.t
        last = dt >= remaining * (1.0 - 1e-12)
        if last:
            dt = remaining
        state = _checked_step(state, setup, grid, dt)
        if last:
            # land exactly on t_final instead of accumulating rounding
            state = State(state.u, state.v, t_final)
        steps += 1
        if last or steps % rec.stride == 0:
            rec.add(state, audit_record(state, grid, setup))
            if cauchy:
                rec.far_field_ok = rec.far_field_ok and _far_field_contact(
                    state, setup.v_infinity
                )
    return rec
