"""Problem definitions: grids, states, fluxes, the entropy pair, initial data.

The two systems this package integrates are the viscous pair

    u_t + (eps*u**2 - v)_x = eps*u_xx
    v_t - (u*v)_x          = v_xx          (eps > 0)

and its eps = 0 limit, in which the u-equation loses both the quadratic
flux term and the diffusion and degenerates to u_t - v_x = 0.  Both live
either on a truncated line [-L, L] with far-field data (u, v) -> (0, v_inf),
or on the unit interval with walls u = 0 and v_x = 0.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "Kind",
    "Family",
    "Grid1D",
    "State",
    "InitialProfile",
    "ProblemSetup",
    "EntropyValue",
    "entropy_pair",
    "flux",
    "make_initial",
]

#: admissibility tolerance for boundary/far-field values of initial data
BOUNDARY_TOL = 1e-12


class Kind(enum.Enum):
    """Which boundary closure the problem uses."""

    CAUCHY_TRUNCATED = "cauchy"
    IBVP = "ibvp"


class Family(enum.Enum):
    GAUSSIAN_BUMP = "gaussian"
    COSINE_PAIR = "cosine"
    CUSTOM = "custom"


@dataclass(frozen=True)
class Grid1D:
    """Uniform vertex-centered grid: n_cells + 1 nodes including both endpoints."""

    x_left: float
    x_right: float
    n_cells: int

    def __post_init__(self):
        if not self.x_right > self.x_left:
            raise ValueError(
                f"x_right must exceed x_left, got [{self.x_left}, {self.x_right}]"
            )
        if int(self.n_cells) != self.n_cells or self.n_cells < 8:
            raise ValueError(f"n_cells must be an integer >= 8, got {self.n_cells}")

    @property
    def dx(self) -> float:
        return (self.x_right - self.x_left) / self.n_cells

    @property
    def n_nodes(self) -> int:
        return self.n_cells + 1

    @property
    def x(self) -> np.ndarray:
        # linspace pins both endpoints exactly
        return np.linspace(self.x_left, self.x_right, self.n_cells + 1)


@dataclass
class State:
    """Solution snapshot at time t.  v must be strictly positive everywhere."""

    u: np.ndarray
    v: np.ndarray
    t: float

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if self.u.ndim != 1 or self.u.shape != self.v.shape:
            raise ValueError("u and v must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.v))):
            raise ValueError("state arrays contain non-finite entries")
        if np.any(self.v <= 0.0):
            i = int(np.argmin(self.v))
            raise ValueError(f"v must be strictly positive; v[{i}] = {self.v[i]}")
        if not (np.isfinite(self.t) and self.t >= 0.0):
            raise ValueError(f"t must be finite and >= 0, got {self.t}")


@dataclass(frozen=True)
class InitialProfile:
    """Initial-data family.  amplitude_* scale the bumps; width is the Gaussian
    length scale (u0 = amplitude_u * exp(-((x-xc)/width)^2)).  Custom profiles
    supply callables evaluated on the grid nodes."""

    family: Family
    amplitude_u: float = 0.3
    amplitude_v: float = 0.3
    width: float = 1.0
    custom_u: Optional[Callable[[np.ndarray], np.ndarray]] = None
    custom_v: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError(f"width must be positive, got {self.width}")
        if self.family is Family.CUSTOM and (
            self.custom_u is None or self.custom_v is None
        ):
            raise ValueError("custom profiles require custom_u and custom_v callables")


@dataclass(frozen=True)
class ProblemSetup:
    """Everything that defines a run except the grid and the time stepper.

    alpha_floor is the positive lower bound assumed on the initial v; it feeds
    the minimum-principle floor check.  When omitted it defaults to
    v_infinity - |amplitude_v| (custom profiles must set it explicitly).
    """

    kind: Kind
    epsilon: float
    t_final: float
    initial_data: InitialProfile
    v_infinity: float = 1.0
    alpha_floor: Optional[float] = None

    def __post_init__(self):
        if not isinstance(self.kind, Kind):
            raise ValueError(f"kind must be a Kind, got {self.kind!r}")
        if not self.epsilon >= 0.0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if not self.v_infinity > 0.0:
            raise ValueError(f"v_infinity must be positive, got {self.v_infinity}")
        if not self.t_final >= 0.0:
            raise ValueError(f"t_final must be >= 0, got {self.t_final}")
        if self.alpha_floor is None:
            if self.initial_data.family is Family.CUSTOM:
                raise ValueError(
                    "alpha_floor must be given explicitly for custom initial data"
                )
            object.__setattr__(
                self,
                "alpha_floor",
                self.v_infinity - abs(self.initial_data.amplitude_v),
            )
        if not self.alpha_floor > 0.0:
            raise ValueError(
                f"alpha_floor must be positive, got {self.alpha_floor} "
                "(is |amplitude_v| >= v_infinity?)"
            )


@dataclass(frozen=True)
class EntropyValue:
    """Entropy density eta >= 0 and its flux q; zero exactly at (0, v_inf)."""

    eta: float | np.ndarray
    q: float | np.ndarray


def entropy_pair(u, v, v_inf: float, epsilon: float) -> EntropyValue:
    """Pointwise entropy density and flux:

        eta = u^2/2 + v*log(v/v_inf) - (v - v_inf)
        q   = -u*v*log(v/v_inf) + (2/3)*eps*u^3

    The v-part is evaluated as v_inf*((1+w)*log1p(w) - w) with
    w = (v - v_inf)/v_inf, which is the same function but stays
    non-negative (and exactly zero at rest) in floating point.

    Accepts scalars or same-shaped arrays, elementwise.
    """
    if not v_inf > 0.0:
        raise ValueError(f"v_inf must be positive, got {v_inf}")
    u_arr = np.asarray(u, dtype=float)
    v_arr = np.asarray(v, dtype=float)
    if np.any(v_arr <= 0.0):
        raise ValueError(f"v must be strictly positive, got {np.min(v_arr)}")
    w = (v_arr - v_inf) / v_inf
    log_ratio = np.log1p(w)
    eta = 0.5 * u_arr * u_arr + v_inf * ((1.0 + w) * log_ratio - w)
    q = -u_arr * v_arr * log_ratio + (2.0 / 3.0) * epsilon * u_arr**3
    if np.ndim(u) == 0 and np.ndim(v) == 0:
        return EntropyValue(float(eta), float(q))
    return EntropyValue(eta, q)


def flux(u, v, epsilon: float):
    """Hyperbolic flux pair (f_u, f_v) = (eps*u^2 - v, -u*v).

    At eps = 0 the u-flux is exactly -v.  Works elementwise on arrays.
    """
    return epsilon * u * u - v, -u * v


def _one_sided_ddx(f: np.ndarray, dx: float, left: bool) -> float:
    """Second-order one-sided first derivative at an endpoint."""
    if left:
        return (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dx)
    return (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * dx)


def make_initial(setup: ProblemSetup, grid: Grid1D) -> State:
    """Sample the initial profile on the grid and verify admissibility.

    Truncated-line runs require far-field contact at the end nodes
    (|u0|, |v0 - v_inf| <= 1e-12); the end nodes are then snapped to the
    exact far-field constants.  Unit-interval runs require wall
    compatibility: u0 = 0 at both walls (snapped to exactly zero after the
    check) and a vanishing one-sided derivative of v0, up to the stencil's
    own truncation error.  alpha_floor must not exceed min(v0).
    """
    prof = setup.initial_data
    if setup.kind is Kind.IBVP and not (grid.x_left == 0.0 and grid.x_right == 1.0):
        raise ValueError(
            f"unit-interval runs need the grid [0, 1], got [{grid.x_left}, {grid.x_right}]"
        )
    x = grid.x
    if prof.family is Family.GAUSSIAN_BUMP:
        xc = 0.5 * (grid.x_left + grid.x_right)
        bump = np.exp(-(((x - xc) / prof.width) ** 2))
        u0 = prof.amplitude_u * bump
        v0 = setup.v_infinity + prof.amplitude_v * bump
    elif prof.family is Family.COSINE_PAIR:
        xi = (x - grid.x_left) / (grid.x_right - grid.x_left)
        u0 = prof.amplitude_u * np.sin(np.pi * xi)
        v0 = setup.v_infinity + prof.amplitude_v * np.cos(np.pi * xi)
    else:
        u0 = np.asarray(prof.custom_u(x), dtype=float)
        v0 = np.asarray(prof.custom_v(x), dtype=float)
        if u0.shape != x.shape or v0.shape != x.shape:
            raise ValueError("custom profile callables must return arrays shaped like x")
    u0 = u0.astype(float).copy()
    v0 = v0.astype(float).copy()

    if np.any(v0 <= 0.0):
        i = int(np.argmin(v0))
        raise ValueError(f"initial v is not positive: v0[{i}] = {v0[i]}")
    if setup.alpha_floor - float(v0.min()) > 1e-12:
        raise ValueError(
            f"alpha_floor = {setup.alpha_floor} exceeds min(v0) = {v0.min()}"
        )

    if setup.kind is Kind.CAUCHY_TRUNCATED:
        worst = max(
            abs(u0[0]), abs(u0[-1]),
            abs(v0[0] - setup.v_infinity), abs(v0[-1] - setup.v_infinity),
        )
        if worst > BOUNDARY_TOL:
            raise ValueError(
                f"initial data do not reach the far field at the domain ends "
                f"(worst deviation {worst:.3e} > {BOUNDARY_TOL:g}); "
                "enlarge the domain or shrink the profile width"
            )
        u0[0] = u0[-1] = 0.0
        v0[0] = v0[-1] = setup.v_infinity
    else:
        if max(abs(u0[0]), abs(u0[-1])) > BOUNDARY_TOL:
            raise ValueError(
                f"wall compatibility violated: u0 ends are ({u0[0]:.3e}, {u0[-1]:.3e})"
            )
        u0[0] = u0[-1] = 0.0
        scale = max(1.0, float(np.max(np.abs(v0 - setup.v_infinity))))
        tol_v = 10.0 * grid.dx**2 * scale
        dvl = _one_sided_ddx(v0, grid.dx, left=True)
        dvr = _one_sided_ddx(v0, grid.dx, left=False)
        if max(abs(dvl), abs(dvr)) > tol_v:
            raise ValueError(
                f"wall compatibility violated: one-sided v0 derivatives are "
                f"({dvl:.3e}, {dvr:.3e}), tolerance {tol_v:.3e}"
            )
    return State(u0, v0, 0.0)
