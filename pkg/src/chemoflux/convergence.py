"""Viscosity-ladder experiments and refinement studies.

A ladder integrates the same initial data once with epsilon = 0 (the
baseline) and once per positive epsilon, all on one grid with one shared
fixed dt, then measures sup-in-time L-infinity distances

    err_u(eps) = sup_t max_x |u_eps - u_0|,   err_v(eps) likewise,

and fits the slope of log(err_u + err_v) against log(eps).  Sharing the
grid and dt makes the discretization error largely cancel in the
differences, so the fitted slope isolates the viscosity effect; the
self_convergence guard quantifies the residual discretization error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .diagnostics import DiagnosticsRecord
from .model import Grid1D, Kind, ProblemSetup, make_initial
from .stepping import SolverConfig, TrajectoryRecorder, integrate, _nominal_dt

__all__ = [
    "RungError",
    "ConvergenceReport",
    "SelfConvergenceRow",
    "LadderError",
    "run_ladder",
    "fit_slope",
    "self_convergence",
    "energy_functional",
]


class LadderError(RuntimeError):
    """A ladder member run failed; carries the offending epsilon."""

    def __init__(self, eps: float, cause: BaseException):
        self.eps = float(eps)
        self.cause = cause
        super().__init__(f"ladder run at epsilon = {eps:g} failed: {cause}")


@dataclass(frozen=True)
class RungError:
    eps: float
    err_u: float
    err_v: float
    err_sum: float
    energy: float


@dataclass(frozen=True)
class ConvergenceReport:
    kind: Kind
    eps_ladder: tuple
    errors: tuple  # of RungError, same order as eps_ladder
    fitted_slope: float
    slope_ci: tuple  # least-squares residual band, not a statistical CI
    grid_meta: dict
    baseline_meta: dict
    errors_monotone: bool


@dataclass(frozen=True)
class SelfConvergenceRow:
    n_coarse: int
    n_fine: int
    dx_coarse: float
    dt_coarse: float
    diff_u: float
    diff_v: float
    diff: float


def fit_slope(points: Sequence) -> tuple:
    """Ordinary least squares on (log eps, log err).

    Returns (slope, intercept, max_abs_residual); deterministic.  All
    abscissae and ordinates must be positive.
    """
    pts = [(float(e), float(r)) for e, r in points]
    if len(pts) < 2:
        raise ValueError("fit_slope needs at least 2 points")
    for e, r in pts:
        if not (e > 0.0 and r > 0.0):
            raise ValueError(f"fit_slope needs positive values, got ({e}, {r})")
    lx = np.log([e for e, _ in pts])
    ly = np.log([r for _, r in pts])
    mx = lx.mean()
    my = ly.mean()
    dx = lx - mx
    den = float(np.dot(dx, dx))
    if den == 0.0:
        raise ValueError("fit_slope abscissae are all identical")
    slope = float(np.dot(dx, ly - my)) / den
    intercept = my - slope * mx
    max_abs_residual = float(np.max(np.abs(ly - (slope * lx + intercept))))
    return slope, float(intercept), max_abs_residual


def energy_functional(diags: Sequence[DiagnosticsRecord]) -> float:
    """sup-in-t of the squared H2 norms plus the time-integrated dissipation —
    the quantity whose boundedness should be uniform across the ladder."""
    sup_h2 = max(d.h2_u + d.h2_v for d in diags)
    times = np.array([d.t for d in diags])
    diss = np.array([d.dissipation_u + d.dissipation_v for d in diags])
    integrated = float(np.sum(0.5 * (diss[1:] + diss[:-1]) * (times[1:] - times[:-1])))
    return float(sup_h2 + integrated)


def _resolve_shared_dt(
    setup: ProblemSetup, grid: Grid1D, cfg: SolverConfig, eps_max: float
):
    """One fixed dt for every member of a comparison family."""
    if cfg.dt is not None:
        return cfg.dt, f"fixed dt supplied ({cfg.dt:g})"
    probe = replace(setup, epsilon=eps_max)
    dt = _nominal_dt(make_initial(probe, grid), probe, grid, cfg)
    return dt, f"dt = {dt:g} derived once from initial data (cfl = {cfg.cfl:g} at eps = {eps_max:g})"


def _sup_linf_diffs(rec_a: TrajectoryRecorder, rec_b: TrajectoryRecorder):
    if len(rec_a.records) != len(rec_b.records):
        raise RuntimeError("comparison runs recorded different numbers of states")
    err_u = 0.0
    err_v = 0.0
    for (sa, _), (sb, _) in zip(rec_a.records, rec_b.records):
        if abs(sa.t - sb.t) > 1e-12 * max(1.0, sa.t):
            raise RuntimeError(f"record times diverged: {sa.t} vs {sb.t}")
        err_u = max(err_u, float(np.max(np.abs(sa.u - sb.u))))
        err_v = max(err_v, float(np.max(np.abs(sa.v - sb.v))))
    return err_u, err_v


def run_ladder(
    setup_template: ProblemSetup,
    grid: Grid1D,
    cfg: SolverConfig,
    eps_ladder: Sequence[float],
    stride: int = 10,
) -> ConvergenceReport:
    """Integrate the epsilon ladder against the shared epsilon = 0 baseline.

    Identical initial data, grid, and (fixed) dt for every member; errors are
    sampled at the shared record times and the max taken.  Any member failure
    raises LadderError naming the epsilon (0.0 for the baseline).
    """
    eps = tuple(float(e) for e in eps_ladder)
    if len(eps) < 3:
        raise ValueError("a slope fit needs at least 3 ladder values")
    if any(not e > 0.0 for e in eps):
        raise ValueError(f"ladder epsilons must be positive: {eps}")
    if any(not a > b for a, b in zip(eps, eps[1:])):
        raise ValueError(f"ladder epsilons must be strictly decreasing: {eps}")

    dt, policy = _resolve_shared_dt(setup_template, grid, cfg, max(eps))
    cfg_run = replace(cfg, dt=dt, cfl=None)

    def _run(e: float) -> TrajectoryRecorder:
        setup = replace(setup_template, epsilon=e)
        try:
            return integrate(setup, grid, cfg_run, TrajectoryRecorder(stride=stride))
        except RuntimeError as exc:
            raise LadderError(e, exc) from exc

    base = _run(0.0)
    rows = []
    for e in eps:
        rec = _run(e)
        err_u, err_v = _sup_linf_diffs(rec, base)
        rows.append(
            RungError(
                eps=e,
                err_u=err_u,
                err_v=err_v,
                err_sum=err_u + err_v,
                energy=energy_functional(rec.diagnostics),
            )
        )

    slope, intercept, max_res = fit_slope([(r.eps, r.err_sum) for r in rows])
    span = math.log(max(eps)) - math.log(min(eps))
    band = 2.0 * max_res / span
    monotone = all(b.err_sum <= a.err_sum for a, b in zip(rows, rows[1:]))
    return ConvergenceReport(
        kind=setup_template.kind,
        eps_ladder=eps,
        errors=tuple(rows),
        fitted_slope=slope,
        slope_ci=(slope - band, slope + band),
        grid_meta={
            "n_cells": grid.n_cells,
            "dx": grid.dx,
            "dt": dt,
            "dt_policy": policy,
            "stride": stride,
        },
        baseline_meta={
            "epsilon": 0.0,
            "t_final": setup_template.t_final,
            "n_records": len(base.records),
            "energy": energy_functional(base.diagnostics),
            "far_field_ok": base.far_field_ok,
            "description": "limit-system run with identical initial data, grid, and dt",
        },
        errors_monotone=monotone,
    )


def self_convergence(
    setup: ProblemSetup, grids: Sequence[Grid1D], cfg: SolverConfig
):
    """Richardson-style guard: integrate on successive factor-2 refinements
    and compare final states on the shared (coarse) nodes.

    dt is resolved once on the coarsest grid and refined by 4 per spatial
    halving, keeping the first-order temporal error proportional to the
    second-order spatial error.  Returns (slope, table); slope is None when
    fewer than two differences exist or any difference vanishes (e.g. the
    rest state), in which case the order is not applicable.
    """
    grids = list(grids)
    if len(grids) < 2:
        raise ValueError("self_convergence needs at least 2 grids")
    for a, b in zip(grids, grids[1:]):
        if b.n_cells != 2 * a.n_cells:
            raise ValueError(
                f"grids must refine by exactly 2: {a.n_cells} -> {b.n_cells}"
            )
        if not (a.x_left == b.x_left and a.x_right == b.x_right):
            raise ValueError("grids must share the domain")

    dt0, _ = _resolve_shared_dt(setup, grids[0], cfg, setup.epsilon)
    finals = []
    for k, g in enumerate(grids):
        cfg_k = replace(cfg, dt=dt0 / 4.0**k, cfl=None)
        rec = integrate(setup, g, cfg_k, TrajectoryRecorder(stride=10**9))
        finals.append(rec.records[-1][0])

    table = []
    for k, (coarse, fine) in enumerate(zip(finals, finals[1:])):
        du = float(np.max(np.abs(coarse.u - fine.u[::2])))
        dv = float(np.max(np.abs(coarse.v - fine.v[::2])))
        table.append(
            SelfConvergenceRow(
                n_coarse=grids[k].n_cells,
                n_fine=grids[k + 1].n_cells,
                dx_coarse=grids[k].dx,
                dt_coarse=dt0 / 4.0**k,
                diff_u=du,
                diff_v=dv,
                diff=max(du, dv),
            )
        )

    slope: Optional[float] = None
    if len(table) >= 2 and all(row.diff > 0.0 for row in table):
        slope, _, _ = fit_slope([(row.dx_coarse, row.diff) for row in table])
    return slope, table
