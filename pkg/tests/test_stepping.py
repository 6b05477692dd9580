"""Time integration: IMEX stepping, recording, and failure classification."""
import numpy as np
import pytest

from chemoflux.diagnostics import trapezoid
from chemoflux.model import Family, Grid1D, InitialProfile, Kind, ProblemSetup, State, make_initial
from chemoflux.stepping import (
    DivergenceError,
    FluxForm,
    PositivityLossError,
    ProgressError,
    SolverConfig,
    TrajectoryRecorder,
    integrate,
    step_limit,
    step_viscous,
)


def rest_profile():
    return InitialProfile(
        family=Family.CUSTOM,
        custom_u=lambda x: np.zeros_like(x),
        custom_v=lambda x: np.ones_like(x),
    )


def cosine_setup(epsilon=0.05, t_final=0.5, **kw):
    return ProblemSetup(
        kind=Kind.IBVP,
        epsilon=epsilon,
        t_final=t_final,
        initial_data=InitialProfile(family=Family.COSINE_PAIR),
        **kw,
    )


def gaussian_setup(epsilon=0.05, t_final=0.5, **kw):
    return ProblemSetup(
        kind=Kind.CAUCHY_TRUNCATED,
        epsilon=epsilon,
        t_final=t_final,
        initial_data=InitialProfile(family=Family.GAUSSIAN_BUMP),
        **kw,
    )


# --------------------------------------------------------------- SolverConfig


def test_solver_config_dt_cfl_exclusive_and_defaults():
    assert SolverConfig().cfl == 0.4
    assert SolverConfig(dt=1e-3).cfl is None
    assert SolverConfig(cfl=0.2).dt is None
    with pytest.raises(ValueError):
        SolverConfig(dt=1e-3, cfl=0.4)
    with pytest.raises(ValueError):
        SolverConfig(dt=0.0)
    with pytest.raises(ValueError):
        SolverConfig(cfl=1.5)
    with pytest.raises(ValueError):
        SolverConfig(space_order=4)
    with pytest.raises(ValueError):
        SolverConfig(max_steps=0)
    with pytest.raises(ValueError):
        SolverConfig(flux_form="upwind")
    assert SolverConfig().flux_form is FluxForm.CONSERVATIVE_CENTRAL


def test_recorder_validation():
    with pytest.raises(ValueError):
        TrajectoryRecorder(stride=0)
    rec = TrajectoryRecorder(stride=2)
    assert rec.far_field_ok is True
    assert rec.records == []


# --------------------------------------------------------- rest-state exactness


@pytest.mark.parametrize("kind", [Kind.IBVP, Kind.CAUCHY_TRUNCATED])
@pytest.mark.parametrize("epsilon", [0.0, 0.05])
def test_rest_state_is_a_bitwise_fixed_point(kind, epsilon):
    grid = Grid1D(0.0, 1.0, 128) if kind is Kind.IBVP else Grid1D(-20.0, 20.0, 128)
    setup = ProblemSetup(
        kind=kind,
        epsilon=epsilon,
        t_final=1.0,
        initial_data=rest_profile(),
        alpha_floor=1.0,
    )
    cfg = SolverConfig(dt=0.01)
    state = make_initial(setup, grid)
    stepper = step_limit if epsilon == 0.0 else step_viscous
    for _ in range(10):
        state = stepper(state, setup, grid, cfg)
    assert np.all(state.u == 0.0)
    assert np.all(state.v == 1.0)


# -------------------------------------------------------- stepper preconditions


def test_steppers_enforce_their_regime():
    grid = Grid1D(0.0, 1.0, 64)
    cfg = SolverConfig(dt=1e-4)
    viscous = cosine_setup(epsilon=0.05)
    limit = cosine_setup(epsilon=0.0)
    with pytest.raises(ValueError):
        step_viscous(make_initial(limit, grid), limit, grid, cfg)
    with pytest.raises(ValueError):
        step_limit(make_initial(viscous, grid), viscous, grid, cfg)


# ------------------------------------------------- viscous-to-limit consistency


def test_one_step_viscous_minus_limit_shrinks_linearly_in_epsilon():
    grid = Grid1D(0.0, 1.0, 128)
    cfg = SolverConfig(dt=1e-4)
    limit_setup = cosine_setup(epsilon=0.0)
    base = make_initial(limit_setup, grid)
    ref = step_limit(base, limit_setup, grid, cfg)
    eps_list = [1e-2, 1e-3, 1e-4]
    diffs = []
    for eps in eps_list:
        setup = cosine_setup(epsilon=eps)
        out = step_viscous(State(base.u.copy(), base.v.copy(), 0.0), setup, grid, cfg)
        diffs.append(
            max(float(np.max(np.abs(out.u - ref.u))), float(np.max(np.abs(out.v - ref.v))))
        )
    assert diffs[0] > diffs[1] > diffs[2] > 0.0
    slope, _ = np.polyfit(np.log(eps_list), np.log(diffs), 1)
    assert abs(slope - 1.0) < 1e-3
    for hi, lo in zip(diffs, diffs[1:]):
        assert 9.5 < hi / lo < 10.5


# ----------------------------------------------------- structural step behavior


def test_ibvp_walls_stay_exactly_zero_and_v_mass_is_conserved():
    grid = Grid1D(0.0, 1.0, 128)
    setup = cosine_setup(epsilon=0.05)
    cfg = SolverConfig(cfl=0.4)
    state = make_initial(setup, grid)
    mass0 = trapezoid(state.v - setup.v_infinity, grid.dx)
    for _ in range(20):
        state = step_viscous(state, setup, grid, cfg)
        assert state.u[0] == 0.0 and state.u[-1] == 0.0
        mass = trapezoid(state.v - setup.v_infinity, grid.dx)
        assert abs(mass - mass0) <= 1e-10


def test_limit_system_u_mass_is_conserved_on_truncated_line():
    # with epsilon = 0 the u-flux is -v, which equals -v_inf at both ends of a
    # far-field-compatible state: the trapezoid u-mass budget closes to rounding
    grid = Grid1D(-20.0, 20.0, 256)
    setup = gaussian_setup(epsilon=0.0)
    cfg = SolverConfig(cfl=0.4)
    state = make_initial(setup, grid)
    mass_u0 = trapezoid(state.u, grid.dx)
    mass_v0 = trapezoid(state.v - 1.0, grid.dx)
    for _ in range(20):
        state = step_limit(state, setup, grid, cfg)
    assert abs(trapezoid(state.u, grid.dx) - mass_u0) <= 1e-8
    assert abs(trapezoid(state.v - 1.0, grid.dx) - mass_v0) <= 1e-8


# ------------------------------------------------------------------- integrate


def test_integrate_t_final_zero_records_only_initial():
    grid = Grid1D(0.0, 1.0, 64)
    setup = cosine_setup(t_final=0.0)
    rec = integrate(setup, grid, SolverConfig(dt=0.01))
    assert len(rec.records) == 1
    assert rec.times == [0.0]


def test_integrate_lands_exactly_on_t_final():
    grid = Grid1D(0.0, 1.0, 64)
    setup = cosine_setup(epsilon=0.05, t_final=0.1)
    rec = integrate(setup, grid, SolverConfig(dt=0.004))
    assert rec.times[-1] == 0.1


def test_integrate_stride_record_count():
    grid = Grid1D(0.0, 1.0, 64)
    setup = cosine_setup(epsilon=0.05, t_final=0.1)
    rec = integrate(setup, grid, SolverConfig(dt=0.004), TrajectoryRecorder(stride=4))
    # 25 steps: initial + steps 4,8,12,16,20,24 + final step 25
    assert len(rec.records) == 8
    times = np.asarray(rec.times)
    assert times[0] == 0.0 and times[-1] == 0.1
    assert np.all(np.diff(times) > 0)
    assert len(rec.states) == len(rec.diagnostics) == 8


def test_integrate_is_deterministic():
    grid = Grid1D(0.0, 1.0, 64)
    setup = cosine_setup(epsilon=0.05, t_final=0.05)
    a = integrate(setup, grid, SolverConfig(cfl=0.4))
    b = integrate(setup, grid, SolverConfig(cfl=0.4))
    assert a.states[-1].u.tobytes() == b.states[-1].u.tobytes()
    assert a.states[-1].v.tobytes() == b.states[-1].v.tobytes()


def test_far_field_monitor_passes_for_compact_data():
    grid = Grid1D(-20.0, 20.0, 256)
    rec = integrate(gaussian_setup(t_final=0.05), grid, SolverConfig(cfl=0.4))
    assert rec.far_field_ok is True


def test_far_field_monitor_detects_boundary_contact():
    # a narrow bump on a domain too small for t_final = 2: diffusion in v
    # reaches the edge zone and the truncation monitor must flip to False
    grid = Grid1D(-4.0, 4.0, 128)
    profile = InitialProfile(
        family=Family.CUSTOM,
        custom_u=lambda x: 0.3 * np.exp(-4.0 * x * x),
        custom_v=lambda x: 1.0 + 0.3 * np.exp(-4.0 * x * x),
    )
    setup = ProblemSetup(
        kind=Kind.CAUCHY_TRUNCATED,
        epsilon=0.05,
        t_final=2.0,
        initial_data=profile,
        alpha_floor=0.5,
    )
    rec = integrate(setup, grid, SolverConfig(cfl=0.4), TrajectoryRecorder(stride=10))
    assert rec.far_field_ok is False


# ------------------------------------------------------- failure classification


def test_positivity_loss_reports_node_and_time():
    grid = Grid1D(-20.0, 20.0, 256)
    profile = InitialProfile(
        family=Family.CUSTOM,
        custom_u=lambda x: -30.0 * x * np.exp(-x * x),
        custom_v=lambda x: np.ones_like(x),
    )
    setup = ProblemSetup(
        kind=Kind.CAUCHY_TRUNCATED,
        epsilon=0.05,
        t_final=1.0,
        initial_data=profile,
        alpha_floor=0.01,
    )
    state = make_initial(setup, grid)
    with pytest.raises(PositivityLossError) as info:
        step_viscous(state, setup, grid, SolverConfig(dt=0.05))
    assert info.value.index == 128
    assert info.value.t == 0.05
    assert "128" in str(info.value)
    assert issubclass(PositivityLossError, RuntimeError)


def test_divergence_reports_time():
    grid = Grid1D(-20.0, 20.0, 256)
    profile = InitialProfile(
        family=Family.CUSTOM,
        custom_u=lambda x: 1e160 * x * np.exp(-x * x),
        custom_v=lambda x: np.ones_like(x),
    )
    setup = ProblemSetup(
        kind=Kind.CAUCHY_TRUNCATED,
        epsilon=0.05,
        t_final=1.0,
        initial_data=profile,
        alpha_floor=0.01,
    )
    with np.errstate(all="ignore"):
        state = make_initial(setup, grid)
        with pytest.raises(DivergenceError) as info:
            step_viscous(state, setup, grid, SolverConfig(dt=1e-6))
    assert info.value.t == 1e-6
    assert issubclass(DivergenceError, RuntimeError)


def test_progress_error_when_max_steps_exhausted():
    grid = Grid1D(0.0, 1.0, 64)
    setup = cosine_setup(epsilon=0.05, t_final=0.5)
    with pytest.raises(ProgressError) as info:
        integrate(setup, grid, SolverConfig(dt=1e-5, max_steps=3))
    assert info.value.t == pytest.approx(3e-5, rel=1e-9)
    assert "3" in str(info.value)
    assert issubclass(ProgressError, RuntimeError)
