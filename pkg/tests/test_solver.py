import json

import numpy as np
import pytest

from monopole import lattice as lat
from monopole import solver
from monopole.lattice import ConfigError, GaugeTransform, TorusGrid
from monopole.solver import (
    CapacityError,
    DivergenceError,
    Perturbation,
    PreconditionError,
    SolverConfig,
)
from monopole.spinor_algebra import DomainError

WAVE = {"kind": "wave", "coeffs": [0.2, -0.1, 0.3], "wave": 0.15}


def random_state(grid, rng, scale=0.3):
    A = scale * rng.normal(size=(4,) + grid.shape)
    phi = scale * (rng.normal(size=grid.shape + (2,)) + 1j * rng.normal(size=grid.shape + (2,)))
    return A, phi


def test_residual_examples():
    grid = TorusGrid(4)
    r1, r2 = solver.sw_residual(grid, grid.one_form(), grid.spinor())
    assert not r1.any() and not r2.any()
    delta = Perturbation.from_spec(grid, WAVE)
    r1, r2 = solver.sw_residual(grid, grid.one_form(), grid.spinor(), delta)
    assert not r1.any() and np.array_equal(r2, -delta.form)
    assert solver.energy(grid, grid.one_form(), grid.spinor()) == 0.0
    with pytest.raises(DomainError):
        solver.sw_residual(grid, TorusGrid(3).one_form(), grid.spinor())


def test_perturbation_self_dual():
    grid = TorusGrid(4)
    d = Perturbation.from_spec(grid, WAVE)
    assert np.abs(lat.project_self_dual(d.form, "-")).max() < 1e-12
    with pytest.raises(DomainError):
        Perturbation(lat.project_self_dual(np.random.default_rng(0).normal(size=(6,) + grid.shape), "-"))
    with pytest.raises(ConfigError, match="colour"):
        Perturbation.from_spec(grid, {"kind": "zero", "colour": 1})


@pytest.mark.parametrize("stencil", lat.STENCILS)
def test_gauge_invariance(stencil):
    grid = TorusGrid(4)
    rng = np.random.default_rng(1)
    A, phi = random_state(grid, rng, 1.0)
    delta = Perturbation.from_spec(grid, WAVE)
    g = GaugeTransform(rng.normal(size=grid.shape), (2, 0, -1, 1))
    A2, phi2 = lat.gauge_act(grid, g, A, phi)
    gp = g.phase(grid)[..., None]
    r1, r2 = solver.sw_residual(grid, A, phi, delta, stencil)
    s1, s2 = solver.sw_residual(grid, A2, phi2, delta, stencil)
    assert np.abs(s1 - gp * r1).max() < 1e-12 * max(1, np.abs(r1).max())
    assert np.abs(s2 - r2).max() < 1e-12 * max(1, np.abs(r2).max())
    e1, e2 = solver.energy(grid, A, phi, delta, stencil), solver.energy(grid, A2, phi2, delta, stencil)
    assert abs(e1 - e2) <= 1e-12 * e1
    gA, gP = solver.energy_gradient(grid, A, phi, delta, stencil)
    hA, hP = solver.energy_gradient(grid, A2, phi2, delta, stencil)
    scale = max(np.abs(gA).max(), np.abs(gP).max())
    assert np.abs(hA - gA).max() < 1e-11 * scale
    assert np.abs(hP - gp * gP).max() < 1e-11 * scale


def fd_error(grid, A, phi, delta, stencil, rng, eps=1e-5):
    gA, gP = solver.energy_gradient(grid, A, phi, delta, stencil)
    vA = rng.normal(size=A.shape)
    vP = rng.normal(size=phi.shape) + 1j * rng.normal(size=phi.shape)
    slope = solver.pairing(grid, (gA, gP), (vA, vP))
    ep = solver.energy(grid, A + eps * vA, phi + eps * vP, delta, stencil)
    em = solver.energy(grid, A - eps * vA, phi - eps * vP, delta, stencil)
    return abs(slope - (ep - em) / (2 * eps)) / (1 + abs(slope))


def test_gradient_finite_differences():
    rng = np.random.default_rng(2)
    worst = 0.0
    for k in range(20):
        grid = TorusGrid(3 + k % 2)
        A, phi = random_state(grid, rng)
        delta = Perturbation.from_spec(grid, WAVE) if k % 3 else None
        worst = max(worst, fd_error(grid, A, phi, delta, lat.STENCILS[k % 2], rng))
    assert worst < 1e-6


def small_config(**kw):
    base = dict(n=4, max_iterations=60, energy_tol=1e-12, seed=3)
    base.update(kw)
    return SolverConfig(**base)


def test_trace_monotone_and_deterministic():
    a = solver.solve(small_config(precondition=1.0, delta=WAVE))
    b = solver.solve(small_config(precondition=1.0, delta=WAVE))
    e = a.energy_trace
    assert len(e) == a.iterations + 1
    assert np.all(np.diff(e) <= 0)
    assert np.array_equal(e, b.energy_trace)
    assert np.array_equal(a.phi, b.phi)
    assert a.status == "max_iterations" and not a.converged


def test_vacuum_needs_no_iterations():
    cfg = small_config()
    grid = cfg.grid()
    rep = solver.solve(cfg, grid.one_form(), grid.spinor())
    assert rep.converged and rep.iterations == 0 and rep.energy == 0.0


def test_zero_iterations_not_converged():
    rep = solver.solve(small_config(max_iterations=0))
    assert not rep.converged and rep.iterations == 0 and rep.status == "max_iterations"


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_fixed_step_divergence():
    with pytest.raises(DivergenceError) as info:
        solver.solve(small_config(step_rule="fixed", step_size=1e200))
    assert info.value.last_good is not None


def test_nonfinite_start():
    cfg = small_config()
    A, phi = cfg.initial_fields()
    A[0, 0, 0, 0, 0] = np.nan
    with pytest.raises(DivergenceError):
        solver.solve(cfg, A, phi)


def test_delta_zero_converges():
    rep = solver.solve(SolverConfig(n=4, seed=1))
    assert rep.converged and rep.energy < 1e-8 and rep.sup_phi_sq < 1e-6
    v = solver.bound_check(TorusGrid(4), rep.A, rep.phi, None, "symmetric", threshold=1e-8)
    assert v.passed and v.bound == 0.0


@pytest.mark.parametrize(
    "patch, key",
    [
        ({"step_size": -1.0}, "step_size"),
        ({"max_iterations": -1}, "max_iterations"),
        ({"stencil": "wide"}, "stencil"),
        ({"energy_tol": 0}, "energy_tol"),
        ({"armijo": 2.0}, "armijo"),
        ({"n": 4.5}, "n"),
        ({"bogus": 1}, "bogus"),
    ],
)
def test_config_errors_name_key(patch, key):
    data = SolverConfig().to_dict()
    data.update(patch)
    with pytest.raises(ConfigError, match=key):
        SolverConfig.from_dict(data)


def test_config_file_round_trip(tmp_path):
    cfg = SolverConfig(n=5, delta=WAVE, precondition=1.0)
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg.to_dict()))
    assert SolverConfig.from_file(p) == cfg
    p.write_text('{"n": 5,\n "seed": }')
    with pytest.raises(ConfigError, match="line 2"):
        SolverConfig.from_file(p)


def test_bound_check():
    grid = TorusGrid(4)
    zero_A, zero_phi = grid.one_form(), grid.spinor()
    v = solver.bound_check(grid, zero_A, zero_phi)
    assert v.passed and v.margin == 0.0
    delta = Perturbation.from_spec(grid, WAVE)
    v = solver.bound_check(grid, zero_A, zero_phi, delta, threshold=np.inf)
    assert v.passed and v.margin == pytest.approx(solver.DEFAULTS["bound_C"] * delta.sup_norm())
    with pytest.raises(PreconditionError):
        solver.bound_check(grid, zero_A, zero_phi, delta)


def test_bound_constant_saturated():
    # constant delta with the aligned constant spinor solves the equations at A = 0
    # and sits exactly on the bound line
    grid = TorusGrid(3)
    c = np.array([0.3, -0.4, 0.5])
    delta = Perturbation.from_spec(grid, {"kind": "constant", "coeffs": list(c)})
    phi = np.broadcast_to(solver.spinor_with_sigma(-solver._form_to_skew(delta.form[:, 0, 0, 0, 0])),
                          grid.shape + (2,)).copy()
    v = solver.bound_check(grid, grid.one_form(), phi, delta, "forward", threshold=1e-20)
    assert v.ratio == pytest.approx(1.0, abs=1e-12)


def test_spinor_with_sigma():
    rng = np.random.default_rng(4)
    for _ in range(50):
        M = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        S = (M - M.conj().T) / 2
        S -= np.trace(S) / 2 * np.eye(2)
        phi = solver.spinor_with_sigma(S)
        assert np.abs(solver.sigma_field(phi[None]) - S).max() < 1e-12


def test_deformation_complex_vacuum():
    grid = TorusGrid(3)
    dc = solver.deformation_complex(grid, grid.one_form(), grid.spinor(), "symmetric")
    assert dc.product_norm < 1e-12
    assert dc.h[0] == 1
    assert dc.euler == dc.euler_expected == 0


def test_deformation_complex_nonzero_spinor():
    grid = TorusGrid(3)
    rng = np.random.default_rng(6)
    A, phi = random_state(grid, rng)
    dc = solver.deformation_complex(grid, A, phi, "symmetric")
    assert dc.h[0] == 0 and dc.euler == dc.euler_expected
    r1, _ = solver.sw_residual(grid, A, phi, None, "symmetric")
    sup = np.sqrt((np.abs(r1) ** 2).sum(axis=-1)).max()
    assert dc.product_norm == pytest.approx(2 * np.pi * sup, rel=1e-12)
    # a single nonzero site is enough to kill the stabilizer
    phi1 = grid.spinor()
    phi1[1, 2, 0, 1, 0] = 1e-3
    assert solver.deformation_complex(grid, grid.one_form(), phi1, "symmetric").h[0] == 0


def test_l1_is_derivative_of_residual():
    grid = TorusGrid(3)
    rng = np.random.default_rng(8)
    A, phi = random_state(grid, rng)
    a, psi = random_state(grid, rng)
    for st in lat.STENCILS:
        two, spin = solver.apply_l1(grid, A, phi, a, psi, st)
        eps = 1e-6
        p1, p2 = solver.sw_residual(grid, A + eps * a, phi + eps * psi, None, st)
        m1, m2 = solver.sw_residual(grid, A - eps * a, phi - eps * psi, None, st)
        assert np.abs((p1 - m1) / (2 * eps) - spin).max() < 1e-6 * max(1, np.abs(spin).max())
        assert np.abs((p2 - m2) / (2 * eps) - two).max() < 1e-6 * max(1, np.abs(two).max())


def test_capacity_error():
    grid = TorusGrid(4)
    with pytest.raises(CapacityError):
        solver.deformation_complex(grid, grid.one_form(), grid.spinor(), dense_limit=100)


def test_report_trace_csv(tmp_path):
    rep = solver.solve(small_config(max_iterations=5))
    rep.write_trace(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "iteration,energy,dirac_residual,curv_residual,sup_phi_sq,step_size"
    assert len(lines) == rep.iterations + 2
