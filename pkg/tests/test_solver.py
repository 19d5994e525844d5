import dataclasses

import numpy as np
import pytest

from hbflow.assembly import build_discrete_gradient, expand_dirichlet
from hbflow.huber import HuberParams, evaluate_objective
from hbflow.mesh import make_mesh
from hbflow.solver import (
    LinearConfig,
    SolverConfig,
    continuation_solve,
    descent_direction_shear_thickening,
    descent_direction_shear_thinning,
    lp_norm,
    solve,
    solve_poisson_init,
    wp_seminorm,
)
from conftest import problem_arrays
import oracles


def vertex_value(mesh, u, x, y):
    full = expand_dirichlet(mesh, u)
    d2 = (mesh.vertices[:, 0] - x) ** 2 + (mesh.vertices[:, 1] - y) ** 2
    idx = int(np.argmin(d2))
    assert d2[idx] < 1e-24
    return full[idx]


def test_poisson_init_square_center(square16):
    _, load = problem_arrays(square16, 1.0)
    u0 = solve_poisson_init(square16, load)
    center = vertex_value(square16, u0, 0.5, 0.5)
    assert center == pytest.approx(oracles.poisson_square_center(), abs=2e-3)
    # lumped 5-point discretization keeps the discrete solution symmetric
    left = vertex_value(square16, u0, 0.25, 0.5)
    right = vertex_value(square16, u0, 0.75, 0.5)
    assert left == pytest.approx(right, rel=1e-10)


def test_poisson_init_disk_peak(disk3):
    # -lap u = 1 on the unit disk: u = (1 - r^2)/4, peak 1/4 at the center
    _, load = problem_arrays(disk3, 1.0)
    u0 = solve_poisson_init(disk3, load)
    full = expand_dirichlet(disk3, u0)
    assert np.max(full) == pytest.approx(0.25, abs=5e-3)
    assert np.all(full[disk3.boundary_vertex] == 0.0)


def test_descent_direction_dispatch_guards(square4, rng):
    gradient, load = problem_arrays(square4)
    u = 0.1 * rng.standard_normal(square4.num_interior)
    with pytest.raises(ValueError):
        descent_direction_shear_thinning(
            square4, gradient, u, HuberParams(p=2.0, g=0.2, gamma=10.0), load
        )
    with pytest.raises(ValueError):
        descent_direction_shear_thickening(
            square4, gradient, u, HuberParams(p=1.9, g=0.2, gamma=10.0), load
        )


def test_descent_direction_continuous_across_p2(square4, rng):
    gradient, load = problem_arrays(square4)
    u = 0.3 * rng.standard_normal(square4.num_interior)
    w_thin = descent_direction_shear_thinning(
        square4, gradient, u, HuberParams(p=1.999, g=0.2, gamma=10.0), load
    )
    w_thick = descent_direction_shear_thickening(
        square4, gradient, u, HuberParams(p=2.0, g=0.2, gamma=10.0), load
    )
    assert np.linalg.norm(w_thin - w_thick) <= 0.02 * np.linalg.norm(w_thick)


def test_solve_zero_load_is_trivial(square4):
    cfg = SolverConfig(p=1.5, g=0.2, gamma=100.0)
    out = solve(square4, cfg, 0.0)
    assert out.converged
    assert out.iterations == 0
    assert np.array_equal(out.u, np.zeros(square4.num_interior))
    assert out.final_rel_residual == 0.0
    assert out.final_objective == 0.0
    assert not np.any(out.dual.active)


def test_solve_shear_thinning_square(square16):
    cfg = SolverConfig(p=1.5, g=0.2, gamma=100.0, max_iters=80)
    out = solve(square16, cfg, 1.0)
    assert out.converged
    assert out.iterations <= 60
    assert out.final_rel_residual <= cfg.tol
    objs = [out.objective0] + [rec.objective for rec in out.history]
    assert np.all(np.diff(objs) < 0.0)
    for i, rec in enumerate(out.history):
        assert rec.k == i + 1
        assert 0.0 < rec.alpha <= 1.0
        assert rec.ls_iters <= 5
        assert rec.dphi0 < 0.0
        assert rec.descent_identity_error < 1e-8
    assert len(out.linesearch_trials) == out.iterations
    wmag = np.hypot(out.dual.w[:, 0], out.dual.w[:, 1])
    assert np.all(wmag <= cfg.g + 1e-12)


def test_solve_warm_start_respected(square16):
    cfg = SolverConfig(p=1.5, g=0.2, gamma=100.0, max_iters=80)
    first = solve(square16, cfg, 1.0)
    short = dataclasses.replace(cfg, max_iters=3)
    resumed = solve(square16, short, 1.0, u0=first.u)
    assert resumed.objective0 == pytest.approx(first.final_objective, rel=1e-10)
    for rec in resumed.history:
        assert rec.objective <= resumed.objective0 + 1e-15


def test_solve_rejects_bad_warm_start(square4):
    cfg = SolverConfig(p=1.5, g=0.2, gamma=10.0)
    with pytest.raises(ValueError):
        solve(square4, cfg, 1.0, u0=np.zeros(square4.num_interior + 1))


def test_solve_iteration_cap_is_not_a_failure(square16):
    cfg = SolverConfig(p=1.5, g=0.2, gamma=1000.0, max_iters=2)
    out = solve(square16, cfg, 1.0)
    assert not out.converged
    assert out.failure_reason is None
    assert out.iterations == 2
    assert len(out.linesearch_trials) == 2


def test_continuation_single_stage_matches_plain_solve(square16):
    cfg = SolverConfig(p=1.5, g=0.2, gamma=50.0, max_iters=80)
    direct = solve(square16, cfg, 1.0)
    stages = continuation_solve(square16, cfg, 1.0, gamma_start=50.0, gamma_end=50.0)
    assert len(stages) == 1
    gamma, outcome = stages[0]
    assert gamma == 50.0
    assert np.array_equal(outcome.u, direct.u)
    assert outcome.iterations == direct.iterations


def test_continuation_ladder_warm_starts(square16):
    cfg = SolverConfig(p=1.5, g=0.2, gamma=1000.0, max_iters=60)
    stages = continuation_solve(
        square16, cfg, 1.0, gamma_start=10.0, factor=10.0, gamma_end=1000.0
    )
    assert [gamma for gamma, _ in stages] == [10.0, 100.0, 1000.0]
    assert stages[0][1].converged
    # stage 2 starts from stage 1's iterate, re-scored at the new gamma
    gradient, load = problem_arrays(square16, 1.0)
    params = HuberParams(p=1.5, g=0.2, gamma=100.0)
    expected = evaluate_objective(square16, gradient, stages[0][1].u, params, load)
    assert stages[1][1].objective0 == pytest.approx(expected, rel=1e-12)


def test_continuation_validates_ladder(square4):
    cfg = SolverConfig(p=1.5, g=0.2, gamma=10.0)
    with pytest.raises(ValueError):
        continuation_solve(square4, cfg, 1.0, gamma_start=0.0)
    with pytest.raises(ValueError):
        continuation_solve(square4, cfg, 1.0, factor=1.0)
    with pytest.raises(ValueError):
        continuation_solve(square4, cfg, 1.0, gamma_start=100.0, gamma_end=10.0)


def test_wp_seminorm_single_triangle():
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    mesh = make_mesh(verts, np.array([[0, 1, 2]]))
    gradient = build_discrete_gradient(mesh, restrict=False)
    u = np.array([0.0, 1.0, 0.0])  # grad = (1, 0), xi = 1 on area 1/2
    assert wp_seminorm(mesh, gradient, u, 2.0) == pytest.approx(np.sqrt(0.5), rel=1e-14)
    assert wp_seminorm(mesh, gradient, u, 3.0) == pytest.approx(0.5 ** (1 / 3), rel=1e-14)
    assert wp_seminorm(mesh, gradient, 2.0 * u, 3.0) == pytest.approx(
        2.0 * 0.5 ** (1 / 3), rel=1e-14
    )


def test_lp_norm_square2(square2):
    # one interior vertex touching 6 triangles of area 1/8: quadrature mass 1/4
    u = np.array([1.0])
    assert lp_norm(square2, u, 1.0) == pytest.approx(0.25, rel=1e-14)
    assert lp_norm(square2, u, 2.0) == pytest.approx(0.5, rel=1e-14)
    assert lp_norm(square2, -3.0 * u, 2.0) == pytest.approx(1.5, rel=1e-14)
