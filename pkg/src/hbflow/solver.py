"""Preconditioned descent driver for the regularized flow problem.

Each iteration solves one SPD system P_k w_k = -J'(u_k) for the search
direction, where the preconditioner depends on the flow index:

* shear-thinning (1 < p < 2): P_k is the stiffness matrix weighted by
  (epsilon + xi_k)^(p-2), reassembled every iteration;
* shear-thickening (p >= 2, including the Bingham case p = 2): P_k is the
  plain Laplacian stiffness matrix, assembled once per run.

The step along w_k comes from the backtracking line search, iterates start
from the Poisson solution, and the loop stops when the gradient norm falls
below ``tol`` relative to its starting value. Continuation re-runs the
solver over a geometric ladder of gamma values, warm-starting each stage.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .assembly import (
    assemble_load_vector,
    assemble_weighted_stiffness,
    build_discrete_gradient,
    expand_dirichlet,
    gradient_magnitudes,
    weights_preconditioner,
)
from .huber import DualField, HuberParams, dual_field, evaluate_gradient, evaluate_objective
from .linalg import solve_spd
from .linesearch import LineSearchConfig, backtracking_search
from .mesh import Mesh


@dataclass(frozen=True)
class LinearConfig:
    tol: float = 1e-10
    max_iter: int | None = None
    method: str = "pcg"


@dataclass(frozen=True)
class SolverConfig:
    p: float
    g: float
    gamma: float
    epsilon: float = 1e-6
    tol: float = 1e-6             # relative gradient-norm stopping threshold
    max_iters: int = 100
    linesearch: LineSearchConfig = field(default_factory=LineSearchConfig)
    linear: LinearConfig = field(default_factory=LinearConfig)

    def huber_params(self) -> HuberParams:
        return HuberParams(p=self.p, g=self.g, gamma=self.gamma, epsilon=self.epsilon)


@dataclass(frozen=True)
class IterationRecord:
    """State logged after each accepted update, numbering from 1."""

    k: int
    rel_residual: float           # ||J'(u_k)|| / ||J'(u_0)||
    objective: float              # J(u_k)
    alpha: float                  # accepted step
    ls_iters: int                 # line-search backtracks for this step
    dphi0: float                  # directional derivative at the line-search origin
    descent_identity_error: float # relative error of <J', w> = -w^T P w


@dataclass
class SolveOutcome:
    u: np.ndarray
    history: list[IterationRecord]
    converged: bool
    dual: DualField
    objective0: float             # J at the initial iterate
    grad0_norm: float             # ||J'(u_0)||, the residual normalizer
    linesearch_trials: list[list[float]]
    failure_reason: str | None = None

    @property
    def iterations(self) -> int:
        return len(self.history)

    @property
    def final_objective(self) -> float:
        return self.history[-1].objective if self.history else self.objective0

    @property
    def final_rel_residual(self) -> float:
        return self.history[-1].rel_residual if self.history else 0.0


def solve_poisson_init(
    mesh: Mesh, load: np.ndarray, linear: LinearConfig | None = None
) -> np.ndarray:
    """Initial iterate: the Poisson solution with the same load."""
    lin = linear or LinearConfig()
    A = assemble_weighted_stiffness(mesh, np.ones(mesh.num_triangles))
    u0, _ = solve_spd(A, load, tol=lin.tol, max_iter=lin.max_iter, method=lin.method)
    return u0


def _thinning_preconditioner(mesh, gradient, u, params) -> sp.csr_matrix:
    xi = gradient_magnitudes(gradient, u)
    w = weights_preconditioner(xi, params.p, params.epsilon)
    return assemble_weighted_stiffness(mesh, w, gradient=gradient)


def descent_direction_shear_thinning(
    mesh: Mesh,
    gradient: sp.spmatrix,
    u: np.ndarray,
    params: HuberParams,
    load: np.ndarray,
    *,
    grad: np.ndarray | None = None,
    linear: LinearConfig | None = None,
) -> np.ndarray:
    """Direction solving A_{eps,u} w = -J'(u), for 1 < p < 2.

    ``grad`` lets callers that already evaluated J'(u) skip recomputing it.
    """
    if not 1.0 < params.p < 2.0:
        raise ValueError(f"shear-thinning branch needs 1 < p < 2, got p={params.p}")
    if grad is None:
        grad = evaluate_gradient(mesh, gradient, u, params, load)
    P = _thinning_preconditioner(mesh, gradient, u, params)
    lin = linear or LinearConfig()
    w, _ = solve_spd(P, -grad, tol=lin.tol, max_iter=lin.max_iter, method=lin.method)
    return w


def descent_direction_shear_thickening(
    mesh: Mesh,
    gradient: sp.spmatrix,
    u: np.ndarray,
    params: HuberParams,
    load: np.ndarray,
    *,
    grad: np.ndarray | None = None,
    stiffness: sp.spmatrix | None = None,
    linear: LinearConfig | None = None,
) -> np.ndarray:
    """Direction solving A w = -J'(u) with the plain stiffness matrix, p >= 2.

    ``stiffness`` lets callers reuse the once-per-run Laplacian matrix.
    """
    if params.p < 2.0:
        raise ValueError(f"shear-thickening branch needs p >= 2, got p={params.p}")
    if grad is None:
        grad = evaluate_gradient(mesh, gradient, u, params, load)
    if stiffness is None:
        stiffness = assemble_weighted_stiffness(
            mesh, np.ones(mesh.num_triangles), gradient=gradient
        )
    lin = linear or LinearConfig()
    w, _ = solve_spd(stiffness, -grad, tol=lin.tol, max_iter=lin.max_iter, method=lin.method)
    return w


def solve(
    mesh: Mesh,
    config: SolverConfig,
    f: float | Callable[[np.ndarray, np.ndarray], np.ndarray],
    u0: np.ndarray | None = None,
) -> SolveOutcome:
    """Run the descent loop to the relative gradient-norm tolerance.

    Parameters
    ----------
    mesh : Mesh
    config : SolverConfig
    f : constant or callable
        Right-hand side (pressure drop).
    u0 : ndarray, optional
        Warm start; defaults to the Poisson solution. Continuation passes
        the previous stage's iterate here.

    Notes
    -----
    A failed line search terminates the loop with ``converged=False`` and
    the current iterate; it does not raise. The relative residual of
    iterate k is measured against ||J'(u_0)|| of THIS call, so each
    continuation stage has its own normalizer.
    """
    params = config.huber_params()
    G = build_discrete_gradient(mesh)
    load = assemble_load_vector(mesh, f)
    if u0 is None:
        u = solve_poisson_init(mesh, load, config.linear)
    else:
        u = np.asarray(u0, dtype=np.float64).copy()
        if u.shape != load.shape:
            raise ValueError(f"u0 shape {u.shape} does not match {load.shape}")

    thinning = config.p < 2.0
    stiffness = None
    if not thinning:
        stiffness = assemble_weighted_stiffness(
            mesh, np.ones(mesh.num_triangles), gradient=G
        )

    grad = evaluate_gradient(mesh, G, u, params, load)
    grad0_norm = float(np.linalg.norm(grad))
    objective0 = evaluate_objective(mesh, G, u, params, load)
    history: list[IterationRecord] = []
    all_trials: list[list[float]] = []

    if grad0_norm == 0.0:
        return SolveOutcome(u, history, True, dual_field(G, u, params),
                            objective0, 0.0, all_trials)

    converged = False
    failure = None
    j_curr = objective0
    for k in range(1, config.max_iters + 1):
        if thinning:
            P = _thinning_preconditioner(mesh, G, u, params)
        else:
            P = stiffness
        w, _ = solve_spd(P, -grad, tol=config.linear.tol,
                         max_iter=config.linear.max_iter, method=config.linear.method)
        dphi0 = float(grad @ w)
        quad = float(w @ (P @ w))
        identity_err = abs(dphi0 + quad) / max(abs(dphi0), np.finfo(float).tiny)

        result = backtracking_search(
            lambda a: evaluate_objective(mesh, G, u + a * w, params, load),
            j_curr, dphi0, config.linesearch,
        )
        all_trials.append(result.trials)
        if result.status != "accepted":
            failure = f"line search failed at iteration {k}: {result.status}"
            break

        u = u + result.alpha * w
        j_curr = result.phi
        grad = evaluate_gradient(mesh, G, u, params, load)
        rel = float(np.linalg.norm(grad)) / grad0_norm
        history.append(IterationRecord(k, rel, j_curr, result.alpha,
                                       result.backtracks, dphi0, identity_err))
        if rel <= config.tol:
            converged = True
            break

    return SolveOutcome(u, history, converged, dual_field(G, u, params),
                        objective0, grad0_norm, all_trials, failure)


def continuation_solve(
    mesh: Mesh,
    config: SolverConfig,
    f: float | Callable[[np.ndarray, np.ndarray], np.ndarray],
    gamma_start: float = 10.0,
    factor: float = 10.0,
    gamma_end: float = 1e6,
) -> list[tuple[float, SolveOutcome]]:
    """Warm-started solves over a geometric gamma ladder.

    Stage one starts from the Poisson iterate at ``gamma_start``; each later
    stage multiplies gamma by ``factor`` and starts from the previous
    stage's solution. Stops after the stage with gamma >= ``gamma_end`` (the
    ladder includes gamma_end when it is hit exactly). A stage that merely
    exhausts max_iters still seeds the next stage with its best iterate; only
    a stage that died outright (line-search failure) aborts the ladder,
    returning the partial history.
    """
    if gamma_start <= 0.0 or factor <= 1.0 or gamma_end < gamma_start:
        raise ValueError("need gamma_start > 0, factor > 1, gamma_end >= gamma_start")
    stages: list[tuple[float, SolveOutcome]] = []
    gamma = gamma_start
    u = None
    while True:
        stage_cfg = dataclasses.replace(config, gamma=gamma)
        outcome = solve(mesh, stage_cfg, f, u0=u)
        stages.append((gamma, outcome))
        if outcome.failure_reason is not None:
            break
        if gamma >= gamma_end * (1.0 - 1e-12):
            break
        u = outcome.u
        gamma *= factor
    return stages


def wp_seminorm(mesh: Mesh, gradient: sp.spmatrix, u: np.ndarray, p: float) -> float:
    """Discrete W^{1,p} seminorm (sum of area * xi^p)^(1/p)."""
    xi = gradient_magnitudes(gradient, u)
    return float(np.sum(mesh.areas * xi**p) ** (1.0 / p))


def lp_norm(mesh: Mesh, u: np.ndarray, p: float) -> float:
    """Discrete L^p norm of the interior field via vertex quadrature."""
    full = np.abs(expand_dirichlet(mesh, u)) ** p
    third = mesh.areas / 3.0
    total = 0.0
    for k in range(3):
        total += float(third @ full[mesh.triangles[:, k]])
    return total ** (1.0 / p)
