"""Damped Newton solver for nu = e^(tF + c_t) marched along the continuity path.

Each Newton step solves the linearized equation

    B dphi_xx + A dphi_yy - 2 D dphi_xy = -(nu - e^(tF + c_t))

for a zero-mean update with a Krylov iteration preconditioned by the flat
inverse Laplacian (both sides projected to zero mean; the projection defect
is recorded, not discarded). The step length is halved until the trial
metric is admissible with margin admissibility_delta and the sup-norm
residual satisfies a sufficient-decrease condition, so accepted iterates
never leave the positive cone and never increase the residual. The path
t: 0 -> 1 is stepped adaptively since no a priori openness radius is
available: halve the step on failure, grow by 1.5 after success.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator, lgmres

from . import _kernels
from .cy_reduction import DensityData, Potential, diagnostics
from .errors import (
    ContinuationStalled,
    LinearSolveStagnated,
    LineSearchFailed,
    MaxItersExceeded,
)
from .torus_grid import (
    Grid,
    TorusField,
    integrate,
    invert_laplacian_values,
    second_deriv_values,
)

_KRYLOV_RTOL = 1e-12
_KRYLOV_REDUCTION_FLOOR = 1e-10
_KRYLOV_MAX_OUTER = 20
_MIN_STEP = 2.0**-30


@dataclass(frozen=True)
class SolverConfig:
    grid_n: int
    newton_tol: float = 1e-11
    max_newton_iters: int = 50
    armijo_c: float = 1e-4
    admissibility_delta: float = 1e-8
    t_step_initial: float = 0.25
    t_step_min: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        Grid(self.grid_n)  # validates evenness and size
        if self.newton_tol <= 0:
            raise ValueError("newton_tol must be positive")
        if not (0.0 < self.t_step_min <= self.t_step_initial <= 1.0):
            raise ValueError("need 0 < t_step_min <= t_step_initial <= 1")
        if self.max_newton_iters < 1:
            raise ValueError("max_newton_iters must be at least 1")


@dataclass(frozen=True)
class ContinuityState:
    t: float
    phi: Potential
    c_t: float
    diagnostics: dict


def normalize_ct(F: TorusField, t: float) -> float:
    """c_t = -log integral(e^(tF)), making e^(tF + c_t) a probability density."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    return -float(np.log(np.mean(np.exp(t * F.values))))


def _density_at(F: TorusField, t: float) -> DensityData:
    return DensityData(TorusField._own(F.grid, t * F.values), normalize_ct(F, t))


def newton_step(phi: Potential, d: DensityData, cfg: SolverConfig) -> tuple[Potential, dict]:
    n = phi.grid.n
    values = phi.phi.values
    target = d.target()
    fxx, fyy, fxy = second_deriv_values(values)
    r = _kernels.residual_values(fxx, fyy, fxy, target)
    r_sup = _kernels.sup_abs(r)
    rhs_defect = abs(float(r.mean()))
    if r_sup == 0.0:
        return phi, {
            "residual_before": 0.0,
            "residual_after": 0.0,
            "step_length": 0.0,
            "krylov_matvecs": 0,
            "rhs_mean_defect": rhs_defect,
        }

    a = 1.0 + fxx
    b = 1.0 + fyy
    matvecs = [0]

    def apply_linearized(v):
        matvecs[0] += 1
        v2 = v.reshape(n, n)
        vxx, vyy, vxy = second_deriv_values(v2)
        out = _kernels.linear_apply(a, b, fxy, vxx, vyy, vxy)
        out -= out.mean()
        return out.ravel()

    def precondition(v):
        v2 = v.reshape(n, n)
        return invert_laplacian_values(v2 - v2.mean()).ravel()

    rhs = -(r - r.mean()).ravel()
    op = LinearOperator((n * n, n * n), matvec=apply_linearized)
    pre = LinearOperator((n * n, n * n), matvec=precondition)
    sol, info = lgmres(
        op, rhs, M=pre, rtol=_KRYLOV_RTOL, atol=0.0, maxiter=_KRYLOV_MAX_OUTER
    )
    if info != 0:
        achieved = np.linalg.norm(apply_linearized(sol) - rhs) / np.linalg.norm(rhs)
        if not achieved <= _KRYLOV_REDUCTION_FLOOR:
            raise LinearSolveStagnated(
                f"linear residual reduced only to {achieved:.3e} "
                f"(info={info}, target {_KRYLOV_REDUCTION_FLOOR:.0e})"
            )

    delta = sol.reshape(n, n)
    delta = delta - delta.mean()
    dxx, dyy, dxy = second_deriv_values(delta)

    s = 1.0
    while s >= _MIN_STEP:
        mins = _kernels.trial_mins(fxx, fyy, fxy, dxx, dyy, dxy, s)
        if min(mins) > cfg.admissibility_delta:
            r_trial = _kernels.trial_residual_sup(fxx, fyy, fxy, dxx, dyy, dxy, target, s)
            if r_trial <= (1.0 - cfg.armijo_c * s) * r_sup:
                new = values + s * delta
                new_phi = Potential(TorusField._own(phi.grid, new - new.mean()))
                return new_phi, {
                    "residual_before": r_sup,
                    "residual_after": r_trial,
                    "step_length": s,
                    "krylov_matvecs": matvecs[0],
                    "rhs_mean_defect": rhs_defect,
                }
        s *= 0.5
    raise LineSearchFailed(
        f"no admissible decreasing step above 2^-30 (residual {r_sup:.3e})"
    )


def _residual_sup(phi: Potential, d: DensityData) -> float:
    fxx, fyy, fxy = second_deriv_values(phi.phi.values)
    return _kernels.sup_abs(_kernels.residual_values(fxx, fyy, fxy, d.target()))


def solve_at_t(phi0: Potential, F: TorusField, t: float, cfg: SolverConfig) -> ContinuityState:
    if F.grid.n != cfg.grid_n:
        raise ValueError(f"F lives on n={F.grid.n} but config says n={cfg.grid_n}")
    d = _density_at(F, t)
    phi = phi0
    steps = []
    iterations = 0
    while _residual_sup(phi, d) > cfg.newton_tol:
        if iterations >= cfg.max_newton_iters:
            raise MaxItersExceeded(
                f"residual {_residual_sup(phi, d):.3e} after "
                f"{cfg.max_newton_iters} Newton iterations at t={t}"
            )
        phi, step_diag = newton_step(phi, d, cfg)
        steps.append(step_diag)
        iterations += 1
    diag = diagnostics(phi, d)
    diag["newton_iters"] = iterations
    diag["steps"] = steps
    return ContinuityState(t=t, phi=phi, c_t=d.c, diagnostics=diag)


def continuity_solve(F: TorusField, cfg: SolverConfig) -> list[ContinuityState]:
    """March t from 0 to 1, warm-starting each solve from the previous potential.

    If the trivial potential already solves the t = 1 equation (constant F),
    the path is the single endpoint state.
    """
    if F.grid.n != cfg.grid_n:
        raise ValueError(f"F lives on n={F.grid.n} but config says n={cfg.grid_n}")
    phi0 = Potential.zero(F.grid)
    if _residual_sup(phi0, _density_at(F, 1.0)) <= cfg.newton_tol:
        return [solve_at_t(phi0, F, 1.0, cfg)]

    states = [solve_at_t(phi0, F, 0.0, cfg)]
    t_cur = 0.0
    step = cfg.t_step_initial
    while t_cur < 1.0:
        t_try = min(t_cur + step, 1.0)
        try:
            state = solve_at_t(states[-1].phi, F, t_try, cfg)
        except (LineSearchFailed, MaxItersExceeded, LinearSolveStagnated) as exc:
            step *= 0.5
            if step < cfg.t_step_min:
                raise ContinuationStalled(
                    f"step size {step:.3e} fell below t_step_min="
                    f"{cfg.t_step_min:.3e} at t={t_cur}",
                    states,
                ) from exc
            continue
        states.append(state)
        t_cur = t_try
        step = min(step * 1.5, 1.0)
    return states


def uniqueness_probe(
    F: TorusField, cfg: SolverConfig, n_starts: int, return_potentials: bool = False
):
    """Max pairwise sup-distance between t = 1 solutions from perturbed starts.

    Uniqueness is exact in the continuum, so the returned distance measures
    solver tolerance only.
    """
    if n_starts < 2:
        raise ValueError("need at least 2 starts")
    endpoint = continuity_solve(F, cfg)[-1].phi
    rng = np.random.default_rng(cfg.seed)
    x, y = F.grid.coords()
    solutions = []
    for _ in range(n_starts):
        pert = np.zeros_like(x)
        for k1 in (1, 2):
            for k2 in (1, 2):
                pert += rng.normal() * np.cos(2 * np.pi * (k1 * x + k2 * y))
                pert += rng.normal() * np.sin(2 * np.pi * (k1 * x + k2 * y))
        pert *= 1e-3 / np.abs(pert).max()
        start = Potential.from_field(
            TorusField._own(F.grid, endpoint.phi.values + pert)
        )
        solutions.append(solve_at_t(start, F, 1.0, cfg).phi)
    worst = 0.0
    for i in range(len(solutions)):
        for j in range(i + 1, len(solutions)):
            dist = float(
                np.abs(solutions[i].phi.values - solutions[j].phi.values).max()
            )
            worst = max(worst, dist)
    if return_potentials:
        return worst, solutions
    return worst
