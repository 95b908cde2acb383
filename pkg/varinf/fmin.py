"""
Projected quasi-Newton minimization of F_{c, zeta} over the singleton pseudo-marginals.

The pairwise coordinates are eliminated through xi*(q), so the search runs over q in (0, 1)^N. Each
iteration takes the BFGS direction, pulls it back inside the box, and picks the step length with an
adaptive Wolfe line search.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from varinf.free_energy import free_energy_on_manifold, gradient_on_manifold

# iterates are kept inside [Q_LOW, Q_HIGH]^N
Q_LOW = 1e-10
Q_HIGH = 1.0 - 1e-10
FALLBACK_STEP = 1e-8


class FminConfig(BaseModel):
    """
    Settings of the minimizer.

    wolfe_c1 and wolfe_c2 are the sufficient-decrease and curvature constants, projection_shrink the
    factor applied to the maximal step until the trial point lies in the box, and wolfe_expand the
    growth factor of the line search's expansion phase. wolfe_slack loosens the sufficient-decrease
    test by wolfe_slack * (1 + |F|) to absorb roundoff near convergence.
    """

    model_config = ConfigDict(frozen=True, extra='forbid')

    grad_tol: float = Field(1e-6, gt=0)
    max_iters: int = Field(2000, ge=1)
    wolfe_c1: float = Field(1e-4, gt=0, lt=1)
    wolfe_c2: float = Field(0.9, gt=0, lt=1)
    projection_shrink: float = Field(0.9, gt=0, lt=1)
    wolfe_expand: float = Field(1.1, gt=1)
    restarts: int = Field(5, ge=1)
    seed: int = Field(0, ge=0)
    line_search_max_iters: int = Field(100, ge=1)
    curvature_eps: float = Field(1e-10, ge=0)
    wolfe_slack: float = Field(1e-13, ge=0)
    init_low: float = Field(0.01, gt=0, lt=1)
    init_high: float = Field(0.99, gt=0, lt=1)

    @model_validator(mode='after')
    def check_ordering(self):
        if not self.wolfe_c1 < self.wolfe_c2:
            raise ValueError(f"wolfe_c1 ({self.wolfe_c1}) must be smaller than wolfe_c2 ({self.wolfe_c2})")
        if not self.init_low < self.init_high:
            raise ValueError("init_low must be smaller than init_high")
        return self


@dataclass(frozen=True)
class LineSearchResult:
    """
    Outcome of wolfe_line_search.

    Parameters:
    - step (float): Accepted rho in (0, 1].
    - satisfied (bool): Both Wolfe conditions hold at step, or W1 holds at the full step rho = 1.
    - trace (tuple): One (rho, w1, w2, phase) entry per trial; phase is 'initial', 'expand',
      'contract' or 'fallback'.
    """

    step: float
    satisfied: bool
    trace: tuple = ()


@dataclass(frozen=True)
class FminResult:
    """
    Best restart of minimize.

    restart_values and restart_points keep the final objective and point of every restart in index order.
    """

    q_min: np.ndarray
    f_value: float
    grad_norm: float
    iterations: int
    converged: bool
    restart_index: int
    restart_values: tuple = field(default=(), repr=False)
    restart_points: tuple = field(default=(), repr=False)


#1. Line search
def wolfe_line_search(objective, gradient, q_tail, q_head, config, rng, f_tail=None, g_tail=None):
    """
    Adaptive line search for a step rho along d = q_head - q_tail satisfying the Wolfe conditions

        W1: F(q_tail + rho d) <= F(q_tail) + c1 rho d.grad F(q_tail)
        W2: d.grad F(q_tail + rho d) >= c2 d.grad F(q_tail)

    The search starts from a random rho in [0.5, 1). While W1 holds and W2 fails it expands rho by
    wolfe_expand, capped at 1; when W1 fails the upper end of the search interval drops to rho and the
    next trial is drawn from the middle half of the interval. W1 alone is accepted at rho = 1.

    Parameters:
    - objective, gradient (callable): Functions of a point.
    - q_tail, q_head (np.ndarray): Segment end points; d must be a descent direction.
    - config (FminConfig): Wolfe constants, expansion factor, iteration cap, slack.
    - rng (np.random.Generator): Source of the random trial steps.
    - f_tail, g_tail: Objective and gradient at q_tail when already known.

    Returns:
    - LineSearchResult: After line_search_max_iters trials without success, the W1 step with the lowest
      objective is returned with satisfied=False, or FALLBACK_STEP if W1 never held.
    """
    d = np.asarray(q_head, dtype=float) - np.asarray(q_tail, dtype=float)
    f0 = objective(q_tail) if f_tail is None else f_tail
    g0 = gradient(q_tail) if g_tail is None else g_tail
    slope0 = float(d @ g0)
    slack = config.wolfe_slack * (1.0 + abs(f0))

    low, high = 0.0, 1.0
    rho = float(rng.uniform(0.5, 1.0))
    phase = 'initial'
    best_rho, best_f = None, np.inf
    trace = []

    for _ in range(config.line_search_max_iters):
        point = q_tail + rho * d
        f = objective(point)
        w1 = bool(np.isfinite(f) and f <= f0 + config.wolfe_c1 * rho * slope0 + slack)
        w2 = False
        if w1:
            g = gradient(point)
            w2 = bool(np.all(np.isfinite(g)) and d @ g >= config.wolfe_c2 * slope0)
        trace.append((rho, w1, w2, phase))

        if w1 and (w2 or rho >= 1.0):
            return LineSearchResult(rho, True, tuple(trace))
        if w1:
            if f < best_f:
                best_rho, best_f = rho, f
            low = rho
            if high < 1.0:
                rho = low + (high - low) * rng.uniform(0.25, 0.75)
                phase = 'contract'
            else:
                rho = min(rho * config.wolfe_expand, 1.0)
                phase = 'expand'
        else:
            # upper bound of the search interval is reduced
            high = rho
            rho = low + (high - low) * rng.uniform(0.25, 0.75)
            phase = 'contract'

    if best_rho is not None:
        return LineSearchResult(best_rho, False, tuple(trace))
    trace.append((FALLBACK_STEP, False, False, 'fallback'))
    return LineSearchResult(FALLBACK_STEP, False, tuple(trace))


#2. Quasi-Newton descent
def _project(q, d, shrink):
    """Shrink rho_max until q + rho_max d lies in [Q_LOW, Q_HIGH]^N."""
    # coordinates sitting on a bound cannot move outwards
    d = np.where(((q <= Q_LOW) & (d < 0)) | ((q >= Q_HIGH) & (d > 0)), 0.0, d)
    rho_max = 1.0
    head = q + d
    while np.any(head < Q_LOW) or np.any(head > Q_HIGH):
        rho_max *= shrink
        head = q + rho_max * d
    return head


def _bfgs_update(B, s, y, curvature_eps):
    """Inverse-Hessian BFGS update; skipped unless s.y > curvature_eps."""
    gamma = float(s @ y)
    if gamma <= curvature_eps:
        return B
    By = B @ y
    return (B + ((gamma + y @ By) / gamma ** 2) * np.outer(s, s)
            - (np.outer(By, s) + np.outer(s, By)) / gamma)


def _descend(spec, q0, config, rng, index):
    def objective(q):
        return free_energy_on_manifold(spec, q)

    def gradient(q):
        return gradient_on_manifold(spec, q)

    q = np.clip(np.asarray(q0, dtype=float), Q_LOW, Q_HIGH)
    f, g = objective(q), gradient(q)
    if not (np.isfinite(f) and np.all(np.isfinite(g))):
        logging.warning(f"Restart {index}: non-finite free energy at the initial point")
        return FminResult(q, np.nan, np.nan, 0, False, index)

    B = np.eye(q.size)
    failures = 0
    for iteration in range(config.max_iters):
        grad_norm = float(np.linalg.norm(g))
        if grad_norm <= config.grad_tol:
            return FminResult(q, f, grad_norm, iteration, True, index)

        d = -B @ g
        if d @ g >= 0:
            B = np.eye(q.size)
            d = -g
        head = _project(q, d, config.projection_shrink)
        search = wolfe_line_search(objective, gradient, q, head, config, rng, f_tail=f, g_tail=g)
        failures = 0 if search.satisfied else failures + 1
        if failures >= 2:
            logging.warning(f"Restart {index}: line search failed twice in a row at iteration {iteration}")
            return FminResult(q, f, grad_norm, iteration, False, index)

        s = search.step * (head - q)
        q_new = q + s
        f_new, g_new = objective(q_new), gradient(q_new)
        if not (np.isfinite(f_new) and np.all(np.isfinite(g_new))):
            logging.warning(f"Restart {index}: non-finite free energy at iteration {iteration}")
            return FminResult(q, f, grad_norm, iteration, False, index)
        B = _bfgs_update(B, s, g_new - g, config.curvature_eps)
        q, f, g = q_new, f_new, g_new

    grad_norm = float(np.linalg.norm(g))
    converged = grad_norm <= config.grad_tol
    if not converged:
        logging.warning(f"Restart {index}: iteration cap {config.max_iters} reached, |grad| = {grad_norm:.3e}")
    return FminResult(q, f, grad_norm, config.max_iters, converged, index)


def minimize(spec, config=None, q_init=None):
    """
    Minimize F_{c, zeta}(q; xi*(q)) from several random starting points.

    Restart k draws its start uniformly from [init_low, init_high]^N using the k-th child of
    SeedSequence(config.seed); restart 0 starts from q_init instead when one is given. A restart ends
    at ||grad|| <= grad_tol, at the iteration cap, after two consecutive failed line searches or at a
    non-finite value.

    Parameters:
    - spec (FreeEnergySpec): The free energy to minimize.
    - config (FminConfig, optional): Defaults to FminConfig().
    - q_init (np.ndarray, optional): Warm start for restart 0.

    Returns:
    - FminResult: The restart with the lowest finite objective, the lowest index on ties. If no restart
      produced a finite value, the first one is returned with converged=False.
    """
    config = config or FminConfig()
    n = spec.graph.node_count
    runs = []
    for index, child in enumerate(np.random.SeedSequence(config.seed).spawn(config.restarts)):
        rng = np.random.default_rng(child)
        q0 = rng.uniform(config.init_low, config.init_high, size=n)
        if index == 0 and q_init is not None:
            q0 = np.asarray(q_init, dtype=float)
        run = _descend(spec, q0, config, rng, index)
        logging.debug(f"Restart {index}: F = {run.f_value:.10g}, |grad| = {run.grad_norm:.3e}, "
                      f"{run.iterations} iterations, converged = {run.converged}")
        runs.append(run)

    best = runs[0]
    for run in runs[1:]:
        if np.isfinite(run.f_value) and (not np.isfinite(best.f_value) or run.f_value < best.f_value):
            best = run
    return FminResult(best.q_min, best.f_value, best.grad_norm, best.iterations, best.converged,
                      best.restart_index, tuple(r.f_value for r in runs), tuple(r.q_min for r in runs))
