"""Semilinear heat flow to its attractor, with certification reports.

Integrates ``du/dt = L u + beta*u + psi1/u - psi2/u**3`` with an IMEX
scheme: the linear part (Laplacian plus potential) is implicit, the
rational nonlinearity explicit.  The implicit matrix is an M-matrix, so
the scheme inherits the ordering and positivity structure that the
certification reports (attractor sandwich, exponential contraction,
comparison principle) rely on.  A fixed point of the scheme solves the
discrete stationary equation exactly, independent of dt.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._solve import spd_solver
from .comparison import (
    ExtremaCoeffs,
    PhiProfile,
    check_admissible,
    decay_rate_mu,
    extrema_coeffs,
    profile_from_coeffs,
)
from .errors import (
    AdmissibilityError,
    BasinError,
    ConvergenceError,
    PositivityLossError,
)
from .grid import Grid, ScalarField, _check_same_grid, laplacian_values
from .schrodinger import SpectralResult, ground_state

_SLACK = 1e-12  # tolerance band for open-set basin membership
_MAX_HALVINGS = 60
_DOUBLE_EVERY = 50  # accepted steps between dt doublings


@dataclass(frozen=True)
class ProblemData:
    """Grid problem with its spectral data and comparison profiles."""

    grid: Grid
    beta: ScalarField
    psi1: ScalarField
    psi2: ScalarField
    spectral: SpectralResult
    coeffs: ExtremaCoeffs
    profile_minus: PhiProfile
    profile_plus: PhiProfile

    @property
    def e0(self) -> ScalarField:
        return self.spectral.e0

    @property
    def lambda0(self) -> float:
        return self.spectral.lambda0

    def ratio(self, u: ScalarField) -> np.ndarray:
        """Pointwise u / e0."""
        return u.values / self.e0.values


@dataclass
class FlowTrace:
    """Recorded history of one flow run.

    ``sup_distances`` holds ``max|u(t) - u_star|`` per recorded time;
    the ratio columns are the extrema of u/e0.  ``converged_at`` is the
    time at which the increment test passed (0.0 when the initial data
    was already stationary).
    """

    times: np.ndarray
    sup_distances: np.ndarray
    min_ratios: np.ndarray
    max_ratios: np.ndarray
    snapshots: list[ScalarField] | None
    converged_at: float | None


@dataclass(frozen=True)
class MembershipReport:
    min_ratio: float
    epsilon: float
    in_basin_eps: bool  # min(u0/e0) >= y1_minus - epsilon
    in_basin: bool  # min(u0/e0) > y3_minus (open set)
    y1_minus: float
    y3_minus: float


@dataclass(frozen=True)
class SandwichReport:
    min_ratio: float
    max_ratio: float
    y1_minus: float
    y1_plus: float
    tol_h: float
    passed: bool


@dataclass(frozen=True)
class ExponentialBoundReport:
    mu: float
    delta_inv: float
    initial_distance: float
    max_ratio: float
    passed: bool


@dataclass(frozen=True)
class OrderingReport:
    min_gap: float
    passed: bool


def build_problem(
    grid: Grid,
    beta: ScalarField,
    psi1: ScalarField,
    psi2: ScalarField,
    tol: float = 1e-8,
) -> ProblemData:
    """Assemble spectral data, rescaled extrema and both profiles.

    Fails with :class:`AdmissibilityError` (carrying the signed margin)
    when the computed lambda0 violates the positivity condition; beta is
    never shifted silently.
    """
    for f in (beta, psi1, psi2):
        _check_same_grid(grid, f)
    if psi1.min() <= 0.0:
        raise ValueError("psi1 must be strictly positive pointwise")
    if psi2.min() < 0.0:
        raise ValueError("psi2 must be nonnegative pointwise")
    spectral = ground_state(grid, beta, tol=min(tol, 1e-8))
    coeffs = extrema_coeffs(psi1, psi2, spectral.e0)
    adm = check_admissible(spectral.lambda0, coeffs)
    if not adm.admissible:
        raise AdmissibilityError(
            f"problem not admissible at lambda0={spectral.lambda0!r}",
            margin=adm.margin,
        )
    return ProblemData(
        grid=grid,
        beta=beta,
        psi1=psi1,
        psi2=psi2,
        spectral=spectral,
        coeffs=coeffs,
        profile_minus=profile_from_coeffs(spectral.lambda0, coeffs, "minus"),
        profile_plus=profile_from_coeffs(spectral.lambda0, coeffs, "plus"),
    )


def initial_condition_check(
    u0: ScalarField, p: ProblemData, epsilon: float
) -> MembershipReport:
    """Report basin membership of the initial field.

    The shrunken basin is ``u0/e0 >= y1_minus - epsilon`` (closed); the
    full basin is ``u0/e0 > y3_minus`` (open, checked with a small slack
    band since grid arithmetic cannot certify a strict inequality).
    """
    _check_same_grid(p.grid, u0)
    y1m = p.profile_minus.y1
    y3m = p.profile_minus.y3 if p.profile_minus.y3 is not None else 0.0
    if not 0.0 < epsilon < y1m - y3m:
        raise ValueError(
            f"epsilon must lie in (0, y1_minus - y3_minus) = (0, {y1m - y3m!r})"
        )
    min_ratio = float(np.min(p.ratio(u0)))
    slack = _SLACK * max(1.0, abs(y3m), abs(y1m))
    return MembershipReport(
        min_ratio=min_ratio,
        epsilon=epsilon,
        in_basin_eps=min_ratio >= y1m - epsilon - slack,
        in_basin=min_ratio > y3m + slack,
        y1_minus=y1m,
        y3_minus=y3m,
    )


def _in_basin(values: np.ndarray, p: ProblemData) -> bool:
    y3m = p.profile_minus.y3 if p.profile_minus.y3 is not None else 0.0
    slack = _SLACK * max(1.0, abs(y3m))
    return float(np.min(values / p.e0.values)) > y3m + slack


class _Stepper:
    """IMEX step with a solver cache keyed by dt."""

    def __init__(self, p: ProblemData):
        self.p = p
        self._solvers = {}
        self._beta_max = float(p.beta.values.max())

    def solver(self, dt: float):
        solve = self._solvers.get(dt)
        if solve is None:
            diag = 1.0 - dt * self.p.beta.values
            solve = spd_solver(self.p.grid, dt, diag)
            self._solvers[dt] = solve
        return solve

    def implicit_ok(self, dt: float) -> bool:
        # keep I - dt*(L + beta) positive definite
        return self._beta_max <= 0.0 or dt * self._beta_max < 1.0

    def try_step(self, values: np.ndarray, dt: float):
        """One IMEX step of exactly dt; returns None on positivity loss."""
        if not self.implicit_ok(dt):
            return None
        nonlin = self.p.psi1.values / values - self.p.psi2.values / values**3
        candidate = self.solver(dt)(values + dt * nonlin)
        if candidate.min() <= 0.0 or not np.all(np.isfinite(candidate)):
            return None
        return candidate


def step(u: ScalarField, p: ProblemData, dt: float, stepper: _Stepper | None = None):
    """One IMEX step, halving dt on positivity loss.

    Returns ``(u_new, dt_used)``; ``dt_used < dt`` means the requested
    step was rejected and a shorter one accepted.  Raises
    :class:`PositivityLossError` when halving maxes out (the state is
    outside the basin of positive solutions).
    """
    _check_same_grid(p.grid, u)
    if u.min() <= 0.0:
        raise ValueError("field must be strictly positive")
    if dt < 0.0:
        raise ValueError("dt must be nonnegative")
    if dt == 0.0:
        return u, 0.0
    if stepper is None:
        stepper = _Stepper(p)
    attempt = dt
    for _ in range(_MAX_HALVINGS):
        candidate = stepper.try_step(u.values, attempt)
        if candidate is not None:
            return ScalarField(p.grid, candidate), attempt
        attempt *= 0.5
    raise PositivityLossError(
        "positivity lost after maximal dt halving; "
        "initial data looks outside the basin",
        dt=attempt,
        min_value=float(u.min()),
    )


def _dt_limits(p: ProblemData):
    lam = p.spectral.lambda0
    h = min(p.grid.spacings)
    dt_max = 0.5 / lam
    beta_max = float(p.beta.values.max())
    if beta_max > 0.0:
        dt_max = min(dt_max, 0.9 / beta_max)
    dt0 = min(h * h / 4.0, 0.1 / lam, dt_max)
    return dt0, dt_max


def evolve_to_attractor(
    u0: ScalarField,
    p: ProblemData,
    tol: float = 1e-8,
    t_max: float = 5000.0,
    keep_snapshots: bool = True,
):
    """March the flow until the step increment certifies stationarity.

    Convergence is declared when the increment rate ``max|u+ - u| / dt``
    falls below ``tol * min(1, mu0)`` (mu0 the certified contraction
    rate, so the state error is of order tol rather than tol/mu0) and
    the stationary residual of the candidate is below ``10*tol``.  The
    time step starts diffusion-limited, doubles every 50 accepted steps
    up to ``0.5/lambda0``, and halves on positivity rejection.

    Returns ``(u_star, trace)``; sup-norm distances in the trace are
    measured against the returned attractor.
    """
    _check_same_grid(p.grid, u0)
    if not 0.0 < tol <= 1e-4:
        raise ValueError(f"tol must lie in (0, 1e-4], got {tol}")
    if u0.min() <= 0.0:
        raise ValueError("initial field must be strictly positive")
    if not _in_basin(u0.values, p):
        raise BasinError(
            "initial data outside the open basin (ratio at or below y3)",
            time=0.0,
            min_ratio=float(np.min(p.ratio(u0))),
        )

    stepper = _Stepper(p)
    dt0, dt_max = _dt_limits(p)
    dt = dt0
    t = 0.0
    accepted = 0
    u = u0.values.copy()
    e0 = p.e0.values
    inc_tol = tol * min(1.0, decay_rate_mu(0.0, p.profile_minus))

    times = [0.0]
    snaps = [u.copy()]
    min_ratios = [float(np.min(u / e0))]
    max_ratios = [float(np.max(u / e0))]
    converged_at = None

    while t < t_max:
        field, dt_used = step(ScalarField(p.grid, u), p, dt, stepper)
        candidate = field.values
        if dt_used < dt:
            dt = dt_used
        inc = float(np.max(np.abs(candidate - u))) / dt_used
        t += dt_used
        accepted += 1
        if not _in_basin(candidate, p):
            raise BasinError(
                "flow left the basin mid-flight",
                time=t,
                min_ratio=float(np.min(candidate / e0)),
            )
        converged = inc < inc_tol and (
            stationary_residual_fields(
                ScalarField(p.grid, candidate), p.grid, p.beta, p.psi1, p.psi2
            )
            < 10.0 * tol
        )
        if converged and accepted == 1:
            # stationary initial data: keep the single-entry trace
            u = candidate
            converged_at = 0.0
            break
        times.append(t)
        snaps.append(candidate.copy())
        min_ratios.append(float(np.min(candidate / e0)))
        max_ratios.append(float(np.max(candidate / e0)))
        u = candidate
        if converged:
            converged_at = t
            break
        if accepted % _DOUBLE_EVERY == 0:
            dt = min(2.0 * dt, dt_max)
    else:
        raise ConvergenceError(
            f"no attractor within t_max={t_max} (last increment rate above tol)"
        )

    u_star = ScalarField(p.grid, u)
    sup = np.array([float(np.max(np.abs(s - u))) for s in snaps])
    trace = FlowTrace(
        times=np.asarray(times),
        sup_distances=sup,
        min_ratios=np.asarray(min_ratios),
        max_ratios=np.asarray(max_ratios),
        snapshots=[ScalarField(p.grid, s) for s in snaps] if keep_snapshots else None,
        converged_at=converged_at,
    )
    return u_star, trace


def evolve_fixed(u0: ScalarField, p: ProblemData, n_steps: int, dt: float):
    """Exactly ``n_steps`` IMEX steps of fixed size dt (no adaptivity).

    Used for semigroup checks: composing runs over the same dt grid
    reproduces a single longer run bit for bit.
    """
    _check_same_grid(p.grid, u0)
    stepper = _Stepper(p)
    u = u0.values
    for _ in range(n_steps):
        candidate = stepper.try_step(u, dt)
        if candidate is None:
            raise PositivityLossError(
                "fixed-dt step lost positivity", dt=dt, min_value=float(u.min())
            )
        u = candidate
    return ScalarField(p.grid, u)


def stationary_residual_fields(
    u: ScalarField,
    grid: Grid,
    beta: ScalarField,
    psi1: ScalarField,
    psi2: ScalarField,
) -> float:
    """Sup norm of -L u - beta*u - psi1/u + psi2/u^3.

    Accepts raw fields (psi1 may vanish here) so closed-form solutions
    from other modules can be checked without a full problem build.
    """
    _check_same_grid(grid, u)
    if u.min() <= 0.0:
        raise ValueError("field must be strictly positive")
    res = (
        -laplacian_values(grid, u.values)
        - beta.values * u.values
        - psi1.values / u.values
        + psi2.values / u.values**3
    )
    return float(np.max(np.abs(res)))


def stationary_residual(u: ScalarField, p: ProblemData) -> float:
    """Sup-norm stationary residual of u for the built problem."""
    return stationary_residual_fields(u, p.grid, p.beta, p.psi1, p.psi2)


def certify_sandwich(
    u_star: ScalarField, p: ProblemData, tol_h: float = 0.0
) -> SandwichReport:
    """Check y1_minus - tol_h <= u_star/e0 <= y1_plus + tol_h on the grid."""
    ratios = p.ratio(u_star)
    lo = float(np.min(ratios))
    hi = float(np.max(ratios))
    y1m = p.profile_minus.y1
    y1p = p.profile_plus.y1
    return SandwichReport(
        min_ratio=lo,
        max_ratio=hi,
        y1_minus=y1m,
        y1_plus=y1p,
        tol_h=tol_h,
        passed=(lo >= y1m - tol_h) and (hi <= y1p + tol_h),
    )


def certify_exponential_bound(
    trace: FlowTrace, p: ProblemData, epsilon: float
) -> ExponentialBoundReport:
    """Check the contraction estimate at every recorded time.

    The inequality is ``d(t) <= delta_inv * exp(-mu(eps) t) * d(0)`` with
    ``delta_inv = max(e0)/min(e0)``; the report carries the worst ratio
    of the two sides (pass iff it stays below 1 + 1e-6).
    """
    mu = decay_rate_mu(epsilon, p.profile_minus)
    e0 = p.e0.values
    delta_inv = float(e0.max() / e0.min())
    d0 = float(trace.sup_distances[0])
    if d0 == 0.0:
        return ExponentialBoundReport(
            mu=mu, delta_inv=delta_inv, initial_distance=0.0,
            max_ratio=0.0, passed=True,
        )
    bound = delta_inv * np.exp(-mu * trace.times) * d0
    max_ratio = float(np.max(trace.sup_distances / bound))
    return ExponentialBoundReport(
        mu=mu,
        delta_inv=delta_inv,
        initial_distance=d0,
        max_ratio=max_ratio,
        passed=max_ratio <= 1.0 + 1e-6,
    )


def comparison_principle_test(
    u0: ScalarField, w0: ScalarField, p: ProblemData, T: float
) -> OrderingReport:
    """Evolve an ordered pair with identical steps; check ordering survives.

    Both fields advance with the same dt sequence (a rejection for either
    halves the step for both), so the result isolates the monotonicity of
    the scheme from step-size effects.
    """
    _check_same_grid(p.grid, u0)
    _check_same_grid(p.grid, w0)
    if np.any(u0.values < w0.values):
        raise ValueError("initial data must satisfy u0 >= w0 pointwise")
    for f in (u0, w0):
        if not _in_basin(f.values, p):
            raise BasinError(
                "initial data outside the open basin", time=0.0,
                min_ratio=float(np.min(p.ratio(f))),
            )
    stepper = _Stepper(p)
    dt0, dt_max = _dt_limits(p)
    dt = dt0
    t = 0.0
    accepted = 0
    u = u0.values.copy()
    w = w0.values.copy()
    min_gap = float(np.min(u - w))
    while t < T:
        attempt = min(dt, T - t)
        for _ in range(_MAX_HALVINGS):
            cu = stepper.try_step(u, attempt)
            cw = stepper.try_step(w, attempt)
            if cu is not None and cw is not None:
                break
            attempt *= 0.5
            dt = attempt
        else:
            raise PositivityLossError(
                "paired step lost positivity after maximal halving", dt=attempt
            )
        u, w = cu, cw
        t += attempt
        accepted += 1
        min_gap = min(min_gap, float(np.min(u - w)))
        if accepted % _DOUBLE_EVERY == 0:
            dt = min(2.0 * dt, dt_max)
    return OrderingReport(min_gap=min_gap, passed=min_gap >= -1e-10)


def trace_to_csv(trace: FlowTrace, path):
    """Write the trace as ``t,sup_distance,min_ratio,max_ratio`` rows."""
    with open(path, "w") as fh:
        fh.write("t,sup_distance,min_ratio,max_ratio\n")
        for t, d, lo, hi in zip(
            trace.times, trace.sup_distances, trace.min_ratios, trace.max_ratios
        ):
            fh.write(f"{float(t)!r},{float(d)!r},{float(lo)!r},{float(hi)!r}\n")
