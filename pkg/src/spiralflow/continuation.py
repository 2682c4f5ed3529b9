"""Truncation removal, parameter sweeps, and the approach to choking.

Everything here drives the basic solver through families of problems:
shrinking the truncation width until it provably does not bind, marching
a swirl or source parameter across its admissible range, locating the
parameter where removal first fails, and climbing a geometric ladder of
parameters toward that failure point while watching the velocity field
settle.
"""

from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np

from .errors import ConfigError, NonConvergenceError, NonMonotoneError, RegimeError
from .gas import GasModel
from .radial import RadialBackground
from .solver import FlowProblem, FlowSolution, recover_fields, solve, weak_residuals

DEFAULT_SCHEDULE = (0.2, 0.1, 0.05, 0.025, 0.0125)


@lru_cache(maxsize=64)
def _gas(gamma, eps):
    # gas models are immutable; sweeps rebuild the same handful of
    # (gamma, eps) pairs hundreds of times, so share them
    return GasModel(gamma, eps)


def _checked_schedule(schedule):
    sched = DEFAULT_SCHEDULE if schedule is None else tuple(float(e) for e in schedule)
    if len(sched) == 0:
        raise ConfigError("schedule", "empty truncation schedule")
    if any(not (0.0 < e < 0.5) for e in sched):
        raise ConfigError("schedule", "every width must lie in (0, 1/2)")
    if any(b >= a for a, b in zip(sched, sched[1:])):
        raise ConfigError("schedule", "widths must decrease strictly")
    return sched


@dataclass
class RemovalRung:
    """Outcome of one solve at a fixed truncation width."""

    eps: float
    s_max: float
    q_max: float
    energy: float
    newton_iterations: int
    certified: bool  # s_max < 1 - 2 eps: truncation provably inactive


@dataclass
class RemovalResult:
    """Schedule of solves ending at the first certified width, if any."""

    background: RadialBackground
    rungs: list
    solution: FlowSolution
    removed: bool

    @property
    def eps_final(self):
        return self.rungs[-1].eps

    @property
    def s_max(self):
        return self.rungs[-1].s_max

    @property
    def q_max(self):
        return self.rungs[-1].q_max

    @property
    def energy(self):
        return self.rungs[-1].energy


def solve_with_truncation_removal(
    background,
    mesh,
    schedule=None,
    far_field="gauge",
    newton_tol=1e-9,
    max_iterations=50,
    initial=None,
):
    """Shrink the truncation width until it stops binding.

    Walks the decreasing width schedule, re-solving at each width with
    the previous minimizer as the starting guess.  Stops at the first
    width whose solution keeps the mass flux below the exact region,
    s_max < 1 - 2 eps: past that point the truncated and untruncated
    energies coincide near the solution, so the minimizer solves the
    original problem and the result is flagged removed.  If no width in
    the schedule certifies, the last solve is returned with removed
    False.
    """
    sched = _checked_schedule(schedule)
    rungs = []
    sol = None
    guess = initial
    for eps in sched:
        problem = FlowProblem(
            _gas(background.gamma, eps),
            background,
            mesh,
            far_field=far_field,
            newton_tol=newton_tol,
            max_iterations=max_iterations,
        )
        sol = solve(problem, initial=guess)
        guess = sol.u_reduced
        s_max = sol.max_mass_flux_sq()
        certified = s_max < 1.0 - 2.0 * eps
        rungs.append(
            RemovalRung(
                eps=eps,
                s_max=s_max,
                q_max=float(np.max(sol.reconstructed_speed())),
                energy=sol.energy,
                newton_iterations=sol.newton_iterations,
                certified=certified,
            )
        )
        if certified:
            return RemovalResult(background, rungs, sol, removed=True)
    return RemovalResult(background, rungs, sol, removed=False)


# ----------------------------------------------------------------------
# parameter sweeps


class SweepAxis(Enum):
    KAPPA1 = "kappa1"
    KAPPA2 = "kappa2"


@dataclass
class SweepRow:
    """One sweep sample; mirrors the CSV layout of the command line."""

    kappa1: float
    kappa2: float
    eps: float
    q_max: float
    s_max: float
    energy: float
    removed: bool
    converged: bool


@dataclass
class SweepResult:
    axis: SweepAxis
    rows: list = field(default_factory=list)

    def values(self):
        return np.array(
            [r.kappa1 if self.axis is SweepAxis.KAPPA1 else r.kappa2 for r in self.rows]
        )

    def modulus_of_continuity(self):
        """Largest |delta q_max| / |delta kappa| over adjacent converged rows."""
        vals = self.values()
        best = 0.0
        for a, b, va, vb in zip(self.rows, self.rows[1:], vals, vals[1:]):
            if a.converged and b.converged and vb != va:
                best = max(best, abs(b.q_max - a.q_max) / abs(vb - va))
        return best


def _kappa_pair(kappa1, kappa2, axis, value):
    if axis is SweepAxis.KAPPA1:
        return float(value), float(kappa2)
    return float(kappa1), float(value)


def parameter_sweep(
    gamma,
    kappa1,
    kappa2,
    axis,
    values,
    mesh,
    schedule=None,
    far_field="gauge",
    newton_tol=1e-9,
    max_iterations=50,
):
    """March one swirl parameter across a value list, warm-starting.

    The off-axis parameter is held at its given value.  A solve that
    fails to converge is recorded with NaN observables and the march
    continues from a cold start.
    """
    axis = SweepAxis(axis)
    sched = _checked_schedule(schedule)
    result = SweepResult(axis=axis)
    guess = None
    for v in values:
        k1, k2 = _kappa_pair(kappa1, kappa2, axis, v)
        background = RadialBackground(_gas(gamma, sched[0]), k1, k2)
        try:
            rem = solve_with_truncation_removal(
                background,
                mesh,
                schedule=sched,
                far_field=far_field,
                newton_tol=newton_tol,
                max_iterations=max_iterations,
                initial=guess,
            )
        except NonConvergenceError:
            result.rows.append(
                SweepRow(k1, k2, np.nan, np.nan, np.nan, np.nan, False, False)
            )
            guess = None
            continue
        guess = rem.solution.u_reduced
        result.rows.append(
            SweepRow(
                kappa1=k1,
                kappa2=k2,
                eps=rem.eps_final,
                q_max=rem.q_max,
                s_max=rem.s_max,
                energy=rem.energy,
                removed=rem.removed,
                converged=True,
            )
        )
    return result


# ----------------------------------------------------------------------
# critical parameter search


@dataclass
class CriticalSearchResult:
    """Bracket [lo, hi] with removal certified at lo and failing at hi."""

    lo: float
    hi: float
    evaluations: list  # (value, removed) in evaluation order

    @property
    def width(self):
        return self.hi - self.lo

    @property
    def midpoint(self):
        return 0.5 * (self.lo + self.hi)


def find_critical_parameter(
    gamma,
    kappa1,
    kappa2,
    axis,
    lo,
    hi,
    mesh,
    n_grid=9,
    tol=0.01,
    schedule=None,
    far_field="gauge",
    newton_tol=1e-9,
    max_iterations=50,
):
    """Bisect for the parameter where truncation removal first fails.

    A coarse grid scan establishes that the removal predicate is a
    true-prefix / false-suffix pattern on [lo, hi]; any later flip back
    to removable aborts with the offending sample triple, since
    bisection would silently converge to a wrong edge there.  If the
    whole grid is removable the scan range is extended toward the
    admissible ceiling before giving up.  Bisection then narrows the
    leading true/false pair to the requested width.
    """
    axis = SweepAxis(axis)
    if not (hi > lo):
        raise ConfigError("search", "need lo < hi")
    if tol < 1e-3:
        raise ConfigError("tol", "bracket width below 1e-3 is not supported")
    if n_grid < 3:
        raise ConfigError("n_grid", "grid scan needs at least 3 points")

    evaluations = []

    def removed(v):
        k1, k2 = _kappa_pair(kappa1, kappa2, axis, v)
        background = RadialBackground(_gas(gamma, 0.1), k1, k2)
        rem = solve_with_truncation_removal(
            background,
            mesh,
            schedule=schedule,
            far_field=far_field,
            newton_tol=newton_tol,
            max_iterations=max_iterations,
        )
        evaluations.append((float(v), rem.removed))
        return rem.removed

    grid = list(np.linspace(lo, hi, n_grid))
    flags = [removed(v) for v in grid]

    extensions = 0
    while all(flags) and extensions < 4 and grid[-1] < 0.97:
        # everything removable so far: push the scan toward the
        # admissible ceiling in case the flip sits above the given range
        new_hi = min(0.98, grid[-1] + 0.5 * (1.0 - grid[-1]))
        extra = np.linspace(grid[-1], new_hi, 4)[1:]
        for v in extra:
            try:
                flags.append(removed(v))
            except RegimeError:
                break
            grid.append(float(v))
            if not flags[-1]:
                break
        extensions += 1

    if not flags[0]:
        raise RegimeError(
            "removal already fails at the lower search bound; no bracket exists"
        )
    if all(flags):
        raise NonConvergenceError(
            "removal never fails on the scanned range; no critical value found"
        )

    first_false = flags.index(False)
    for j in range(first_false + 1, len(flags)):
        if flags[j]:
            raise NonMonotoneError(
                (
                    (grid[first_false - 1], True),
                    (grid[first_false], False),
                    (grid[j], True),
                )
            )

    a, b = grid[first_false - 1], grid[first_false]
    while b - a > tol:
        m = 0.5 * (a + b)
        if removed(m):
            a = m
        else:
            b = m
    return CriticalSearchResult(lo=a, hi=b, evaluations=evaluations)


# ----------------------------------------------------------------------
# approach to the choking parameter


@dataclass
class LimitRung:
    """One ladder step toward the choking parameter."""

    kappa1: float
    kappa2: float
    eps: float
    removed: bool
    q_max: float
    s_max: float
    energy: float
    irrot_residual: float
    mass_residual: float
    velocity_shift: float | None  # max velocity change on the probe annulus


@dataclass
class LimitStudy:
    rungs: list
    annulus: tuple

    def q_max_sequence(self):
        return np.array([r.q_max for r in self.rungs])

    def velocity_shifts(self):
        return np.array([r.velocity_shift for r in self.rungs[1:]])


def sonic_limit_study(
    gamma,
    kappa1,
    kappa2,
    axis,
    lo,
    hi,
    n_seq,
    mesh,
    annulus=(1.5, 4.0),
    schedule=None,
    far_field="gauge",
    newton_tol=1e-9,
    max_iterations=50,
):
    """Climb half the remaining gap toward hi at every ladder rung.

    Rung j solves with the axis parameter at hi - (hi - lo) / 2^j, so
    the values approach hi geometrically from below without reaching it;
    [lo, hi] is typically the bracket found by the critical search.
    Velocities are compared rung to rung on the fixed set of triangles
    whose centroids fall in the probe annulus, giving a Cauchy-type
    record of how the flow settles as the parameter closes in on
    choking.
    """
    axis = SweepAxis(axis)
    if n_seq < 2:
        raise ConfigError("n_seq", "a ladder needs at least 2 rungs")
    if not (hi > lo):
        raise ConfigError("ladder", "need lo < hi")
    r_in, r_out = float(annulus[0]), float(annulus[1])
    r_c = np.hypot(*mesh.centroids.T)
    probe = (r_c >= r_in) & (r_c <= r_out)
    if not (0.0 < r_in < r_out):
        raise ConfigError("annulus", "need 0 < r_in < r_out")
    if not probe.any():
        raise ConfigError("annulus", "probe annulus contains no triangles")

    rungs = []
    prev_velocity = None
    guess = None
    for j in range(n_seq):
        v = hi - (hi - lo) * 2.0 ** (-j)
        k1, k2 = _kappa_pair(kappa1, kappa2, axis, v)
        background = RadialBackground(_gas(gamma, 0.1), k1, k2)
        rem = solve_with_truncation_removal(
            background,
            mesh,
            schedule=schedule,
            far_field=far_field,
            newton_tol=newton_tol,
            max_iterations=max_iterations,
            initial=guess,
        )
        guess = rem.solution.u_reduced
        irrot, mass = weak_residuals(rem.solution)
        velocity = recover_fields(rem.solution).velocity[probe]
        shift = None
        if prev_velocity is not None:
            shift = float(np.max(np.linalg.norm(velocity - prev_velocity, axis=-1)))
        prev_velocity = velocity
        rungs.append(
            LimitRung(
                kappa1=k1,
                kappa2=k2,
                eps=rem.eps_final,
                removed=rem.removed,
                q_max=rem.q_max,
                s_max=rem.s_max,
                energy=rem.energy,
                irrot_residual=irrot,
                mass_residual=mass,
                velocity_shift=shift,
            )
        )
    return LimitStudy(rungs=rungs, annulus=(r_in, r_out))
