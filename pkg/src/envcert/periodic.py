"""Periodic composition of population maps.

A p-periodic system applies maps f_0, ..., f_{p-1} cyclically.  The
period map from phase i is Phi_p^i = f_{i+p-1} o ... o f_i; orbits and
cycles below always refer to these compositions on a working interval
W = [0, m] that the construction verifies is forward-invariant and
chains through every map's domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .models import Interval, PopulationModel
from .numerics import GridConfig, adaptive_sign_check, bracketed_root, grid_max, scan_roots

__all__ = [
    "PeriodicSystem",
    "make_system",
    "compose_eval",
    "compose_array",
    "composition_derivative",
    "composition_derivative_array",
    "iterate_orbit",
    "find_fixed_points",
    "GeometricCycle",
    "find_geometric_cycles",
    "MonotonicityReport",
    "monotonicity_bound",
]

# Families whose maps fall back to zero at a finite endpoint; their
# working interval is capped by the smallest one-step image maximum.
_IMAGE_CAPPED = {"quadratic", "beverton-holt-harvest"}


@dataclass(frozen=True)
class PeriodicSystem:
    maps: tuple[PopulationModel, ...]
    period: int
    working_interval: Interval

    @property
    def label(self) -> str:
        return " | ".join(m.label for m in self.maps)


def _proper_divisors(n: int) -> list[int]:
    return [d for d in range(1, n) if n % d == 0]


def _chain_check(maps: Sequence[PopulationModel], m: float) -> tuple[bool, str | None]:
    """Iterates of [0, m] must stay inside every map's domain and return to [0, m]."""
    slack = 1e-9 * max(1.0, m)
    x = np.linspace(0.0, m, 4097)
    for j, f in enumerate(maps):
        hi = f.domain.hi
        worst = float(x.max())
        if x.min() < -slack or worst > hi + slack:
            return False, (
                f"step {j} ({f.label}): iterate reaches {worst:.6g}, "
                f"domain ends at {hi:g}"
            )
        x = f.eval_array(x)
        if not np.isfinite(x).all():
            return False, f"step {j} ({f.label}): non-finite iterate"
    worst = float(x.max())
    if x.min() < -slack or worst > m + slack:
        return False, f"period image reaches {worst:.6g}, outside [0, {m:g}]"
    return True, None


def make_system(models: Sequence[PopulationModel]) -> PeriodicSystem:
    """Assemble maps into a periodic system on a verified working interval."""
    maps = tuple(models)
    if not maps:
        raise ValueError("need at least one map")
    if not all(isinstance(m, PopulationModel) for m in maps):
        raise ValueError("all entries must be PopulationModel instances")
    p = len(maps)
    for d in _proper_divisors(p):
        if all(maps[i] == maps[i % d] for i in range(p)):
            raise ValueError(
                f"maps repeat with period {d}; pass the minimal period"
            )

    m0 = min(f.domain.hi for f in maps)
    if any(f.family in _IMAGE_CAPPED for f in maps):
        image_cap = min(grid_max(f.eval_array, 0.0, m0)[1] for f in maps)
        m0 = min(m0, image_cap)
    if m0 < 1.0 - 1e-9:
        raise ValueError(
            f"working interval would end at {m0:g} < 1; the positive fixed "
            "point must lie inside it"
        )

    ok, why = _chain_check(maps, m0)
    if not ok:
        lo, hi = 1.0, m0
        ok_lo, why_lo = _chain_check(maps, lo)
        if not ok_lo:
            raise ValueError(f"no valid working interval: {why_lo}")
        for _ in range(50):
            mid = 0.5 * (lo + hi)
            if _chain_check(maps, mid)[0]:
                lo = mid
            else:
                hi = mid
        m0 = lo
    return PeriodicSystem(maps=maps, period=p, working_interval=Interval(0.0, m0))


def compose_eval(
    system: PeriodicSystem, x: float, n: int | None = None, i: int = 0
) -> float:
    """Phi_n from phase i at a point, with per-step domain checks."""
    p = system.period
    if n is None:
        n = p
    if n < 0:
        raise ValueError("n must be nonnegative")
    if not 0 <= i < p:
        raise ValueError(f"phase must lie in [0, {p})")
    val = float(x)
    for t in range(n):
        f = system.maps[(i + t) % p]
        try:
            val = f.eval(val)
        except ValueError as exc:
            raise ValueError(f"composition left the domain at step {t}: {exc}") from exc
    return val


def compose_array(
    system: PeriodicSystem, x: np.ndarray, n: int | None = None, i: int = 0
) -> np.ndarray:
    """Raw vectorized Phi_n from phase i, no domain checks."""
    p = system.period
    if n is None:
        n = p
    val = np.asarray(x, dtype=float)
    for t in range(n):
        val = system.maps[(i + t) % p].eval_array(val)
    return val


def composition_derivative(
    system: PeriodicSystem, x: float, i: int = 0
) -> float:
    """(Phi_p^i)'(x) by the chain rule over one period."""
    prod = 1.0
    val = float(x)
    for t in range(system.period):
        f = system.maps[(i + t) % system.period]
        prod *= f.deriv(val, 1)
        val = f.eval(val)
    return prod


def composition_derivative_array(
    system: PeriodicSystem, x: np.ndarray, i: int = 0
) -> np.ndarray:
    val = np.asarray(x, dtype=float)
    prod = np.ones_like(val)
    for t in range(system.period):
        f = system.maps[(i + t) % system.period]
        prod = prod * f.deriv_array(val, 1)
        val = f.eval_array(val)
    return prod


def iterate_orbit(
    system: PeriodicSystem, x0: float, num_periods: int
) -> np.ndarray:
    """Orbit of x0 over whole periods; index t holds the state after t steps."""
    if num_periods < 1:
        raise ValueError("num_periods must be at least 1")
    n = system.period * num_periods
    out = np.empty(n + 1)
    val = float(x0)
    if not system.working_interval.contains(val, 1e-12):
        raise ValueError(
            f"x0={val} outside working interval [0, {system.working_interval.hi:g}]"
        )
    out[0] = val
    for t in range(n):
        f = system.maps[t % system.period]
        try:
            val = f.eval(val)
        except ValueError as exc:
            raise ValueError(f"orbit escaped at step {t}: {exc}") from exc
        out[t + 1] = val
    return out


def find_fixed_points(
    system: PeriodicSystem, cfg: GridConfig | None = None
) -> np.ndarray:
    """Fixed points of the period map Phi_p on the working interval.

    Sign-change scan plus the two structural points 0 and 1, which are
    verified by residual and injected even when tangential; scan roots
    within 1e-7 of a verified anchor are snapped onto it.
    """
    if cfg is None:
        cfg = GridConfig()
    hi = system.working_interval.hi
    g = lambda t: compose_array(system, t) - t
    roots = [float(r) for r in scan_roots(g, (0.0, hi), cfg.seed_cells, tol=1e-10)]
    for anchor in (0.0, 1.0):
        res = abs(float(compose_array(system, np.asarray([anchor]))[0]) - anchor)
        if res <= 1e-9:
            roots = [r for r in roots if abs(r - anchor) > 1e-7]
            roots.append(anchor)
    roots.sort()
    return np.asarray(roots)


@dataclass(frozen=True)
class GeometricCycle:
    """A periodic orbit of the system, recorded from its starting phase.

    points samples the orbit once per period (so an r-cycle has r
    points, fixed under the r-fold period map); the complete cycle
    pairs every intermediate state with the phase it is visited at and
    has length lcm(s, period) where s is the minimal step period.
    """

    start_phase: int
    points: tuple[float, ...]
    period_count: int
    complete: tuple[tuple[int, float], ...]

    @property
    def complete_length(self) -> int:
        return len(self.complete)


def _seq_minimal_period(seq: Sequence[float], tol: float) -> int:
    n = len(seq)
    for s in sorted(d for d in range(1, n + 1) if n % d == 0):
        if all(abs(seq[(t + s) % n] - seq[t]) <= tol for t in range(n)):
            return s
    return n


def find_geometric_cycles(
    system: PeriodicSystem, r_max: int, cfg: GridConfig | None = None
) -> tuple[GeometricCycle, ...]:
    """Positive cycles of the system up to r_max full periods.

    For each starting phase, fixed points of the r-fold period map are
    located by scan; each orbit is followed for r*p steps and sampled
    once per period, and cycles are deduplicated across phases by the
    set of states they visit.
    """
    if cfg is None:
        cfg = GridConfig()
    if r_max < 1:
        raise ValueError("r_max must be at least 1")
    p = system.period
    hi = system.working_interval.hi
    found: list[GeometricCycle] = []
    seen: set[tuple] = set()

    for r in range(1, r_max + 1):
        n = r * p
        for i in range(p):
            g = lambda t: compose_array(system, t, n, i) - t
            roots = [float(x) for x in scan_roots(g, (1e-9, hi), cfg.seed_cells, 1e-10)]
            anchor_res = abs(float(compose_array(system, np.asarray([1.0]), n, i)[0]) - 1.0)
            if anchor_res <= 1e-9:
                # snap scan noise onto the shared fixed point
                roots = [x for x in roots if abs(x - 1.0) > 1e-7]
                roots.append(1.0)
            for x0 in sorted(roots):
                if x0 <= 1e-8:
                    continue
                lower = False
                for q in _proper_divisors(r):
                    img = float(compose_array(system, np.asarray([x0]), q * p, i)[0])
                    if abs(img - x0) <= 1e-8 * max(1.0, x0):
                        lower = True
                        break
                if lower:
                    continue
                seq = [x0]
                val = x0
                escaped = False
                for t in range(n):
                    f = system.maps[(i + t) % p]
                    try:
                        val = f.eval(val)
                    except ValueError:
                        escaped = True
                        break
                    seq.append(val)
                if escaped or abs(seq[-1] - x0) > 1e-7 * max(1.0, x0):
                    continue
                orbit = seq[:n]
                key = tuple(sorted(set(round(float(x), 7) for x in orbit)))
                if key in seen:
                    continue
                seen.add(key)
                r_geom = _seq_minimal_period(orbit, 1e-8 * max(1.0, max(orbit)))
                points = tuple(orbit[q * p] for q in range(r))
                s = math.lcm(r_geom, p)
                complete = tuple(
                    ((i + t) % p, orbit[t % n]) for t in range(s)
                )
                found.append(
                    GeometricCycle(
                        start_phase=i,
                        points=points,
                        period_count=r,
                        complete=complete,
                    )
                )
    found.sort(key=lambda c: (len(c.points), min(c.points), c.start_phase))
    return tuple(found)


@dataclass(frozen=True)
class MonotonicityReport:
    """Bounds the region where composition-level monotonicity arguments hold.

    critical_bound: first zero of (Phi_p)' right of 0 (domain end if none).
    dominance_bound: first point where Phi_p stops strictly exceeding
    every individual map (domain end if none; period 1 trivially hi).
    """

    critical_bound: float
    dominance_bound: float


def monotonicity_bound(
    system: PeriodicSystem, cfg: GridConfig | None = None
) -> MonotonicityReport:
    if cfg is None:
        cfg = GridConfig()
    hi = system.working_interval.hi
    dcrit = scan_roots(
        lambda t: composition_derivative_array(system, t), (1e-9, hi), cfg.seed_cells
    )
    c_phi = float(dcrit[0]) if dcrit.size else hi

    if system.period == 1:
        x_phi = hi
    else:
        def margin(t: np.ndarray) -> np.ndarray:
            t = np.asarray(t, dtype=float)
            best = np.full_like(t, -np.inf)
            for f in system.maps:
                best = np.maximum(best, f.eval_array(t))
            return compose_array(system, t) - best

        roots = scan_roots(margin, (1e-9, hi), cfg.seed_cells)
        x_phi = float(roots[0]) if roots.size else hi
    return MonotonicityReport(critical_bound=c_phi, dominance_bound=x_phi)
