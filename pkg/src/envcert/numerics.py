"""Grid-based sign verification, root finding, and finite differences.

Everything here is deterministic: fixed seed grids, midpoint refinement,
no randomness.  Functions passed in are expected to accept numpy arrays
and evaluate elementwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "GridConfig",
    "SignReport",
    "adaptive_sign_check",
    "bracketed_root",
    "scan_roots",
    "fd_derivative",
    "grid_max",
]

# Sample offsets inside each cell: endpoints, quartiles, midpoint.
_OFFSETS = np.array([0.0, 0.25, 0.5, 0.75, 1.0])


@dataclass(frozen=True)
class GridConfig:
    """Resolution and tolerance knobs shared by all grid-based checks."""

    seed_cells: int = 4096
    max_refinement_depth: int = 12
    abs_tol: float = 1e-9
    rel_tol: float = 1e-9
    exclusion_radius: float = 1e-4

    def __post_init__(self) -> None:
        if self.seed_cells < 1:
            raise ValueError("seed_cells must be at least 1")
        if not 0 <= self.max_refinement_depth <= 30:
            raise ValueError("max_refinement_depth must lie in [0, 30]")
        if self.abs_tol < 0 or self.rel_tol < 0:
            raise ValueError("tolerances must be nonnegative")
        if not 0 < self.exclusion_radius < 0.5:
            raise ValueError("exclusion_radius must lie in (0, 0.5)")


@dataclass(frozen=True)
class SignReport:
    """Outcome of an adaptive sign check on one interval.

    status is one of "all_positive", "all_negative", "violation",
    "unresolved".  A violation carries the leftmost offending sample.
    Unresolved intervals are the merged cells that could not be decided
    at the maximum refinement depth.
    """

    status: str
    claim: str
    interval: tuple[float, float]
    cells_checked: int
    min_abs_value: float
    witness: float | None = None
    witness_value: float | None = None
    unresolved: tuple[tuple[float, float], ...] = ()

    @property
    def ok(self) -> bool:
        return self.status in ("all_positive", "all_negative")


def _merge_cells(los: np.ndarray, his: np.ndarray) -> tuple[tuple[float, float], ...]:
    if los.size == 0:
        return ()
    order = np.argsort(los, kind="stable")
    los, his = los[order], his[order]
    out: list[list[float]] = [[float(los[0]), float(his[0])]]
    for lo, hi in zip(los[1:], his[1:]):
        gap = lo - out[-1][1]
        if gap <= 1e-12 * max(1.0, abs(lo)):
            out[-1][1] = max(out[-1][1], float(hi))
        else:
            out.append([float(lo), float(hi)])
    return tuple((a, b) for a, b in out)


def adaptive_sign_check(
    g: Callable[[np.ndarray], np.ndarray],
    interval: tuple[float, float],
    claim: str = "positive",
    cfg: GridConfig | None = None,
) -> SignReport:
    """Verify that g keeps one strict sign on an open interval.

    Each cell is sampled at five points; a cell is accepted when every
    sample clears abs_tol with the claimed sign, and the whole check
    fails as soon as some sample contradicts the claim by more than
    abs_tol.  Undecided cells (including NaN evaluations) are bisected
    up to max_refinement_depth, then reported as unresolved.
    """
    if cfg is None:
        cfg = GridConfig()
    if claim not in ("positive", "negative"):
        raise ValueError("claim must be 'positive' or 'negative'")
    lo, hi = float(interval[0]), float(interval[1])
    if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
        raise ValueError(f"degenerate interval ({lo}, {hi})")

    sgn = 1.0 if claim == "positive" else -1.0
    edges = np.linspace(lo, hi, cfg.seed_cells + 1)
    cell_lo, cell_hi = edges[:-1], edges[1:]
    cells_checked = 0
    min_abs = np.inf
    unresolved: tuple[tuple[float, float], ...] = ()

    for depth in range(cfg.max_refinement_depth + 1):
        n = cell_lo.size
        if n == 0:
            break
        cells_checked += n
        xs = cell_lo[:, None] + (cell_hi - cell_lo)[:, None] * _OFFSETS[None, :]
        with np.errstate(all="ignore"):
            vals = sgn * np.asarray(g(xs.reshape(-1)), dtype=float).reshape(n, 5)
        finite = np.isfinite(vals)
        if finite.any():
            m = float(np.abs(vals[finite]).min())
            min_abs = min(min_abs, m)
        bad = finite & (vals < -cfg.abs_tol)
        if bad.any():
            xs_bad = xs[bad]
            k = int(np.argmin(xs_bad))
            return SignReport(
                status="violation",
                claim=claim,
                interval=(lo, hi),
                cells_checked=cells_checked,
                min_abs_value=min_abs,
                witness=float(xs_bad[k]),
                witness_value=float(sgn * vals[bad][k]),
            )
        # +inf satisfies the claim (masked/vacuous samples); NaN does not.
        ok = (vals > cfg.abs_tol).all(axis=1)
        keep = ~ok
        if not keep.any():
            cell_lo = cell_lo[:0]
            break
        # isolated tangencies keep only a handful of cells alive per
        # depth; a margin that is undecided across a whole band would
        # double the work every level for nothing, so give up on it
        if depth == cfg.max_refinement_depth or int(keep.sum()) > 2 * cfg.seed_cells:
            unresolved = _merge_cells(cell_lo[keep], cell_hi[keep])
            break
        mid = 0.5 * (cell_lo[keep] + cell_hi[keep])
        cell_lo = np.concatenate([cell_lo[keep], mid])
        cell_hi = np.concatenate([mid, cell_hi[keep]])
        order = np.argsort(cell_lo, kind="stable")
        cell_lo, cell_hi = cell_lo[order], cell_hi[order]

    if unresolved:
        status = "unresolved"
    else:
        status = "all_positive" if claim == "positive" else "all_negative"
    return SignReport(
        status=status,
        claim=claim,
        interval=(lo, hi),
        cells_checked=cells_checked,
        min_abs_value=min_abs,
        unresolved=unresolved,
    )


def bracketed_root(
    g: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-12,
    max_iter: int = 200,
) -> float:
    """Locate a root of g in [a, b] given a sign change at the ends.

    Alternates secant proposals with bisection so the bracket width is
    guaranteed to shrink; returns the bracket midpoint once it is
    narrower than tol.
    """
    a, b = float(a), float(b)
    if not a < b:
        raise ValueError("need a < b")
    fa, fb = float(g(a)), float(g(b))
    if not (np.isfinite(fa) and np.isfinite(fb)):
        raise ValueError("bracket endpoints evaluate non-finite")
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if (fa > 0) == (fb > 0):
        raise ValueError(f"no sign change on [{a}, {b}]")

    use_secant = True
    for _ in range(max_iter):
        if b - a <= tol:
            break
        x = None
        if use_secant and fb != fa:
            s = b - fb * (b - a) / (fb - fa)
            pad = 1e-3 * (b - a)
            if a + pad < s < b - pad:
                x = s
        if x is None:
            x = 0.5 * (a + b)
        fx = float(g(x))
        if not np.isfinite(fx):
            x = 0.5 * (a + b)
            fx = float(g(x))
            if not np.isfinite(fx):
                raise ValueError(f"non-finite value at {x} during refinement")
        if fx == 0.0:
            return x
        if (fx > 0) == (fa > 0):
            a, fa = x, fx
        else:
            b, fb = x, fx
        use_secant = not use_secant
    return 0.5 * (a + b)


def scan_roots(
    g: Callable[[np.ndarray], np.ndarray],
    interval: tuple[float, float],
    seed_cells: int = 4096,
    tol: float = 1e-10,
) -> np.ndarray:
    """All sign-change roots of g on an interval, one per bracket.

    Samples a uniform grid, refines each sign-change bracket with
    bracketed_root, keeps exact zeros at grid points, and merges
    duplicates.  Roots where g touches zero without changing sign are
    not detected.
    """
    lo, hi = float(interval[0]), float(interval[1])
    if not lo < hi:
        raise ValueError("need lo < hi")
    xs = np.linspace(lo, hi, max(seed_cells, 8) + 1)
    with np.errstate(all="ignore"):
        vs = np.asarray(g(xs), dtype=float)
    roots: list[float] = [float(x) for x, v in zip(xs, vs) if v == 0.0]
    fin = np.isfinite(vs)
    crosses = fin[:-1] & fin[1:] & (vs[:-1] * vs[1:] < 0)
    for i in np.nonzero(crosses)[0]:
        roots.append(bracketed_root(lambda t: float(g(np.asarray([t]))[0]), xs[i], xs[i + 1], tol=tol))
    roots.sort()
    out: list[float] = []
    for r in roots:
        radius = max(10 * tol, 1e-9 * max(1.0, abs(r)))
        if not out or r - out[-1] > radius:
            out.append(r)
    return np.asarray(out)


# Fourth-order central stencils.  Step sizes are chosen so that both the
# truncation term and the floating-point roundoff (which grows like
# eps/h^k) stay several digits below the advertised accuracy.
_FD_STEP = {1: 1e-5, 2: 1e-3, 3: 7e-3}


def fd_derivative(
    g: Callable[[float], float],
    x: float,
    order: int = 1,
    h: float | None = None,
) -> float:
    """Finite-difference derivative of g at x, orders 1 through 3."""
    if order not in (1, 2, 3):
        raise ValueError("order must be 1, 2, or 3")
    x = float(x)
    if h is None:
        h = _FD_STEP[order] * max(1.0, abs(x))
    h = float(h)
    if h <= 0:
        raise ValueError("h must be positive")

    def gv(t: float) -> float:
        return float(g(t))

    if order == 1:
        num = -gv(x + 2 * h) + 8 * gv(x + h) - 8 * gv(x - h) + gv(x - 2 * h)
        return num / (12 * h)
    if order == 2:
        num = (
            -gv(x + 2 * h)
            + 16 * gv(x + h)
            - 30 * gv(x)
            + 16 * gv(x - h)
            - gv(x - 2 * h)
        )
        return num / (12 * h * h)
    d1 = gv(x + h) - gv(x - h)
    d2 = gv(x + 2 * h) - gv(x - 2 * h)
    d3 = gv(x + 3 * h) - gv(x - 3 * h)
    return (-13 * d1 + 8 * d2 - d3) / (8 * h ** 3)


def grid_max(
    g: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    samples: int = 8193,
) -> tuple[float, float]:
    """(argmax, max) of g on [lo, hi]: grid scan plus local ternary polish."""
    xs = np.linspace(lo, hi, samples)
    with np.errstate(all="ignore"):
        vs = np.asarray(g(xs), dtype=float)
    if not np.isfinite(vs).any():
        raise ValueError("no finite values on the grid")
    i = int(np.nanargmax(vs))
    a = xs[max(i - 1, 0)]
    b = xs[min(i + 1, samples - 1)]
    for _ in range(120):
        if b - a <= 1e-13 * max(1.0, abs(b)):
            break
        m1 = a + (b - a) / 3
        m2 = b - (b - a) / 3
        if float(g(np.asarray([m1]))[0]) < float(g(np.asarray([m2]))[0]):
            a = m1
        else:
            b = m2
    xstar = 0.5 * (a + b)
    return xstar, float(g(np.asarray([xstar]))[0])
