"""Decreasing involutions that pin a map against the diagonal.

An envelope h must satisfy h(h(x)) = x, h strictly decreasing, h(1) = 1.
It envelops a map f when h > f on (0, 1) and h < f past 1 wherever both
stay positive; x_h denotes the positive root of h, beyond which the
second condition is vacuous.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .models import PopulationModel, compile_expression
from .numerics import GridConfig, SignReport, adaptive_sign_check, scan_roots

__all__ = [
    "Envelope",
    "make_mobius",
    "make_reciprocal",
    "make_piecewise_bh",
    "make_custom_envelope",
    "InvolutionReport",
    "check_involution",
    "DecreasingReport",
    "check_decreasing",
    "StructuralReport",
    "structural_check",
    "EnvelopeVerdict",
    "envelops",
    "CommonEnvelopeReport",
    "common_envelope",
    "SandwichReport",
    "sandwich_check",
    "FitReport",
    "fit_mobius",
]

# Cap for grid checks when the envelope never returns to zero.
_INF_CAP = 1000.0


@dataclass(frozen=True)
class Envelope:
    kind: str  # "mobius" | "reciprocal" | "piecewise-bh" | "custom"
    param: float | None
    x_h: float
    label: str
    expr: str | None = None
    _eval: Callable = field(default=None, repr=False, compare=False)

    def eval(self, x: float) -> float:
        return float(self._eval(np.asarray([x]))[0])

    def eval_array(self, x: np.ndarray) -> np.ndarray:
        return self._eval(np.asarray(x, dtype=float))


def _mobius_eval(alpha: float) -> Callable:
    def fn(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        with np.errstate(all="ignore"):
            return (1.0 - alpha * x) / (alpha - (2.0 * alpha - 1.0) * x)

    return fn


def make_mobius(alpha: float) -> Envelope:
    """One-parameter family of decreasing involutions through (1, 1).

    alpha = 0 gives 1/x, alpha = 1/2 gives 2 - x; the positive root is
    1/alpha.  The defining matrix has zero trace, so h o h = id exactly.
    """
    alpha = float(alpha)
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must lie in [0, 1) (got {alpha:g})")
    x_h = np.inf if alpha == 0.0 else 1.0 / alpha
    return Envelope(
        kind="mobius",
        param=alpha,
        x_h=x_h,
        label=f"mobius(alpha={alpha:g})",
        _eval=_mobius_eval(alpha),
    )


def make_reciprocal() -> Envelope:
    return Envelope(
        kind="reciprocal",
        param=None,
        x_h=np.inf,
        label="reciprocal(1/x)",
        _eval=_mobius_eval(0.0),
    )


def make_piecewise_bh(c: float) -> Envelope:
    """Envelope tailored to steep compensatory maps: alpha = (c-2)/(c-1)."""
    c = float(c)
    if c <= 2.0:
        raise ValueError(f"c must exceed 2 (got {c:g})")
    alpha = (c - 2.0) / (c - 1.0)
    return Envelope(
        kind="piecewise-bh",
        param=c,
        x_h=(c - 1.0) / (c - 2.0),
        label=f"piecewise-bh(c={c:g})",
        _eval=_mobius_eval(alpha),
    )


def make_custom_envelope(expr: str, x_h: float | None = None) -> Envelope:
    """Envelope from an expression in x; x_h found by scan when not given."""
    ev, _ = compile_expression(expr)
    if x_h is None:
        roots = scan_roots(ev, (1.0 + 1e-9, 50.0), 8192)
        x_h = float(roots[0]) if roots.size else np.inf
    return Envelope(
        kind="custom",
        param=None,
        x_h=float(x_h),
        label=f"custom({expr})",
        expr=expr,
        _eval=ev,
    )


def _check_span(h: Envelope) -> tuple[float, float]:
    lo = 1e-6
    hi = min(h.x_h, _INF_CAP)
    if np.isfinite(h.x_h):
        hi = h.x_h - 1e-6 * max(1.0, h.x_h)
    return lo, hi


@dataclass(frozen=True)
class InvolutionReport:
    passed: bool
    max_residual: float
    worst_x: float
    positive: bool
    grid_points: int


def check_involution(h: Envelope, cfg: GridConfig | None = None) -> InvolutionReport:
    """Max |h(h(x)) - x| on (0, x_h), with a local refinement pass.

    h must stay positive on the span; the involution residual must not
    exceed 1e-9.
    """
    if cfg is None:
        cfg = GridConfig()
    lo, hi = _check_span(h)
    n = 4 * cfg.seed_cells + 1
    xs = np.linspace(lo, hi, n)
    hv = h.eval_array(xs)
    positive = bool(np.isfinite(hv).all() and (hv > 0).all())
    with np.errstate(all="ignore"):
        res = np.abs(h.eval_array(hv) - xs)
    res = np.where(np.isfinite(res), res, np.inf)
    i = int(np.argmax(res))
    # refine around the worst cell
    a, b = xs[max(i - 1, 0)], xs[min(i + 1, n - 1)]
    fine = np.linspace(a, b, 4097)
    with np.errstate(all="ignore"):
        fres = np.abs(h.eval_array(h.eval_array(fine)) - fine)
    fres = np.where(np.isfinite(fres), fres, np.inf)
    j = int(np.argmax(fres))
    worst = max(float(res[i]), float(fres[j]))
    worst_x = float(fine[j]) if fres[j] >= res[i] else float(xs[i])
    return InvolutionReport(
        passed=positive and worst <= 1e-9,
        max_residual=worst,
        worst_x=worst_x,
        positive=positive,
        grid_points=n + 4097,
    )


@dataclass(frozen=True)
class DecreasingReport:
    passed: bool
    min_drop: float
    worst_x: float


def check_decreasing(h: Envelope, cfg: GridConfig | None = None) -> DecreasingReport:
    """Strict decrease of h across a uniform grid on (0, x_h)."""
    if cfg is None:
        cfg = GridConfig()
    lo, hi = _check_span(h)
    xs = np.linspace(lo, hi, 4 * cfg.seed_cells + 1)
    hv = h.eval_array(xs)
    drops = hv[:-1] - hv[1:]
    if not np.isfinite(drops).all():
        bad = int(np.nonzero(~np.isfinite(drops))[0][0])
        return DecreasingReport(False, float("nan"), float(xs[bad]))
    i = int(np.argmin(drops))
    return DecreasingReport(
        passed=bool((drops > 0).all()),
        min_drop=float(drops[i]),
        worst_x=float(xs[i]),
    )


@dataclass(frozen=True)
class StructuralReport:
    passed: bool
    involution: InvolutionReport
    decreasing: DecreasingReport
    unit_residual: float


def structural_check(h: Envelope, cfg: GridConfig | None = None) -> StructuralReport:
    """Involution + strict decrease + h(1) = 1, the gate before enveloping."""
    inv = check_involution(h, cfg)
    dec = check_decreasing(h, cfg)
    unit = abs(h.eval(1.0) - 1.0)
    return StructuralReport(
        passed=inv.passed and dec.passed and unit <= 1e-12,
        involution=inv,
        decreasing=dec,
        unit_residual=unit,
    )


@dataclass(frozen=True)
class EnvelopeVerdict:
    envelope_label: str
    model_label: str
    passed: bool
    inside: SignReport
    outside: SignReport | None
    delta: float

    @property
    def has_violation(self) -> bool:
        if self.inside.status == "violation":
            return True
        return self.outside is not None and self.outside.status == "violation"

    @property
    def unresolved_intervals(self) -> tuple[tuple[float, float], ...]:
        out = tuple(self.inside.unresolved)
        if self.outside is not None:
            out += tuple(self.outside.unresolved)
        return out


def envelops(
    h: Envelope, model: PopulationModel, cfg: GridConfig | None = None
) -> EnvelopeVerdict:
    """Check h > f on (0,1) and h < f past 1 where both stay positive.

    Past x_h or past points where either function is nonpositive the
    outer condition is vacuous; those samples are skipped.
    """
    if cfg is None:
        cfg = GridConfig()
    delta = cfg.exclusion_radius

    inside = adaptive_sign_check(
        lambda t: h.eval_array(t) - model.eval_array(t),
        (delta, 1.0 - delta),
        "positive",
        cfg,
    )

    outside = None
    hi_out = min(h.x_h, model.domain.hi)
    if np.isfinite(hi_out) and hi_out > 1.0 + 2 * delta:
        def gap(t: np.ndarray) -> np.ndarray:
            fv = model.eval_array(t)
            hv = h.eval_array(t)
            both = (fv > 0) & (hv > 0)
            return np.where(both, fv - hv, np.inf)

        outside = adaptive_sign_check(gap, (1.0 + delta, hi_out), "positive", cfg)

    passed = inside.ok and (outside is None or outside.ok)
    return EnvelopeVerdict(
        envelope_label=h.label,
        model_label=model.label,
        passed=passed,
        inside=inside,
        outside=outside,
        delta=delta,
    )


@dataclass(frozen=True)
class CommonEnvelopeReport:
    envelope_label: str
    passed: bool
    verdicts: tuple[EnvelopeVerdict, ...]


def common_envelope(h: Envelope, system, cfg: GridConfig | None = None) -> CommonEnvelopeReport:
    """One envelope against every map of a periodic system."""
    verdicts = tuple(envelops(h, f, cfg) for f in system.maps)
    return CommonEnvelopeReport(
        envelope_label=h.label,
        passed=all(v.passed for v in verdicts),
        verdicts=verdicts,
    )


@dataclass(frozen=True)
class SandwichReport:
    passed: bool
    left_order: SignReport
    left_return: SignReport
    right_order: SignReport | None
    right_return: SignReport | None


def sandwich_check(
    h: Envelope, model: PopulationModel, cfg: GridConfig | None = None
) -> SandwichReport:
    """Two-sided pinch: f under h before 1 with f(h(x)) > x, and the
    mirrored order past 1.  Points where h leaves f's domain carry no
    enveloping claim, so the return legs treat them as vacuously true,
    mirroring the masking done by envelops."""
    if cfg is None:
        cfg = GridConfig()
    delta = cfg.exclusion_radius
    dom_hi = model.domain.hi

    left_order = adaptive_sign_check(
        lambda t: h.eval_array(t) - model.eval_array(t),
        (delta, 1.0 - delta),
        "positive",
        cfg,
    )

    def left_ret(t: np.ndarray) -> np.ndarray:
        hv = h.eval_array(t)
        ok = (hv >= 0) & (hv <= dom_hi)
        with np.errstate(all="ignore"):
            val = model.eval_array(np.clip(hv, 0.0, dom_hi)) - t
        return np.where(ok, val, np.inf)

    left_return = adaptive_sign_check(left_ret, (delta, 1.0 - delta), "positive", cfg)

    right_order = None
    right_return = None
    hi_r = min(h.x_h, dom_hi)
    if np.isfinite(hi_r) and hi_r > 1.0 + 2 * delta:
        right_order = adaptive_sign_check(
            lambda t: model.eval_array(t) - h.eval_array(t),
            (1.0 + delta, hi_r - delta),
            "positive",
            cfg,
        )

        def right_ret(t: np.ndarray) -> np.ndarray:
            hv = h.eval_array(t)
            ok = (hv >= 0) & (hv <= dom_hi)
            with np.errstate(all="ignore"):
                val = t - model.eval_array(np.clip(hv, 0.0, dom_hi))
            return np.where(ok, val, np.inf)

        right_return = adaptive_sign_check(
            right_ret, (1.0 + delta, hi_r - delta), "positive", cfg
        )

    passed = (
        left_order.ok
        and left_return.ok
        and (right_order is None or right_order.ok)
        and (right_return is None or right_return.ok)
    )
    return SandwichReport(
        passed=passed,
        left_order=left_order,
        left_return=left_return,
        right_order=right_order,
        right_return=right_return,
    )


@dataclass(frozen=True)
class FitReport:
    feasible: tuple[tuple[float, float], ...]
    alpha_step: float
    tested: int

    @property
    def empty(self) -> bool:
        return not self.feasible


def fit_mobius(target, cfg: GridConfig | None = None, alpha_cells: int = 1000) -> FitReport:
    """Feasible alpha ranges for which the Moebius envelope works.

    Scans alpha over [0, 1) at resolution 1/alpha_cells, requiring the
    envelope to pass for every map; run boundaries get one midpoint
    refinement.  An empty result is a definite negative at this
    resolution.
    """
    if cfg is None:
        cfg = GridConfig()
    maps = _maps_of(target)
    alphas = np.arange(alpha_cells) / alpha_cells

    def feasible_at(alpha: float) -> bool:
        h = make_mobius(float(alpha))
        for f in maps:
            if not envelops(h, f, cfg).passed:
                return False
        return True

    mask = np.array([feasible_at(a) for a in alphas], dtype=bool)
    runs: list[list[float]] = []
    i = 0
    while i < alpha_cells:
        if mask[i]:
            j = i
            while j + 1 < alpha_cells and mask[j + 1]:
                j += 1
            lo, hi = float(alphas[i]), float(alphas[j])
            if i > 0:
                mid = 0.5 * (alphas[i - 1] + alphas[i])
                if feasible_at(mid):
                    lo = float(mid)
            if j + 1 < alpha_cells:
                mid = 0.5 * (alphas[j] + alphas[j + 1])
                if feasible_at(mid):
                    hi = float(mid)
            runs.append([lo, hi])
            i = j + 1
        else:
            i += 1
    return FitReport(
        feasible=tuple((a, b) for a, b in runs),
        alpha_step=1.0 / alpha_cells,
        tested=alpha_cells,
    )


def _maps_of(target) -> tuple[PopulationModel, ...]:
    if isinstance(target, PopulationModel):
        return (target,)
    maps = getattr(target, "maps", None)
    if maps is None:
        raise ValueError("target must be a model or a periodic system")
    return tuple(maps)
