"""Global-stability certification pipeline.

The certificate combines three independent legs: the population-model
axioms for every map and for their composition, a verified enveloping
decreasing involution shared by all maps, and a local multiplier at the
fixed point.  A direct sign oracle on the doubled composition
cross-validates every certified verdict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .envelopes import (
    CommonEnvelopeReport,
    Envelope,
    EnvelopeVerdict,
    FitReport,
    envelops,
    fit_mobius,
    make_mobius,
    make_piecewise_bh,
    make_reciprocal,
    structural_check,
)
from .models import (
    AxiomReport,
    AxiomViolation,
    PopulationModel,
    check_axioms_callable,
    verify_population_axioms,
)
from .numerics import GridConfig, SignReport, adaptive_sign_check, scan_roots
from .periodic import (
    PeriodicSystem,
    compose_array,
    composition_derivative,
    find_fixed_points,
    make_system,
)

__all__ = [
    "SchwarzianReport",
    "schwarzian",
    "schwarzian_test",
    "LocalStability",
    "local_stability",
    "OracleReport",
    "two_cycle_oracle",
    "CandidateRecord",
    "StabilityCertificate",
    "default_candidates",
    "certify_global_stability",
    "DiagnosisReport",
    "diagnose_failure",
    "ConditionRow",
    "ConditionsReport",
    "closed_form_conditions",
]

# Exclusion radii tried in turn when the only failures are undecided
# cells hugging a fixed point (tangency at x = 1 shrinks margins below
# any absolute tolerance).
_DELTA_LADDER = (1e-3, 1e-2)
_NEAR = 0.05  # how close to 0 or 1 an undecided cell must sit to retry


# ---------------------------------------------------------------------------
# Schwarzian derivative


@dataclass(frozen=True)
class SchwarzianReport:
    label: str
    passed: bool
    slope_at_one: float
    critical_points: tuple[float, ...]
    max_value: float
    reason: str | None


def schwarzian(model: PopulationModel, x: float) -> float:
    """f'''/f' - 1.5 (f''/f')^2 at a point, from closed-form derivatives."""
    if not model.smooth:
        raise ValueError(f"Schwarzian unavailable: {model.label} is not C^3")
    d1 = model.deriv(x, 1)
    if d1 == 0.0:
        raise ValueError(f"Schwarzian undefined at critical point x={x:g}")
    d2 = model.deriv(x, 2)
    d3 = model.deriv(x, 3)
    return d3 / d1 - 1.5 * (d2 / d1) ** 2


def _schwarzian_array(model: PopulationModel, x: np.ndarray) -> np.ndarray:
    d1 = model.deriv_array(x, 1)
    d2 = model.deriv_array(x, 2)
    d3 = model.deriv_array(x, 3)
    with np.errstate(all="ignore"):
        return d3 / d1 - 1.5 * (d2 / d1) ** 2


def schwarzian_test(
    model: PopulationModel, cfg: GridConfig | None = None
) -> SchwarzianReport:
    """Negative-Schwarzian stability test for one smooth map.

    Requires at most one interior critical point, |f'(1)| <= 1, and a
    negative Schwarzian on a grid that skips 1e-3 neighborhoods of the
    critical points.
    """
    if not model.smooth:
        raise ValueError(f"Schwarzian unavailable: {model.label} is not C^3")
    if cfg is None:
        cfg = GridConfig()
    hi = model.domain.hi
    eps = cfg.exclusion_radius
    crit = tuple(
        float(c)
        for c in scan_roots(lambda t: model.deriv_array(t, 1), (eps, hi - eps), cfg.seed_cells)
    )
    slope1 = model.deriv(1.0, 1)

    reason = None
    if len(crit) > 1:
        reason = f"{len(crit)} interior critical points, expected at most one"
    elif abs(slope1) > 1.0 + 1e-12:
        reason = f"|f'(1)| = {abs(slope1):.6g} exceeds 1"

    xs = np.linspace(eps, hi - eps, cfg.seed_cells + 1)
    for c in crit:
        xs = xs[np.abs(xs - c) > 1e-3]
    vals = _schwarzian_array(model, xs)
    finite = np.isfinite(vals) | np.isneginf(vals)
    max_val = float(np.max(vals[finite])) if finite.any() else float("nan")
    if reason is None and not (max_val < 0):
        reason = f"Schwarzian reaches {max_val:.6g} >= 0"

    return SchwarzianReport(
        label=model.label,
        passed=reason is None,
        slope_at_one=slope1,
        critical_points=crit,
        max_value=max_val,
        reason=reason,
    )


# ---------------------------------------------------------------------------
# Local multiplier


@dataclass(frozen=True)
class LocalStability:
    multiplier: float
    verdict: str  # "stable" | "neutral" | "unstable"


def local_stability(system: PeriodicSystem) -> LocalStability:
    """Multiplier of the period map at x = 1 by the chain rule."""
    m = composition_derivative(system, 1.0)
    a = abs(m)
    if a < 1.0 - 1e-12:
        verdict = "stable"
    elif a <= 1.0 + 1e-12:
        verdict = "neutral"
    else:
        verdict = "unstable"
    return LocalStability(multiplier=m, verdict=verdict)


# ---------------------------------------------------------------------------
# Doubled-composition sign oracle


@dataclass(frozen=True)
class OracleReport:
    """Direct check that the doubled period map sits strictly between
    the diagonal's sides, which rules out period-two behavior of the
    composition and pins every positive orbit toward 1."""

    verdict: str  # "passes" | "fails" | "inconclusive"
    left: SignReport
    right: SignReport | None
    two_cycles: tuple[tuple[float, float], ...]
    extra_fixed_points: tuple[float, ...]
    delta: float

    # Structure closer to the fixed point than delta is below the
    # check's resolution (the sign legs skip that neighborhood, and a
    # tangency there drowns the pair scan in roundoff), so it is
    # deliberately not reported.


def two_cycle_oracle(target, cfg: GridConfig | None = None) -> OracleReport:
    if cfg is None:
        cfg = GridConfig()
    system = target if isinstance(target, PeriodicSystem) else make_system([target])
    hi = system.working_interval.hi
    delta = cfg.exclusion_radius
    p = system.period

    def g2(t: np.ndarray) -> np.ndarray:
        return compose_array(system, t, 2 * p) - t

    left = adaptive_sign_check(g2, (delta, 1.0 - delta), "positive", cfg)
    right = None
    if hi > 1.0 + 2 * delta:
        right = adaptive_sign_check(g2, (1.0 + delta, hi), "negative", cfg)

    roots = [float(r) for r in scan_roots(g2, (1e-9, hi), cfg.seed_cells)]
    fps = [float(r) for r in find_fixed_points(system, cfg)]
    pairs: list[tuple[float, float]] = []
    for x in roots:
        if any(abs(x - f) <= 1e-7 * max(1.0, abs(f)) for f in fps):
            continue
        y = float(compose_array(system, np.asarray([x]))[0])
        if abs(x - 1.0) <= delta and abs(y - 1.0) <= delta:
            # both iterates sit inside the excluded neighborhood; at a
            # neutral fixed point the scan only brackets rounding noise
            # of the tangency there
            continue
        lo_pt, hi_pt = sorted((x, y))
        if not any(abs(lo_pt - a) <= 1e-7 for a, _ in pairs):
            pairs.append((lo_pt, hi_pt))
    extra = tuple(
        f for f in fps if f > 1e-8 and abs(f - 1.0) > 1e-7
    )

    has_violation = (
        left.status == "violation"
        or (right is not None and right.status == "violation")
        or bool(pairs)
        or bool(extra)
    )
    if has_violation:
        verdict = "fails"
    elif left.ok and (right is None or right.ok):
        verdict = "passes"
    else:
        verdict = "inconclusive"
    return OracleReport(
        verdict=verdict,
        left=left,
        right=right,
        two_cycles=tuple(pairs),
        extra_fixed_points=extra,
        delta=delta,
    )


# ---------------------------------------------------------------------------
# Certification


@dataclass(frozen=True)
class CandidateRecord:
    envelope_label: str
    structural_passed: bool
    involution_residual: float
    unit_residual: float
    decreasing: bool
    verdicts: tuple[EnvelopeVerdict, ...]
    passed: bool
    delta_used: float
    failure: str | None  # "structural" | "violation" | "unresolved" | None


@dataclass(frozen=True)
class StabilityCertificate:
    status: str
    system_label: str
    period: int
    working_interval: tuple[float, float]
    multiplier: float | None
    multiplier_verdict: str | None
    envelope: str | None
    envelope_kind: str | None
    envelope_param: float | None
    map_axioms: tuple[AxiomReport, ...]
    composition_passed: bool
    composition_violations: tuple[AxiomViolation, ...]
    candidates: tuple[CandidateRecord, ...]
    fit_intervals: tuple[tuple[float, float], ...] | None
    oracle: OracleReport | None
    oracle_agrees: bool | None
    witnesses: tuple[str, ...]
    tolerances: dict
    notes: tuple[str, ...]

    @property
    def certified(self) -> bool:
        return self.status == "CertifiedGlobal"


def default_candidates(system: PeriodicSystem) -> tuple[Envelope, ...]:
    """Envelope candidates suggested by the families present."""
    out: list[Envelope] = []

    def add(env: Envelope) -> None:
        if all(env.label != e.label for e in out):
            out.append(env)

    fams = [f.family for f in system.maps]
    if all(f == "beverton-holt" for f in fams):
        add(make_reciprocal())
        for f in system.maps:
            c = f.params["c"]
            if c > 2.0:
                add(make_piecewise_bh(c))
    if "quadratic" in fams:
        add(make_mobius(0.75))
    if "beverton-holt-harvest" in fams:
        add(make_mobius(8.0 / 11.0))
    add(make_mobius(0.5))
    add(make_reciprocal())
    return tuple(out)


def _near_fixed_points_only(
    intervals: Sequence[tuple[float, float]], radius: float = _NEAR
) -> bool:
    if not intervals:
        return False
    for a, b in intervals:
        near_one = 1.0 - radius <= a and b <= 1.0 + radius
        near_zero = b <= radius
        if not (near_one or near_zero):
            return False
    return True


def _try_candidate(
    h: Envelope, system: PeriodicSystem, cfg: GridConfig
) -> CandidateRecord:
    struct = structural_check(h, cfg)
    if not struct.passed:
        return CandidateRecord(
            envelope_label=h.label,
            structural_passed=False,
            involution_residual=struct.involution.max_residual,
            unit_residual=struct.unit_residual,
            decreasing=struct.decreasing.passed,
            verdicts=(),
            passed=False,
            delta_used=cfg.exclusion_radius,
            failure="structural",
        )

    deltas = [cfg.exclusion_radius] + [d for d in _DELTA_LADDER if d > cfg.exclusion_radius]
    verdicts: tuple[EnvelopeVerdict, ...] = ()
    delta_used = cfg.exclusion_radius
    for k, delta in enumerate(deltas):
        cfg_d = replace(cfg, exclusion_radius=delta)
        verdicts = tuple(envelops(h, f, cfg_d) for f in system.maps)
        delta_used = delta
        if all(v.passed for v in verdicts):
            return CandidateRecord(
                envelope_label=h.label,
                structural_passed=True,
                involution_residual=struct.involution.max_residual,
                unit_residual=struct.unit_residual,
                decreasing=True,
                verdicts=verdicts,
                passed=True,
                delta_used=delta,
                failure=None,
            )
        if any(v.has_violation for v in verdicts):
            failure = "violation"
            break
        pending = [iv for v in verdicts for iv in v.unresolved_intervals]
        if k + 1 < len(deltas) and _near_fixed_points_only(pending):
            continue
        failure = "unresolved"
        break
    else:
        failure = "unresolved"
    return CandidateRecord(
        envelope_label=h.label,
        structural_passed=True,
        involution_residual=struct.involution.max_residual,
        unit_residual=struct.unit_residual,
        decreasing=True,
        verdicts=verdicts,
        passed=False,
        delta_used=delta_used,
        failure=failure,
    )


def _composition_axioms(
    system: PeriodicSystem, cfg: GridConfig
) -> tuple[list[AxiomViolation], float]:
    """Axiom check of Phi_p on the working interval, with the same
    tangency retry as the envelope leg."""
    hi = system.working_interval.hi
    fn = lambda t: compose_array(system, t)
    deltas = [cfg.exclusion_radius] + [d for d in _DELTA_LADDER if d > cfg.exclusion_radius]
    for k, delta in enumerate(deltas):
        viol, _ = check_axioms_callable(fn, hi, replace(cfg, exclusion_radius=delta), "composition")
        definite = [v for v in viol if v.kind == "violation"]
        pending = [
            iv
            for v in viol
            if v.kind == "unresolved"
            for iv in [(v.x - 1e-12, v.x + 1e-12)]
        ]
        if definite or not viol:
            return viol, delta
        if k + 1 < len(deltas) and _near_fixed_points_only(pending):
            continue
        return viol, delta
    return viol, delta


def certify_global_stability(
    system: PeriodicSystem,
    candidates: Sequence[Envelope] | None = None,
    cfg: GridConfig | None = None,
) -> StabilityCertificate:
    """Full certification of global asymptotic stability of x = 1."""
    if cfg is None:
        cfg = GridConfig()
    notes: list[str] = []
    witnesses: list[str] = []
    W = system.working_interval

    map_reports = tuple(verify_population_axioms(f, cfg) for f in system.maps)
    for r in map_reports:
        for v in r.violations:
            if v.kind == "violation":
                witnesses.append(f"{r.label}: {v.detail}")
    non_c1 = [f.label for f in system.maps if not f.is_c1]
    for lbl in non_c1:
        witnesses.append(f"{lbl}: not C^1 (breakpoints inside the domain)")

    comp_viol, comp_delta = _composition_axioms(system, cfg)
    comp_definite = [v for v in comp_viol if v.kind == "violation"]
    for v in comp_definite:
        witnesses.append(f"composition: {v.detail}")

    multiplier = None
    multiplier_verdict = None
    try:
        loc = local_stability(system)
        multiplier = loc.multiplier
        multiplier_verdict = loc.verdict
    except ValueError as exc:
        notes.append(f"multiplier undefined: {exc}")

    axioms_definite = (
        any(r.definite_violation for r in map_reports)
        or bool(non_c1)
        or bool(comp_definite)
    )
    axioms_undecided = any(
        (not r.passed and not r.definite_violation) for r in map_reports
    ) or (bool(comp_viol) and not comp_definite)

    tolerances = {
        "abs_tol": cfg.abs_tol,
        "rel_tol": cfg.rel_tol,
        "seed_cells": cfg.seed_cells,
        "max_refinement_depth": cfg.max_refinement_depth,
        "exclusion_radius": cfg.exclusion_radius,
        "exclusion_radius_effective": comp_delta,
    }

    def build(status, envelope=None, cand_records=(), fit=None, oracle=None, agrees=None):
        return StabilityCertificate(
            status=status,
            system_label=system.label,
            period=system.period,
            working_interval=(W.lo, W.hi),
            multiplier=multiplier,
            multiplier_verdict=multiplier_verdict,
            envelope=envelope.label if envelope else None,
            envelope_kind=envelope.kind if envelope else None,
            envelope_param=envelope.param if envelope else None,
            map_axioms=map_reports,
            composition_passed=not comp_viol,
            composition_violations=tuple(comp_viol),
            candidates=tuple(cand_records),
            fit_intervals=fit,
            oracle=oracle,
            oracle_agrees=agrees,
            witnesses=tuple(witnesses),
            tolerances=tolerances,
            notes=tuple(notes),
        )

    if axioms_definite:
        notes.append("envelope search skipped: the maps or their composition "
                      "fail the population-model axioms outright")
        return build("NotPopulationModel")

    cand_list = tuple(candidates) if candidates is not None else default_candidates(system)
    records: list[CandidateRecord] = []
    chosen: Envelope | None = None
    chosen_rec: CandidateRecord | None = None
    for h in cand_list:
        rec = _try_candidate(h, system, cfg)
        records.append(rec)
        if rec.passed:
            chosen = h
            chosen_rec = rec
            break

    fit_intervals = None
    if chosen is None:
        fit = fit_mobius(system, cfg)
        fit_intervals = fit.feasible
        if fit.feasible:
            widest = max(fit.feasible, key=lambda ab: ab[1] - ab[0])
            h = make_mobius(0.5 * (widest[0] + widest[1]))
            notes.append(f"candidate list exhausted; scan suggested {h.label}")
            rec = _try_candidate(h, system, cfg)
            records.append(rec)
            if rec.passed:
                chosen = h
                chosen_rec = rec

    if chosen is not None and chosen_rec is not None:
        tolerances["exclusion_radius_effective"] = max(
            comp_delta, chosen_rec.delta_used
        )
        if axioms_undecided:
            notes.append("axiom checks left undecided cells; envelope found "
                          "but certification withheld")
            status = "LocalOnly" if (
                multiplier is not None and abs(multiplier) < 1.0 - 1e-12
            ) else "Inconclusive"
            return build(status, cand_records=records, fit=fit_intervals)
        if multiplier is None or abs(multiplier) > 1.0 + 1e-12:
            notes.append("envelope verified but the multiplier gate failed; "
                          "results disagree, reporting Inconclusive")
            return build("Inconclusive", cand_records=records, fit=fit_intervals)
        if multiplier_verdict == "neutral":
            notes.append("multiplier has modulus 1; enveloping still pins "
                          "every positive orbit to the fixed point")
        oracle = two_cycle_oracle(
            system, replace(cfg, exclusion_radius=chosen_rec.delta_used)
        )
        agrees = True if oracle.verdict == "passes" else (
            None if oracle.verdict == "inconclusive" else False
        )
        if oracle.verdict == "fails":
            notes.append("independent sign oracle contradicts the envelope "
                          "proof; reporting Inconclusive")
            for a, b in oracle.two_cycles:
                witnesses.append(f"oracle two-cycle ({a:.9g}, {b:.9g})")
            return build("Inconclusive", cand_records=records, fit=fit_intervals,
                         oracle=oracle, agrees=False)
        if oracle.verdict == "inconclusive":
            notes.append("sign oracle left undecided cells; envelope proof stands")
        return build("CertifiedGlobal", envelope=chosen, cand_records=records,
                     fit=fit_intervals, oracle=oracle, agrees=agrees)

    all_definite = bool(records) and all(
        rec.failure in ("structural", "violation") for rec in records
    )
    if all_definite and fit_intervals == () and not axioms_undecided:
        notes.append("every candidate fails with a concrete witness and no "
                      "feasible scan parameter exists")
        return build("EnvelopeNotFound", cand_records=records, fit=fit_intervals)
    if multiplier is not None and abs(multiplier) < 1.0 - 1e-12:
        notes.append("local contraction holds at the fixed point but no "
                      "envelope could be verified")
        return build("LocalOnly", cand_records=records, fit=fit_intervals)
    return build("Inconclusive", cand_records=records, fit=fit_intervals)


# ---------------------------------------------------------------------------
# Failure diagnosis


@dataclass(frozen=True)
class DiagnosisReport:
    applicable: bool
    fixed_points: tuple[float, ...]
    extra_fixed_points: tuple[float, ...]
    composition_violations: tuple[AxiomViolation, ...]
    windows: tuple[tuple[float, float], ...]
    message: str


def diagnose_failure(
    system: PeriodicSystem, cfg: GridConfig | None = None
) -> DiagnosisReport:
    """Explain why no common envelope can exist for a failing system.

    For u past 1, any shared envelope must send u below every map value
    at u, yet above every preimage of u under every map's rising branch;
    windows where those bands cross are reported, together with the
    composition's fixed-point structure.
    """
    if cfg is None:
        cfg = GridConfig()
    W = system.working_interval
    viol, _ = check_axioms_callable(
        lambda t: compose_array(system, t), W.hi, cfg, "composition"
    )
    definite = tuple(v for v in viol if v.kind == "violation")
    fps = tuple(float(r) for r in find_fixed_points(system, cfg))
    extra = tuple(f for f in fps if f > 1e-8 and abs(f - 1.0) > 1e-7)

    if not definite and not extra:
        return DiagnosisReport(
            applicable=False,
            fixed_points=fps,
            extra_fixed_points=(),
            composition_violations=tuple(viol),
            windows=(),
            message="the composition satisfies the population-model axioms; "
                    "nothing to diagnose",
        )

    # Bands: lower(u) = largest pre-1 point some map lifts to u or above;
    # upper(u) = smallest map value at u.  lower >= upper leaves no room
    # for h(u).
    ys = np.linspace(1e-6, 1.0, 20001)
    suffix = []
    for f in system.maps:
        vals = f.eval_array(ys)
        suffix.append(np.maximum.accumulate(vals[::-1])[::-1])
    u_hi = min(W.hi, min(f.domain.hi for f in system.maps))
    us = np.linspace(1.0 + 1e-6, u_hi, 20001)
    lower = np.full_like(us, -np.inf)
    for sfx in suffix:
        # sfx is nonincreasing; rightmost index with sfx >= u
        idx = np.searchsorted(-sfx, -us, side="right") - 1
        got = np.where(idx >= 0, ys[np.clip(idx, 0, len(ys) - 1)], -np.inf)
        lower = np.maximum(lower, got)
    upper = np.full_like(us, np.inf)
    for f in system.maps:
        upper = np.minimum(upper, f.eval_array(us))
    crossed = lower >= upper
    windows: list[tuple[float, float]] = []
    i = 0
    n = len(us)
    while i < n:
        if crossed[i]:
            j = i
            while j + 1 < n and crossed[j + 1]:
                j += 1
            windows.append((float(us[i]), float(us[j])))
            i = j + 1
        else:
            i += 1

    parts = []
    if extra:
        pts = ", ".join(f"{x:.6f}" for x in extra)
        parts.append(
            f"the composition has extra positive fixed points ({pts}) "
            "besides 1, so it cannot converge to 1 from everywhere"
        )
    if definite:
        v = definite[0]
        parts.append(f"composition axiom failure: {v.detail}")
    if windows:
        w = "; ".join(f"({a:.6f}, {b:.6f})" for a, b in windows)
        parts.append(
            "no decreasing involution can stay above every rising branch "
            f"and below every map value on u in {w}"
        )
    return DiagnosisReport(
        applicable=True,
        fixed_points=fps,
        extra_fixed_points=extra,
        composition_violations=definite,
        windows=tuple(windows),
        message="; ".join(parts),
    )


# ---------------------------------------------------------------------------
# Closed-form parameter regions


@dataclass(frozen=True)
class ConditionRow:
    label: str
    family: str
    description: str
    satisfied: bool | None
    value: float | None


@dataclass(frozen=True)
class ConditionsReport:
    rows: tuple[ConditionRow, ...]
    multiplier: float | None
    product_ok: bool | None
    aggregate: bool | None


def closed_form_conditions(system: PeriodicSystem) -> ConditionsReport:
    """Analytic parameter regions where each family admits its standard
    envelope, plus the product multiplier condition."""
    fams = {f.family for f in system.maps}
    mixed_bh = "beverton-holt" in fams and len(fams) > 1
    rows: list[ConditionRow] = []
    for f in system.maps:
        p = f.params
        if f.family == "ricker":
            r = p["r"]
            rows.append(ConditionRow(f.label, f.family, "0 < r <= 2", r <= 2.0, r))
        elif f.family == "beverton-holt":
            c = p["c"]
            if mixed_bh:
                rows.append(ConditionRow(
                    f.label, f.family,
                    "0 < c <= 1 (shared envelope with other families)",
                    c <= 1.0, c,
                ))
            else:
                rows.append(ConditionRow(f.label, f.family, "0 < c <= 2", c <= 2.0, c))
        elif f.family == "quadratic":
            mu = p["mu"]
            rows.append(ConditionRow(f.label, f.family, "0 < mu <= 2", mu <= 2.0, mu))
        elif f.family == "exponential-rational":
            a, b = p["a"], p["b"]
            val = a * (b - 2.0) * math.exp(b)
            # the growth-rate inequality alone is not sufficient once
            # b > 2 (seen numerically near b = 2.2), so the region keeps
            # the family's own exponent bound as well
            rows.append(ConditionRow(
                f.label, f.family, "a (b - 2) e^b <= 2 and 0 < b <= 2",
                val <= 2.0 and b <= 2.0, val,
            ))
        elif f.family == "beverton-holt-harvest":
            r, c = p["r"], p["c"]
            bound = (1.0 + r) / r
            rows.append(ConditionRow(
                f.label, f.family, "0 < c < (1 + r)/r", 0.0 < c < bound, c,
            ))
        else:
            rows.append(ConditionRow(
                f.label, f.family, "no closed form available", None, None,
            ))

    multiplier = None
    product_ok = None
    try:
        loc = local_stability(system)
        multiplier = loc.multiplier
        product_ok = abs(multiplier) <= 1.0 + 1e-12
    except ValueError:
        pass

    flags = [r.satisfied for r in rows]
    if any(s is None for s in flags) or product_ok is None:
        aggregate = None
    else:
        aggregate = all(flags) and product_ok
    return ConditionsReport(
        rows=tuple(rows),
        multiplier=multiplier,
        product_ok=product_ok,
        aggregate=aggregate,
    )
