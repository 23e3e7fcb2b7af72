"""The acceptance matrix: nine end-to-end checks over the catalog.

Each ``criterion_*`` function returns a :class:`CriterionResult`; both the
``verify-all`` command and the acceptance tests call them.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .catalog import get_preset, list_presets
from .errors import Inconclusive
from .heat_fit import FitConfig, fit_action, recover_dimension, spectral_verdict, spectrum_for_fit
from .isometry import Orientation, linear_fixed_dim, manifold_fixed_dim, normal_decomposition, orientation
from .oracles import grid_stratification, neumann_cylinder_spectrum, open_in_fixed_set
from .spectrum import flat_orbifold_spectrum, sphere_orbifold_spectrum
from .stratification import enumerate_strata, is_locally_orientable, locally_orientable_by_isotropy, primary_op_strata

REQUIRED_PRESETS = (
    "flat_torus_2d", "pillow", "orb_244", "mirror_torus", "klein_bottle",
    "T3_antipodal", "RP2", "mirror_sphere", "sphere_dihedral",
)


@dataclass(frozen=True)
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] criterion {self.number}: {self.title} -- {self.detail} ({self.seconds:.2f} s)"


def _timed(number: int, title: str, body: Callable[[], tuple[bool, str]]) -> CriterionResult:
    start = time.perf_counter()
    try:
        ok, detail = body()
    except Exception as exc:  # a crash is a failed criterion, reported with its cause
        ok, detail = False, f"raised {type(exc).__name__}: {exc}"
    return CriterionResult(number, title, ok, detail, time.perf_counter() - start)


def _fit(name: str, config: FitConfig | None = None):
    return fit_action(get_preset(name).action, config or FitConfig())


def criterion_1() -> CriterionResult:
    """Pillow t^0 term 1/2 within 1e-4 in under 10 s; integral spectrum at cutoff 2000."""

    def body():
        start = time.perf_counter()
        fit = _fit("pillow")
        value = fit.series.absolute_at(0)
        elapsed = time.perf_counter() - start
        spec = flat_orbifold_spectrum(get_preset("pillow").action, 2000.0)
        ok = abs(value - 0.5) <= 1e-4 and elapsed < 10 and spec.max_integrality_error < 1e-9
        return ok, (f"fitted t^0 = {value:.10f} (target 0.5 +- 1e-4), fit {elapsed:.2f} s, "
                    f"max integrality error at cutoff 2000 = {spec.max_integrality_error:.1e}")

    return _timed(1, "pillow cone-point coefficient", body)


def criterion_2() -> CriterionResult:
    def body():
        start = time.perf_counter()
        value = _fit("orb_244").series.absolute_at(0)
        elapsed = time.perf_counter() - start
        target = 2 * (5 / 16) + 1 / 8
        return abs(value - target) <= 1e-3 and elapsed < 10, (
            f"fitted t^0 = {value:.10f} (target {target} +- 1e-3), {elapsed:.2f} s")

    return _timed(2, "order-4 cone points of orb_244", body)


def criterion_3() -> CriterionResult:
    def body():
        fit = _fit("mirror_torus")
        # coefficient of (4 pi t)^(-1/2)
        value = fit.series.absolute_at(Fraction(-1, 2)) * math.sqrt(4 * math.pi)
        spec = flat_orbifold_spectrum(get_preset("mirror_torus").action, 400.0)
        mine = spec.as_multiset()
        oracle = neumann_cylinder_spectrum(400.0)
        same = mine == oracle and spec.norm_denominator == 1
        return abs(value - 0.5) <= 1e-3 and same, (
            f"(4 pi t)^(-1/2) coefficient = {value:.10f} (target L/4 = 0.5 +- 1e-3); "
            f"spectrum up to 400 {'equals' if same else 'DIFFERS from'} the Neumann cylinder "
            f"({sum(mine.values())} eigenvalues with multiplicity)")

    return _timed(3, "mirror boundary term and Neumann spectrum", body)


def detect_all(names=None) -> list[tuple[str, bool | None, bool, float | None]]:
    """(name, spectral verdict or None when inconclusive, group verdict, margin)."""
    out = []
    for p in list_presets() if names is None else [get_preset(n) for n in names]:
        action = p.action
        truth, _ = is_locally_orientable(action)
        try:
            v = spectral_verdict(spectrum_for_fit(action))
            out.append((p.name, v.locally_orientable, truth, v.margin))
        except Inconclusive:
            out.append((p.name, None, truth, None))
    return out


def criterion_4() -> CriterionResult:
    def body():
        start = time.perf_counter()
        rows = detect_all()
        elapsed = time.perf_counter() - start
        names = {r[0] for r in rows}
        missing = [n for n in REQUIRED_PRESETS if n not in names]
        inconclusive = [r[0] for r in rows if r[1] is None]
        disagree = [r[0] for r in rows if r[1] is not None and r[1] != r[2]]
        by = {r[0]: r for r in rows}
        klein = by.get("klein_bottle", (None, None))[1] is True
        t3 = by.get("T3_antipodal", (None, None))[1] is False
        ok = len(rows) >= 9 and not missing and not inconclusive and not disagree and klein and t3 and elapsed < 60
        return ok, (f"{len(rows)} presets, {len(rows) - len(disagree) - len(inconclusive)} AGREE, "
                    f"{len(disagree)} DISAGREE {disagree}, {len(inconclusive)} inconclusive {inconclusive}, "
                    f"{elapsed:.1f} s")

    return _timed(4, "spectral detector agrees with group-theoretic orientability", body)


def criterion_5() -> CriterionResult:
    def body():
        bad = []
        flat = [p for p in list_presets() if p.kind == "flat"]
        for p in flat:
            fit = _fit(p.name)
            a = p.action
            vol = a.geometry.cover_volume / a.order
            c0 = fit.series.coefficients[0]
            n = recover_dimension(fit.samples)
            if abs(c0 - vol) > 1e-3 * vol or n != a.geometry.dimension:
                bad.append(f"{p.name} (c0={c0:.6g}, vol={vol:.6g}, n={n})")
        return not bad, f"{len(flat)} flat presets checked; failures: {bad or 'none'}"

    return _timed(5, "Weyl volume and dimension from the fit", body)


def criterion_6() -> CriterionResult:
    def body():
        checked = 0
        bad = []
        for p in list_presets():
            geo = p.action.geometry
            for g in p.action.elements:
                total = g.size
                fdim = linear_fixed_dim(g)
                if fdim == total:
                    continue
                checked += 1
                reversing = orientation(g) is Orientation.REVERSING
                nd = normal_decomposition(g, geo)
                lin = ((total - fdim) % 2 == 1) == reversing and nd.minus_one_dim % 2 == (total - fdim) % 2
                # same statement on the model manifold wherever g has fixed points
                mdim = manifold_fixed_dim(g, geo)
                man = mdim is None or ((geo.dimension - mdim) % 2 == 1) == reversing
                if not (lin and man):
                    bad.append(f"{p.name}:{g!r}")
        return not bad, f"{checked} elements with proper fixed subspace, {len(bad)} mismatches"

    return _timed(6, "codimension parity matches orientation", body)


def criterion_7() -> CriterionResult:
    def body():
        strata_checked = 0
        elem_checked = 0
        bad = []
        lemma = 0
        for p in list_presets():
            action = p.action
            report = enumerate_strata(action)
            for s in report.singular_strata:
                strata_checked += 1
                iso = frozenset(s.isotropy_elements)
                for i in s.isotropy_elements:
                    if i == 0:
                        continue
                    g = action.elements[i]
                    by_dim = i in s.iso_max_elements
                    by_open = open_in_fixed_set(s.representative, g, iso, action)
                    elem_checked += 1
                    if by_dim != by_open:
                        bad.append(f"{p.name} stratum dim {s.dimension} element {i}")
            if report.singular_strata:
                lemma += 1
                if locally_orientable_by_isotropy(action) != (not primary_op_strata(report)):
                    bad.append(f"{p.name}: orientability lemma fails")
        return not bad, (f"{elem_checked} isotropy elements on {strata_checked} strata, "
                         f"lemma on {lemma} singular presets; failures: {bad or 'none'}")

    return _timed(7, "iso^max dimension criterion and primary OP-strata lemma", body)


def criterion_8() -> CriterionResult:
    def body():
        worst = 0.0
        count = 0
        for p in list_presets():
            if p.kind == "flat":
                spec = flat_orbifold_spectrum(p.action, 2000.0)
            else:
                spec = sphere_orbifold_spectrum(p.action, 60)
            worst = max(worst, spec.max_integrality_error)
            count += 1
        rp2 = sphere_orbifold_spectrum(get_preset("RP2").action, 60).as_multiset()
        closed = {l: 2 * l + 1 for l in range(0, 61, 2)}
        return worst < 1e-9 and rp2 == closed, (
            f"{count} presets, max deviation from an integer {worst:.1e}; "
            f"RP2 {'matches' if rp2 == closed else 'DIFFERS from'} 2l+1 on even l, 0 on odd l")

    return _timed(8, "projector traces are integers", body)


def criterion_9() -> CriterionResult:
    def body():
        bad = []
        flat = [p for p in list_presets() if p.kind == "flat"]
        for p in flat:
            mine = enumerate_strata(p.action).summary()
            grid = grid_stratification(p.action)
            if mine != grid:
                bad.append(f"{p.name}: {mine} vs grid {grid}")
        return not bad, f"{len(flat)} flat presets; mismatches: {bad or 'none'}"

    return _timed(9, "strata agree with rational-grid isotropy", body)


CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9)


def run_all() -> list[CriterionResult]:
    return [c() for c in CRITERIA]

