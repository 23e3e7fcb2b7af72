"""Least-squares extraction of heat coefficients from an exact spectrum, and the
spectrum-only local orientability detector.

The fit model is Z(t) (4 pi t)^(n/2) = sum_j c_j t^(j/2) on a geometric time
grid. Columns are scaled to (t/t_max)^(j/2) and solved by truncated SVD.
Traces are summed and fitted in extended precision: in double precision the
rounding of the samples alone, amplified by the fit, reaches 1e-3 on the
highest coefficients.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction

import mpmath
import numpy as np

from .errors import ConfigError, IllConditionedFit, Inconclusive, InsufficientCutoff, UnsupportedGeometry
from .heat_invariants import AsymptoticSeries
from .isometry import GroupAction, ModelGeometry
from .spectrum import (
    SpectrumData,
    flat_orbifold_spectrum,
    flat_tail_bound,
    heat_trace_partial,
    heat_trace_precise,
    sphere_orbifold_spectrum,
    sphere_tail_bound,
    thread_count,
)

MAX_CONDITION = 1e8
FIT_DPS = 40
FLAT_T_MIN = 5e-5
# sphere spectra are cheap, and the curvature series needs smaller times to
# keep the truncation error of j > j_max out of the fitted odd orders
SPHERE_T_MIN = 1e-6
PRECISE_REL_ERROR = 1e-35


@dataclass(frozen=True)
class FitConfig:
    """Time grid t_i = t_min * ratio^i (i < n_points) and fit options.

    ``t_min`` defaults per geometry (FLAT_T_MIN, SPHERE_T_MIN) via
    :meth:`resolved`. ``j_max`` defaults to n + 4. ``cutoff`` (flat) or ``l_max`` (sphere) default
    to the smallest value whose tail bound at t_min is below ``tail_rel`` of the
    trace.
    """

    t_min: float | None = None
    ratio: float = 1.25
    n_points: int = 18
    j_max: int | None = None
    svd_rtol: float = 1e-10
    cutoff: float | None = None
    l_max: int | None = None
    tail_rel: float = 1e-28
    noise_floor: float = 1e-4
    noise_factor: float = 10.0
    resolution: float = 1e-2

    def __post_init__(self):
        if self.t_min is not None and not self.t_min > 0:
            raise ConfigError("t_min must be positive")
        if not self.ratio > 1:
            raise ConfigError("ratio must exceed 1")
        if self.n_points < 2:
            raise ConfigError("need at least two time points")

    def resolved(self, geometry: ModelGeometry) -> "FitConfig":
        if self.t_min is not None:
            return self
        return replace(self, t_min=FLAT_T_MIN if geometry.is_torus else SPHERE_T_MIN)

    @property
    def times(self) -> np.ndarray:
        if self.t_min is None:
            raise ConfigError("t_min unset; call resolved(geometry) first")
        return self.t_min * self.ratio ** np.arange(self.n_points)

    @property
    def t_max(self) -> float:
        return float(self.times[-1])

    def order(self, n: int) -> int:
        return n + 4 if self.j_max is None else self.j_max

    def validate(self, n: int) -> None:
        j_max = self.order(n)
        if j_max > n + 6:
            raise ConfigError(f"j_max must not exceed n + 6 = {n + 6}")
        if self.n_points < j_max + 5:
            raise ConfigError(f"need at least j_max + 5 = {j_max + 5} samples")
        # first neglected term relative to the leading one, O(1) coefficients assumed
        if self.t_max ** ((j_max + 1) / 2) >= 1e-6:
            raise ConfigError(f"t_max = {self.t_max:.3g} too large for j_max = {j_max}")

    def halved(self) -> "FitConfig":
        if self.t_min is None:
            raise ConfigError("t_min unset; call resolved(geometry) first")
        return replace(self, t_min=self.t_min / 2, cutoff=None, l_max=None)


@dataclass(frozen=True)
class TraceSample:
    t: float
    value: float
    tail_bound: float
    precise: mpmath.mpf | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class FitResult:
    series: AsymptoticSeries
    uncertainties: dict[int, float]  # on c_j, same normalization as series.coefficients
    residual_norm: float
    condition: float
    per_coefficient_condition: dict[int, float]
    samples: tuple[TraceSample, ...] = field(repr=False)

    def absolute(self, j: int) -> float:
        return self.series.absolute(j)

    def absolute_sigma(self, j: int) -> float:
        return self.uncertainties[j] / (4 * math.pi) ** (self.series.n / 2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["exponent", "coefficient", "uncertainty", "provenance"])
        for j in sorted(self.series.coefficients):
            w.writerow([str(self.series.exponent(j)), repr(self.absolute(j)), repr(self.absolute_sigma(j)), "fitted"])
        return buf.getvalue()

    def to_text(self) -> str:
        lines = [f"{'power':>8} {'coefficient':>16} {'uncertainty':>12}"]
        for j in sorted(self.series.coefficients):
            lines.append(f"{str(self.series.exponent(j)):>8} {self.absolute(j):16.9f} {self.absolute_sigma(j):12.3e}")
        lines.append(f"residual norm {self.residual_norm:.3e}, condition {self.condition:.3e}")
        return "\n".join(lines)


def auto_cutoff(geometry: ModelGeometry, group_order: int, config: FitConfig) -> float:
    """Smallest cutoff (on a 5% ladder) with tail_bound(t_min) < tail_rel * trace."""
    t = config.resolved(geometry).t_min
    n = geometry.dimension
    target = config.tail_rel * geometry.cover_volume / group_order * (4 * math.pi * t) ** (-n / 2)
    lam = 4.0 / t
    while flat_tail_bound(geometry, lam, t) >= target:
        lam *= 1.05
    return lam


def auto_l_max(geometry: ModelGeometry, group_order: int, config: FitConfig) -> int:
    t = config.resolved(geometry).t_min
    target = config.tail_rel * geometry.cover_volume / group_order / (4 * math.pi * t)
    L = int(math.sqrt(4.0 / t) * geometry.radius)
    while sphere_tail_bound(L, geometry.radius, t) >= target:
        L += max(1, L // 50)
    return L


def spectrum_for_fit(action: GroupAction, config: FitConfig | None = None) -> SpectrumData:
    g = action.geometry
    config = (config or FitConfig()).resolved(g)
    if g.is_torus:
        lam = config.cutoff if config.cutoff is not None else auto_cutoff(g, action.order, config)
        return flat_orbifold_spectrum(action, lam)
    l_max = config.l_max if config.l_max is not None else auto_l_max(g, action.order, config)
    return sphere_orbifold_spectrum(action, l_max)


def sample_heat_trace(spectrum: SpectrumData, config: FitConfig) -> tuple[TraceSample, ...]:
    config = config.resolved(spectrum.geometry)

    def one(t):
        value, tail = heat_trace_partial(spectrum, t)
        return TraceSample(t, value, tail, heat_trace_precise(spectrum, t))

    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        return tuple(pool.map(one, [float(t) for t in config.times]))


def _solve(ts, ys, j_max: int, rtol: float, rel_error: float):
    """Truncated-SVD fit in FIT_DPS digits. Returns coefficients, standard
    errors, residual norm, condition number and per-coefficient condition."""
    with mpmath.workdps(FIT_DPS):
        tr = max(ts)
        js = range(j_max + 1)
        X = mpmath.matrix([[(t / tr) ** (mpmath.mpf(j) / 2) for j in js] for t in ts])
        y = mpmath.matrix(ys)
        U, S, V = mpmath.svd_r(X, full_matrices=False)
        s = [S[k] for k in range(len(S))]
        keep = [sk > rtol * s[0] for sk in s]
        inv_s = [1 / sk if kp else mpmath.mpf(0) for sk, kp in zip(s, keep)]
        uty = U.T * y
        coef = [mpmath.fsum(V[k, j] * inv_s[k] * uty[k] for k in range(len(s))) for j in js]
        res = [y[i] - mpmath.fsum(X[i, j] * coef[j] for j in js) for i in range(len(ts))]
        res_norm = mpmath.sqrt(mpmath.fsum(r * r for r in res))
        dof = max(len(ts) - sum(keep), 1)
        s2 = res_norm**2 / dof
        # floor for rounding in the samples themselves, propagated through the fit
        floor = rel_error * max(abs(v) for v in ys)
        var = max(s2, floor**2)
        unit = [mpmath.fsum((V[k, j] * inv_s[k]) ** 2 for k in range(len(s))) for j in js]
        scale = [tr ** (-mpmath.mpf(j) / 2) for j in js]
        kept = [sk for sk, kp in zip(s, keep) if kp]
        return (
            np.array([float(c * sc) for c, sc in zip(coef, scale)]),
            np.array([float(mpmath.sqrt(u * var) * sc) for u, sc in zip(unit, scale)]),
            float(res_norm),
            float(s[0] / kept[-1]),
            np.array([float(mpmath.sqrt(u) * s[0]) for u in unit]),
        )


def extract_coefficients(samples, n: int, config: FitConfig | None = None) -> FitResult:
    """Fit c_0..c_{j_max}; the reported uncertainty combines the residual-based
    standard error with the shift seen when one more term is fitted."""
    config = config or FitConfig()
    j_max = config.order(n)
    samples = tuple(s if isinstance(s, TraceSample) else TraceSample(*s) for s in samples)
    if len(samples) < j_max + 5:
        raise ConfigError(f"need at least {j_max + 5} samples, got {len(samples)}")
    if any(s.tail_bound > 1e-10 * abs(s.value) for s in samples):
        raise InsufficientCutoff("spectral tail exceeds 1e-10 of the trace; raise the cutoff")
    precise = all(s.precise is not None for s in samples)
    rel_error = PRECISE_REL_ERROR if precise else float(np.finfo(float).eps)
    with mpmath.workdps(FIT_DPS):
        ts = [mpmath.mpf(s.t) for s in samples]
        four_pi = 4 * mpmath.pi
        ys = [(s.precise if precise else mpmath.mpf(s.value)) * (four_pi * t) ** (mpmath.mpf(n) / 2)
              for s, t in zip(samples, ts)]
    coef, sigma, res, cond, per_cond = _solve(ts, ys, j_max, config.svd_rtol, rel_error)
    if cond > MAX_CONDITION:
        raise IllConditionedFit(f"condition estimate {cond:.3g} exceeds {MAX_CONDITION:.0e}")
    if len(samples) > j_max + 6:
        extra, _, _, _, _ = _solve(ts, ys, j_max + 1, config.svd_rtol, rel_error)
        sigma = np.sqrt(sigma**2 + (extra[: j_max + 1] - coef) ** 2)
    # the coefficients are reported as doubles
    sigma = np.sqrt(sigma**2 + (np.finfo(float).eps * np.abs(coef)) ** 2)
    series = AsymptoticSeries(n, {j: float(c) for j, c in enumerate(coef)}, "fitted", frozenset(range(j_max + 1)))
    return FitResult(
        series,
        {j: float(s) for j, s in enumerate(sigma)},
        res,
        cond,
        {j: float(c) for j, c in enumerate(per_cond)},
        samples,
    )


def fit_spectrum(spectrum: SpectrumData, config: FitConfig | None = None) -> FitResult:
    config = (config or FitConfig()).resolved(spectrum.geometry)
    n = spectrum.geometry.dimension
    config.validate(n)
    return extract_coefficients(sample_heat_trace(spectrum, config), n, config)


def fit_action(action: GroupAction, config: FitConfig | None = None) -> FitResult:
    config = (config or FitConfig()).resolved(action.geometry)
    return fit_spectrum(spectrum_for_fit(action, config), config)


@dataclass(frozen=True)
class SpectralVerdict:
    locally_orientable: bool
    margin: float
    fit: FitResult = field(repr=False)


def detect_local_orientability_spectral(
    spectrum: SpectrumData, n: int | None = None, config: FitConfig | None = None
) -> tuple[bool, float]:
    v = spectral_verdict(spectrum, n, config)
    return v.locally_orientable, v.margin


def spectral_verdict(spectrum: SpectrumData, n: int | None = None, config: FitConfig | None = None) -> SpectralVerdict:
    """Classify from the odd-j coefficients (the powers whose parity differs
    from the smooth expansion).

    A coefficient counts as present when it exceeds tau_j = max(noise_floor,
    noise_factor * sigma_j). When none is present but some tau_j with j <= n
    is above ``resolution`` the fit cannot rule out a stratum term, and
    Inconclusive is raised.
    """
    config = (config or FitConfig()).resolved(spectrum.geometry)
    n = spectrum.geometry.dimension if n is None else n
    if n != spectrum.geometry.dimension:
        raise UnsupportedGeometry("n does not match the spectrum's geometry")
    fit = fit_spectrum(spectrum, config)
    gaps = {}
    for j in fit.series.coefficients:
        if not AsymptoticSeries.is_opposite_parity_index(j):
            continue
        tau = max(config.noise_floor, config.noise_factor * fit.absolute_sigma(j))
        gaps[j] = (abs(fit.absolute(j)) - tau, tau)
    present = [g for g, _ in gaps.values() if g > 0]
    if present:
        return SpectralVerdict(False, max(present), fit)
    blind = [j for j, (_, tau) in gaps.items() if j <= n and tau > config.resolution]
    if blind:
        raise Inconclusive(f"fit too noisy to exclude odd-order terms at j = {blind}", fit=fit)
    margin = min(-g for g, _ in gaps.values()) if gaps else math.inf
    return SpectralVerdict(True, margin, fit)


@dataclass(frozen=True)
class ComparisonRow:
    j: int
    exponent: Fraction
    analytic: float
    fitted: float
    sigma: float
    abs_dev: float
    rel_dev: float
    tolerance: float
    status: str  # PASS | FAIL | UNRESOLVED (fit uncertainty above the tolerance)

    @property
    def passed(self) -> bool:
        return self.status != "FAIL"


@dataclass(frozen=True)
class ComparisonReport:
    rows: tuple[ComparisonRow, ...]

    @property
    def passed(self) -> bool:
        resolved = [r for r in self.rows if r.status != "UNRESOLVED"]
        return bool(resolved) and all(r.passed for r in resolved)

    def row(self, j: int) -> ComparisonRow:
        return next(r for r in self.rows if r.j == j)

    def to_text(self) -> str:
        lines = [f"{'power':>7} {'analytic':>14} {'fitted':>14} {'abs dev':>10} {'rel dev':>10}  result"]
        for r in self.rows:
            lines.append(
                f"{str(r.exponent):>7} {r.analytic:14.9f} {r.fitted:14.9f} {r.abs_dev:10.2e} {r.rel_dev:10.2e}  {r.status}"
            )
        return "\n".join(lines)


def compare_analytic_vs_fitted(
    analytic: AsymptoticSeries, fitted: FitResult, tolerance: float | None = None, flat: bool = True
) -> ComparisonReport:
    """Per-power deviations of the trace coefficients over the powers both
    series cover (restricted to those the analytic side claims).

    A power whose fitted uncertainty exceeds the tolerance cannot be checked
    and is reported as UNRESOLVED rather than PASS or FAIL.
    """
    if analytic.n != fitted.series.n:
        raise ValueError("series dimensions differ")
    tol = tolerance if tolerance is not None else (1e-4 if flat else 1e-3)
    common = sorted(set(analytic.coefficients) & set(fitted.series.coefficients))
    if analytic.claimed:
        common = [j for j in common if j in analytic.claimed]
    rows = []
    for j in common:
        a = analytic.absolute(j)
        f = fitted.absolute(j)
        dev = abs(f - a)
        rel = dev / abs(a) if a != 0 else math.inf if dev > 0 else 0.0
        sigma = fitted.absolute_sigma(j)
        status = "UNRESOLVED" if sigma > tol else "PASS" if dev <= tol else "FAIL"
        rows.append(ComparisonRow(j, analytic.exponent(j), a, f, sigma, dev, rel, tol, status))
    return ComparisonReport(tuple(rows))


def recover_dimension(samples) -> int:
    """n from the log-log slope of the trace at its two smallest times."""
    pts = sorted((s.t, s.value) if isinstance(s, TraceSample) else (s[0], s[1]) for s in samples)
    (t0, z0), (t1, z1) = pts[0], pts[1]
    slope = (math.log(z1) - math.log(z0)) / (math.log(t1) - math.log(t0))
    return int(round(-2 * slope))
