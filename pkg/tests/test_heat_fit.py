import csv
import io
import math
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import cached_fit, cached_spectrum
from orbispec.catalog import get_preset, list_presets
from orbispec.errors import ConfigError, IllConditionedFit, Inconclusive, InsufficientCutoff, UnsupportedGeometry
from orbispec.heat_fit import (
    FitConfig,
    TraceSample,
    compare_analytic_vs_fitted,
    extract_coefficients,
    fit_action,
    fit_spectrum,
    recover_dimension,
    sample_heat_trace,
    spectral_verdict,
    spectrum_for_fit,
)
from orbispec.heat_invariants import asymptotic_series
from orbispec.stratification import is_locally_orientable

ALL = [p.name for p in list_presets()]
ORIENTABLE = [p.name for p in list_presets() if p.locally_orientable]
STABLE = [p.name for p in list_presets() if p.dimension < 3]


# --- known coefficients ------------------------------------------------------------


def test_trivial_torus_recovers_the_area_only():
    fit = cached_fit("flat_torus_2d")
    c = fit.series.coefficients
    assert c[0] == pytest.approx(1.0, abs=1e-6)
    assert all(abs(c[j]) <= 1e-4 for j in c if j > 0)


def test_pillow_cone_points():
    fit = cached_fit("pillow")
    assert fit.series.coefficients[0] == pytest.approx(0.5, abs=1e-6)
    assert fit.series.absolute_at(0) == pytest.approx(0.5, abs=1e-4)
    assert abs(fit.series.coefficients[1]) <= 1e-4


def test_mirror_torus_boundary_term():
    fit = cached_fit("mirror_torus")
    assert fit.series.absolute_at(Fraction(-1, 2)) * math.sqrt(4 * math.pi) == pytest.approx(0.5, abs=1e-3)


@pytest.mark.parametrize("name", ALL)
def test_catalog_coefficients_are_recovered(name):
    p = get_preset(name)
    fit = cached_fit(name)
    for power, value in p.coefficients.items():
        scale = max(1.0, abs(value))
        sigma = fit.absolute_sigma(int(2 * power + p.dimension))
        if sigma > 1e-3 * scale:
            continue
        assert fit.series.absolute_at(power) == pytest.approx(value, abs=max(1e-4 * scale, 10 * sigma))


@pytest.mark.parametrize("name", ["flat_torus_2d", "pillow", "orb_244", "interval", "T3_antipodal"])
def test_flat_fits_match_the_analytic_series(name):
    action = get_preset(name).action
    fit = cached_fit(name)
    report = compare_analytic_vs_fitted(asymptotic_series(action, fit.series.j_max), fit, flat=True)
    assert report.passed
    assert all(r.status == "PASS" for r in report.rows if r.j <= action.geometry.dimension)


def test_rp2_leading_rows():
    action = get_preset("RP2").action
    fit = cached_fit("RP2")
    report = compare_analytic_vs_fitted(asymptotic_series(action, fit.series.j_max), fit, flat=False)
    assert report.passed
    assert report.row(0).status == "PASS" and report.row(2).status == "PASS"


def test_klein_high_orders_are_unresolved_not_failed():
    fit = cached_fit("klein_bottle")
    report = compare_analytic_vs_fitted(asymptotic_series(get_preset("klein_bottle").action, 6), fit)
    assert report.passed
    assert {r.status for r in report.rows} <= {"PASS", "UNRESOLVED"}


# --- properties of the fit ---------------------------------------------------------


@pytest.mark.parametrize("name", ORIENTABLE)
def test_parity_exclusivity(name):
    fit = cached_fit(name)
    lead = abs(fit.series.coefficients[0])
    for j, c in fit.series.coefficients.items():
        if j % 2 == 1:
            assert abs(c) <= max(1e-6 * lead, 10 * fit.uncertainties[j])


@pytest.mark.parametrize("name", STABLE)
def test_halving_t_min_stays_within_the_uncertainty(name):
    action = get_preset(name).action
    cfg = FitConfig().resolved(action.geometry)
    first = cached_fit(name)
    second = fit_action(action, cfg.halved())
    for j, c in first.series.coefficients.items():
        assert abs(c - second.series.coefficients[j]) <= first.uncertainties[j]


@pytest.mark.parametrize("name", ALL)
def test_dimension_from_the_samples(name):
    assert recover_dimension(cached_fit(name).samples) == get_preset(name).dimension


def test_uncertainties_positive_and_condition_bounded():
    for name in ("pillow", "RP2", "T3_antipodal"):
        fit = cached_fit(name)
        assert all(s > 0 for s in fit.uncertainties.values())
        assert 1 <= fit.condition <= 1e8


def test_fit_of_synthetic_series():
    # exact polynomial samples in sqrt(t) come back unchanged
    coeffs = [1.5, -0.25, 0.125, 0.0, 2.0, 0.5, -1.0]
    ts = 5e-5 * 1.25 ** np.arange(18)
    samples = [TraceSample(float(t), float(sum(c * t ** (j / 2) for j, c in enumerate(coeffs)) / (4 * math.pi * t)),
                           0.0) for t in ts]
    fit = extract_coefficients(samples, 2)
    for j, c in enumerate(coeffs):
        assert fit.series.coefficients[j] == pytest.approx(c, abs=max(1e-6, 3 * fit.uncertainties[j]))


@given(st.floats(0.2, 5.0), st.floats(-1.0, 1.0), st.floats(-1.0, 1.0))
def test_fit_is_linear_in_the_samples(scale, a, b):
    ts = 5e-5 * 1.25 ** np.arange(18)
    z = [(a + b * t) / (4 * math.pi * t) + 1.0 / (4 * math.pi * t) for t in ts]
    base = extract_coefficients([TraceSample(float(t), v, 0.0) for t, v in zip(ts, z)], 2)
    scaled = extract_coefficients([TraceSample(float(t), scale * v, 0.0) for t, v in zip(ts, z)], 2)
    for j, c in base.series.coefficients.items():
        # float samples round differently after scaling; the reported errors cover it
        bound = scaled.uncertainties[j] + scale * base.uncertainties[j]
        assert abs(scaled.series.coefficients[j] - scale * c) <= bound


# --- the detector ------------------------------------------------------------------


@pytest.mark.parametrize("name", ALL)
def test_detector_agrees_with_the_group(name):
    action = get_preset(name).action
    truth, _ = is_locally_orientable(action)
    verdict = spectral_verdict(spectrum_for_fit(action))
    assert verdict.locally_orientable == truth
    assert verdict.margin > 0


def test_detector_on_the_named_examples():
    for name, expected in (("pillow", True), ("mirror_torus", False), ("klein_bottle", True),
                           ("T3_antipodal", False), ("RP2", True)):
        assert spectral_verdict(spectrum_for_fit(get_preset(name).action)).locally_orientable is expected


def test_inconclusive_when_the_fit_is_blind():
    action = get_preset("pillow").action
    cfg = replace(FitConfig(), resolution=1e-30, noise_factor=1e25)
    with pytest.raises(Inconclusive):
        spectral_verdict(spectrum_for_fit(action, cfg), config=cfg)


def test_detector_checks_dimension():
    with pytest.raises(UnsupportedGeometry):
        spectral_verdict(cached_spectrum("pillow", 2000.0), n=3)


# --- errors and configuration ------------------------------------------------------


def test_short_cutoff_is_rejected():
    with pytest.raises(InsufficientCutoff):
        fit_spectrum(cached_spectrum("pillow", 2000.0))


def test_too_few_samples():
    with pytest.raises(ConfigError):
        fit_action(get_preset("pillow").action, FitConfig(n_points=8))
    with pytest.raises(ConfigError):
        extract_coefficients([TraceSample(0.1 * k, 1.0, 0.0) for k in range(1, 5)], 2)


def test_order_limit():
    with pytest.raises(ConfigError):
        fit_action(get_preset("pillow").action, FitConfig(j_max=9, n_points=20))


def test_grid_reaching_large_times_is_rejected():
    with pytest.raises(ConfigError):
        fit_action(get_preset("pillow").action, FitConfig(t_min=0.05))


def test_ill_conditioned_grid():
    # nearly coincident times make the sqrt(t) columns almost collinear
    cfg = FitConfig(t_min=1e-4, ratio=1.001, svd_rtol=1e-30)
    samples = [TraceSample(float(t), 1 / (4 * math.pi * t), 0.0) for t in cfg.times]
    with pytest.raises(IllConditionedFit):
        extract_coefficients(samples, 2, cfg)


def test_bad_config_values():
    for kw in ({"t_min": 0.0}, {"t_min": -1.0}, {"ratio": 1.0}, {"n_points": 1}):
        with pytest.raises(ConfigError):
            FitConfig(**kw)
    with pytest.raises(ConfigError):
        FitConfig().times


def test_resolved_defaults_per_geometry():
    flat = FitConfig().resolved(get_preset("pillow").action.geometry)
    sphere = FitConfig().resolved(get_preset("RP2").action.geometry)
    assert flat.t_min > sphere.t_min > 0
    assert FitConfig(t_min=1e-3).resolved(get_preset("RP2").action.geometry).t_min == 1e-3
    assert flat.halved().t_min == flat.t_min / 2


def test_sampling_fills_precise_values():
    spec = cached_spectrum("RP2", 60)
    cfg = FitConfig(t_min=1e-2, n_points=3)
    samples = sample_heat_trace(spec, cfg)
    assert [s.t for s in samples] == pytest.approx(list(cfg.times))
    assert all(float(s.precise) == pytest.approx(s.value, rel=1e-13) for s in samples)


def test_fit_output_formats():
    fit = cached_fit("pillow")
    rows = list(csv.reader(io.StringIO(fit.to_csv())))
    assert rows[0] == ["exponent", "coefficient", "uncertainty", "provenance"]
    assert rows[1][0] == "-1" and rows[2][0] == "-1/2"
    assert all(r[3] == "fitted" for r in rows[1:])
    assert "residual norm" in fit.to_text()
    report = compare_analytic_vs_fitted(asymptotic_series(get_preset("pillow").action, 6), fit)
    assert "PASS" in report.to_text()
