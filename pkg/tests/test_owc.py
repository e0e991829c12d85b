import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from owcrf_aloha import oracles
from owcrf_aloha._validation import ConfigError
from owcrf_aloha.owc import (OwcCellConfig, OwcDerived, OwcRadioConfig, capture_erasure_prob,
                             channel_gain, lambertian_order, sample_snr, sample_user_radius,
                             snr_cdf, snr_owc, snr_pdf)

CELL = OwcCellConfig()
RADIO = OwcRadioConfig()
DER = OwcDerived.from_configs(CELL, RADIO)


def test_lambertian_order_exact_angles():
    assert lambertian_order(60.0) == pytest.approx(1.0, abs=1e-12)
    assert lambertian_order(45.0) == pytest.approx(2.0, abs=1e-12)
    # mpmath, 30 digits
    assert lambertian_order(30.0) == pytest.approx(4.818841679306418, rel=1e-12)


@pytest.mark.parametrize("angle", [0.0, 90.0, -5.0, 120.0])
def test_lambertian_order_domain(angle):
    with pytest.raises(ValueError):
        lambertian_order(angle)


@given(st.floats(1.0, 88.0), st.floats(0.1, 1.0))
def test_lambertian_order_decreasing(a, delta):
    assert lambertian_order(a + delta) < lambertian_order(a)


@pytest.mark.parametrize("bad", [
    dict(cell_radius_m=0.0), dict(height_m=-1.0), dict(semi_angle_deg=90.0),
    dict(fov_deg=0.0), dict(fov_deg=91.0), dict(lens_index=0.9), dict(filter_gain=0.0),
])
def test_cell_config_invariants(bad):
    with pytest.raises(ConfigError):
        OwcCellConfig(**bad)


def test_radio_config_invariants():
    with pytest.raises(ConfigError) as err:
        OwcRadioConfig(tx_power_W=0.0, bandwidth_Hz=-1.0)
    assert len(err.value.violations) == 2


def test_sample_radius_endpoints_and_mean():
    class Fixed:
        def __init__(self, u):
            self.u = u

        def random(self, size=None):
            return self.u

    assert sample_user_radius(2.0, Fixed(0.0)) == 0.0
    assert sample_user_radius(2.0, Fixed(1.0)) == 2.0
    r = sample_user_radius(2.0, np.random.default_rng(1), 1_000_000)
    sigma = math.sqrt(2.0 ** 2 / 2 - (4 / 3) ** 2) / math.sqrt(r.size)
    assert abs(r.mean() - 4 / 3) < 3 * sigma


def test_sample_radius_ks_against_r2_law():
    r = sample_user_radius(3.0, np.random.default_rng(2), 100_000)
    assert oracles.ks_statistic(r, lambda x: (x / 3.0) ** 2) < 0.01


def test_channel_gain_centre_and_edge():
    m, L, R = DER.lambertian_order, CELL.height_m, CELL.cell_radius_m
    assert channel_gain(CELL, DER, 0.0) == pytest.approx(DER.chi / L ** (m + 3), rel=1e-13)
    assert channel_gain(CELL, DER, R) == pytest.approx(
        DER.chi / (R ** 2 + L ** 2) ** ((m + 3) / 2), rel=1e-13)


def test_channel_gain_matches_lambertian_formula():
    # full formula with explicit angles
    r = 1.3
    L = CELL.height_m
    d = math.hypot(r, L)
    cos = L / d
    m = DER.lambertian_order
    g = CELL.lens_index ** 2 / math.sin(math.radians(CELL.fov_deg)) ** 2
    h = (CELL.detector_area_m2 * (m + 1) * CELL.responsivity_A_per_W * CELL.filter_gain * g
         / (2 * math.pi * d ** 2) * cos ** m * cos)
    assert channel_gain(CELL, DER, r) == pytest.approx(h, rel=1e-12)


def test_channel_gain_outside_fov_is_zero():
    cell = dataclasses.replace(CELL, fov_deg=45.0, cell_radius_m=4.0)
    der = OwcDerived.from_configs(cell, RADIO)
    # incidence > 45 deg once r > L
    assert channel_gain(cell, der, 3.0) == 0.0
    assert channel_gain(cell, der, 1.0) > 0.0


def test_channel_gain_rejects_negative_radius():
    with pytest.raises(ValueError):
        channel_gain(CELL, DER, -0.1)


@given(st.floats(0.0, 2.9), st.floats(0.01, 0.1))
def test_channel_gain_strictly_decreasing(r, dr):
    assert channel_gain(CELL, DER, r + dr) < channel_gain(CELL, DER, r)


def test_snr_owc_endpoints():
    assert snr_owc(RADIO, 0.0) == 0.0
    h0 = channel_gain(CELL, DER, 0.0)
    hR = channel_gain(CELL, DER, CELL.cell_radius_m)
    assert snr_owc(RADIO, h0) == pytest.approx(DER.gamma_max_linear, rel=1e-12)
    assert snr_owc(RADIO, hR) == pytest.approx(DER.gamma_min_linear, rel=1e-12)


def test_mu_owc_definition():
    assert RADIO.mu_owc == pytest.approx(0.01 ** 2 * 0.8 ** 2 / (1e-21 * 200e3), rel=1e-15)


def test_cdf_endpoints_exact():
    assert snr_cdf(DER, CELL, DER.gamma_min_linear) == 0.0
    assert snr_cdf(DER, CELL, DER.gamma_max_linear) == 1.0
    assert snr_cdf(DER, CELL, DER.gamma_min_linear / 2) == 0.0
    assert snr_cdf(DER, CELL, DER.gamma_max_linear * 2) == 1.0


def test_cdf_closed_form_interior():
    m, L, R = DER.lambertian_order, CELL.height_m, CELL.cell_radius_m
    g = math.sqrt(DER.gamma_min_linear * DER.gamma_max_linear)
    expected = 1 + L ** 2 / R ** 2 - (DER.mu_owc * DER.chi ** 2 / g) ** (1 / (m + 3)) / R ** 2
    assert snr_cdf(DER, CELL, g) == pytest.approx(expected, rel=1e-12)
    assert snr_cdf(DER, CELL, g) == pytest.approx(oracles.owc_snr_cdf(CELL, RADIO, g), rel=1e-12)


@pytest.mark.parametrize("fn", [snr_cdf, snr_pdf])
def test_gamma_domain(fn):
    with pytest.raises(ValueError):
        fn(DER, CELL, 0.0)


@settings(max_examples=50)
@given(st.lists(st.floats(1e-3, 1e3), min_size=2, max_size=30))
def test_cdf_monotone(values):
    g = np.sort(np.asarray(values))
    f = snr_cdf(DER, CELL, g)
    assert np.all(np.diff(f) >= 0)
    assert np.all((f >= 0) & (f <= 1))


@pytest.mark.parametrize("angle", [30.0, 60.0])
@pytest.mark.parametrize("radius", [1.0, 3.0])
def test_pdf_normalised_and_derivative(angle, radius):
    cell = dataclasses.replace(CELL, semi_angle_deg=angle, cell_radius_m=radius)
    der = OwcDerived.from_configs(cell, RADIO)
    lo, hi = der.gamma_min_linear, der.gamma_max_linear
    # integrate in log-space for accuracy over decades
    total, _ = integrate.quad(lambda t: snr_pdf(der, cell, math.exp(t)) * math.exp(t),
                              math.log(lo), math.log(hi), epsabs=1e-12, epsrel=1e-12)
    assert total == pytest.approx(1.0, abs=1e-6)
    mid = 0.5 * (lo + hi)
    step = mid * 1e-5
    numeric = (snr_cdf(der, cell, mid + step) - snr_cdf(der, cell, mid - step)) / (2 * step)
    assert snr_pdf(der, cell, mid) == pytest.approx(numeric, rel=1e-4)


def test_pdf_outside_support():
    assert snr_pdf(DER, CELL, DER.gamma_min_linear * 0.9) == 0.0
    assert snr_pdf(DER, CELL, DER.gamma_max_linear * 1.1) == 0.0


def test_capture_erasure_endpoints():
    assert capture_erasure_prob(DER, CELL, DER.gamma_min_linear) == 0.0
    assert capture_erasure_prob(DER, CELL, DER.gamma_min_linear * 0.5) == 0.0
    assert capture_erasure_prob(DER, CELL, DER.gamma_max_linear * 1.01) == 1.0


def test_capture_erasure_monte_carlo():
    snr = sample_snr(CELL, RADIO, DER, np.random.default_rng(5), 100_000)
    p = capture_erasure_prob(DER, CELL, RADIO.capture_threshold_linear)
    emp = np.mean(snr < RADIO.capture_threshold_linear)
    assert abs(emp - p) < 3 * math.sqrt(p * (1 - p) / snr.size)


def test_sampled_snr_matches_cdf():
    snr = sample_snr(CELL, RADIO, DER, np.random.default_rng(6), 100_000)
    assert oracles.ks_statistic(snr, lambda g: snr_cdf(DER, CELL, g)) < 0.01


def test_restricted_fov_cdf_has_atom():
    cell = dataclasses.replace(CELL, fov_deg=45.0, cell_radius_m=4.0)
    der = OwcDerived.from_configs(cell, RADIO)
    atom = 1 - (cell.height_m / cell.cell_radius_m) ** 2   # r_cov = L tan 45 = L
    snr = sample_snr(cell, RADIO, der, np.random.default_rng(7), 200_000)
    assert np.mean(snr == 0) == pytest.approx(atom, abs=0.005)
    g = 0.5 * (snr[snr > 0].min() + der.gamma_max_linear)
    assert np.mean(snr <= g) == pytest.approx(snr_cdf(der, cell, g), abs=0.005)
