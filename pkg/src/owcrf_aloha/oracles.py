"""Closed-form references for cross-checking the simulator.

Nothing here imports the simulation modules. Configs are read by attribute
only, and every formula is written out again on purpose so that agreement
with the sampled path means something.
"""

import math

import numpy as np
from scipy import integrate

MIN_KS_SAMPLES = 100


class InsufficientSamplesError(ValueError):
    pass


def binomial_pmf(U, p_a, u):
    if not 0 <= u <= U:
        raise ValueError(f"u must lie in [0, {U}], got {u}")
    return math.comb(U, u) * p_a ** u * (1.0 - p_a) ** (U - u)


def ks_statistic(samples, cdf):
    """Sup distance between the empirical CDF of sorted ``samples`` and ``cdf``."""
    x = np.asarray(samples, dtype=float)
    n = x.size
    if n < MIN_KS_SAMPLES:
        raise InsufficientSamplesError(f"need at least {MIN_KS_SAMPLES} samples, got {n}")
    x = np.sort(x)
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - f)
    d_minus = np.max(f - (i - 1) / n)
    return float(np.clip(max(d_plus, d_minus), 0.0, 1.0))


# -- optical tier ----------------------------------------------------------

def _owc_constants(cell, radio):
    m = -math.log(2.0) / math.log(math.cos(math.radians(cell.semi_angle_deg)))
    g_conc = cell.lens_index ** 2 / math.sin(math.radians(cell.fov_deg)) ** 2
    L = cell.height_m
    chi = (cell.detector_area_m2 * (m + 1) * cell.responsivity_A_per_W / (2 * math.pi)
           * cell.filter_gain * g_conc * L ** (m + 1))
    mu = radio.tx_power_W ** 2 * radio.oe_efficiency ** 2 / (
        radio.noise_density_W_per_Hz * radio.bandwidth_Hz)
    return m, chi, mu


def owc_gamma_bounds(cell, radio):
    m, chi, mu = _owc_constants(cell, radio)
    L, R = cell.height_m, cell.cell_radius_m
    return mu * chi ** 2 / (R ** 2 + L ** 2) ** (m + 3), mu * chi ** 2 / L ** (2 * (m + 3))


def owc_snr_cdf(cell, radio, gamma):
    """SNR CDF for a fully covered cell (FOV reaching the cell edge)."""
    m, chi, mu = _owc_constants(cell, radio)
    L, R = cell.height_m, cell.cell_radius_m
    g_min, g_max = owc_gamma_bounds(cell, radio)
    g = np.asarray(gamma, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        inner = 1 + L ** 2 / R ** 2 - (mu * chi ** 2 / g) ** (1 / (m + 3)) / R ** 2
    return np.where(g < g_min, 0.0, np.where(g > g_max, 1.0, np.clip(inner, 0.0, 1.0)))[()]


def owc_snr_pdf(cell, radio, gamma):
    m, chi, mu = _owc_constants(cell, radio)
    R = cell.cell_radius_m
    g_min, g_max = owc_gamma_bounds(cell, radio)
    g = np.asarray(gamma, dtype=float)
    dens = (mu * chi ** 2) ** (1 / (m + 3)) / (R ** 2 * (m + 3)) * g ** (-(m + 4) / (m + 3))
    return np.where((g >= g_min) & (g <= g_max), dens, 0.0)[()]


def capture_erasure(cell, radio, gamma_th=None):
    if gamma_th is None:
        gamma_th = radio.capture_threshold_linear
    return owc_snr_cdf(cell, radio, gamma_th)


# -- RF tier ---------------------------------------------------------------

def cond1_outage(lora, distance_m=None):
    """Exp(1) CDF at the power gain needed to reach q_SF."""
    noise_w = 10 ** ((-174 + lora.noise_figure_dB + 10 * math.log10(lora.rf_bandwidth_Hz)) / 10) / 1e3
    p_w = 10 ** (lora.tx_power_dBm / 10) / 1e3
    q = 10 ** (lora.sf_row.q_sf_dB / 10)
    if distance_m is None:
        d_km = lora.sf_row.d_sf_km if lora.distance_km is None else lora.distance_km
        distance_m = d_km * 1e3
    wavelength = 299_792_458.0 / lora.carrier_Hz
    g = (wavelength / (4 * math.pi * distance_m)) ** lora.path_loss_exp
    return 1.0 - math.exp(-noise_w * q / (p_w * g))


def cond2_equal_distance_prob(num_interferers, epsilon, method="closed"):
    """P[tagged packet fails the epsilon SIR margin], i.i.d. Exp(1) gains.

    The tagged packet survives iff its gain is at least ``epsilon`` times the
    largest interferer gain. With one interferer the failure probability is
    ``epsilon / (1 + epsilon)``.
    """
    n = int(num_interferers)
    if n < 1:
        raise ValueError("need at least one interferer")
    if epsilon <= 0:
        return 0.0
    if method == "closed":
        # P[X >= eps * max Y_i] = sum_j C(n, j) (-1)^j eps / (eps + j)
        success = sum(math.comb(n, j) * (-1) ** j * epsilon / (epsilon + j) for j in range(n + 1))
    elif method == "quad":
        success, _ = integrate.quad(
            lambda x: math.exp(-x) * (-math.expm1(-x / epsilon)) ** n, 0, np.inf,
            epsabs=1e-13, epsrel=1e-12)
    else:
        raise ValueError(f"unknown method {method!r}")
    return 1.0 - success


def cond2_strongest_fail_prob(num_transmitters, epsilon):
    """P[the strongest of n i.i.d. Exp(1) gains is below epsilon x the runner-up].

    Slot-level counterpart of ``cond2_equal_distance_prob``: the probability
    that an n-packet slot yields no decode because of the SIR margin alone.
    """
    n = int(num_transmitters)
    if n < 2:
        return 0.0
    if epsilon <= 1:
        return 0.0

    # runner-up at y (density n(n-1) F^(n-2) f), top in (y, eps*y]
    def integrand(y):
        return (n * (n - 1) * (-math.expm1(-y)) ** (n - 2) * math.exp(-y)
                * (math.exp(-y) - math.exp(-epsilon * y)))

    val, _ = integrate.quad(integrand, 0, np.inf, epsabs=1e-13, epsrel=1e-12)
    return val


def end_to_end_single_packet_prob(scenario):
    """Probability an activated packet of a lone user reaches the BS (K=U=1)."""
    if scenario.num_cells != 1 or scenario.users_per_cell != 1:
        raise ValueError("end-to-end oracle needs num_cells == users_per_cell == 1")
    p_er = float(capture_erasure(scenario.owc_cell, scenario.owc_radio))
    return (1.0 - p_er) * (1.0 - cond1_outage(scenario.lora))
