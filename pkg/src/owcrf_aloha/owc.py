"""Indoor optical tier: Lambertian LoS gain, user placement and SNR statistics.

Geometry is fixed to an AP on the ceiling pointing down and devices on a
horizontal plane pointing up, so the irradiance and incidence angles coincide
and ``cos(theta) = cos(psi) = L / d``.
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_positive, check_range, raise_if


@dataclass(frozen=True)
class OwcCellConfig:
    """Geometry and optics of one indoor cell."""

    cell_radius_m: float = 3.0
    height_m: float = 2.15
    semi_angle_deg: float = 60.0
    fov_deg: float = 90.0
    detector_area_m2: float = 1e-4
    responsivity_A_per_W: float = 0.4
    filter_gain: float = 1.0
    lens_index: float = 1.5

    def __post_init__(self):
        errors = []
        check_positive("cell_radius_m", self.cell_radius_m, errors)
        check_positive("height_m", self.height_m, errors)
        check_range("semi_angle_deg", self.semi_angle_deg, errors, 0, 90,
                    low_open=True, high_open=True)
        check_range("fov_deg", self.fov_deg, errors, 0, 90, low_open=True)
        check_positive("detector_area_m2", self.detector_area_m2, errors)
        check_positive("responsivity_A_per_W", self.responsivity_A_per_W, errors)
        check_positive("filter_gain", self.filter_gain, errors)
        check_range("lens_index", self.lens_index, errors, 1, np.inf)
        raise_if(errors)


@dataclass(frozen=True)
class OwcRadioConfig:
    """Transmitter and receiver electrical constants. SNRs are linear."""

    tx_power_W: float = 0.01
    oe_efficiency: float = 0.8
    noise_density_W_per_Hz: float = 1e-21
    bandwidth_Hz: float = 200e3
    capture_threshold_linear: float = 1.0

    def __post_init__(self):
        errors = []
        for name in ("tx_power_W", "oe_efficiency", "noise_density_W_per_Hz",
                     "bandwidth_Hz", "capture_threshold_linear"):
            check_positive(name, getattr(self, name), errors)
        raise_if(errors)

    @property
    def noise_variance(self):
        return self.noise_density_W_per_Hz * self.bandwidth_Hz

    @property
    def mu_owc(self):
        return self.tx_power_W ** 2 * self.oe_efficiency ** 2 / self.noise_variance


@dataclass(frozen=True)
class OwcDerived:
    lambertian_order: float
    concentrator_gain: float
    chi: float
    mu_owc: float
    gamma_min_linear: float
    gamma_max_linear: float
    coverage_radius_m: float = field(default=np.inf)

    @classmethod
    def from_configs(cls, cell, radio):
        m = lambertian_order(cell.semi_angle_deg)
        g = cell.lens_index ** 2 / np.sin(np.radians(cell.fov_deg)) ** 2
        L = cell.height_m
        chi = (cell.detector_area_m2 * (m + 1) * cell.responsivity_A_per_W
               / (2 * np.pi) * cell.filter_gain * g * L ** (m + 1))
        mu = radio.mu_owc
        R = cell.cell_radius_m
        gamma_min = mu * chi ** 2 / (R ** 2 + L ** 2) ** (m + 3)
        gamma_max = mu * chi ** 2 / L ** (2 * (m + 3))
        # users beyond L*tan(FOV) receive nothing
        if cell.fov_deg >= 90.0:
            r_cov = np.inf
        else:
            r_cov = L * np.tan(np.radians(cell.fov_deg))
        return cls(m, g, chi, mu, gamma_min, gamma_max, r_cov)


def lambertian_order(semi_angle_deg):
    """Lambertian order ``m = -ln 2 / ln cos(semi_angle)``."""
    if not 0.0 < semi_angle_deg < 90.0:
        raise ValueError(f"semi_angle_deg must lie in (0, 90), got {semi_angle_deg}")
    return -np.log(2.0) / np.log(np.cos(np.radians(semi_angle_deg)))


def sample_user_radius(cell_radius_m, rng, size=None):
    """Radial distance of a uniformly placed user, ``R * sqrt(u)``."""
    return cell_radius_m * np.sqrt(rng.random(size))


def channel_gain(cell, derived, radius_m):
    """LoS DC gain ``chi / d**(m+3)``; zero outside the receiver FOV."""
    r = np.asarray(radius_m, dtype=float)
    if np.any(r < 0):
        raise ValueError("radius must be non-negative")
    if np.any(r > cell.cell_radius_m * (1 + 1e-12)):
        raise ValueError("radius exceeds the cell radius")
    L = cell.height_m
    d2 = r * r + L * L
    h = derived.chi / d2 ** ((derived.lambertian_order + 3) / 2)
    if cell.fov_deg < 90.0:
        incidence = np.degrees(np.arccos(L / np.sqrt(d2)))
        h = np.where(incidence <= cell.fov_deg, h, 0.0)
    return h[()]


def snr_owc(radio, h):
    """Electrical SNR ``mu_owc * h**2`` (linear)."""
    h = np.asarray(h, dtype=float)
    if np.any(h < 0):
        raise ValueError("channel gain must be non-negative")
    return (radio.mu_owc * h * h)[()]


def sample_snr(cell, radio, derived, rng, size=None):
    r = sample_user_radius(cell.cell_radius_m, rng, size)
    return snr_owc(radio, channel_gain(cell, derived, r))


def _radius_at(derived, cell, gamma):
    # invert gamma = mu chi^2 / (r^2 + L^2)^(m+3) for r^2
    k = derived.lambertian_order + 3
    return (derived.mu_owc * derived.chi ** 2 / gamma) ** (1.0 / k) - cell.height_m ** 2


def _gamma_at(derived, cell, r2):
    k = derived.lambertian_order + 3
    return derived.mu_owc * derived.chi ** 2 / (r2 + cell.height_m ** 2) ** k


def _check_gamma(gamma):
    g = np.asarray(gamma, dtype=float)
    if np.any(~(g > 0)):
        raise ValueError("gamma must be > 0")
    return g


def snr_cdf(derived, cell, gamma):
    """CDF of the OWC SNR of a uniformly placed user.

    Inside ``[gamma_min, gamma_max]`` this is
    ``1 + L^2/R^2 - (mu chi^2 / gamma)^(1/(m+3)) / R^2``. When the FOV does
    not cover the whole cell the users outside it form an atom at zero SNR.
    """
    g = _check_gamma(gamma)
    R2 = cell.cell_radius_m ** 2
    r_cov2 = min(R2, derived.coverage_radius_m ** 2)
    atom = 1.0 - r_cov2 / R2
    gamma_lo = _gamma_at(derived, cell, r_cov2)
    with np.errstate(over="ignore", divide="ignore"):
        body = np.clip(1.0 - _radius_at(derived, cell, g) / R2, atom, 1.0)
    out = np.where(g >= derived.gamma_max_linear, 1.0,
                   np.where(g <= gamma_lo, atom, body))
    return out[()]


def snr_pdf(derived, cell, gamma):
    """Continuous part of the SNR density, a power law in gamma."""
    g = _check_gamma(gamma)
    k = derived.lambertian_order + 3
    R2 = cell.cell_radius_m ** 2
    r_cov2 = min(R2, derived.coverage_radius_m ** 2)
    lo = _gamma_at(derived, cell, r_cov2)
    dens = (derived.mu_owc * derived.chi ** 2) ** (1.0 / k) / (R2 * k) * g ** (-(k + 1) / k)
    inside = (g >= lo) & (g <= derived.gamma_max_linear)
    return np.where(inside, dens, 0.0)[()]


def capture_erasure_prob(derived, cell, gamma_th):
    """Probability that a single packet misses the capture threshold."""
    return snr_cdf(derived, cell, gamma_th)
