"""Outdoor RF tier: SF table, Friis path loss, Rayleigh fading and BS decoding."""

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from ._validation import check_positive, check_range, raise_if
from .units import db_to_linear, dbm_to_watt

SPEED_OF_LIGHT = 299_792_458.0
THERMAL_NOISE_DBM_HZ = -174.0
DISTANCE_MODES = ("fixed", "ring-uniform")
# floor for the inner edge of the SF7 ring (d_SF - 1 km = 0)
MIN_AP_DISTANCE_M = 10.0


@dataclass(frozen=True)
class SfRow:
    sf: int
    bit_rate_bps: float
    t_rf_s: float
    q_sf_dB: float
    d_sf_km: float

    @property
    def q_sf_linear(self):
        return float(db_to_linear(self.q_sf_dB))


# q_SF is applied as an SNR threshold in dB.
SF_TABLE = (
    SfRow(7, 5470.0, 0.0366, -6.0, 1.0),
    SfRow(8, 3130.0, 0.064, -9.0, 3.0),
    SfRow(9, 1760.0, 0.113, -12.0, 5.0),
    SfRow(10, 980.0, 0.204, -15.0, 7.0),
    SfRow(11, 540.0, 0.372, -17.5, 9.0),
    SfRow(12, 290.0, 0.682, -20.0, 11.0),
)


def sf_table():
    return list(SF_TABLE)


def sf_row(sf, table=SF_TABLE):
    for row in table:
        if row.sf == sf:
            return row
    raise ValueError(f"no SF table row for SF={sf}")


def check_sf_table(rows):
    """Return the violated table invariants (empty list when the table is sound)."""
    errors = []
    sfs = [r.sf for r in rows]
    if sfs != list(range(7, 13)):
        errors.append(f"SF table must have rows for SF 7..12 in order (got {sfs})")
        return errors
    t = [r.t_rf_s for r in rows]
    q = [r.q_sf_dB for r in rows]
    if any(b <= a for a, b in zip(t, t[1:])):
        errors.append("SF table t_rf_s must be strictly increasing in SF")
    if any(b >= a for a, b in zip(q, q[1:])):
        errors.append("SF table q_sf_dB must be strictly decreasing in SF")
    return errors


def chirp_symbol_duration(sf, bw_Hz):
    """Chirp symbol length ``2**SF / BW`` in seconds."""
    if sf not in range(7, 13):
        raise ValueError(f"SF must be in 7..12, got {sf}")
    if not bw_Hz > 0:
        raise ValueError("bandwidth must be > 0")
    return 2.0 ** sf / bw_Hz


def noise_power(noise_figure_dB, bw_Hz):
    """Receiver noise power in watts from ``-174 + NF + 10 log10(BW)`` dBm."""
    if not bw_Hz > 0:
        raise ValueError("bandwidth must be > 0")
    return float(dbm_to_watt(THERMAL_NOISE_DBM_HZ + noise_figure_dB + 10 * np.log10(bw_Hz)))


def path_loss(distance_m, carrier_Hz, n):
    """Friis-style power gain ``(lambda / (4 pi d))**n``."""
    d = np.asarray(distance_m, dtype=float)
    if np.any(~(d > 0)):
        raise ValueError("distance must be > 0")
    wavelength = SPEED_OF_LIGHT / carrier_Hz
    return ((wavelength / (4 * np.pi * d)) ** n)[()]


def sample_rayleigh_power_gain(rng, size=None):
    """Power gain of a unit-mean Rayleigh channel, i.e. Exp(1)."""
    return rng.standard_exponential(size)


@dataclass(frozen=True)
class LoraLinkConfig:
    sf_row: SfRow = field(default_factory=lambda: sf_row(7))
    rf_bandwidth_Hz: float = 125e3
    noise_figure_dB: float = 6.0
    tx_power_dBm: float = 14.0
    carrier_Hz: float = 868.1e6
    path_loss_exp: float = 2.7
    sir_margin_linear: float = 4.0
    ring_width_km: float = 1.0
    distance_mode: str = "fixed"
    # overrides d_SF of the row when set
    distance_km: Optional[float] = None

    def __post_init__(self):
        errors = []
        check_positive("rf_bandwidth_Hz", self.rf_bandwidth_Hz, errors)
        check_positive("carrier_Hz", self.carrier_Hz, errors)
        check_range("path_loss_exp", self.path_loss_exp, errors, 2, 6)
        check_range("sir_margin_linear", self.sir_margin_linear, errors, 1, np.inf)
        check_range("ring_width_km", self.ring_width_km, errors, 0, np.inf)
        if self.distance_mode not in DISTANCE_MODES:
            errors.append(f"distance_mode must be one of {DISTANCE_MODES} "
                          f"(got {self.distance_mode!r})")
        if self.distance_km is not None:
            check_positive("distance_km", self.distance_km, errors)
        if self.sf_row.sf not in range(7, 13):
            errors.append(f"sf must be in 7..12 (got {self.sf_row.sf})")
        raise_if(errors)

    @property
    def nominal_distance_m(self):
        d = self.sf_row.d_sf_km if self.distance_km is None else self.distance_km
        return d * 1e3

    @property
    def noise_power_W(self):
        return noise_power(self.noise_figure_dB, self.rf_bandwidth_Hz)

    @property
    def tx_power_W(self):
        return float(dbm_to_watt(self.tx_power_dBm))

    def path_gain(self, distance_m=None):
        d = self.nominal_distance_m if distance_m is None else distance_m
        return path_loss(d, self.carrier_Hz, self.path_loss_exp)


def ap_distances(cfg, num_cells, rng):
    """AP-to-BS distances in metres, drawn once per run in ring-uniform mode."""
    d = cfg.nominal_distance_m
    if cfg.distance_mode == "fixed":
        return np.full(num_cells, d)
    w = cfg.ring_width_km * 1e3
    lo = max(d - w, MIN_AP_DISTANCE_M)
    return rng.uniform(lo, d + w, size=num_cells)


def outage_cond1_prob(cfg, distance_m=None):
    """Probability that the faded SNR falls below q_SF (Condition I).

    ``1 - exp(-sigma^2 q / (P g))``, the Exp(1) CDF at the required power gain.
    """
    x = cfg.noise_power_W * cfg.sf_row.q_sf_linear / (cfg.tx_power_W * cfg.path_gain(distance_m))
    return (-np.expm1(-x))[()]


class RfPacket(NamedTuple):
    origin_ap: int
    origin_user: int
    rx_power_W: float
    snr_linear: float


def make_rf_packet(cfg, origin_ap, origin_user, path_gain, fading):
    p = cfg.tx_power_W * path_gain * fading
    return RfPacket(origin_ap, origin_user, p, p / cfg.noise_power_W)


def decode_rf_slot(packets, cfg):
    """Decode at most one packet from a single RF slot.

    Only the strongest packet is a candidate. It must clear q_SF and be at
    least ``sir_margin_linear`` times stronger than every other packet.
    """
    if not packets:
        return None
    ordered = sorted(packets, key=lambda p: (-p.rx_power_W, p.origin_ap, p.origin_user))
    best = ordered[0]
    if best.snr_linear < cfg.sf_row.q_sf_linear:
        return None
    if len(ordered) > 1 and best.rx_power_W < cfg.sir_margin_linear * ordered[1].rx_power_W:
        return None
    return best


def decode_rf_power_batch(powers, noise_W, q_linear, sir_margin):
    """Vectorised ``decode_rf_slot`` over the last axis of ``powers``.

    Zero entries mean the cell sent nothing into that slot. Returns a boolean
    array (slot decoded or not) and the index of the strongest entry.
    """
    powers = np.asarray(powers, dtype=float)
    k = powers.shape[-1]
    winner = np.argmax(powers, axis=-1)
    first = np.take_along_axis(powers, winner[..., None], axis=-1)[..., 0]
    if k > 1:
        second = np.partition(powers, k - 2, axis=-1)[..., k - 2]
    else:
        second = np.zeros_like(first)
    ok = (first > 0) & (first >= q_linear * noise_W) & (first >= sir_margin * second)
    return ok, winner
