"""Statistical self-check: sampled simulator paths against the closed forms.

Sample sizes and the 0.01 significance level are fixed up front; seeds are
derived from the caller's seed so a run is reproducible.
"""

import dataclasses
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import oracles
from .engine import activate_users, run_simulation
from .lora import decode_rf_power_batch, sample_rayleigh_power_gain
from .owc import OwcDerived, sample_snr
from .scenario import Scenario, with_axis_value

log = logging.getLogger(__name__)

ALPHA = 0.01
KS_SAMPLES = 100_000
KS_LIMIT = 0.01
FADING_DRAWS = 1_000_000


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    observed: float
    expected: float
    tolerance: float

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.name}: observed={self.observed:.6g} "
                f"expected={self.expected:.6g} tol={self.tolerance:.3g}")


def _within(name, observed, expected, tol):
    return CheckResult(name, abs(observed - expected) <= tol, observed, expected, tol)


def _rng(seed, *key):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def check_snr_distribution(cell, radio, seed, n=KS_SAMPLES):
    derived = OwcDerived.from_configs(cell, radio)
    snr = sample_snr(cell, radio, derived, _rng(seed, 1), n)
    d = oracles.ks_statistic(snr, lambda g: oracles.owc_snr_cdf(cell, radio, g))
    return CheckResult(
        f"snr ks (semi-angle {cell.semi_angle_deg:g} deg, R {cell.cell_radius_m:g} m)",
        d < KS_LIMIT, d, 0.0, KS_LIMIT)


def check_capture_erasure(cell, radio, seed, n=KS_SAMPLES):
    derived = OwcDerived.from_configs(cell, radio)
    snr = sample_snr(cell, radio, derived, _rng(seed, 2), n)
    p = float(oracles.capture_erasure(cell, radio))
    observed = float(np.mean(snr < radio.capture_threshold_linear))
    tol = 3 * math.sqrt(p * (1 - p) / n)
    return _within(f"capture erasure (gamma_th {10 * math.log10(radio.capture_threshold_linear):g} dB)",
                   observed, p, tol)


def check_cond1(lora_cfg, seed, n=FADING_DRAWS):
    p = oracles.cond1_outage(lora_cfg)
    h2 = sample_rayleigh_power_gain(_rng(seed, 3, lora_cfg.sf_row.sf), n)
    snr = lora_cfg.tx_power_W * lora_cfg.path_gain() * h2 / lora_cfg.noise_power_W
    observed = float(np.mean(snr < lora_cfg.sf_row.q_sf_linear))
    tol = 3 * math.sqrt(p * (1 - p) / n)
    return _within(f"condition I outage (SF {lora_cfg.sf_row.sf})", observed, p, tol)


def check_cond2_pair(epsilon, seed, n=FADING_DRAWS):
    """Tagged packet of an equal-distance pair fails the SIR margin."""
    g = sample_rayleigh_power_gain(_rng(seed, 4), (n, 2))
    ok, winner = decode_rf_power_batch(g, 1.0, 0.0, epsilon)
    tagged_ok = ok & (winner == 0)
    observed = 1.0 - float(np.mean(tagged_ok))
    p = oracles.cond2_equal_distance_prob(1, epsilon)
    tol = 3 * math.sqrt(p * (1 - p) / n)
    return _within(f"condition II pair (eps {epsilon:g})", observed, p, tol)


def check_activation(seed, U=10, p_a=0.3, slots=100_000):
    rng = _rng(seed, 5)
    counts = np.bincount([len(activate_users(U, p_a, rng)) for _ in range(slots)],
                         minlength=U + 1)
    expected = np.array([oracles.binomial_pmf(U, p_a, u) for u in range(U + 1)]) * slots
    # pool sparse tail cells so every expected count is >= 5
    obs, exp = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(counts, expected):
        acc_o += o
        acc_e += e
        if acc_e >= 5:
            obs.append(acc_o)
            exp.append(acc_e)
            acc_o = acc_e = 0.0
    obs[-1] += acc_o
    exp[-1] += acc_e
    _, pvalue = stats.chisquare(obs, exp)
    return CheckResult(f"activation chi-square (U {U}, p_a {p_a:g})",
                       pvalue >= ALPHA, pvalue, ALPHA, ALPHA)


def check_end_to_end(base, seed, slots=1_000_000):
    s = dataclasses.replace(base, num_cells=1, users_per_cell=1, num_owc_slots=slots,
                            replications=1, master_seed=seed)
    stats_ = run_simulation(s)
    p = oracles.end_to_end_single_packet_prob(s) * s.activation_prob
    expected = p / s.multirate_factor
    # decodes per OWC slot are Bernoulli(p); per RF slot divide by M
    tol = 3 * math.sqrt(p * (1 - p) / slots) / s.multirate_factor
    return _within(f"end-to-end K=U=1 (p_a {s.activation_prob:g}, M {s.multirate_factor})",
                   stats_.throughput_mean, expected, tol)


def run_validation(seed=0, base=None):
    """Run the full oracle suite; returns the list of ``CheckResult``."""
    base = Scenario() if base is None else base
    results = []
    for i, (angle, radius) in enumerate([(a, r) for a in (30.0, 60.0) for r in (1.0, 2.0, 3.0)]):
        cell = dataclasses.replace(base.owc_cell, semi_angle_deg=angle, cell_radius_m=radius)
        results.append(check_snr_distribution(cell, base.owc_radio, seed + i))
    for th_db in (-5.0, 0.0, 5.0):
        radio = dataclasses.replace(base.owc_radio, capture_threshold_linear=10 ** (th_db / 10))
        results.append(check_capture_erasure(base.owc_cell, radio, seed))
    for sf in range(7, 13):
        results.append(check_cond1(with_axis_value(base, "SF", sf).lora, seed))
    results.append(check_cond2_pair(base.lora.sir_margin_linear, seed))
    results.append(check_activation(seed))
    results.append(check_end_to_end(
        dataclasses.replace(base, activation_prob=0.5, multirate_factor=2), seed))
    for r in results:
        log.info(r.line())
    return results
