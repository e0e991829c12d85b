"""Two-tier slotted ALOHA: OWC capture + MPR, then an M-slot LoRa frame.

The single-slot functions (``activate_users`` .. ``rf_frame_decode``) follow
the protocol packet by packet and are what ``SlotTrace`` describes. The batch
path in ``iter_slot_batches`` runs the same protocol on arrays of slots and
is what ``run_simulation`` uses.

Random streams: replication ``r`` of a scenario draws stage ``s`` from
``SeedSequence(master_seed, spawn_key=(r, s))``. Results therefore depend only
on the scenario and the replication index, never on worker layout.
"""

import json
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.stats import norm

from . import lora as _lora
from .owc import OwcDerived, channel_gain, sample_user_radius, snr_owc

CHUNK_SLOTS = 8192
Z95 = float(norm.ppf(0.975))

_STAGE_ACTIVATION = 0
_STAGE_PLACEMENT = 1
_STAGE_ASSIGNMENT = 2
_STAGE_FADING = 3
_STAGE_DISTANCE = 4


class AssignmentError(ValueError):
    """A cell offered more packets than there are RF slots."""


class OwcPacket(NamedTuple):
    user: int
    snr_linear: float


def stage_rng(master_seed, replication, stage):
    ss = np.random.SeedSequence(master_seed, spawn_key=(replication, stage))
    return np.random.default_rng(ss)


# -- single-slot protocol ----------------------------------------------------

def activate_users(U, p_a, rng):
    """Indices of the users that transmit in this slot (Bernoulli(p_a) each)."""
    if not 0.0 <= p_a <= 1.0:
        raise ValueError(f"p_a must lie in [0, 1], got {p_a}")
    return np.flatnonzero(rng.random(U) < p_a)


def owc_slot_decode(active_users, cell, radio, M, rng, derived=None):
    """Packets the AP decodes in one OWC slot, strongest first, at most M."""
    if M < 1:
        raise ValueError("M must be >= 1")
    active_users = list(active_users)
    if not active_users:
        return []
    if derived is None:
        derived = OwcDerived.from_configs(cell, radio)
    r = sample_user_radius(cell.cell_radius_m, rng, len(active_users))
    snr = np.atleast_1d(snr_owc(radio, channel_gain(cell, derived, r)))
    survivors = [OwcPacket(int(u), float(g)) for u, g in zip(active_users, snr)
                 if g >= radio.capture_threshold_linear]
    survivors.sort(key=lambda p: (-p.snr_linear, p.user))
    return survivors[:M]


def assign_rf_slots(decoded, M, rng):
    """Spread each cell's packets over distinct RF slots, uniformly at random.

    ``decoded`` is a list (one entry per cell) of packet lists. Returns a dict
    mapping every RF slot index to its ``(cell, packet)`` pairs.
    """
    slots = {s: [] for s in range(M)}
    for cell, packets in enumerate(decoded):
        if len(packets) > M:
            raise AssignmentError(
                f"cell {cell} offers {len(packets)} packets for {M} RF slots")
        chosen = rng.permutation(M)[:len(packets)]
        for slot, pkt in zip(chosen, packets):
            slots[int(slot)].append((cell, pkt))
    return slots


def rf_frame_decode(assignment, lora_cfg, rng, distances_m=None):
    """Decode every RF slot of one frame at the BS; returns the winners."""
    winners = []
    for slot in sorted(assignment):
        packets = []
        for cell, pkt in assignment[slot]:
            d = None if distances_m is None else distances_m[cell]
            gain = lora_cfg.path_gain(d)
            fading = float(_lora.sample_rayleigh_power_gain(rng))
            packets.append(_lora.make_rf_packet(lora_cfg, cell, _user_of(pkt), gain, fading))
        best = _lora.decode_rf_slot(packets, lora_cfg)
        if best is not None:
            winners.append(best)
    return winners


def _user_of(pkt):
    return pkt.user if isinstance(pkt, OwcPacket) else int(pkt)


@dataclass
class SlotTrace:
    activated: list
    capture_pass: list
    forwarded: list
    rf_slot_assignment: dict
    decoded_at_bs: int
    decoded: list = field(default_factory=list)

    def to_record(self):
        rec = asdict(self)
        rec["rf_slot_assignment"] = {str(k): v for k, v in self.rf_slot_assignment.items()}
        return rec

    def to_json(self):
        return json.dumps(self.to_record(), separators=(",", ":"))


# -- batch path --------------------------------------------------------------

@dataclass
class SlotBatch:
    """Per-slot outcome arrays for a run of consecutive OWC slots.

    Shapes: ``activated``/``captured``/``forwarded`` are (n, K);
    ``occupancy`` is (n, M, K) with True where cell k sent into RF slot s;
    ``decoded`` and ``winner`` are (n, M).
    """

    activated: np.ndarray
    captured: np.ndarray
    forwarded: np.ndarray
    occupancy: np.ndarray
    decoded: np.ndarray
    winner: np.ndarray
    user_order: np.ndarray = None
    packet_rank: np.ndarray = None

    @property
    def decoded_per_slot(self):
        return self.decoded.sum(axis=1)


def iter_slot_batches(scenario, replication=0, num_slots=None, keep_users=False):
    """Yield ``SlotBatch`` chunks covering one replication."""
    K, U, M = scenario.num_cells, scenario.users_per_cell, scenario.multirate_factor
    cell, radio, lcfg = scenario.owc_cell, scenario.owc_radio, scenario.lora
    derived = OwcDerived.from_configs(cell, radio)
    seed = scenario.master_seed
    rng_act = stage_rng(seed, replication, _STAGE_ACTIVATION)
    rng_pos = stage_rng(seed, replication, _STAGE_PLACEMENT)
    rng_asg = stage_rng(seed, replication, _STAGE_ASSIGNMENT)
    rng_fad = stage_rng(seed, replication, _STAGE_FADING)
    rng_dst = stage_rng(seed, replication, _STAGE_DISTANCE)

    distances = _lora.ap_distances(lcfg, K, rng_dst)
    mean_rx = lcfg.tx_power_W * np.asarray(lcfg.path_gain(distances))
    noise = lcfg.noise_power_W
    q = lcfg.sf_row.q_sf_linear
    eps = lcfg.sir_margin_linear
    gamma_th = radio.capture_threshold_linear

    remaining = scenario.num_owc_slots if num_slots is None else num_slots
    while remaining > 0:
        n = min(CHUNK_SLOTS, remaining)
        remaining -= n
        active = rng_act.random((n, K, U)) < scenario.activation_prob
        radius = sample_user_radius(cell.cell_radius_m, rng_pos, (n, K, U))
        snr = snr_owc(radio, channel_gain(cell, derived, radius))
        passed = active & (snr >= gamma_th)
        activated = active.sum(axis=2)
        captured = passed.sum(axis=2)
        forwarded = np.minimum(captured, M)

        # packet j (j-th strongest) goes to slot perm[j]; slot s holds rank[s]
        keys = rng_asg.random((n, K, M))
        rank = np.argsort(np.argsort(keys, axis=2), axis=2)
        occ = rank < forwarded[:, :, None]
        occupancy = occ.transpose(0, 2, 1)

        fading = _lora.sample_rayleigh_power_gain(rng_fad, (n, M, K))
        powers = np.where(occupancy, fading * mean_rx, 0.0)
        decoded, winner = _lora.decode_rf_power_batch(powers, noise, q, eps)

        batch = SlotBatch(activated, captured, forwarded, occupancy, decoded, winner)
        if keep_users:
            ranked = np.where(passed, snr, -np.inf)
            batch.user_order = np.argsort(-ranked, axis=2, kind="stable")
            batch.packet_rank = rank
        yield batch


def iter_slot_traces(scenario, replication=0, num_slots=None):
    """Per-slot ``SlotTrace`` records from the batch path (debug dumps)."""
    for b in iter_slot_batches(scenario, replication, num_slots, keep_users=True):
        n, K = b.activated.shape
        M = b.occupancy.shape[1]
        for i in range(n):
            assignment = {}
            decoded = []
            for s in range(M):
                entries = []
                for k in range(K):
                    if b.occupancy[i, s, k]:
                        user = int(b.user_order[i, k, b.packet_rank[i, k, s]])
                        entries.append((k, user))
                assignment[s] = entries
                if b.decoded[i, s]:
                    k = int(b.winner[i, s])
                    decoded.append((k, int(b.user_order[i, k, b.packet_rank[i, k, s]])))
            yield SlotTrace(
                activated=b.activated[i].tolist(),
                capture_pass=b.captured[i].tolist(),
                forwarded=b.forwarded[i].tolist(),
                rf_slot_assignment=assignment,
                decoded_at_bs=int(b.decoded[i].sum()),
                decoded=decoded,
            )


@dataclass(frozen=True)
class ReplicationCounts:
    activated: int
    captured: int
    forwarded: int
    decoded: int
    # sum over OWC slots of (decodes in that slot)^2, for the one-replication CI
    decoded_sq: int
    num_owc_slots: int
    multirate_factor: int

    @property
    def throughput(self):
        return self.decoded / (self.num_owc_slots * self.multirate_factor)


def simulate_replication(scenario, replication=0):
    tot = np.zeros(5, dtype=np.int64)
    for b in iter_slot_batches(scenario, replication):
        per_slot = b.decoded_per_slot
        tot += (b.activated.sum(), b.captured.sum(), b.forwarded.sum(),
                per_slot.sum(), (per_slot.astype(np.int64) ** 2).sum())
    return ReplicationCounts(*(int(x) for x in tot), scenario.num_owc_slots,
                             scenario.multirate_factor)


@dataclass(frozen=True)
class ThroughputStats:
    throughput_mean: float
    throughput_ci95: float
    activated: int
    captured: int
    forwarded: int
    decoded: int
    num_rf_slots_simulated: int
    replications: int
    per_replication: tuple = ()

    def as_dict(self):
        d = asdict(self)
        d["per_replication"] = list(self.per_replication)
        return d


def aggregate(counts):
    """Combine replication counts into ``ThroughputStats``.

    The mean is total decodes over total RF slots. The 95% half-width uses
    the spread of replication throughputs, or per-slot counts when there is
    only one replication.
    """
    counts = list(counts)
    if not counts:
        raise ValueError("no replications to aggregate")
    M = counts[0].multirate_factor
    rf_slots = sum(c.num_owc_slots * c.multirate_factor for c in counts)
    decoded = sum(c.decoded for c in counts)
    mean = decoded / rf_slots
    per_rep = tuple(c.throughput for c in counts)
    if len(counts) > 1:
        half = Z95 * float(np.std(per_rep, ddof=1)) / np.sqrt(len(counts))
    else:
        c = counts[0]
        n = c.num_owc_slots
        m1 = c.decoded / n
        var = max(c.decoded_sq / n - m1 * m1, 0.0) * n / max(n - 1, 1)
        half = Z95 * np.sqrt(var / n) / M
    return ThroughputStats(
        throughput_mean=mean,
        throughput_ci95=float(half),
        activated=sum(c.activated for c in counts),
        captured=sum(c.captured for c in counts),
        forwarded=sum(c.forwarded for c in counts),
        decoded=decoded,
        num_rf_slots_simulated=rf_slots,
        replications=len(counts),
        per_replication=per_rep,
    )


def run_simulation(scenario):
    """Simulate every replication of ``scenario`` and aggregate."""
    return aggregate(simulate_replication(scenario, r) for r in range(scenario.replications))
