"""Monte Carlo simulation of banded broadcast over finite random networks.

The continuum analytics assume infinitely dense nodes; this module drops
that assumption.  Nodes are scattered uniformly over a disk, the source
fires from the origin, and decoding proceeds in synchronous levels: a node
decodes when the summed power from the current level's relays crosses the
decode threshold, and it relays (once, immediately) if that power is also
below the transmission threshold.  Channels are either deterministic
power sums or Rayleigh-faded with an m-finger RAKE receiver over m delay
bins.  The headline estimate is the probability that a broadcast reaches
at least 99% of the nodes.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "SUCCESS_FRACTION",
    "NodeField",
    "ChannelModel",
    "TrialConfig",
    "TrialResult",
    "PsbEstimate",
    "generate_network",
    "received_power_deterministic",
    "received_power_fading",
    "run_trial",
    "estimate_psb",
    "psb_sweep",
]

# A broadcast succeeds when this fraction of all nodes decodes.
SUCCESS_FRACTION = 0.99

# Receiver rows are processed in blocks of this size to bound the distance
# matrix, independent of network size.
_BLOCK_ROWS = 4096

_WILSON_Z = 1.959963984540054  # two-sided 95%


@dataclass
class NodeField:
    """A realized network: node coordinates on a disk.

    density is the realized count / (pi * area_radius^2), which is what
    per-node power is derived from.
    """

    positions: np.ndarray
    area_radius: float
    density: float

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        if self.positions.ndim != 2 or self.positions.shape[1] != 2:
            raise ValueError("positions must be an (N, 2) array")

    def __len__(self) -> int:
        return self.positions.shape[0]


@dataclass(frozen=True)
class ChannelModel:
    """Link model: 'deterministic' power sums or 'rayleigh_rake' fading.

    diversity_order is the RAKE finger count m (ignored for the
    deterministic kind): each relay lands in one of m delay bins, and each
    finger collects one independently faded copy of its bin's power.
    """

    kind: str = "deterministic"
    diversity_order: int = 1

    def __post_init__(self):
        if self.kind not in ("deterministic", "rayleigh_rake"):
            raise ValueError("kind must be 'deterministic' or 'rayleigh_rake'")
        if self.kind == "rayleigh_rake" and not (1 <= self.diversity_order <= 4):
            raise ValueError("diversity_order must be in [1, 4]")


def _normalize_epsilon(eps) -> tuple[float, ...]:
    if isinstance(eps, (int, float)):
        values = (float(eps),)
    else:
        values = tuple(float(v) for v in eps)
        if not values:
            raise ValueError("epsilon schedule must not be empty")
    for v in values:
        if math.isnan(v) or v < 0.0:
            raise ValueError("epsilon entries must be >= 0 (math.inf allowed)")
    return values


@dataclass(frozen=True)
class TrialConfig:
    """Everything one broadcast trial needs besides the RNG.

    epsilon follows the schedule convention of the analytical model: a
    scalar applies everywhere, a sequence is extended with its last value,
    and math.inf means every decoder relays.  Exactly one of density or
    node_count selects the field size; per-node relay power is always
    relay_power_density / realized density.
    """

    source_power: float = 3.0
    decode_threshold: float = 1.0
    relay_power_density: float = 1.25
    epsilon: float | tuple[float, ...] = math.inf
    density: float | None = None
    node_count: int | None = None
    area_radius: float = 17.0
    channel: ChannelModel = ChannelModel()
    max_levels: int = 200
    rng_seed: int = 0

    def __post_init__(self):
        if not (self.source_power > 0.0 and self.decode_threshold > 0.0):
            raise ValueError("source_power and decode_threshold must be > 0")
        if not (self.relay_power_density > 0.0):
            raise ValueError("relay_power_density must be > 0")
        if not (self.area_radius > 0.0):
            raise ValueError("area_radius must be > 0")
        if (self.density is None) == (self.node_count is None):
            raise ValueError("set exactly one of density or node_count")
        if self.max_levels < 1:
            raise ValueError("max_levels must be >= 1")
        object.__setattr__(self, "epsilon", _normalize_epsilon(self.epsilon))

    def epsilon_at(self, level: int) -> float:
        if level < 1:
            raise ValueError("level index starts at 1")
        eps = self.epsilon
        return eps[min(level - 1, len(eps) - 1)]


@dataclass
class TrialResult:
    """Outcome of one broadcast trial."""

    decoded_fraction: float
    levels: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)
    success: bool = False
    total_transmit_energy: float = 0.0


@dataclass(frozen=True)
class PsbEstimate:
    """Success-probability estimate with a 95% Wilson interval half-width."""

    psb: float
    trials: int
    wilson_halfwidth: float


def generate_network(
    rng: np.random.Generator,
    density: float | None,
    area_radius: float,
    fixed_count: int | None = None,
) -> NodeField:
    """Scatter nodes i.i.d. uniformly over a disk centered at the origin.

    Args:
        rng: source of randomness.
        density: nodes per unit area; ignored when fixed_count is given.
        area_radius: disk radius.
        fixed_count: exact node count; None derives round(density*pi*R^2).

    Returns:
        NodeField with the realized density.
    """
    if fixed_count is not None:
        count = int(fixed_count)
        if count < 1:
            raise ValueError("fixed_count must be >= 1")
    else:
        if density is None or not (density > 0.0):
            raise ValueError("density must be > 0 when fixed_count is not given")
        count = int(round(density * math.pi * area_radius**2))
    # Uniform on a disk: radius by inverse CDF, angle uniform.
    radii = area_radius * np.sqrt(rng.random(count))
    theta = rng.random(count) * 2.0 * math.pi
    positions = np.column_stack([radii * np.cos(theta), radii * np.sin(theta)])
    realized = count / (math.pi * area_radius**2)
    return NodeField(positions=positions, area_radius=area_radius, density=realized)


def _clipped_gain(d2: np.ndarray) -> np.ndarray:
    """Per-link gain min(1/d^2, 1): inverse-square with a near-field clip."""
    d2 = np.maximum(d2, 0.0)
    out = np.ones_like(d2)
    far = d2 > 1.0
    out[far] = 1.0 / d2[far]
    return out


def _pairwise_d2(receivers: np.ndarray, transmitters: np.ndarray) -> np.ndarray:
    rr = np.einsum("ij,ij->i", receivers, receivers)
    tt = np.einsum("ij,ij->i", transmitters, transmitters)
    return rr[:, None] + tt[None, :] - 2.0 * receivers @ transmitters.T


def received_power_deterministic(
    receiver: np.ndarray,
    transmitters: np.ndarray,
    per_node_power: float,
) -> float:
    """Summed clipped inverse-square power at one receiver.

    Args:
        receiver: (2,) position.
        transmitters: (T, 2) positions.
        per_node_power: transmit power of each node.

    Returns:
        sum_i per_node_power * min(1/d_i^2, 1).
    """
    transmitters = np.atleast_2d(np.asarray(transmitters, dtype=float))
    if transmitters.shape[0] == 0:
        return 0.0
    d2 = _pairwise_d2(np.asarray(receiver, dtype=float)[None, :], transmitters)[0]
    return float(per_node_power * _clipped_gain(d2).sum())


def received_power_fading(
    receiver: np.ndarray,
    transmitters: np.ndarray,
    per_node_power: float,
    m: int,
    rng: np.random.Generator,
) -> float:
    """One faded-RAKE realization of the received power.

    Every transmitter picks one of m delay bins uniformly at random.  The
    transmissions inside a bin add non-coherently into that finger, whose
    output is the bin's aggregate power scaled by a unit-mean exponential
    fade; fingers combine by summation.  The expectation over fading
    equals the deterministic power for any geometry and any m.

    Args:
        receiver: (2,) position.
        transmitters: (T, 2) positions.
        per_node_power: transmit power of each node.
        m: finger / delay-bin count, 1..4.
        rng: source of randomness.

    Returns:
        One random realization of the received power.
    """
    if not (1 <= m <= 4):
        raise ValueError("m must be in [1, 4]")
    transmitters = np.atleast_2d(np.asarray(transmitters, dtype=float))
    if transmitters.shape[0] == 0:
        return 0.0
    d2 = _pairwise_d2(np.asarray(receiver, dtype=float)[None, :], transmitters)[0]
    gains = per_node_power * _clipped_gain(d2)
    bins = rng.integers(0, m, size=transmitters.shape[0])
    finger_power = np.array([gains[bins == j].sum() for j in range(m)])
    fades = rng.exponential(size=m)
    return float((finger_power * fades).sum())


def _level_powers(
    receivers: np.ndarray,
    transmitters: np.ndarray,
    per_node_power: float,
    channel: ChannelModel,
    rng: np.random.Generator,
) -> np.ndarray:
    """Received power at every receiver from one level's relay set."""
    n = receivers.shape[0]
    out = np.empty(n)
    if channel.kind == "rayleigh_rake":
        m = channel.diversity_order
        bins = rng.integers(0, m, size=transmitters.shape[0])
        fades = rng.exponential(size=(n, m))
        groups = [transmitters[bins == j] for j in range(m)]
        for start in range(0, n, _BLOCK_ROWS):
            stop = min(start + _BLOCK_ROWS, n)
            block = receivers[start:stop]
            power = np.zeros(stop - start)
            for j, group in enumerate(groups):
                if group.shape[0] == 0:
                    continue
                d2 = _pairwise_d2(block, group)
                finger = per_node_power * _clipped_gain(d2).sum(axis=1)
                power += finger * fades[start:stop, j]
            out[start:stop] = power
    else:
        for start in range(0, n, _BLOCK_ROWS):
            stop = min(start + _BLOCK_ROWS, n)
            d2 = _pairwise_d2(receivers[start:stop], transmitters)
            out[start:stop] = per_node_power * _clipped_gain(d2).sum(axis=1)
    return out


def run_trial(field: NodeField, config: TrialConfig, rng: np.random.Generator) -> TrialResult:
    """Run one synchronous-level broadcast over a realized network.

    Level 1 decodes off the source alone; every later level decodes off
    the previous level's relay set only.  A node relays at the moment it
    decodes, iff its received power is under the level's transmission
    threshold; nodes never relay twice.  Fading, when enabled, is redrawn
    independently at every level.

    Args:
        field: node positions.
        config: protocol and channel parameters.
        rng: source of randomness (fading only; geometry is in `field`).

    Returns:
        TrialResult; a broadcast that dies early is a result, not an error.
    """
    pos = field.positions
    n = len(field)
    tau_d = config.decode_threshold
    per_node_power = config.relay_power_density / field.density

    decoded = np.zeros(n, dtype=bool)
    levels: list[tuple[np.ndarray, np.ndarray]] = []
    relay_count = 0

    # Level 1: the source transmits alone from the origin.
    d2 = np.einsum("ij,ij->i", pos, pos)
    power = config.source_power * _clipped_gain(d2)
    dec_mask = power >= tau_d
    dec_idx = np.flatnonzero(dec_mask)
    level = 1
    while dec_idx.size > 0:
        tau_b = tau_d + config.epsilon_at(level)
        relay_idx = dec_idx[power[dec_idx] < tau_b]
        decoded[dec_idx] = True
        levels.append((dec_idx, relay_idx))
        relay_count += relay_idx.size
        if level >= config.max_levels or relay_idx.size == 0:
            break
        undecoded = np.flatnonzero(~decoded)
        if undecoded.size == 0:
            break
        level += 1
        power = np.full(n, -1.0)
        power[undecoded] = _level_powers(
            pos[undecoded], pos[relay_idx], per_node_power, config.channel, rng
        )
        dec_idx = undecoded[power[undecoded] >= tau_d]

    fraction = decoded.sum() / n
    return TrialResult(
        decoded_fraction=float(fraction),
        levels=levels,
        success=bool(fraction >= SUCCESS_FRACTION),
        total_transmit_energy=float(config.source_power + per_node_power * relay_count),
    )


def _wilson_halfwidth(successes: int, trials: int) -> float:
    z2 = _WILSON_Z**2
    p = successes / trials
    denom = 1.0 + z2 / trials
    spread = _WILSON_Z * math.sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials**2))
    return spread / denom


def _trial_rng(master_seed: int, spawn_key: tuple[int, ...]) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=spawn_key))


def _run_one(config: TrialConfig, master_seed: int, spawn_key: tuple[int, ...]) -> bool:
    rng = _trial_rng(master_seed, spawn_key)
    net = generate_network(rng, config.density, config.area_radius, config.node_count)
    return run_trial(net, config, rng).success


def estimate_psb(
    config: TrialConfig,
    num_trials: int,
    master_seed: int | None = None,
    threads: int = 1,
    _spawn_prefix: tuple[int, ...] = (),
) -> PsbEstimate:
    """Estimate the probability of successful broadcast.

    Every trial draws a fresh network and fresh fading from its own RNG
    stream, derived from (master_seed, trial index), so the estimate is
    reproducible and independent of thread scheduling.

    Args:
        config: trial parameters.
        num_trials: number of independent trials, >= 1.
        master_seed: seed; None uses config.rng_seed.
        threads: worker threads; 0 picks the CPU count.

    Returns:
        PsbEstimate over num_trials trials.
    """
    if num_trials < 1:
        raise ValueError("num_trials must be >= 1")
    if master_seed is None:
        master_seed = config.rng_seed
    if threads == 0:
        threads = os.cpu_count() or 1
    keys = [_spawn_prefix + (i,) for i in range(num_trials)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(lambda k: _run_one(config, master_seed, k), keys))
    else:
        outcomes = [_run_one(config, master_seed, k) for k in keys]
    successes = sum(outcomes)
    return PsbEstimate(
        psb=successes / num_trials,
        trials=num_trials,
        wilson_halfwidth=_wilson_halfwidth(successes, num_trials),
    )


def _apply_rtt(config: TrialConfig, rtt_db: float) -> TrialConfig:
    """Threshold schedule for a given relative transmission threshold.

    The offset eps = tau_d * (10^(RTT/10) - 1) applies from level 2 on;
    level 1 keeps the configured value.
    """
    eps = config.decode_threshold * (10.0 ** (rtt_db / 10.0) - 1.0)
    return replace(config, epsilon=(config.epsilon_at(1), eps))


def _apply_variant(config: TrialConfig, variant_kind: str, value: float) -> TrialConfig:
    if variant_kind == "density":
        return replace(config, density=float(value), node_count=None)
    if variant_kind == "diversity":
        if int(value) == 0:
            return replace(config, channel=ChannelModel(kind="deterministic"))
        return replace(
            config, channel=ChannelModel(kind="rayleigh_rake", diversity_order=int(value))
        )
    raise ValueError("variant_kind must be 'density' or 'diversity'")


def psb_sweep(
    base: TrialConfig,
    rtt_grid_db: list[float],
    variants: list[float],
    trials: int,
    master_seed: int,
    variant_kind: str = "density",
    threads: int = 1,
) -> list[dict]:
    """PSB over a grid of transmission thresholds and protocol variants.

    Args:
        base: shared trial parameters.
        rtt_grid_db: relative transmission threshold grid, in dB.
        variants: density values (variant_kind 'density') or RAKE finger
            counts (variant_kind 'diversity'; 0 selects the deterministic
            channel).
        trials: trials per grid cell.
        master_seed: seed; each cell derives disjoint per-trial streams.
        variant_kind: which knob the variants move.
        threads: worker threads per cell; 0 picks the CPU count.

    Returns:
        One dict per (rtt, variant) cell with keys rtt_db, variant, psb,
        halfwidth, trials, seed.
    """
    if not rtt_grid_db or not variants:
        raise ValueError("rtt_grid_db and variants must be non-empty")
    rows: list[dict] = []
    cell = 0
    for rtt in rtt_grid_db:
        for variant in variants:
            config = _apply_variant(_apply_rtt(base, rtt), variant_kind, variant)
            est = estimate_psb(
                config, trials, master_seed, threads=threads, _spawn_prefix=(cell,)
            )
            rows.append(
                {
                    "rtt_db": float(rtt),
                    "variant": float(variant),
                    "psb": est.psb,
                    "halfwidth": est.wilson_halfwidth,
                    "trials": est.trials,
                    "seed": master_seed,
                }
            )
            cell += 1
    return rows
