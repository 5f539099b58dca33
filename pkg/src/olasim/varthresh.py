"""Per-level transmission-threshold optimization (OLA-VT).

Giving every decoding level its own threshold offset eps_k turns the
banded broadcast into a 20-or-so dimensional design problem: minimize the
radiated energy subject to either a growth-shape constraint (the outer
radii must eventually accelerate) or a coverage constraint (a fixed level
budget must reach a given network radius).  A real-coded genetic algorithm
searches the schedule space; infeasible schedules are admitted with a
penalty so the population can travel through them.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .continuum import (
    PI_LN2,
    ContinuumParams,
    RingSequence,
    epsilon_min,
    propagate,
)

__all__ = [
    "EpsilonSchedule",
    "ConstraintSpec",
    "OptimizerConfig",
    "OptimizationResult",
    "NoFeasibleSolutionError",
    "double_difference",
    "evaluate",
    "optimize",
    "fes_profile",
]

# Search-space bounds relative to the decode threshold.
EPS_FLOOR_FACTOR = 1e-3
EPS_CAP_FACTOR = 20.0

# Constraint checks on the growth shape start at this level.
DD_FIRST_LEVEL = 4


class NoFeasibleSolutionError(RuntimeError):
    """Raised when the optimizer finds no feasible schedule at all."""


@dataclass(frozen=True)
class EpsilonSchedule:
    """An ordered per-level threshold-offset assignment."""

    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ValueError("schedule must have at least one level")
        if any(math.isnan(v) or v < 0.0 for v in vals):
            raise ValueError("schedule entries must be >= 0")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class ConstraintSpec:
    """What a feasible schedule must achieve.

    kind "type1": survive `levels` levels with accelerating outer-radius
    growth (double difference > 0) from level DD_FIRST_LEVEL through the
    last level where it is defined.  kind "type2": survive `levels` levels
    and push the final outer radius beyond `network_radius`.
    """

    kind: str
    levels: int
    network_radius: float | None = None

    def __post_init__(self):
        if self.kind not in ("type1", "type2"):
            raise ValueError("kind must be 'type1' or 'type2'")
        if self.levels < 1:
            raise ValueError("levels must be >= 1")
        if self.kind == "type2":
            if self.network_radius is None or not (self.network_radius > 0.0):
                raise ValueError("type2 requires network_radius > 0")
        elif self.network_radius is not None:
            raise ValueError("type1 takes no network_radius")


@dataclass(frozen=True)
class OptimizerConfig:
    """Genetic-algorithm hyperparameters.

    penalty_weight None is replaced at run time by 1e3 times the energy of
    the constant near-minimum-offset baseline schedule, which is also
    always injected into the initial population.
    """

    population_size: int = 64
    generations: int = 200
    crossover_rate: float = 0.8
    mutation_rate: float = 0.15
    mutation_scale: float | None = None  # None: 0.1 * eps_min of the params
    elitism_count: int = 2
    penalty_weight: float | None = None
    rng_seed: int = 1

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        if not (0.0 <= self.crossover_rate <= 1.0 and 0.0 <= self.mutation_rate <= 1.0):
            raise ValueError("rates must lie in [0, 1]")
        if not (0 <= self.elitism_count < self.population_size):
            raise ValueError("elitism_count must be in [0, population_size)")


@dataclass
class OptimizationResult:
    """Best schedule found and its provenance.

    generation_trace records the best (penalized) fitness seen up to each
    generation; with elitism it is non-increasing.
    """

    best_schedule: EpsilonSchedule
    best_energy: float
    rings: RingSequence
    fes_profile: list[tuple[float, float]] = field(default_factory=list)
    generation_trace: list[float] = field(default_factory=list)


def double_difference(rings: RingSequence, k: int) -> float:
    """Second difference of the outer radii at level k (1-based).

    DD_k = (r_d,k+2 - r_d,k+1) - (r_d,k+1 - r_d,k); positive values mean
    the ring growth is accelerating.

    Args:
        rings: at least k + 2 formed levels.
        k: 1-based level index, >= 1.

    Returns:
        The double difference.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(rings) < k + 2:
        raise IndexError(f"double difference at k={k} needs {k + 2} rings, have {len(rings)}")
    r = rings.rings
    r0 = r[k - 1].outer_radius
    r1 = r[k].outer_radius
    r2 = r[k + 1].outer_radius
    return (r2 - r1) - (r1 - r0)


def _ring_energy(rings: RingSequence, relay_power_density: float) -> float:
    """Radiated energy of the formed levels: Pr_bar * sum of band areas."""
    return relay_power_density * math.pi * sum(rings.band_areas_sq())


def _dd_range(levels: int) -> range:
    return range(DD_FIRST_LEVEL, levels - 1)  # k = 4 .. levels-2 inclusive


def evaluate(
    schedule: EpsilonSchedule,
    params: ContinuumParams,
    constraint: ConstraintSpec,
) -> tuple[float, bool, RingSequence]:
    """Propagate a schedule and judge it against a constraint.

    Args:
        schedule: per-level offsets, length equal to constraint.levels.
        params: broadcast parameters whose epsilon field is ignored in
            favor of the schedule.
        constraint: feasibility definition.

    Returns:
        (energy, feasible, rings): energy is the radiated energy of the
        levels that actually formed; infeasibility is reported through the
        flag, never an exception.
    """
    if len(schedule) != constraint.levels:
        raise ValueError(
            f"schedule length {len(schedule)} != constraint levels {constraint.levels}"
        )
    run = ContinuumParams(
        relay_power_density=params.relay_power_density,
        decode_threshold=params.decode_threshold,
        source_power=params.source_power,
        epsilon=schedule.values,
    )
    rings = propagate(run, constraint.levels)
    energy = _ring_energy(rings, params.relay_power_density)
    survived = len(rings) == constraint.levels
    if not survived:
        return energy, False, rings
    if constraint.kind == "type1":
        feasible = all(double_difference(rings, k) > 0.0 for k in _dd_range(constraint.levels))
    else:
        feasible = rings.rings[-1].outer_radius > constraint.network_radius
    return energy, feasible, rings


def _violation(rings: RingSequence, constraint: ConstraintSpec) -> float:
    """Dimensionless measure of how far a schedule is from feasibility."""
    missing = (constraint.levels - len(rings)) / constraint.levels
    v = missing
    if constraint.kind == "type1":
        checks = [k for k in _dd_range(constraint.levels) if len(rings) >= k + 2]
        if checks:
            bad = sum(1 for k in checks if double_difference(rings, k) <= 0.0)
            v += bad / len(checks)
    else:
        reached = rings.rings[-1].outer_radius
        v += max(0.0, (constraint.network_radius - reached) / constraint.network_radius)
    return v


def _baseline_schedule(params: ContinuumParams, levels: int, lo: float, hi: float) -> EpsilonSchedule:
    em = epsilon_min(params.decode_threshold, params.relay_power_density)
    value = min(max(em * 1.05, lo), hi)
    return EpsilonSchedule((value,) * levels)


def optimize(
    params: ContinuumParams,
    constraint: ConstraintSpec,
    config: OptimizerConfig | None = None,
    threads: int = 1,
) -> OptimizationResult:
    """Search for the minimum-energy feasible schedule.

    Real-coded genetic algorithm: tournament selection (size 3), uniform
    crossover, per-gene Gaussian mutation clipped to the search bounds,
    elitism.  All random decisions are drawn from one seeded stream in a
    fixed order, and fitness evaluations are pure, so results are
    identical for any `threads` value.

    Args:
        params: broadcast parameters (the epsilon field is ignored).
        constraint: feasibility definition; also fixes the gene count.
        config: hyperparameters; None uses the defaults.
        threads: fitness-evaluation workers; 0 picks the CPU count.

    Returns:
        OptimizationResult with the best feasible schedule found.

    Raises:
        NoFeasibleSolutionError: if no evaluated schedule was feasible.
    """
    if config is None:
        config = OptimizerConfig()
    levels = constraint.levels
    tau_d = params.decode_threshold
    lo = EPS_FLOOR_FACTOR * tau_d
    hi = EPS_CAP_FACTOR * tau_d
    em = epsilon_min(tau_d, params.relay_power_density)
    scale = config.mutation_scale if config.mutation_scale is not None else 0.1 * em

    baseline = _baseline_schedule(params, levels, lo, hi)
    baseline_energy, _, _ = evaluate(baseline, params, constraint)
    penalty = (
        config.penalty_weight
        if config.penalty_weight is not None
        else 1e3 * max(baseline_energy, 1e-12)
    )

    rng = np.random.default_rng(np.random.SeedSequence(config.rng_seed))
    pop = rng.uniform(lo, hi, size=(config.population_size, levels))
    pop[0, :] = np.asarray(baseline.values)

    if threads == 0:
        threads = os.cpu_count() or 1

    def fitness_of(genes: np.ndarray) -> tuple[float, float, bool]:
        energy, feasible, rings = evaluate(EpsilonSchedule(tuple(genes)), params, constraint)
        fit = energy if feasible else energy + penalty * _violation(rings, constraint)
        return fit, energy, feasible

    def score(population: np.ndarray) -> list[tuple[float, float, bool]]:
        rows = [population[i] for i in range(population.shape[0])]
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                return list(pool.map(fitness_of, rows))
        return [fitness_of(r) for r in rows]

    best_fit = math.inf
    best_feasible: tuple[float, np.ndarray] | None = None  # (energy, genes)
    trace: list[float] = []

    scores = score(pop)
    for gen in range(config.generations):
        for i, (fit, energy, feasible) in enumerate(scores):
            if fit < best_fit:
                best_fit = fit
            if feasible and (best_feasible is None or energy < best_feasible[0]):
                best_feasible = (energy, pop[i].copy())
        trace.append(best_fit)
        if gen == config.generations - 1:
            break

        fits = np.array([s[0] for s in scores])
        order = np.argsort(fits, kind="stable")
        elite = pop[order[: config.elitism_count]].copy()

        # Tournament selection, size 3, for every parent slot.
        n_children = config.population_size - config.elitism_count
        picks = rng.integers(0, config.population_size, size=(2 * n_children, 3))
        parents = pop[picks[np.arange(2 * n_children), np.argmin(fits[picks], axis=1)]]

        mothers = parents[0::2]
        fathers = parents[1::2]
        cross = rng.random(n_children) < config.crossover_rate
        mask = rng.random((n_children, levels)) < 0.5
        children = np.where(mask, mothers, fathers)
        children[~cross] = mothers[~cross]

        mutate = rng.random((n_children, levels)) < config.mutation_rate
        noise = rng.normal(0.0, scale, size=(n_children, levels))
        children = np.clip(children + np.where(mutate, noise, 0.0), lo, hi)

        pop = np.vstack([elite, children])
        scores = score(pop)

    if best_feasible is None:
        raise NoFeasibleSolutionError(
            f"no feasible schedule found in {config.generations} generations "
            f"for {constraint.kind} with {levels} levels"
        )

    energy, genes = best_feasible
    schedule = EpsilonSchedule(tuple(genes))
    final_energy, feasible, rings = evaluate(schedule, params, constraint)
    assert feasible  # re-evaluation of the stored winner cannot regress
    return OptimizationResult(
        best_schedule=schedule,
        best_energy=final_energy,
        rings=rings,
        fes_profile=fes_profile(rings, params),
        generation_trace=trace,
    )


def fes_profile(rings: RingSequence, params: ContinuumParams) -> list[tuple[float, float]]:
    """Energy-saved-so-far as a piecewise-constant function of radius.

    The profile walks the boundary sequence r_b,1, r_d,1, r_b,2, r_d,2, ...
    The saving at r_b,1 is zero (nothing transmitted yet); at each outer
    radius r_d,k it is the k-level energy saving; at the next inner radius
    r_b,k+1 the previous value repeats, making band widths visible as flat
    steps.

    Args:
        rings: formed levels.
        params: supplies the decoding ratio for the reference protocol.

    Returns:
        List of (radius, FES) points.
    """
    if len(rings) == 0:
        raise ValueError("rings must contain at least one level")
    ratio = params.decoding_ratio / PI_LN2
    points: list[tuple[float, float]] = [(rings.rings[0].inner_radius, 0.0)]
    cum_band = 0.0
    for k, ring in enumerate(rings.rings, start=1):
        cum_band += ring.outer_radius**2 - ring.inner_radius**2
        value = 1.0 - cum_band / (ratio * ring.outer_radius**2)
        points.append((ring.outer_radius, value))
        if k < len(rings):
            points.append((rings.rings[k].inner_radius, value))
    return points
