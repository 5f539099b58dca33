"""End-to-end acceptance checks.

Each test pins one advertised capability of the package with explicit
tolerances and runtime budgets; together they are the release gate.
"""

import math
import time

import numpy as np
import pytest
from scipy import integrate, optimize as sp_optimize

from olasim.cli import main as cli_main
from olasim.continuum import (
    PI_LN2,
    ContinuumParams,
    aggregate_path_loss,
    broadcast_sustains,
    closed_form_coefficients,
    closed_form_ring,
    epsilon_min,
    fes,
    mrtt_curve,
    next_ring,
    propagate,
)
from olasim.discretesim import ChannelModel, TrialConfig, estimate_psb, _apply_rtt
from olasim.units import (
    EXAMPLE_LINK_BUDGETS,
    decoding_ratio_2p4ghz,
    nearest_neighbor_distance,
)
from olasim.varthresh import ConstraintSpec, OptimizerConfig, fes_profile, optimize


def test_closed_form_ring_matches_iterated_recursion_on_1000_random_sets():
    """Closed-form level radii equal the recursion for k <= 50, 1e-9, < 5 s."""
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    checked = 0
    while checked < 1000:
        dr = rng.uniform(0.05, PI_LN2 * 0.98)
        em = epsilon_min(dr, 1.0)
        lo = em * 1.01
        if lo >= 5.0:
            continue  # the offset range is empty for near-limit ratios
        eps = rng.uniform(lo, 5.0)
        ps = rng.uniform(0.5, 10.0)
        params = ContinuumParams(
            relay_power_density=1.0, decode_threshold=dr, source_power=ps, epsilon=eps
        )
        tau_b = dr + eps
        state = (ps / tau_b, ps / dr)
        for k in range(1, 51):
            if k > 1:
                state = next_ring(state, dr, tau_b, 1.0)
            rb2, rd2 = closed_form_ring(params, k)
            assert abs(rd2 - state[1]) <= 1e-9 * state[1], (dr, eps, ps, k)
            assert abs(rb2 - state[0]) <= 1e-9 * state[0], (dr, eps, ps, k)
        checked += 1
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0, f"1000-set sweep took {elapsed:.2f}s"


def test_aggregate_path_loss_matches_double_integration_on_100_pairs():
    """Analytic disc loss equals adaptive 2-D quadrature to 1e-6."""
    rng = np.random.default_rng(7)
    for _ in range(100):
        r0 = rng.uniform(0.2, 4.0)
        p = r0 * rng.uniform(1.05, 8.0)

        def integrand(theta, r):
            return r / (r * r + p * p - 2.0 * r * p * math.cos(theta))

        numeric, _ = integrate.dblquad(
            integrand, 0.0, r0, 0.0, 2.0 * math.pi, epsabs=1e-10, epsrel=1e-10
        )
        analytic = aggregate_path_loss(r0, p)
        assert abs(analytic - numeric) <= 1e-6 * max(1.0, abs(numeric)), (r0, p)


def test_minimum_offset_agrees_with_bisection_and_reference_threshold():
    """Closed-form minimum offset = root of unit band ratio; MRTT(1) = 1.69 dB."""
    for dr in np.linspace(0.05, 2.1, 41):
        em = epsilon_min(float(dr), 1.0)

        def band_ratio_minus_one(eps, dr=float(dr)):
            params = ContinuumParams(
                relay_power_density=1.0, decode_threshold=dr, source_power=1.0, epsilon=eps
            )
            return closed_form_coefficients(params).a1 - 1.0

        root = sp_optimize.brentq(
            band_ratio_minus_one, 1e-12, max(10.0 * em, 1.0), xtol=1e-14, rtol=1e-15
        )
        assert abs(root - em) <= 1e-9 * max(1.0, em), dr
        # Sustainability flips within 0.1% of the minimum offset.
        assert not broadcast_sustains(float(dr), 0.999 * em, 1.0)
        assert broadcast_sustains(float(dr), 1.001 * em, 1.0)
    ((_, mrtt_db),) = mrtt_curve([1.0])
    assert mrtt_db == pytest.approx(1.69, abs=0.01)
    assert abs(mrtt_db - 1.8) <= 0.2  # and inside the coarser sanity band


def test_energy_saving_reference_points():
    """FES(0.5)=0.25, FES(0.01)=0.32 (both +/-0.02); level dependence < 0.005."""
    start = time.perf_counter()
    half = ContinuumParams(
        relay_power_density=1.0, decode_threshold=0.5, source_power=1.0,
        epsilon=epsilon_min(0.5, 1.0),
    )
    sparse = ContinuumParams(
        relay_power_density=1.0, decode_threshold=0.01, source_power=1.0,
        epsilon=epsilon_min(0.01, 1.0),
    )
    assert fes(half, 100) == pytest.approx(0.25, abs=0.02)
    assert fes(sparse, 100) == pytest.approx(0.32, abs=0.02)
    assert abs(fes(half, 50) - fes(half, 100)) < 0.005
    assert time.perf_counter() - start < 1.0


def test_long_run_fixed_offset_anchor():
    """DR 0.9 at the minimum sustaining offset: radius 25 at level 150 +/- 5,
    and a two-level broadcast saves ~25% at radius ~3."""
    params = ContinuumParams(
        relay_power_density=1.0, decode_threshold=0.9, source_power=4.31,
        epsilon=epsilon_min(0.9, 1.0),
    )
    rings = propagate(params, 200)
    crossing = next(
        (k + 1 for k, ring in enumerate(rings.rings) if ring.outer_radius > 25.0), None
    )
    assert crossing is not None
    assert abs(crossing - 150) <= 5
    assert fes(params, 2) == pytest.approx(0.25, abs=0.02)
    assert rings.rings[1].outer_radius == pytest.approx(3.0, abs=0.1)


def test_variable_threshold_optimizer_reaches_target_savings():
    """Schedule search: acceleration-constrained final FES >= 0.25; radius-25
    schedules with 10 and 20 levels reach final FES >= 0.15; < 2 min each."""
    params = ContinuumParams(
        relay_power_density=1.0, decode_threshold=0.9, source_power=4.31
    )
    start = time.perf_counter()
    res1 = optimize(params, ConstraintSpec(kind="type1", levels=20), OptimizerConfig(rng_seed=1))
    assert time.perf_counter() - start < 120.0
    assert fes_profile(res1.rings, params)[-1][1] >= 0.25

    for levels in (10, 20):
        start = time.perf_counter()
        res2 = optimize(
            params,
            ConstraintSpec(kind="type2", levels=levels, network_radius=25.0),
            OptimizerConfig(rng_seed=1),
        )
        assert time.perf_counter() - start < 120.0
        assert res2.rings.rings[-1].outer_radius > 25.0
        assert fes_profile(res2.rings, params)[-1][1] >= 0.15


def _continuum_coverage_step(rtt_db: float, area_radius: float) -> int:
    """1 if the infinite-density model covers the area radius, else 0."""
    eps = 1.0 * (10.0 ** (rtt_db / 10.0) - 1.0)
    params = ContinuumParams(
        relay_power_density=1.25, decode_threshold=1.0, source_power=3.0,
        epsilon=(2.5, eps),
    )
    rings = propagate(params, 300)
    return int(any(r.outer_radius >= area_radius for r in rings.rings))


def test_success_probability_transition_at_density_10():
    """400-trial PSB at density 10, radius 17: <= 0.05 one dB under the
    minimum threshold, >= 0.95 one dB over, never above continuum + 3 sigma;
    < 10 min."""
    start = time.perf_counter()
    base = TrialConfig(
        source_power=3.0, decode_threshold=1.0, relay_power_density=1.25,
        epsilon=2.5, density=10.0, area_radius=17.0,
        channel=ChannelModel(kind="deterministic"), rng_seed=0,
    )
    mrtt_db = 10.0 * math.log10(1.0 + epsilon_min(1.0, 1.25))
    results = {}
    for offset in (-1.0, +1.0):
        cfg = _apply_rtt(base, mrtt_db + offset)
        est = estimate_psb(cfg, 400, master_seed=0, threads=4)
        step = _continuum_coverage_step(mrtt_db + offset, base.area_radius)
        sigma = math.sqrt(max(est.psb * (1.0 - est.psb), 1e-12) / est.trials)
        assert est.psb <= step + 3.0 * sigma, (offset, est.psb, step)
        results[offset] = est.psb
    assert results[-1.0] <= 0.05
    assert results[+1.0] >= 0.95
    assert time.perf_counter() - start < 600.0


def test_fading_with_diversity_approaches_deterministic():
    """1500 nodes, 100 realizations: 3-finger fading tracks the deterministic
    channel within 0.1 wherever the latter is saturated, and single-finger
    fading never beats 4 fingers; < 15 min."""
    start = time.perf_counter()
    mrtt_db = 10.0 * math.log10(1.0 + epsilon_min(1.0, 1.25))

    def config(m: int | None, rtt_db: float) -> TrialConfig:
        channel = (
            ChannelModel(kind="deterministic")
            if m is None
            else ChannelModel(kind="rayleigh_rake", diversity_order=m)
        )
        cfg = TrialConfig(
            source_power=3.0, decode_threshold=1.0, relay_power_density=1.25,
            epsilon=2.5, node_count=1500, area_radius=17.0,
            channel=channel, rng_seed=0,
        )
        return _apply_rtt(cfg, rtt_db)

    extremes_seen = 0
    for offset in (-1.0, 0.0, 2.0, 3.0):
        rtt_db = mrtt_db + offset
        estimates = {
            m: estimate_psb(config(m, rtt_db), 100, master_seed=0, threads=4)
            for m in (None, 1, 3, 4)
        }
        det = estimates[None].psb
        if det <= 0.05 or det >= 0.95:
            extremes_seen += 1
            assert abs(estimates[3].psb - det) <= 0.1, (offset, estimates[3].psb, det)
        sigma = math.sqrt(
            (estimates[1].wilson_halfwidth / 1.96) ** 2
            + (estimates[4].wilson_halfwidth / 1.96) ** 2
        )
        assert estimates[1].psb <= estimates[4].psb + 2.0 * sigma, offset
    assert extremes_seen >= 2  # the saturation check must not be vacuous
    assert time.perf_counter() - start < 900.0


def test_physical_link_budget_table():
    """All five bundled link budgets reproduce DR within 0.005 and the
    nearest-neighbor distance within 0.01 m."""
    assert len(EXAMPLE_LINK_BUDGETS) == 5
    for label, params, expected_dr, expected_dnn in EXAMPLE_LINK_BUDGETS:
        assert decoding_ratio_2p4ghz(params) == pytest.approx(expected_dr, abs=5e-3), label
        assert nearest_neighbor_distance(params.node_density_per_m2) == pytest.approx(
            expected_dnn, abs=1e-2
        ), label


def test_seeded_runs_are_byte_identical_across_threads(tmp_path):
    """`psb` and `optimize` outputs (and manifests) are byte-identical over
    repeated runs and across --threads 1 / --threads 8."""

    def run(args, name):
        out = tmp_path / name
        assert cli_main(args + ["--out", str(out)]) == 0
        return out.read_bytes() + (tmp_path / (name + ".manifest.json")).read_bytes()

    psb_args = [
        "--seed", "11", "psb", "--density", "2", "--area-radius", "6",
        "--rtt-grid-db", "0.3,2.3", "--variants", "2", "--trials", "25",
    ]
    baseline = run(["--threads", "1"] + psb_args, "psb.csv")
    assert run(["--threads", "1"] + psb_args, "psb.csv") == baseline
    assert run(["--threads", "8"] + psb_args, "psb.csv") == baseline

    opt_args = [
        "--seed", "1", "optimize", "--kind", "type2", "--levels", "10",
        "--network-radius", "25", "--decode-threshold", "0.9",
        "--relay-power-density", "1", "--source-power", "4.31",
    ]
    baseline = run(["--threads", "1"] + opt_args, "opt.json")
    assert run(["--threads", "1"] + opt_args, "opt.json") == baseline
    assert run(["--threads", "8"] + opt_args, "opt.json") == baseline
