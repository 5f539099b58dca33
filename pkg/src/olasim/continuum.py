"""Continuum model of Opportunistic Large Array (OLA) broadcast.

In the continuum limit the node density goes to infinity while the relay
transmit power per unit area stays fixed, so the power received from a set
of relays becomes an area integral over the annular band they occupy.
With inverse-square path loss that integral has a closed form, and the
per-level decoding and relaying boundaries obey a linear recursion in the
squared radii.  This module implements that recursion, its closed-form
solution, the sustainability conditions, and the transmit-energy
comparison against the single-threshold (Basic OLA) reference.

Conventions: distances are normalized so the received power from a single
node at unit distance equals its transmit power; thresholds and power
densities are linear (not dB) unless a name says otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

__all__ = [
    "PI_LN2",
    "ContinuumParams",
    "Ring",
    "RingSequence",
    "ClosedFormCoefficients",
    "BroadcastDied",
    "InfeasibleError",
    "aggregate_path_loss",
    "basic_ola_max_decode_threshold",
    "beta",
    "alpha",
    "next_ring",
    "propagate",
    "closed_form_coefficients",
    "closed_form_ring",
    "epsilon_min",
    "broadcast_sustains",
    "fes",
    "mrtt_curve",
]

# Largest sustainable decoding ratio: tau_d / Pr_bar must stay below pi*ln(2).
PI_LN2 = math.pi * math.log(2.0)

# A new ring must push the outer radius out by more than this (in squared
# units) or propagation is declared dead.
DIED_TOL = 1e-12

# Squared radius beyond which growth is declared unbounded and iteration stops.
UNBOUNDED_R2 = 1e12

# Closed form is numerically meaningless near the degenerate eigenvalue.
DEGENERATE_A1_TOL = 1e-9


class BroadcastDied(Exception):
    """Raised when a recursion step produces no outward growth.

    Carries the squared radii the step computed so callers can inspect the
    stalled geometry.
    """

    def __init__(self, rb2: float, rd2: float, message: str = "broadcast died: no outward growth"):
        super().__init__(message)
        self.rb2 = rb2
        self.rd2 = rd2


class InfeasibleError(ValueError):
    """Raised when no parameter choice can sustain the requested broadcast."""


def _validate_epsilon(value: float) -> float:
    v = float(value)
    if math.isnan(v) or v < 0.0:
        raise ValueError(f"epsilon must be >= 0 (math.inf allowed), got {value}")
    return v


@dataclass(frozen=True)
class ContinuumParams:
    """Normalized parameters of a banded-relay (OLA-T / OLA-VT) broadcast.

    Attributes:
        relay_power_density: transmit power per unit area of a relaying band.
        decode_threshold: minimum received power tau_d for decoding.
        source_power: transmit power of the point source at the origin.
        epsilon: transmission-threshold offsets eps_k = tau_b,k - tau_d.
            A scalar applies to every level; a sequence gives per-level
            values and is extended with its last entry beyond its length.
            math.inf is the no-upper-threshold sentinel: every decoder
            relays, which is the single-threshold (Basic OLA) protocol.
    """

    relay_power_density: float
    decode_threshold: float
    source_power: float
    epsilon: float | tuple[float, ...] = math.inf

    def __post_init__(self):
        if not (self.relay_power_density > 0.0):
            raise ValueError("relay_power_density must be > 0")
        if not (self.decode_threshold > 0.0):
            raise ValueError("decode_threshold must be > 0")
        if not (self.source_power > 0.0):
            raise ValueError("source_power must be > 0")
        eps = self.epsilon
        if isinstance(eps, (int, float)):
            object.__setattr__(self, "epsilon", _validate_epsilon(eps))
        else:
            values = tuple(_validate_epsilon(v) for v in eps)
            if not values:
                raise ValueError("epsilon schedule must not be empty")
            object.__setattr__(self, "epsilon", values)

    @property
    def decoding_ratio(self) -> float:
        return self.decode_threshold / self.relay_power_density

    def epsilon_at(self, level: int) -> float:
        """Threshold offset for a 1-based level index."""
        if level < 1:
            raise ValueError("level index starts at 1")
        eps = self.epsilon
        if isinstance(eps, float):
            return eps
        return eps[min(level - 1, len(eps) - 1)]


@dataclass(frozen=True)
class Ring:
    """One decoding level: relays occupy inner_radius <= r < outer_radius."""

    inner_radius: float
    outer_radius: float


@dataclass
class RingSequence:
    """Per-level boundary radii of a propagating broadcast.

    Attributes:
        rings: level-k inner/outer radii, k starting at 1.
        died_at: 1-based index of the first level that failed to form, or
            None if every requested level formed.
        unbounded: True when iteration stopped early because the squared
            outer radius exceeded UNBOUNDED_R2 (growth confirmed).
    """

    rings: list[Ring] = field(default_factory=list)
    died_at: int | None = None
    unbounded: bool = False

    def __len__(self) -> int:
        return len(self.rings)

    def outer_radii(self) -> list[float]:
        return [r.outer_radius for r in self.rings]

    def band_areas_sq(self) -> list[float]:
        """Per-level r_d^2 - r_b^2 (band area divided by pi)."""
        return [r.outer_radius**2 - r.inner_radius**2 for r in self.rings]


def aggregate_path_loss(disc_radius: float, distance: float) -> float:
    """Aggregate inverse-square path loss from a uniform unit-power disc.

    A disc of radius r0 centered at the origin, radiating unit power per
    unit area, delivers pi * ln(p^2 / |p^2 - r0^2|) to a receiver at
    distance p.  The difference of two such terms gives the power from an
    annulus.

    Args:
        disc_radius: disc radius r0 >= 0.
        distance: receiver distance p > 0, p != r0.

    Returns:
        The aggregate path loss (dimensionless, >= 0 for p > r0).
    """
    if disc_radius < 0.0:
        raise ValueError("disc_radius must be >= 0")
    if distance <= 0.0:
        raise ValueError("distance must be > 0")
    if distance == disc_radius:
        raise ValueError("aggregate path loss is singular at distance == disc_radius")
    p2 = distance * distance
    return math.pi * math.log(p2 / abs(p2 - disc_radius * disc_radius))


def basic_ola_max_decode_threshold(relay_power_density: float) -> float:
    """Largest decode threshold a single-threshold broadcast can sustain.

    Args:
        relay_power_density: relay power per unit area, > 0.

    Returns:
        pi * ln(2) * relay_power_density.
    """
    if not (relay_power_density > 0.0):
        raise ValueError("relay_power_density must be > 0")
    return PI_LN2 * relay_power_density


def beta(tau: float, relay_power_density: float) -> float:
    """Growth kernel exp(tau / (pi * Pr_bar)); +inf for the tau = inf sentinel."""
    if math.isinf(tau):
        return math.inf
    return math.exp(tau / (math.pi * relay_power_density))


def alpha(tau: float, relay_power_density: float) -> float:
    """Recursion coefficient 1 / (beta(tau) - 1); 0 for the tau = inf sentinel."""
    if math.isinf(tau):
        return 0.0
    return 1.0 / (beta(tau, relay_power_density) - 1.0)


def next_ring(
    prev: tuple[float, float],
    tau_d: float,
    tau_b: float,
    relay_power_density: float,
) -> tuple[float, float]:
    """Advance the boundary recursion by one level.

    Given the squared radii (r_b^2, r_d^2) of the current relaying band,
    the next level's squared boundary radii are

        r_j^2' = r_d^2 + alpha(tau_j) * (r_d^2 - r_b^2),   j in {b, d},

    which is exactly where the band's aggregate received power crosses
    tau_j.  tau_b may differ from call to call, so per-level schedules are
    supported.

    Args:
        prev: (r_b^2, r_d^2) with 0 <= r_b^2 <= r_d^2.
        tau_d: decode threshold, > 0.
        tau_b: transmission threshold, > tau_d (math.inf allowed).
        relay_power_density: relay power per unit area, > 0.

    Returns:
        (r_b^2, r_d^2) of the next level.

    Raises:
        BroadcastDied: when the new outer radius does not exceed the old
            one; the exception carries the computed radii.
    """
    rb2, rd2 = prev
    if not (0.0 <= rb2 <= rd2):
        raise ValueError("prev must satisfy 0 <= r_b^2 <= r_d^2")
    if not (tau_b > tau_d > 0.0):
        raise ValueError("thresholds must satisfy tau_b > tau_d > 0")
    width = rd2 - rb2
    new_rd2 = rd2 + alpha(tau_d, relay_power_density) * width
    new_rb2 = rd2 + alpha(tau_b, relay_power_density) * width
    if new_rd2 <= rd2 + DIED_TOL:
        raise BroadcastDied(new_rb2, new_rd2)
    return new_rb2, new_rd2


def propagate(params: ContinuumParams, levels: int) -> RingSequence:
    """Iterate the boundary recursion from the source's initial conditions.

    Level 1 is seeded by the point source: r_d,1 = sqrt(P_s / tau_d) and
    r_b,1 = sqrt(P_s / tau_b,1).  Iteration stops early (with died_at set)
    if a level fails to grow, or (with unbounded set) once the squared
    outer radius exceeds UNBOUNDED_R2.

    Args:
        params: broadcast parameters.
        levels: maximum number of levels to form, >= 1.

    Returns:
        RingSequence of length <= levels.
    """
    if levels < 1:
        raise ValueError("levels must be >= 1")
    tau_d = params.decode_threshold
    pr = params.relay_power_density
    tau_b1 = tau_d + params.epsilon_at(1)
    rd2 = params.source_power / tau_d
    rb2 = 0.0 if math.isinf(tau_b1) else params.source_power / tau_b1
    seq = RingSequence(rings=[Ring(math.sqrt(rb2), math.sqrt(rd2))])
    for k in range(2, levels + 1):
        tau_b = tau_d + params.epsilon_at(k)
        try:
            rb2, rd2 = next_ring((rb2, rd2), tau_d, tau_b, pr)
        except BroadcastDied:
            seq.died_at = k
            return seq
        seq.rings.append(Ring(math.sqrt(rb2), math.sqrt(rd2)))
        if rd2 > UNBOUNDED_R2:
            seq.unbounded = True
            return seq
    return seq


@dataclass(frozen=True)
class ClosedFormCoefficients:
    """Eigen-decomposition constants of the constant-offset boundary recursion.

    The squared radii at level k are

        r_d,k^2 = (eta1 * a1^(k-1) - eta2 * a2^(k-1)) / (a1 - a2)
        r_b,k^2 = (zeta1 * a1^(k-1) - zeta2 * a2^(k-1)) / (a1 - a2)

    with eigenvalues a1 = alpha(tau_d) - alpha(tau_b) and a2 = 1.
    """

    a1: float
    a2: float
    eta1: float
    eta2: float
    zeta1: float
    zeta2: float
    alpha_d: float
    alpha_b: float
    beta_d: float
    beta_b: float


def closed_form_coefficients(params: ContinuumParams) -> ClosedFormCoefficients:
    """Compute the closed-form constants for a constant-offset schedule.

    Args:
        params: broadcast parameters; epsilon must be a scalar.

    Returns:
        ClosedFormCoefficients for the given parameters.
    """
    eps = params.epsilon
    if not isinstance(eps, float):
        raise ValueError("closed form requires a constant (scalar) epsilon")
    tau_d = params.decode_threshold
    tau_b = tau_d + eps
    pr = params.relay_power_density
    a_d = alpha(tau_d, pr)
    a_b = alpha(tau_b, pr)
    a1 = a_d - a_b
    a2 = 1.0
    ps = params.source_power
    u = ps / tau_d
    v = 0.0 if math.isinf(tau_b) else ps / tau_b

    def eta(a: float) -> float:
        return (a + a_b) * u - a_d * v

    def zeta(a: float) -> float:
        return (1.0 + a_b) * u + (a - a_d - 1.0) * v

    return ClosedFormCoefficients(
        a1=a1,
        a2=a2,
        eta1=eta(a1),
        eta2=eta(a2),
        zeta1=zeta(a1),
        zeta2=zeta(a2),
        alpha_d=a_d,
        alpha_b=a_b,
        beta_d=beta(tau_d, pr),
        beta_b=beta(tau_b, pr),
    )


def closed_form_ring(params: ContinuumParams, k: int) -> tuple[float, float]:
    """Squared boundary radii of level k without iterating.

    Valid only away from the degenerate eigenvalue a1 = 1, where the two
    modes coincide and the closed form collapses; use propagate there.

    Args:
        params: broadcast parameters with scalar epsilon.
        k: 1-based level index.

    Returns:
        (r_b^2, r_d^2) at level k.

    Raises:
        ValueError: if |a1 - 1| < DEGENERATE_A1_TOL.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    c = closed_form_coefficients(params)
    if abs(c.a1 - 1.0) < DEGENERATE_A1_TOL:
        raise ValueError(
            "degenerate eigenvalue (a1 == 1): closed form undefined, use propagate"
        )
    g1 = c.a1 ** (k - 1)
    g2 = c.a2 ** (k - 1)
    denom = c.a1 - c.a2
    rd2 = (c.eta1 * g1 - c.eta2 * g2) / denom
    rb2 = (c.zeta1 * g1 - c.zeta2 * g2) / denom
    return rb2, rd2


def epsilon_min(tau_d: float, relay_power_density: float) -> float:
    """Smallest constant threshold offset that sustains the broadcast.

    Setting the dominant recursion eigenvalue to 1 and solving for the
    offset gives

        eps_min = -(Pr_bar * pi * ln(2 - exp(tau_d / (Pr_bar * pi))) + tau_d).

    Args:
        tau_d: decode threshold, > 0.
        relay_power_density: relay power per unit area, > 0.

    Returns:
        eps_min > 0.

    Raises:
        InfeasibleError: when tau_d >= pi * ln(2) * Pr_bar, where no offset
            sustains the broadcast.
    """
    if not (tau_d > 0.0 and relay_power_density > 0.0):
        raise ValueError("tau_d and relay_power_density must be > 0")
    prpi = relay_power_density * math.pi
    inner = 2.0 - math.exp(tau_d / prpi)
    if inner <= 0.0:
        raise InfeasibleError(
            f"no threshold offset sustains tau_d={tau_d} at density "
            f"{relay_power_density}: decoding ratio exceeds pi*ln(2)"
        )
    return -(prpi * math.log(inner) + tau_d)


def broadcast_sustains(tau_d: float, epsilon: float, relay_power_density: float) -> bool:
    """Whether a constant-offset broadcast grows without bound.

    True iff the dominant recursion eigenvalue a1 = alpha(tau_d) -
    alpha(tau_d + eps) strictly exceeds 1; equivalently,

        2 > exp(tau_d / (Pr_bar * pi)) + exp(-(tau_d + eps) / (Pr_bar * pi)).

    With eps = math.inf this reduces to the single-threshold condition
    tau_d < pi * ln(2) * Pr_bar.

    Args:
        tau_d: decode threshold, > 0.
        epsilon: constant threshold offset, >= 0 (math.inf allowed).
        relay_power_density: relay power per unit area, > 0.

    Returns:
        True iff the broadcast sustains.
    """
    if not (tau_d > 0.0 and relay_power_density > 0.0):
        raise ValueError("tau_d and relay_power_density must be > 0")
    if epsilon < 0.0:
        raise ValueError("epsilon must be >= 0")
    a1 = alpha(tau_d, relay_power_density) - alpha(tau_d + epsilon, relay_power_density)
    return a1 > 1.0


def fes(
    params: ContinuumParams,
    levels: int,
    basic_ola_power_ratio: float | None = None,
) -> float:
    """Fraction of transmit energy saved relative to a Basic OLA reference.

    Both protocols radiate power density * band area * message length per
    level, so for a broadcast reaching r_d,L the banded protocol saves

        FES = 1 - sum_k (r_d,k^2 - r_b,k^2) / (ratio * r_d,L^2)

    where ratio = Pr_bar(reference) / Pr_bar(banded).  The reference
    covers the same radius with full discs, whose band areas telescope to
    r_d,L^2.  By default the reference runs at its own minimum sustainable
    power density tau_d / (pi * ln 2), giving ratio = DR / (pi * ln 2).

    Args:
        params: banded-broadcast parameters.
        levels: number of levels L, >= 1.
        basic_ola_power_ratio: Pr_bar(reference) / Pr_bar(banded); None
            selects the minimum-energy reference.

    Returns:
        FES in (-inf, 1); positive means the banded protocol is cheaper.

    Raises:
        BroadcastDied: if propagation dies before reaching L levels.
    """
    seq = propagate(params, levels)
    if len(seq) < levels:
        raise BroadcastDied(
            seq.rings[-1].inner_radius ** 2,
            seq.rings[-1].outer_radius ** 2,
            f"broadcast died at level {seq.died_at}, cannot evaluate {levels} levels",
        )
    if basic_ola_power_ratio is None:
        basic_ola_power_ratio = params.decoding_ratio / PI_LN2
    if not (basic_ola_power_ratio > 0.0):
        raise ValueError("basic_ola_power_ratio must be > 0")
    total_band = sum(seq.band_areas_sq())
    rd_l2 = seq.rings[-1].outer_radius ** 2
    return 1.0 - total_band / (basic_ola_power_ratio * rd_l2)


def mrtt_curve(dr_grid: list[float]) -> list[tuple[float, float]]:
    """Minimum relative transmission threshold, in dB, over a DR grid.

    For each decoding ratio the minimum sustaining threshold ratio is
    (tau_d + eps_min) / tau_d; infeasible grid points (DR >= pi * ln 2)
    are skipped with a warning.

    Args:
        dr_grid: decoding-ratio values, each > 0.

    Returns:
        List of (DR, MRTT_dB) pairs for the feasible grid points.
    """
    import warnings

    points: list[tuple[float, float]] = []
    for dr in dr_grid:
        try:
            em = epsilon_min(dr, 1.0)
        except InfeasibleError:
            warnings.warn(f"DR={dr} is infeasible (>= pi*ln2), skipped", stacklevel=2)
            continue
        points.append((dr, 10.0 * math.log10((dr + em) / dr)))
    return points
