"""Conversions between physical radio parameters and normalized quantities.

The analytical model works in normalized units: distance in multiples of a
reference distance d0, power relative to the received power at d0.  The
bridge back to physical units is the decoding ratio

    DR = sensitivity / (Pt * Gt * Gr * (lambda / (4 pi d0))^2 * rho * d0^2)

(thermal noise cancels between numerator and denominator), together with
the nearest-neighbor distance d_nn = 1 / sqrt(rho).

At 2.4 GHz (lambda = 0.125 m) with isotropic antennas and d0 = 1 m the
free-space factor (4 pi d0 / lambda)^2 = 10106.5 is conventionally rounded
to 1e4, giving the shortcut DR = sensitivity_mW * 1e4 / (Pt_mW * rho).
The bundled example link budgets are stated under that rounding, so both
forms are exposed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "ROUNDED_LINK_CONSTANT_2P4GHZ",
    "RadioParams",
    "link_budget_constant",
    "decoding_ratio",
    "decoding_ratio_2p4ghz",
    "nearest_neighbor_distance",
    "EXAMPLE_LINK_BUDGETS",
]

# (4 pi d0 / lambda)^2 at lambda = 0.125 m, d0 = 1 m, rounded to one
# significant figure; the exact value is 10106.47.
ROUNDED_LINK_CONSTANT_2P4GHZ = 1.0e4


def _dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


@dataclass(frozen=True)
class RadioParams:
    """Physical link-budget parameters of one node class.

    Attributes:
        tx_power_dBm: relay transmit power Pt.
        rx_sensitivity_dBm: minimum decodable received power.
        antenna_gain_tx: linear transmit antenna gain, >= 0.
        antenna_gain_rx: linear receive antenna gain, >= 0.
        wavelength_m: carrier wavelength in meters.
        reference_distance_m: normalization distance d0 in meters.
        node_density_per_m2: nodes per square meter.
        noise_power_mW: thermal noise power; cancels out of the decoding
            ratio but is kept for completeness.
    """

    tx_power_dBm: float
    rx_sensitivity_dBm: float
    antenna_gain_tx: float = 1.0
    antenna_gain_rx: float = 1.0
    wavelength_m: float = 0.125
    reference_distance_m: float = 1.0
    node_density_per_m2: float = 1.0
    noise_power_mW: float = 1.0

    def __post_init__(self):
        if not (self.wavelength_m > 0.0):
            raise ValueError("wavelength_m must be > 0")
        if not (self.reference_distance_m > 0.0):
            raise ValueError("reference_distance_m must be > 0")
        if not (self.node_density_per_m2 > 0.0):
            raise ValueError("node_density_per_m2 must be > 0")
        if not (self.noise_power_mW > 0.0):
            raise ValueError("noise_power_mW must be > 0")
        if self.antenna_gain_tx < 0.0 or self.antenna_gain_rx < 0.0:
            raise ValueError("antenna gains must be >= 0")


def link_budget_constant(wavelength_m: float, reference_distance_m: float = 1.0) -> float:
    """Free-space spreading factor (4 pi d0 / lambda)^2."""
    if not (wavelength_m > 0.0 and reference_distance_m > 0.0):
        raise ValueError("wavelength and reference distance must be > 0")
    return (4.0 * math.pi * reference_distance_m / wavelength_m) ** 2


def decoding_ratio(params: RadioParams, link_constant: float | None = None) -> float:
    """Decoding ratio implied by a physical link budget.

    DR is the receiver sensitivity divided by the power received from a
    single relay at the nearest-neighbor distance.  Thermal noise appears
    in both and cancels.

    Args:
        params: physical parameters.
        link_constant: override for (4 pi d0 / lambda)^2; None computes it
            exactly.  Pass ROUNDED_LINK_CONSTANT_2P4GHZ to match link
            budgets stated under the conventional 1e4 rounding.

    Returns:
        The decoding ratio, > 0.
    """
    if link_constant is None:
        link_constant = link_budget_constant(params.wavelength_m, params.reference_distance_m)
    sens_mw = _dbm_to_mw(params.rx_sensitivity_dBm)
    pt_mw = _dbm_to_mw(params.tx_power_dBm)
    if not (pt_mw > 0.0):
        raise ValueError("transmit power must be positive")
    gains = params.antenna_gain_tx * params.antenna_gain_rx
    if not (gains > 0.0):
        raise ValueError("antenna gains must be > 0 for a usable link")
    # Normalized density is nodes per d0^2 of area.
    rho_norm = params.node_density_per_m2 * params.reference_distance_m**2
    return sens_mw * link_constant / (pt_mw * gains * rho_norm)


def decoding_ratio_2p4ghz(params: RadioParams) -> float:
    """Decoding ratio under the rounded 2.4 GHz isotropic shortcut."""
    return decoding_ratio(params, link_constant=ROUNDED_LINK_CONSTANT_2P4GHZ)


def nearest_neighbor_distance(density: float) -> float:
    """Typical nearest-neighbor spacing 1 / sqrt(density).

    Args:
        density: nodes per unit area, > 0 (any area unit; the result is in
            the matching length unit).

    Returns:
        1 / sqrt(density).
    """
    if not (density > 0.0):
        raise ValueError("density must be > 0")
    return 1.0 / math.sqrt(density)


# Bundled example link budgets: (label, params, expected DR, expected d_nn in m).
# All at 2.4 GHz, isotropic antennas, d0 = 1 m; DR values follow the rounded
# 1e4 link constant.  The fifth example's density is 9 nodes per 3600 m^2
# (its stated 20 m neighbor spacing fixes the area unit).
EXAMPLE_LINK_BUDGETS: list[tuple[str, RadioParams, float, float]] = [
    ("1", RadioParams(-56.00, -90.00, node_density_per_m2=2.65), 1.5, 0.61),
    ("2", RadioParams(-56.00, -94.77, node_density_per_m2=2.65), 0.5, 0.61),
    ("3", RadioParams(-34.95, -90.00, node_density_per_m2=1.0 / 16.0), 0.5, 4.00),
    ("4", RadioParams(-43.98, -90.00, node_density_per_m2=1.0 / 4.0), 1.0, 2.00),
    ("5", RadioParams(-20.97, -90.00, node_density_per_m2=9.0 / 3600.0), 0.5, 20.00),
]
