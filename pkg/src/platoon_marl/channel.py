"""Two-timescale channel generation.

Large-scale gain (pathloss + log-normal shadowing + antenna gains) is redrawn
on the slow 100 ms timescale together with vehicle positions; small-scale
Rayleigh fading is redrawn every simulation step.  All link budgets are kept
in linear watts; dB appears only at interfaces.

Pathloss uses the free-space-like highway LOS law

    PL_dB = 32.4 + 20 log10(d_3D_m) + 20 log10(fc_GHz)

for both link kinds, with the 3-D distance taking fixed antenna heights into
account (vehicles 3 m, RSUs 5 m).  Each vehicle end contributes 3 dBi of
antenna gain, RSU ends 0 dBi.  Shadowing is log-normal with sigma 3 dB
between vehicles and 4 dB on vehicle-RSU links, independent across pairs and
redrawn at every large-scale update.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import ScenarioConfig, ScenarioState, wrap_x_distance

VEHICLE_ANTENNA_HEIGHT_M = 3.0
RSU_ANTENNA_HEIGHT_M = 5.0
RSU_ANTENNA_GAIN_DBI = 0.0
SHADOWING_STD_DB = {"v2v": 3.0, "v2i": 4.0}

# Floor applied before any dB conversion so a zero fading draw cannot
# produce -inf in encoded states.
LINEAR_FLOOR = 1e-30


def dbm_to_watt(p_dbm: float | np.ndarray) -> float | np.ndarray:
    return 10.0 ** ((np.asarray(p_dbm) - 30.0) / 10.0)


def watt_to_dbm(p_watt: float | np.ndarray) -> float | np.ndarray:
    return 10.0 * np.log10(np.maximum(np.asarray(p_watt), LINEAR_FLOOR)) + 30.0


def linear_to_db(x: float | np.ndarray) -> float | np.ndarray:
    return 10.0 * np.log10(np.maximum(np.asarray(x), LINEAR_FLOOR))


@dataclass(frozen=True)
class LargeScaleMap:
    """Linear large-scale power gain for every ordered node pair.

    Nodes are indexed vehicles first (platoon-major, front to back), then
    RSUs.  The matrix is symmetric; the diagonal (self links) is zero and
    never read.
    """

    gains: np.ndarray  # (n_nodes, n_nodes)


@dataclass(frozen=True)
class FastFadingMap:
    """Per ordered pair, per sub-band small-scale power gain (unit mean)."""

    g: np.ndarray  # (n_nodes, n_nodes, n_subbands)


def vehicle_node(config: ScenarioConfig, platoon: int, member: int) -> int:
    return platoon * config.vehicles_per_platoon + member


def rsu_node(config: ScenarioConfig, rsu: int) -> int:
    return config.n_vehicles + rsu


def pathloss_db(d3d_m: float, fc_ghz: float) -> float:
    if d3d_m <= 0:
        raise ValueError("distance must be positive")
    return 32.4 + 20.0 * np.log10(d3d_m) + 20.0 * np.log10(fc_ghz)


def large_scale_gain(
    tx_pos: np.ndarray,
    rx_pos: np.ndarray,
    link_kind: str,
    rng: np.random.Generator | None = None,
    *,
    fc_ghz: float = 6.0,
    vehicle_antenna_gain_dbi: float = 3.0,
    wrap_length_m: float | None = None,
) -> float:
    """Linear large-scale gain for one link.

    link_kind "v2v" puts both antennas at vehicle height and credits the
    vehicle gain at both ends; "v2i" mixes vehicle and RSU heights and only
    credits the vehicle end.  Passing rng=None disables shadowing.  With
    wrap_length_m set, the x separation is measured around the ring.
    """
    if link_kind not in ("v2v", "v2i"):
        raise ValueError(f"unknown link kind {link_kind!r}")
    tx = np.asarray(tx_pos, dtype=np.float64)
    rx = np.asarray(rx_pos, dtype=np.float64)
    if wrap_length_m is not None:
        dx = float(wrap_x_distance(tx[0], rx[0], wrap_length_m))
    else:
        dx = abs(float(tx[0] - rx[0]))
    dy = float(tx[1] - rx[1])
    if link_kind == "v2v":
        dz = 0.0
        gain_dbi = 2.0 * vehicle_antenna_gain_dbi
    else:
        dz = RSU_ANTENNA_HEIGHT_M - VEHICLE_ANTENNA_HEIGHT_M
        gain_dbi = vehicle_antenna_gain_dbi + RSU_ANTENNA_GAIN_DBI
    d3d = float(np.sqrt(dx * dx + dy * dy + dz * dz))
    loss_db = pathloss_db(d3d, fc_ghz)
    if rng is not None:
        loss_db += SHADOWING_STD_DB[link_kind] * rng.standard_normal()
    return float(10.0 ** ((-loss_db + gain_dbi) / 10.0))


def build_large_scale_map(
    state: ScenarioState,
    config: ScenarioConfig,
    rng: np.random.Generator | None,
) -> LargeScaleMap:
    """Gains for all ordered pairs among vehicles and RSUs.

    Each unordered pair is drawn once and mirrored, so reciprocity holds
    exactly.  Vehicle-vehicle pairs use the v2v parameters, anything
    involving an RSU the v2i parameters.
    """
    n_vehicles = config.n_vehicles
    positions = np.concatenate(
        [state.vehicles.reshape(-1, 2), state.rsu_positions], axis=0
    )
    n = positions.shape[0]
    gains = np.zeros((n, n), dtype=np.float64)
    for a in range(n):
        for b in range(a + 1, n):
            kind = "v2v" if (a < n_vehicles and b < n_vehicles) else "v2i"
            g = large_scale_gain(
                positions[a],
                positions[b],
                kind,
                rng,
                fc_ghz=config.carrier_freq_ghz,
                vehicle_antenna_gain_dbi=config.vehicle_antenna_gain_dbi,
                wrap_length_m=config.highway_length_m,
            )
            gains[a, b] = g
            gains[b, a] = g
    return LargeScaleMap(gains=gains)


def refresh_small_scale(
    n_nodes: int, n_subbands: int, rng: np.random.Generator
) -> FastFadingMap:
    """Fresh i.i.d. unit-mean exponential fading for every pair and sub-band.

    Exponential(1) is the power of a unit-variance circularly symmetric
    complex Gaussian amplitude, i.e. Rayleigh fading.
    """
    g = rng.exponential(1.0, size=(n_nodes, n_nodes, n_subbands))
    return FastFadingMap(g=g)


def noise_power(config: ScenarioConfig) -> float:
    """Receiver noise in linear watts: PSD + 10 log10(W) + noise figure."""
    noise_dbm = (
        config.noise_psd_dbm_hz
        + 10.0 * np.log10(config.subband_bandwidth_hz)
        + config.noise_figure_db
    )
    return float(10.0 ** ((noise_dbm - 30.0) / 10.0))
