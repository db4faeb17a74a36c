"""INI-style run configuration: `key = value` lines, units in the key names.

Unknown keys are rejected with their line number; absent keys fall back to
the defaults.  Values are scalars or comma-separated lists.  `#` and `;`
start comments.  serialize_settings() emits every effective key so that a
parse of its output reproduces the settings exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .dqn import DqnHyperparams, EpsilonSchedule
from .errors import ConfigError
from .linklayer import RewardParams
from .orchestrator import DEFAULT_TEST_PAYLOADS_BYTES
from .scenario import ScenarioConfig


@dataclass(frozen=True)
class RunSettings:
    """Everything a run needs: scenario, learning, reward, and run lengths."""

    scenario: ScenarioConfig = ScenarioConfig()
    hyper: DqnHyperparams = DqnHyperparams()
    reward: RewardParams = RewardParams()
    training_episodes: int = 2000
    training_restarts: int = 3
    testing_episodes: int = 100
    hill_max_iters: int = 200
    test_payloads_bytes: tuple[int, ...] = DEFAULT_TEST_PAYLOADS_BYTES


def _parse_int(raw: str) -> int:
    return int(raw)


def _parse_float(raw: str) -> float:
    return float(raw)


def _parse_float_list(raw: str) -> tuple[float, ...]:
    items = [s.strip() for s in raw.split(",") if s.strip()]
    if not items:
        raise ValueError("empty list")
    return tuple(float(s) for s in items)


def _parse_int_list(raw: str) -> tuple[int, ...]:
    items = [s.strip() for s in raw.split(",") if s.strip()]
    if not items:
        raise ValueError("empty list")
    return tuple(int(s) for s in items)


# key -> (target, field, parser). Targets name the sub-object of RunSettings;
# payload byte counts are converted to bits when the scenario is built.
_KEYS: dict[str, tuple[str, str, object]] = {
    "highway_length_m": ("scenario", "highway_length_m", _parse_float),
    "lanes_per_direction": ("scenario", "lanes_per_direction", _parse_int),
    "lane_width_m": ("scenario", "lane_width_m", _parse_float),
    "n_rsus": ("scenario", "n_rsus", _parse_int),
    "rsu_spacing_m": ("scenario", "rsu_spacing_m", _parse_float),
    "n_platoons": ("scenario", "n_platoons", _parse_int),
    "vehicles_per_platoon": ("scenario", "vehicles_per_platoon", _parse_int),
    "vehicle_length_m": ("scenario", "vehicle_length_m", _parse_float),
    "intra_platoon_gap_m": ("scenario", "intra_platoon_gap_m", _parse_float),
    "velocity_mps": ("scenario", "velocity_mps", _parse_float),
    "n_subbands": ("scenario", "n_subbands", _parse_int),
    "subband_bandwidth_hz": ("scenario", "subband_bandwidth_hz", _parse_float),
    "episode_duration_s": ("scenario", "episode_duration_s", _parse_float),
    "step_duration_s": ("scenario", "step_duration_s", _parse_float),
    "v2i_payload_bytes": ("scenario", "v2i_payload_bytes", _parse_int),
    "v2v_payload_bytes": ("scenario", "v2v_payload_bytes", _parse_int),
    "v2v_power_levels_dbm": ("scenario", "v2v_power_levels_dbm", _parse_float_list),
    "v2i_power_levels_dbm": ("scenario", "v2i_power_levels_dbm", _parse_float_list),
    "carrier_freq_ghz": ("scenario", "carrier_freq_ghz", _parse_float),
    "vehicle_antenna_gain_dbi": ("scenario", "vehicle_antenna_gain_dbi", _parse_float),
    "noise_figure_db": ("scenario", "noise_figure_db", _parse_float),
    "noise_psd_dbm_hz": ("scenario", "noise_psd_dbm_hz", _parse_float),
    "leader_update_interval_s": ("scenario", "leader_update_interval_s", _parse_float),
    "v2v_weight": ("reward", "v2v_weight", _parse_float),
    "v2i_weight": ("reward", "v2i_weight", _parse_float),
    "v2v_bonus": ("reward", "v2v_bonus", _parse_float),
    "v2i_bonus": ("reward", "v2i_bonus", _parse_float),
    "gamma": ("hyper", "gamma", _parse_float),
    "lr_pl_select": ("hyper", "lr_pl_select", _parse_float),
    "lr_v2v": ("hyper", "lr_v2v", _parse_float),
    "lr_v2i": ("hyper", "lr_v2i", _parse_float),
    "batch_size": ("hyper", "batch_size", _parse_int),
    "replay_capacity": ("hyper", "replay_capacity", _parse_int),
    "epsilon_start": ("hyper", "epsilon_start", _parse_float),
    "epsilon_end": ("hyper", "epsilon_end", _parse_float),
    "epsilon_decay_episodes": ("hyper", "epsilon_decay_episodes", _parse_int),
    "target_refresh_updates": ("hyper", "target_refresh_updates", _parse_int),
    "updates_pl_select": ("hyper", "updates_pl_select", _parse_int),
    "updates_v2v": ("hyper", "updates_v2v", _parse_int),
    "updates_v2i": ("hyper", "updates_v2i", _parse_int),
    "td_error_clip": ("hyper", "td_error_clip", _parse_float),
    "lr_end_scale": ("hyper", "lr_end_scale", _parse_float),
    "rmsprop_decay": ("hyper", "rmsprop_decay", _parse_float),
    "rmsprop_eps": ("hyper", "rmsprop_eps", _parse_float),
    "training_episodes": ("run", "training_episodes", _parse_int),
    "training_restarts": ("run", "training_restarts", _parse_int),
    "testing_episodes": ("run", "testing_episodes", _parse_int),
    "hill_max_iters": ("run", "hill_max_iters", _parse_int),
    "test_payloads_bytes": ("run", "test_payloads_bytes", _parse_int_list),
}

# Per-key bounds checked at parse time so the error can carry a line number.
_KEY_CHECKS = {
    "vehicles_per_platoon": (lambda v: v >= 2, "must be >= 2"),
    "n_platoons": (lambda v: v >= 1, "must be >= 1"),
    "n_subbands": (lambda v: v >= 1, "must be >= 1"),
    "n_rsus": (lambda v: v >= 1, "must be >= 1"),
    "subband_bandwidth_hz": (lambda v: v > 0, "must be > 0"),
    "v2i_payload_bytes": (lambda v: v > 0, "must be > 0"),
    "v2v_payload_bytes": (lambda v: v > 0, "must be > 0"),
    "batch_size": (lambda v: v >= 1, "must be >= 1"),
    "gamma": (lambda v: 0.0 <= v <= 1.0, "must be in [0, 1]"),
    "training_episodes": (lambda v: v >= 1, "must be >= 1"),
    "training_restarts": (lambda v: v >= 1, "must be >= 1"),
    "testing_episodes": (lambda v: v >= 1, "must be >= 1"),
    "hill_max_iters": (lambda v: v >= 0, "must be >= 0"),
    "test_payloads_bytes": (lambda v: all(p > 0 for p in v), "entries must be > 0"),
}


def parse_config_text(text: str) -> RunSettings:
    """Parse configuration text; see parse_config for the file variant."""
    raw: dict[str, object] = {}
    lines_seen: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].split(";", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"expected 'key = value', got {stripped!r}", line=lineno)
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _KEYS:
            raise ConfigError(f"unknown key {key!r}", line=lineno)
        if key in lines_seen:
            raise ConfigError(f"duplicate key {key!r} (first on line {lines_seen[key]})", line=lineno)
        _, _, parser = _KEYS[key]
        try:
            parsed = parser(value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}", line=lineno) from exc
        check = _KEY_CHECKS.get(key)
        if check and not check[0](parsed):
            raise ConfigError(f"{key} {check[1]} (got {value})", line=lineno)
        raw[key] = parsed
        lines_seen[key] = lineno

    settings = _build_settings(raw)
    try:
        settings.scenario.validate()
        settings.hyper.validate()
    except (ConfigError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    return settings


def _build_settings(raw: dict[str, object]) -> RunSettings:
    scenario_kwargs: dict[str, object] = {}
    reward_kwargs: dict[str, object] = {}
    hyper_kwargs: dict[str, object] = {}
    run_kwargs: dict[str, object] = {}
    buckets = {
        "scenario": scenario_kwargs,
        "reward": reward_kwargs,
        "hyper": hyper_kwargs,
        "run": run_kwargs,
    }
    for key, value in raw.items():
        target, field_name, _ = _KEYS[key]
        buckets[target][field_name] = value

    for byte_field, bit_field in (
        ("v2i_payload_bytes", "v2i_payload_bits"),
        ("v2v_payload_bytes", "v2v_payload_bits"),
    ):
        if byte_field in scenario_kwargs:
            scenario_kwargs[bit_field] = int(scenario_kwargs.pop(byte_field)) * 8

    lr_defaults = DqnHyperparams().learning_rates
    learning_rates = {
        "pl_select": hyper_kwargs.pop("lr_pl_select", lr_defaults["pl_select"]),
        "v2v": hyper_kwargs.pop("lr_v2v", lr_defaults["v2v"]),
        "v2i": hyper_kwargs.pop("lr_v2i", lr_defaults["v2i"]),
    }
    upd_defaults = DqnHyperparams().updates_per_episode
    updates = {
        "pl_select": hyper_kwargs.pop("updates_pl_select", upd_defaults["pl_select"]),
        "v2v": hyper_kwargs.pop("updates_v2v", upd_defaults["v2v"]),
        "v2i": hyper_kwargs.pop("updates_v2i", upd_defaults["v2i"]),
    }
    schedule = EpsilonSchedule(
        start=hyper_kwargs.pop("epsilon_start", 1.0),
        end=hyper_kwargs.pop("epsilon_end", 0.02),
        decay_episodes=hyper_kwargs.pop("epsilon_decay_episodes", 1600),
    )
    hyper = DqnHyperparams(
        learning_rates=learning_rates,
        epsilon=schedule,
        updates_per_episode=updates,
        **hyper_kwargs,
    )

    # An explicit single payload narrows the test sweep to that point unless
    # an explicit grid was also given.
    if "v2v_payload_bits" in scenario_kwargs and "test_payloads_bytes" not in run_kwargs:
        run_kwargs["test_payloads_bytes"] = (int(scenario_kwargs["v2v_payload_bits"]) // 8,)

    return RunSettings(
        scenario=ScenarioConfig(**scenario_kwargs),
        hyper=hyper,
        reward=RewardParams(**reward_kwargs),
        **run_kwargs,
    )


def parse_config(path) -> RunSettings:
    """Parse a configuration file; an empty or absent-key file is all defaults."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def _fmt(value) -> str:
    if isinstance(value, (tuple, list)):
        return ", ".join(_fmt(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_settings(settings: RunSettings) -> str:
    """Emit every effective key; parsing the output reproduces the settings."""
    s, h, r = settings.scenario, settings.hyper, settings.reward
    values = {
        "highway_length_m": s.highway_length_m,
        "lanes_per_direction": s.lanes_per_direction,
        "lane_width_m": s.lane_width_m,
        "n_rsus": s.n_rsus,
        "rsu_spacing_m": s.rsu_spacing_m,
        "n_platoons": s.n_platoons,
        "vehicles_per_platoon": s.vehicles_per_platoon,
        "vehicle_length_m": s.vehicle_length_m,
        "intra_platoon_gap_m": s.intra_platoon_gap_m,
        "velocity_mps": s.velocity_mps,
        "n_subbands": s.n_subbands,
        "subband_bandwidth_hz": s.subband_bandwidth_hz,
        "episode_duration_s": s.episode_duration_s,
        "step_duration_s": s.step_duration_s,
        "v2i_payload_bytes": s.v2i_payload_bits // 8,
        "v2v_payload_bytes": s.v2v_payload_bits // 8,
        "v2v_power_levels_dbm": s.v2v_power_levels_dbm,
        "v2i_power_levels_dbm": s.v2i_power_levels_dbm,
        "carrier_freq_ghz": s.carrier_freq_ghz,
        "vehicle_antenna_gain_dbi": s.vehicle_antenna_gain_dbi,
        "noise_figure_db": s.noise_figure_db,
        "noise_psd_dbm_hz": s.noise_psd_dbm_hz,
        "leader_update_interval_s": s.leader_update_interval_s,
        "v2v_weight": r.v2v_weight,
        "v2i_weight": r.v2i_weight,
        "v2v_bonus": r.v2v_bonus,
        "v2i_bonus": r.v2i_bonus,
        "gamma": h.gamma,
        "lr_pl_select": h.learning_rates["pl_select"],
        "lr_v2v": h.learning_rates["v2v"],
        "lr_v2i": h.learning_rates["v2i"],
        "batch_size": h.batch_size,
        "replay_capacity": h.replay_capacity,
        "epsilon_start": h.epsilon.start,
        "epsilon_end": h.epsilon.end,
        "epsilon_decay_episodes": h.epsilon.decay_episodes,
        "target_refresh_updates": h.target_refresh_updates,
        "updates_pl_select": h.updates_per_episode["pl_select"],
        "updates_v2v": h.updates_per_episode["v2v"],
        "updates_v2i": h.updates_per_episode["v2i"],
        "td_error_clip": h.td_error_clip,
        "lr_end_scale": h.lr_end_scale,
        "rmsprop_decay": h.rmsprop_decay,
        "rmsprop_eps": h.rmsprop_eps,
        "training_episodes": settings.training_episodes,
        "training_restarts": settings.training_restarts,
        "testing_episodes": settings.testing_episodes,
        "hill_max_iters": settings.hill_max_iters,
        "test_payloads_bytes": settings.test_payloads_bytes,
    }
    return "".join(f"{key} = {_fmt(value)}\n" for key, value in values.items())


def with_platoons(settings: RunSettings, n_platoons: int) -> RunSettings:
    return replace(settings, scenario=replace(settings.scenario, n_platoons=n_platoons))
