"""Experiment configuration: INI sections mapped onto the model dataclasses.

Sections and keys (all optional, defaults in brackets)::

    [experiment]  n_uavs [4], n_episodes [100], n_runs [20], base_seed [0],
                  output_dir [output], strategy [dqlsi | es | is | cql],
                  initial_positions ["x,y,h; x,y,h; ..."; corner offsets]
    [scenario]    width, height [1000], n_static [400], n_mobile [0],
                  distribution [uniform | clustered], centers ["x,y; x,y"],
                  n_clusters [4], cluster_spread [25], cluster_min_separation [400],
                  cluster_margin [150], speed_min [0.5], speed_max [1.5],
                  epoch_min [10], epoch_max [50]
    [channel]     eta [1], alpha [2], tx_power_w [1], noise_w [1e-9],
                  sinr_threshold [5], capacity [150], raster_cell_m [10],
                  interference_range_m [none]
    [energy]      kappa0, kappai, u_tip, v0, nu, s_solidity, rotor_area, rho,
                  dt [4], induced_sign [plus | minus]
    [learning]    learning_rate [0.1], discount_factor [0.9], epsilon_start [1],
                  epsilon_decay [0.95], epsilon_min [0.05], max_step [10000],
                  altitudes ["100,120,...,200"], near_m [50], mid_m [200],
                  proximity_radius_m [1500], goal_fraction [0.95],
                  goal_sustain_steps [50; 0 disables], battery_j [none],
                  broadcast_bits [16]
    [es]          lattice_spacing_m [100], altitudes ["100,200"], budget [1e8]
    [is]          max_rounds [50]
    [cql]         kmeans_iterations [100]
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .agent import DEFAULT_BUCKETS, DEFAULT_LADDER, STEP_M, SCORE_BITS, LearnParams
from .energy import PowerModelParams
from .radio import ChannelParams, UavPosition
from .world import (AreaSpec, Clustered, Distribution, MobilityParams, Uniform,
                    WorldState, random_cluster_centers, spawn_devices)

STRATEGIES = ("dqlsi", "es", "is", "cql")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    width: float = 1000.0
    height: float = 1000.0
    n_static: int = 400
    n_mobile: int = 0
    distribution: str = "uniform"
    centers: tuple[tuple[float, float], ...] | None = None
    n_clusters: int = 4
    cluster_spread: float = 25.0
    cluster_min_separation: float = 400.0
    cluster_margin: float = 150.0
    speed_min: float = 0.5
    speed_max: float = 1.5
    epoch_min: int = 10
    epoch_max: int = 50

    @property
    def area(self) -> AreaSpec:
        return AreaSpec(self.width, self.height)

    @property
    def mobility(self) -> MobilityParams:
        return MobilityParams((self.speed_min, self.speed_max), (self.epoch_min, self.epoch_max))

    @property
    def n_devices(self) -> int:
        return self.n_static + self.n_mobile

    def distribution_for(self, seed: int) -> Distribution:
        if self.distribution == "uniform":
            return Uniform()
        centers = self.centers
        if centers is None:
            # cluster layout is part of the scenario, so it follows the run seed
            rng = np.random.default_rng([seed, 0xC1])
            centers = random_cluster_centers(self.area, self.n_clusters, rng,
                                             min_separation=self.cluster_min_separation,
                                             margin=self.cluster_margin)
        return Clustered(centers, self.cluster_spread)

    def build_world(self, seed: int) -> WorldState:
        return spawn_devices(self.area, self.n_static, self.n_mobile,
                             self.distribution_for(seed), seed, self.mobility)


@dataclass(frozen=True)
class LearningConfig:
    params: LearnParams = field(default_factory=LearnParams)
    altitudes: tuple[float, ...] = DEFAULT_LADDER
    near_m: float = DEFAULT_BUCKETS[0]
    mid_m: float = DEFAULT_BUCKETS[1]
    proximity_radius_m: float = 1500.0
    goal_fraction: float = 0.95
    goal_sustain_steps: int = 50
    battery_j: float | None = None
    broadcast_bits: int = SCORE_BITS
    step_m: float = STEP_M

    @property
    def thresholds(self) -> tuple[float, float]:
        return (self.near_m, self.mid_m)


@dataclass(frozen=True)
class ESConfig:
    lattice_spacing_m: float = 100.0
    altitudes: tuple[float, ...] = (100.0, 200.0)
    budget: int = 100_000_000


@dataclass(frozen=True)
class ISConfig:
    max_rounds: int = 50


@dataclass(frozen=True)
class CQLConfig:
    kmeans_iterations: int = 100


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    channel: ChannelParams = field(default_factory=ChannelParams)
    raster_cell_m: float = 10.0
    energy: PowerModelParams = field(default_factory=PowerModelParams)
    learning: LearningConfig = field(default_factory=LearningConfig)
    strategy: str = "dqlsi"
    es: ESConfig = field(default_factory=ESConfig)
    is_: ISConfig = field(default_factory=ISConfig)
    cql: CQLConfig = field(default_factory=CQLConfig)
    n_uavs: int = 4
    n_episodes: int = 100
    n_runs: int = 20
    base_seed: int = 0
    output_dir: str = "output"
    initial_positions: tuple[UavPosition, ...] | None = None

    @property
    def area(self) -> AreaSpec:
        return self.scenario.area

    def starts(self) -> list[UavPosition]:
        if self.initial_positions is not None:
            return list(self.initial_positions)
        return corner_starts(self.area, self.n_uavs, self.learning.altitudes[0])

    def with_(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)


def corner_starts(area: AreaSpec, n: int, h: float, offset: float = 200.0) -> list[UavPosition]:
    """Start points inset from the four corners, cycling with a growing inset."""
    out = []
    for k in range(n):
        d = offset + 40.0 * (k // 4)
        cx, cy = [(0, 0), (1, 0), (0, 1), (1, 1)][k % 4]
        x = d if cx == 0 else area.width - d
        y = d if cy == 0 else area.height - d
        out.append(UavPosition(min(max(x, 0.0), area.width), min(max(y, 0.0), area.height), h))
    return out


def validate(cfg: ExperimentConfig) -> list[str]:
    """Every violated invariant, as human-readable messages (empty if valid)."""
    errs = []
    sc = cfg.scenario
    if not (sc.width > 0 and sc.height > 0):
        errs.append("scenario.width and scenario.height must be > 0")
    if sc.n_static < 0 or sc.n_mobile < 0:
        errs.append("scenario device counts must be >= 0")
    if sc.distribution not in ("uniform", "clustered"):
        errs.append(f"scenario.distribution must be uniform or clustered, got {sc.distribution!r}")
    if sc.distribution == "clustered":
        if sc.centers is not None:
            for cx, cy in sc.centers:
                if not (0 <= cx <= sc.width and 0 <= cy <= sc.height):
                    errs.append(f"scenario.centers: ({cx}, {cy}) lies outside the area")
        elif sc.n_clusters < 1:
            errs.append("scenario.n_clusters must be >= 1")
        if sc.cluster_spread < 0:
            errs.append("scenario.cluster_spread must be >= 0")
    if not 0 <= sc.speed_min <= sc.speed_max:
        errs.append("scenario speed range must satisfy 0 <= speed_min <= speed_max")
    if not 1 <= sc.epoch_min <= sc.epoch_max:
        errs.append("scenario epoch range must satisfy 1 <= epoch_min <= epoch_max")
    if cfg.raster_cell_m <= 0:
        errs.append("channel.raster_cell_m must be > 0")
    if cfg.strategy not in STRATEGIES:
        errs.append(f"experiment.strategy must be one of {STRATEGIES}, got {cfg.strategy!r}")
    if cfg.n_uavs < 1:
        errs.append("experiment.n_uavs must be >= 1")
    if cfg.n_episodes < 1:
        errs.append("experiment.n_episodes must be >= 1")
    if cfg.n_runs < 1:
        errs.append("experiment.n_runs must be >= 1")
    lc = cfg.learning
    if not lc.altitudes or any(h <= 0 for h in lc.altitudes):
        errs.append("learning.altitudes must be a nonempty list of positive heights")
    if list(lc.altitudes) != sorted(set(lc.altitudes)):
        errs.append("learning.altitudes must be strictly increasing")
    if not 0 < lc.near_m <= lc.mid_m:
        errs.append("learning bucket thresholds must satisfy 0 < near_m <= mid_m")
    if lc.proximity_radius_m < 0:
        errs.append("learning.proximity_radius_m must be >= 0")
    if not 0 < lc.goal_fraction <= 1:
        errs.append("learning.goal_fraction must lie in (0, 1]")
    if lc.goal_sustain_steps < 0:
        errs.append("learning.goal_sustain_steps must be >= 0")
    if lc.battery_j is not None and lc.battery_j <= 0:
        errs.append("learning.battery_j must be > 0 when set")
    if lc.step_m <= 0:
        errs.append("learning.step_m must be > 0")
    if cfg.es.lattice_spacing_m <= 0 or not cfg.es.altitudes:
        errs.append("es lattice needs a positive spacing and at least one altitude")
    if cfg.is_.max_rounds < 1:
        errs.append("is.max_rounds must be >= 1")
    if cfg.cql.kmeans_iterations < 1:
        errs.append("cql.kmeans_iterations must be >= 1")
    if cfg.initial_positions is not None and len(cfg.initial_positions) != cfg.n_uavs:
        errs.append("experiment.initial_positions must list exactly n_uavs points")
    if not errs:
        for k, p in enumerate(cfg.starts()):
            if not (0 <= p.x <= sc.width and 0 <= p.y <= sc.height):
                errs.append(f"initial position {k} lies outside the area")
            if not any(abs(p.h - h) <= 1e-6 for h in lc.altitudes):
                errs.append(f"initial position {k} altitude {p.h} is not on the altitude ladder")
    return errs


# -- parsing ----------------------------------------------------------------

_ALLOWED = {
    "experiment": {"n_uavs", "n_episodes", "n_runs", "base_seed", "output_dir", "strategy",
                   "initial_positions"},
    "scenario": {"width", "height", "n_static", "n_mobile", "distribution", "centers", "n_clusters",
                 "cluster_spread", "cluster_min_separation", "cluster_margin", "speed_min",
                 "speed_max", "epoch_min", "epoch_max"},
    "channel": {"eta", "alpha", "tx_power_w", "noise_w", "sinr_threshold", "capacity",
                "raster_cell_m", "interference_range_m"},
    "energy": {"kappa0", "kappai", "u_tip", "v0", "nu", "s_solidity", "rotor_area", "rho", "dt",
               "induced_sign"},
    "learning": {"learning_rate", "discount_factor", "epsilon_start", "epsilon_decay", "epsilon_min",
                 "max_step", "altitudes", "near_m", "mid_m", "proximity_radius_m", "goal_fraction",
                 "goal_sustain_steps", "battery_j", "broadcast_bits", "step_m"},
    "es": {"lattice_spacing_m", "altitudes", "budget"},
    "is": {"max_rounds"},
    "cql": {"kmeans_iterations"},
}


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(" ", "").split(",") if v)


def _points(text: str) -> tuple[tuple[float, ...], ...]:
    return tuple(_floats(chunk) for chunk in text.split(";") if chunk.strip())


def _optional_float(text: str) -> float | None:
    return None if text.strip().lower() in ("none", "", "off") else float(text)


def _int(text: str) -> int:
    v = float(text)
    if v != int(v):
        raise ValueError(f"expected an integer, got {text}")
    return int(v)


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";;"))
    cp.read_string(text)
    for section in cp.sections():
        if section not in _ALLOWED:
            raise ConfigError(f"unknown section [{section}]")
        unknown = set(cp[section]) - _ALLOWED[section]
        if unknown:
            raise ConfigError(f"unknown keys in [{section}]: {', '.join(sorted(unknown))}")

    def get(section, key, conv, default):
        if cp.has_option(section, key):
            raw = cp.get(section, key)
            try:
                return conv(raw)
            except ValueError as exc:
                raise ConfigError(f"{section}.{key}: cannot parse {raw!r} ({exc})") from None
        return default

    sc_def = ScenarioConfig()
    centers = get("scenario", "centers", _points, None)
    if centers is not None and any(len(c) != 2 for c in centers):
        raise ConfigError("scenario.centers: each center needs x,y")
    scenario = ScenarioConfig(
        width=get("scenario", "width", float, sc_def.width),
        height=get("scenario", "height", float, sc_def.height),
        n_static=get("scenario", "n_static", _int, sc_def.n_static),
        n_mobile=get("scenario", "n_mobile", _int, sc_def.n_mobile),
        distribution=get("scenario", "distribution", str.strip, sc_def.distribution).lower(),
        centers=centers,
        n_clusters=get("scenario", "n_clusters", _int, sc_def.n_clusters),
        cluster_spread=get("scenario", "cluster_spread", float, sc_def.cluster_spread),
        cluster_min_separation=get("scenario", "cluster_min_separation", float,
                                   sc_def.cluster_min_separation),
        cluster_margin=get("scenario", "cluster_margin", float, sc_def.cluster_margin),
        speed_min=get("scenario", "speed_min", float, sc_def.speed_min),
        speed_max=get("scenario", "speed_max", float, sc_def.speed_max),
        epoch_min=get("scenario", "epoch_min", _int, sc_def.epoch_min),
        epoch_max=get("scenario", "epoch_max", _int, sc_def.epoch_max),
    )

    ch = ChannelParams.__dataclass_fields__
    channel_kwargs = dict(
        eta=get("channel", "eta", float, ch["eta"].default),
        alpha_pl=get("channel", "alpha", float, ch["alpha_pl"].default),
        tx_power=get("channel", "tx_power_w", float, ch["tx_power"].default),
        noise_power=get("channel", "noise_w", float, ch["noise_power"].default),
        sinr_threshold=get("channel", "sinr_threshold", float, ch["sinr_threshold"].default),
        capacity=get("channel", "capacity", _int, ch["capacity"].default),
        interference_range=get("channel", "interference_range_m", _optional_float, None),
    )
    try:
        channel = ChannelParams(**channel_kwargs)
    except ValueError as exc:
        raise ConfigError(f"channel: {exc}") from None

    en = PowerModelParams.__dataclass_fields__
    energy_kwargs = {k: get("energy", k, float, en[k].default)
                     for k in ("kappa0", "kappai", "u_tip", "v0", "nu", "s_solidity", "rotor_area", "rho", "dt")}
    sign = get("energy", "induced_sign", str.strip, "plus").lower()
    if sign not in ("plus", "minus", "+1", "-1", "1"):
        raise ConfigError(f"energy.induced_sign must be plus or minus, got {sign!r}")
    energy_kwargs["induced_sign"] = -1 if sign in ("minus", "-1") else 1
    try:
        energy = PowerModelParams(**energy_kwargs)
    except ValueError as exc:
        raise ConfigError(f"energy: {exc}") from None

    lp = LearnParams.__dataclass_fields__
    learn_kwargs = {k: get("learning", k, float, lp[k].default)
                    for k in ("learning_rate", "discount_factor", "epsilon_start", "epsilon_decay", "epsilon_min")}
    learn_kwargs["max_step"] = get("learning", "max_step", _int, lp["max_step"].default)
    try:
        params = LearnParams(**learn_kwargs)
    except ValueError as exc:
        raise ConfigError(f"learning: {exc}") from None
    lc_def = LearningConfig()
    learning = LearningConfig(
        params=params,
        altitudes=get("learning", "altitudes", _floats, lc_def.altitudes),
        near_m=get("learning", "near_m", float, lc_def.near_m),
        mid_m=get("learning", "mid_m", float, lc_def.mid_m),
        proximity_radius_m=get("learning", "proximity_radius_m", float, lc_def.proximity_radius_m),
        goal_fraction=get("learning", "goal_fraction", float, lc_def.goal_fraction),
        goal_sustain_steps=get("learning", "goal_sustain_steps", _int, lc_def.goal_sustain_steps),
        battery_j=get("learning", "battery_j", _optional_float, lc_def.battery_j),
        broadcast_bits=get("learning", "broadcast_bits", _int, lc_def.broadcast_bits),
        step_m=get("learning", "step_m", float, lc_def.step_m),
    )

    starts = get("experiment", "initial_positions", _points, None)
    if starts is not None:
        if any(len(p) != 3 for p in starts):
            raise ConfigError("experiment.initial_positions: each point needs x,y,h")
        starts = tuple(UavPosition(*p) for p in starts)

    return ExperimentConfig(
        scenario=scenario,
        channel=channel,
        raster_cell_m=get("channel", "raster_cell_m", float, 10.0),
        energy=energy,
        learning=learning,
        strategy=get("experiment", "strategy", str.strip, "dqlsi").lower(),
        es=ESConfig(
            lattice_spacing_m=get("es", "lattice_spacing_m", float, ESConfig.lattice_spacing_m),
            altitudes=get("es", "altitudes", _floats, ESConfig.altitudes),
            budget=get("es", "budget", _int, ESConfig.budget),
        ),
        is_=ISConfig(max_rounds=get("is", "max_rounds", _int, ISConfig.max_rounds)),
        cql=CQLConfig(kmeans_iterations=get("cql", "kmeans_iterations", _int, CQLConfig.kmeans_iterations)),
        n_uavs=get("experiment", "n_uavs", _int, 4),
        n_episodes=get("experiment", "n_episodes", _int, 100),
        n_runs=get("experiment", "n_runs", _int, 20),
        base_seed=get("experiment", "base_seed", _int, 0),
        output_dir=get("experiment", "output_dir", str.strip, "output"),
        initial_positions=starts,
    )


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


def checked(cfg: ExperimentConfig) -> ExperimentConfig:
    errs = validate(cfg)
    if errs:
        raise ConfigError("; ".join(errs))
    return cfg
