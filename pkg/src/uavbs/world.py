"""Service area, ground devices and random-walk mobility.

Device state is kept column-wise in numpy arrays so that association and
mobility stay vectorised; :attr:`WorldState.devices` gives the per-device
view when one is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class AreaSpec:
    width: float = 1000.0
    height: float = 1000.0

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ValueError(f"area must have positive size, got {self.width} x {self.height}")

    def contains(self, x: float, y: float) -> bool:
        return 0.0 <= x <= self.width and 0.0 <= y <= self.height


@dataclass(frozen=True)
class MobilityParams:
    """Random-walk draws: speed is per device, heading and epoch per epoch."""

    speed_range: tuple[float, float] = (0.5, 1.5)
    epoch_range: tuple[int, int] = (10, 50)

    def __post_init__(self):
        lo, hi = self.speed_range
        if not 0 <= lo <= hi:
            raise ValueError(f"bad speed range {self.speed_range}")
        lo, hi = self.epoch_range
        if not 1 <= lo <= hi:
            raise ValueError(f"bad epoch range {self.epoch_range}")


@dataclass(frozen=True)
class Static:
    pass


@dataclass(frozen=True)
class RandomWalk:
    speed: float
    heading: float
    steps_remaining: int


Mobility = Union[Static, RandomWalk]


@dataclass(frozen=True)
class GroundDevice:
    id: int
    position: tuple[float, float]
    mobility: Mobility = Static()


@dataclass(frozen=True)
class Uniform:
    pass


@dataclass(frozen=True)
class Clustered:
    """Gaussian blobs truncated to the area; ``spread`` is the per-axis std."""

    centers: tuple[tuple[float, float], ...]
    spread: float = 25.0

    def __post_init__(self):
        object.__setattr__(self, "centers", tuple(tuple(map(float, c)) for c in self.centers))
        if not self.centers:
            raise ValueError("clustered distribution needs at least one center")
        if self.spread < 0:
            raise ValueError("cluster spread must be nonnegative")


Distribution = Union[Uniform, Clustered]


@dataclass(frozen=True, eq=False)
class WorldState:
    """Immutable snapshot of the device population.

    ``positions`` is (n, 2); the mobility columns are only meaningful where
    ``mobile`` is True. Devices are identified by their row index.
    """

    area: AreaSpec
    positions: np.ndarray
    mobile: np.ndarray
    speed: np.ndarray
    heading: np.ndarray
    steps_remaining: np.ndarray
    rng_seed: int = 0
    mobility_params: MobilityParams = field(default_factory=MobilityParams)

    def __post_init__(self):
        for arr in (self.positions, self.mobile, self.speed, self.heading, self.steps_remaining):
            arr.flags.writeable = False

    @property
    def n_devices(self) -> int:
        return len(self.positions)

    @property
    def ids(self) -> np.ndarray:
        return np.arange(self.n_devices)

    @property
    def devices(self) -> list[GroundDevice]:
        out = []
        for i, (x, y) in enumerate(self.positions):
            if self.mobile[i]:
                mob = RandomWalk(float(self.speed[i]), float(self.heading[i]), int(self.steps_remaining[i]))
            else:
                mob = Static()
            out.append(GroundDevice(i, (float(x), float(y)), mob))
        return out

    @classmethod
    def from_devices(cls, area: AreaSpec, devices: Sequence[GroundDevice], rng_seed: int = 0,
                     mobility_params: MobilityParams | None = None) -> "WorldState":
        ids = [d.id for d in devices]
        if len(set(ids)) != len(ids):
            raise ValueError("device ids must be unique")
        if ids != list(range(len(ids))):
            raise ValueError("device ids must be 0..n-1 in order")
        n = len(devices)
        pos = np.array([d.position for d in devices], dtype=float).reshape(n, 2)
        if n and not _in_bounds(pos, area).all():
            raise ValueError("device outside area")
        mobile = np.array([isinstance(d.mobility, RandomWalk) for d in devices], dtype=bool)
        speed = np.array([getattr(d.mobility, "speed", 0.0) for d in devices], dtype=float)
        heading = np.array([getattr(d.mobility, "heading", 0.0) for d in devices], dtype=float)
        steps = np.array([getattr(d.mobility, "steps_remaining", 0) for d in devices], dtype=np.int64)
        return cls(area, pos, mobile, speed, heading, steps, rng_seed,
                   mobility_params or MobilityParams())


def _in_bounds(pos: np.ndarray, area: AreaSpec) -> np.ndarray:
    return ((pos[:, 0] >= 0) & (pos[:, 0] <= area.width)
            & (pos[:, 1] >= 0) & (pos[:, 1] <= area.height))


def _draw_positions(area: AreaSpec, n: int, distribution: Distribution,
                    rng: np.random.Generator) -> np.ndarray:
    if n == 0:
        return np.empty((0, 2))
    if isinstance(distribution, Uniform):
        return rng.uniform((0.0, 0.0), (area.width, area.height), size=(n, 2))
    centers = np.asarray(distribution.centers)
    # balanced allocation keeps per-cluster load predictable against the capacity limit
    which = np.arange(n) % len(centers)
    rng.shuffle(which)
    pos = centers[which] + rng.normal(0.0, distribution.spread, size=(n, 2))
    bad = ~_in_bounds(pos, area)
    while bad.any():
        pos[bad] = centers[which[bad]] + rng.normal(0.0, distribution.spread, size=(bad.sum(), 2))
        bad = ~_in_bounds(pos, area)
    return pos


def spawn_devices(area: AreaSpec, n_static: int, n_mobile: int,
                  distribution: Distribution | None = None, seed: int = 0,
                  mobility: MobilityParams | None = None) -> WorldState:
    """Place ``n_static`` static and ``n_mobile`` random-walk devices.

    Static devices occupy ids ``0..n_static-1``; mobile ones follow. The same
    seed always yields the same world.
    """
    if n_static < 0 or n_mobile < 0:
        raise ValueError("device counts must be nonnegative")
    distribution = distribution or Uniform()
    mobility = mobility or MobilityParams()
    if isinstance(distribution, Clustered):
        for cx, cy in distribution.centers:
            if not area.contains(cx, cy):
                raise ValueError(f"cluster center ({cx}, {cy}) outside area")

    rng = np.random.default_rng(seed)
    n = n_static + n_mobile
    pos = _draw_positions(area, n, distribution, rng)
    mobile = np.zeros(n, dtype=bool)
    mobile[n_static:] = True
    speed = np.zeros(n)
    heading = np.zeros(n)
    steps = np.zeros(n, dtype=np.int64)
    speed[n_static:] = rng.uniform(*mobility.speed_range, size=n_mobile)
    heading[n_static:] = rng.uniform(0.0, TWO_PI, size=n_mobile)
    steps[n_static:] = rng.integers(mobility.epoch_range[0], mobility.epoch_range[1] + 1, size=n_mobile)
    return WorldState(area, pos, mobile, speed, heading, steps, seed, mobility)


def random_cluster_centers(area: AreaSpec, k: int, rng: np.random.Generator, *,
                           min_separation: float = 0.0, margin: float = 0.0,
                           max_tries: int = 100_000) -> tuple[tuple[float, float], ...]:
    """Draw ``k`` centers at least ``min_separation`` apart, ``margin`` from the walls."""
    if k < 1:
        raise ValueError("need at least one cluster")
    lo = np.array([margin, margin])
    hi = np.array([area.width - margin, area.height - margin])
    if (hi < lo).any():
        raise ValueError("cluster margin leaves no room in the area")
    for _ in range(max_tries):
        c = rng.uniform(lo, hi, size=(k, 2))
        if k == 1:
            break
        d = np.linalg.norm(c[:, None] - c[None], axis=-1)
        if d[np.triu_indices(k, 1)].min() >= min_separation:
            break
    else:
        raise ValueError(f"could not place {k} centers {min_separation} m apart")
    return tuple((float(x), float(y)) for x, y in c)


def _reflect(coord: np.ndarray, limit: float) -> tuple[np.ndarray, np.ndarray]:
    """Fold coordinates back into [0, limit]; returns (coord, odd-number-of-bounces)."""
    flipped = np.zeros(coord.shape, dtype=bool)
    coord = coord.copy()
    while True:
        hi = coord > limit
        lo = coord < 0.0
        if not (hi.any() or lo.any()):
            return coord, flipped
        coord[hi] = 2.0 * limit - coord[hi]
        coord[lo] = -coord[lo]
        flipped ^= hi | lo


def step_mobility(world: WorldState, rng: np.random.Generator) -> WorldState:
    """Advance every random-walk device by one time step.

    Devices whose epoch has run out first draw a fresh heading and epoch
    length. Walls reflect the motion, so the path length per step is always
    the device's speed.
    """
    idx = np.flatnonzero(world.mobile)
    if idx.size == 0:
        return world

    heading = world.heading.copy()
    steps = world.steps_remaining.copy()
    expired = idx[steps[idx] <= 0]
    if expired.size:
        lo, hi = world.mobility_params.epoch_range
        heading[expired] = rng.uniform(0.0, TWO_PI, size=expired.size)
        steps[expired] = rng.integers(lo, hi + 1, size=expired.size)

    pos = world.positions.copy()
    v = world.speed[idx]
    h = heading[idx]
    x, fx = _reflect(pos[idx, 0] + v * np.cos(h), world.area.width)
    y, fy = _reflect(pos[idx, 1] + v * np.sin(h), world.area.height)
    h = np.where(fx, math.pi - h, h)
    h = np.where(fy, -h, h)
    pos[idx, 0] = x
    pos[idx, 1] = y
    heading[idx] = np.mod(h, TWO_PI)
    steps[idx] -= 1

    return WorldState(world.area, pos, world.mobile, world.speed, heading, steps,
                      world.rng_seed, world.mobility_params)
