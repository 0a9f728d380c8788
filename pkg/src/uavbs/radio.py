"""Downlink SINR, device association and coverage scoring."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .world import AreaSpec, GroundDevice, WorldState

UNASSOCIATED = -1


@dataclass(frozen=True)
class ChannelParams:
    eta: float = 1.0
    alpha_pl: float = 2.0
    noise_power: float = 1e-9
    tx_power: float = 1.0
    sinr_threshold: float = 5.0
    capacity: int = 150
    # None means every other UAV interferes
    interference_range: float | None = None

    def __post_init__(self):
        if self.alpha_pl < 2:
            raise ValueError("path-loss exponent must be >= 2")
        if self.noise_power <= 0:
            raise ValueError("noise power must be > 0")
        if self.tx_power <= 0:
            raise ValueError("transmit power must be > 0")
        if self.eta <= 0:
            raise ValueError("attenuation factor must be > 0")
        if self.capacity < 1:
            raise ValueError("capacity must be >= 1")
        if self.interference_range is not None and self.interference_range <= 0:
            raise ValueError("interference range must be > 0")


class UavPosition(NamedTuple):
    x: float
    y: float
    h: float


@dataclass(frozen=True, eq=False)
class AssociationResult:
    """``assignment[i]`` is the serving UAV index of device ``i`` or ``UNASSOCIATED``."""

    assignment: np.ndarray
    per_uav_score: np.ndarray
    sinr: np.ndarray  # best-UAV SINR per device, associated or not

    def __eq__(self, other):
        if not isinstance(other, AssociationResult):
            return NotImplemented
        return (np.array_equal(self.assignment, other.assignment)
                and np.array_equal(self.per_uav_score, other.per_uav_score)
                and np.array_equal(self.sinr, other.sinr))

    @property
    def total(self) -> int:
        return int(self.per_uav_score.sum())

    def indicators(self, uav: int) -> np.ndarray:
        """w(i) for one UAV: 1 where device i is served by it."""
        return (self.assignment == uav).astype(np.int64)

    def as_dict(self) -> dict[int, int | None]:
        return {i: (None if j == UNASSOCIATED else int(j)) for i, j in enumerate(self.assignment)}


def as_array(uavs) -> np.ndarray:
    arr = np.asarray(uavs, dtype=float)
    return arr.reshape(-1, 3)


def distance3d(device: GroundDevice, uav: UavPosition) -> float:
    xi, yi = device.position
    return math.sqrt((xi - uav.x) ** 2 + (yi - uav.y) ** 2 + uav.h ** 2)


def received_power(xy: np.ndarray, uav_arr: np.ndarray, params: ChannelParams) -> np.ndarray:
    """eta * P * d^-alpha as an (n_devices, n_uavs) matrix."""
    d2 = ((xy[:, None, :] - uav_arr[None, :, :2]) ** 2).sum(axis=-1) + uav_arr[None, :, 2] ** 2
    if (d2 == 0).any():
        raise ValueError("zero device-UAV distance")
    if params.alpha_pl == 2.0:
        return params.eta * params.tx_power / d2
    return params.eta * params.tx_power * d2 ** (-params.alpha_pl / 2.0)


def sinr(device: GroundDevice, serving: UavPosition, interferers: Sequence[UavPosition],
         params: ChannelParams) -> float:
    if any(tuple(z) == tuple(serving) for z in interferers):
        raise ValueError("serving UAV listed among interferers")
    d = distance3d(device, serving)
    if d == 0:
        raise ValueError("device sits at the UAV position")
    signal = params.eta * params.tx_power * d ** -params.alpha_pl
    interference = 0.0
    for z in interferers:
        dz = distance3d(device, z)
        if dz == 0:
            raise ValueError("device sits at an interferer position")
        if params.interference_range is not None and dz > params.interference_range:
            continue
        interference += params.eta * params.tx_power * dz ** -params.alpha_pl
    return signal / (interference + params.noise_power)


def sinr_matrix(xy: np.ndarray, uav_arr: np.ndarray, params: ChannelParams) -> np.ndarray:
    """SINR of every device towards every UAV, all others interfering."""
    p = received_power(xy, uav_arr, params)
    if params.interference_range is None:
        interference = p.sum(axis=1, keepdims=True) - p
    else:
        d2 = ((xy[:, None, :] - uav_arr[None, :, :2]) ** 2).sum(axis=-1) + uav_arr[None, :, 2] ** 2
        pz = np.where(d2 <= params.interference_range ** 2, p, 0.0)
        interference = pz.sum(axis=1, keepdims=True) - pz
    return p / (interference + params.noise_power)


def associate_xy(xy: np.ndarray, uav_arr: np.ndarray, params: ChannelParams) -> AssociationResult:
    n, m = len(xy), len(uav_arr)
    if m == 0:
        raise ValueError("association needs at least one UAV")
    if n == 0:
        return AssociationResult(np.empty(0, np.int64), np.zeros(m, np.int64), np.empty(0))
    s = sinr_matrix(xy, uav_arr, params)
    best = np.argmax(s, axis=1)  # first maximum -> lowest UAV id on ties
    best_sinr = s[np.arange(n), best]
    ok = best_sinr >= params.sinr_threshold
    assignment = np.where(ok, best, UNASSOCIATED)
    counts = np.bincount(best[ok], minlength=m)
    for j in np.flatnonzero(counts > params.capacity):
        cand = np.flatnonzero(assignment == j)
        order = cand[np.argsort(-best_sinr[cand], kind="stable")]
        assignment[order[params.capacity:]] = UNASSOCIATED
        counts[j] = params.capacity
    return AssociationResult(assignment, counts.astype(np.int64), best_sinr)


def associate(world: WorldState, uavs: Sequence[UavPosition], params: ChannelParams) -> AssociationResult:
    """Serve each device from its best-SINR UAV, subject to threshold and capacity.

    Over-subscribed UAVs admit devices in descending SINR order; rejected
    devices stay unassociated rather than falling back to another UAV.
    """
    return associate_xy(world.positions, as_array(uavs), params)


def connection_score(result: AssociationResult, uav: int) -> int:
    return int(np.count_nonzero(result.assignment == uav))


def coverage_grid(uavs: Sequence[UavPosition], params: ChannelParams, area: AreaSpec,
                  cell: float) -> np.ndarray:
    """Best serving UAV per raster probe (``UNASSOCIATED`` where below threshold)."""
    if cell <= 0:
        raise ValueError("raster cell must be > 0")
    nx = max(1, math.ceil(area.width / cell - 1e-9))
    ny = max(1, math.ceil(area.height / cell - 1e-9))
    uav_arr = as_array(uavs)
    if len(uav_arr) == 0:
        return np.full((ny, nx), UNASSOCIATED)
    xs = (np.arange(nx) + 0.5) * (area.width / nx)
    ys = (np.arange(ny) + 0.5) * (area.height / ny)
    gx, gy = np.meshgrid(xs, ys)
    probes = np.column_stack([gx.ravel(), gy.ravel()])
    s = sinr_matrix(probes, uav_arr, params)
    best = np.argmax(s, axis=1)
    ok = s[np.arange(len(probes)), best] >= params.sinr_threshold
    return np.where(ok, best, UNASSOCIATED).reshape(ny, nx)


def covered_area(uavs: Sequence[UavPosition], params: ChannelParams, area: AreaSpec,
                 cell: float = 10.0) -> float:
    """Ground area (km^2) where the best-UAV SINR clears the threshold."""
    grid = coverage_grid(uavs, params, area, cell)
    ny, nx = grid.shape
    cell_area = (area.width / nx) * (area.height / ny)
    return float(np.count_nonzero(grid != UNASSOCIATED) * cell_area / 1e6)
