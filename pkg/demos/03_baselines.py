"""Exhaustive search, iterative search and cluster Q-learning on one scenario."""

from pathlib import Path

from uavbs import baselines
from uavbs.config import load_config

cfg = load_config(Path(__file__).resolve().parent.parent / "configs" / "static.ini")
world = cfg.scenario.build_world(0)

es = baselines.exhaustive_search_from_config(cfg, world)
print("ES ", es.total_connected, "connected at", [tuple(p) for p in es.positions])
print("    energy for the full lattice tour:", round(es.total_energy_j / 1e3), "kJ")

is_ = baselines.iterative_search_from_config(cfg, world)
print("IS ", is_.total_connected, "connected after", len(is_.history) - 1, "rounds;",
      "trajectory", is_.history)

cql = baselines.cluster_ql(world, cfg.n_uavs, cfg.channel, cfg.learning.params,
                           power=cfg.energy, n_episodes=30, ladder=cfg.learning.altitudes, seed=0)
print("CQL", cql.total_connected, "connected at the k-means centroids")
