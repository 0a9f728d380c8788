"""Train four DQLSI agents on one hotspot scenario and watch connectivity rise."""

from pathlib import Path

from uavbs import runner
from uavbs.config import load_config

cfg = load_config(Path(__file__).resolve().parent.parent / "configs" / "static.ini")
cfg = cfg.with_(n_runs=1)

world = cfg.scenario.build_world(cfg.base_seed)
tables = runner.fresh_qtables(cfg)

for episode in range(cfg.n_episodes):
    m = runner.run_episode(cfg, cfg.base_seed, episode, tables, world=world, run_index=0)
    if episode % 10 == 0 or episode == cfg.n_episodes - 1:
        print(f"episode {episode:3d}  connected {m.total_connected:3d}/{m.n_devices}"
              f"  per UAV {m.connected}  energy {m.total_energy_j / 1e3:6.1f} kJ"
              f"  Q entries {sum(t.entry_count for t in tables)}")
