"""Why hotspots matter: a look at the SINR footprint and the flight power curve."""

import numpy as np

from uavbs import ChannelParams, PowerModelParams, UavPosition, covered_area, propulsion_power
from uavbs.radio import sinr_matrix
from uavbs.world import AreaSpec

chan = ChannelParams()
area = AreaSpec()

# One UAV alone is noise-limited and covers the whole square kilometre.
print("1 UAV covers", covered_area([UavPosition(500, 500, 100)], chan, area), "km^2")

# Four UAVs interfere with each other; each footprint shrinks to a small disk
# around the UAV because a device needs 5x more power from its server than
# from all other UAVs together.
four = [UavPosition(250, 250, 100), UavPosition(750, 250, 100),
        UavPosition(250, 750, 100), UavPosition(750, 750, 100)]
print("4 UAVs cover", round(covered_area(four, chan, area), 4), "km^2")

# SINR along the line from the first UAV towards the centre
xs = np.linspace(250, 500, 6)
probe = np.column_stack([xs, xs])
s = sinr_matrix(probe, np.array(four), chan)[:, 0]
for x, v in zip(xs, s):
    print(f"  ground ({x:5.0f}, {x:5.0f})  SINR to UAV 0 = {v:7.2f}")

# Rotary-wing power: hovering is not the cheapest state; a gentle cruise is
# cheaper under the usual minus-sign induced term, while the printed plus
# sign makes power grow monotonically with speed.
plus, minus = PowerModelParams(), PowerModelParams(induced_sign=-1)
for v in (0, 5, 10, 20, 30):
    print(f"  V = {v:2d} m/s   P+ = {propulsion_power(v, plus):7.2f} W   P- = {propulsion_power(v, minus):7.2f} W")
