"""
Location obfuscation mechanisms
===============================

Sample both geo mechanisms, check their headline statistics against the
analytic values, and show how epsilon trades privacy against utility.
"""

import numpy as np

from autopriv.datamodel import GeoPoint
from autopriv.geometry import ConvexPolygon, regular_polygon
from autopriv.pets.mechanisms import (planar_isotropic_offsets, planar_laplace,
                                      planar_laplace_offsets, round_location)

rng = np.random.default_rng(7)

# One obfuscated fix: the disclosed point a navigation app would see.
home = GeoPoint(50.1100, 8.6800)
for eps in (0.002, 0.004, 0.01):
    noisy = planar_laplace(home, eps, rng)
    print(f"eps={eps:0.3f}  disclosed=({noisy.lat:.5f}, {noisy.lon:.5f})")

# The radial law: mean displacement is exactly 2/eps.
print("\nplanar Laplace mean displacement vs 2/eps")
for eps in (0.002, 0.004, 0.01):
    offs = planar_laplace_offsets(eps, 200_000, rng)
    mean = np.hypot(offs[:, 0], offs[:, 1]).mean()
    print(f"  eps={eps:0.3f}  measured={mean:7.1f} m  analytic={2 / eps:7.1f} m")

# The hull-shaped mechanism: noise direction follows the hull geometry.
# A flat hull smears mostly east-west; useful when north-south position
# is the sensitive part of a trajectory.
flat_hull = ConvexPolygon(regular_polygon(16, 1.0).vertices * [2.0, 0.5])
offs = planar_isotropic_offsets(0.004, flat_hull, 100_000, rng)
print("\nhull-shaped noise, flat 2:1 hull at eps=0.004")
print(f"  std east-west  {offs[:, 0].std():7.1f} m")
print(f"  std north-south{offs[:, 1].std():7.1f} m")

# Deterministic generalization: snap to a 1 km grid instead of adding noise.
snapped = round_location(home, 1000.0)
print(f"\n1 km grid cell center for home fix: ({snapped.lat:.5f}, {snapped.lon:.5f})")
print("snapping twice is a no-op:", round_location(snapped, 1000.0) == snapped)
