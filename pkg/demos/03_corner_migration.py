"""
Three bulges merging and drifting into a corner
===============================================

With an instantaneous chemoattractant (elliptic coupling, tau = 0) the
signal field adapts immediately to the cells.  Three unequal bulges
first aggregate individually, then the strongest one wins the mass and,
pushed by the chemoattractant reflected at the walls, wanders into the
nearest corner of the domain where it saturates.

The chemoattractant history is never read on this path, so no initial
v is needed.
"""

import numpy as np

from ksdg import ModelParams, build_structured_mesh, simulate
from ksdg.config import preset_initial_conditions
import warnings

mesh = build_structured_mesh("mesh1", 32)
with warnings.catch_warnings():
    warnings.simplefilter("ignore")  # "v0 unused" advisory
    u0, _ = preset_initial_conditions("three_bulges", mesh)

params = ModelParams(tau=0, dt=1e-5, t_end=1e-2)  # 1000 steps
corner = np.array([0.5, 0.5])

path = []
for state, row in simulate(mesh, params, u0, None):
    peak_cell = int(np.argmax(state.u))
    peak_xy = mesh.barycenters[peak_cell]
    path.append((row.time, peak_xy[0], peak_xy[1], row.max_u))
    if row.step % 100 == 0:
        print("step %4d  t=%.3e  peak at (%+.3f, %+.3f)  dist to corner "
              "%.3f  max u=%9.0f"
              % (row.step, row.time, peak_xy[0], peak_xy[1],
                 np.linalg.norm(peak_xy - corner), row.max_u))

path = np.array(path)
d0 = np.linalg.norm(path[0, 1:3] - corner)
d1 = np.linalg.norm(path[-1, 1:3] - corner)
print("\npeak distance to the corner: %.3f at t=0  ->  %.3f at t=%g"
      % (d0, d1, params.t_end))

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    print("matplotlib not installed; skipping the figure")
else:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4.2))
    ax1.plot(path[:, 1], path[:, 2], ".-", ms=3, lw=0.7)
    ax1.plot(*path[0, 1:3], "go", label="start")
    ax1.plot(*path[-1, 1:3], "rs", label="end")
    ax1.plot(0.5, 0.5, "k*", ms=12, label="corner")
    ax1.set_xlim(-0.55, 0.55), ax1.set_ylim(-0.55, 0.55)
    ax1.set_aspect("equal")
    ax1.set_title("path of the density peak")
    ax1.legend()
    ax2.semilogy(path[:, 0], path[:, 3])
    ax2.set_xlabel("t")
    ax2.set_title("max density")
    fig.tight_layout()
    fig.savefig("corner_migration.png", dpi=150)
    print("wrote corner_migration.png")
