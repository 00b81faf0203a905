"""Shared scene builders for the test suite.

Both builders construct fixed, fully deterministic point clouds so tests
can assert exact behavior without re-tuning whenever the simulator's
default scenario moves.
"""

from __future__ import annotations

import numpy as np

from linetrack.geometry import ParamVector, conductor_config, forward_point
from linetrack.simulator import default_truth


def cluttered_scene(seed: int):
    """Corridor scene: ground plane, pylon blob, and one conductor.

    Roughly 500 ground points and a 500-point pylon body dwarf the ~100
    conductor returns, so an unfiltered (or under-filtered) fit has far
    more clutter than signal to latch onto. The pylon sits past the far
    anchor at x = 58 and 8 m below the conductor; the initial prior starts
    at that height, so whether the pylon mass survives filtering decides
    which basin the fit lands in.

    Returns (points, truth, config, prior).
    """
    config = conductor_config("1")
    truth = default_truth(config)
    rng = np.random.default_rng(seed)
    x = rng.uniform(-50.0, 50.0, size=100)
    conductor = forward_point(truth, config, 0, x) + rng.normal(0.0, 0.1, size=(100, 3))
    ground = np.column_stack([
        rng.uniform(-60.0, 60.0, size=500),
        rng.uniform(-25.0, 25.0, size=500),
        rng.normal(0.0, 0.1, size=500),
    ])
    pylon = np.array([58.0, 0.0, 12.0]) + rng.normal(0.0, 3.0, size=(500, 3))
    points = np.vstack([conductor, ground, pylon])
    prior = ParamVector(x_o=0.0, y_o=0.0, z_o=10.0, psi=0.0, a=1000.0)
    return points, truth, config, prior


def two_basin_instance():
    """A cloud with two cost basins separated by a genuine barrier.

    60 tight conductor returns form the global minimum; a 40-point diffuse
    decoy blob 12 m below forms a local one. The prior sits inside the
    decoy, so a single descent cannot cross the barrier and only perturbed
    restarts that land past it reach the conductors.

    Returns (points, truth, config, prior).
    """
    config = conductor_config("1")
    truth = default_truth(config)
    rng = np.random.default_rng(0)
    x = rng.uniform(-50.0, 50.0, size=60)
    conductor = forward_point(truth, config, 0, x) + rng.normal(0.0, 0.1, size=(60, 3))
    decoy = np.array([0.0, 0.0, 8.0]) + rng.normal(0.0, 1.0, size=(40, 3))
    points = np.vstack([conductor, decoy])
    prior = ParamVector(x_o=0.0, y_o=0.0, z_o=8.0, psi=0.0, a=1000.0)
    return points, truth, config, prior
