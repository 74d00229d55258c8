"""Detect and test cyclic motion in discrete-time evolutionary game trajectories."""

from .cycle_metrics import (
    AngularSamples,
    MeanL,
    PersistenceReport,
    Trajectory,
    angular_momentum_step,
    average_play,
    combined_scale_samples,
    mean_L,
    persistence_split,
    reference_sweep,
    strength,
    trajectory_samples,
)
from .game_model import GameSpec, build_rpsd_matrix, expected_payoffs, find_symmetric_nash
from .state_space import (
    SETTINGS,
    SocialState,
    bivector,
    enumerate_lattice,
    l_from_bivector,
    project,
)

__version__ = "0.1.0"
