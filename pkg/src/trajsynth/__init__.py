"""Grid-world imitation-learning toolkit: deterministic games, reward
shaping from human demonstrations, DQN experts, DAgger synthesis,
surface-similarity scoring, and a small analysis/reporting layer.
"""

__version__ = "0.1.0"

from .gridworld import (  # noqa: F401
    Action,
    GameKind,
    GameState,
    GridMap,
    StepOutcome,
    initial_state,
    load_bundled_map,
    load_map,
    load_map_file,
    obs_id,
    step,
)
from .distances import DistanceTable, apsp, build_graph, distance_table  # noqa: F401
