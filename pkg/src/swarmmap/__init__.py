"""swarmmap: decentralized multi-agent field monitoring and weed mapping.

A numpy library simulating a swarm of survey agents that build per-cell
Bayesian maps of weed counts from a noisy count sensor, steering by expected
information gain, with pre-planned and potential-field baselines and a
batch experiment runner.
"""

from .belief import (
    BeliefMap,
    KnowledgeVector,
    bayes_update,
    entropy_of,
    information_gain,
    is_mapped,
    mapped_threshold,
    uniform_prior,
)
from .engine import Simulation, init_run, run_simulation
from .metrics import (
    MetricsRecord,
    aggregate_map,
    coverage_time,
    map_mse,
    weed_observation_correlation,
)
from .sensor import SensorModel, load_sensor_model, sample_observation, synthesize_sensor_model
from .strategy import StrategyConfig, preplanned_baseline_mse
from .world import FieldTruth, WorldConfig, chebyshev_ring, generate_field, travel_time

__version__ = "0.1.0"

__all__ = [
    "BeliefMap",
    "KnowledgeVector",
    "bayes_update",
    "entropy_of",
    "information_gain",
    "is_mapped",
    "mapped_threshold",
    "uniform_prior",
    "Simulation",
    "init_run",
    "run_simulation",
    "MetricsRecord",
    "aggregate_map",
    "coverage_time",
    "map_mse",
    "weed_observation_correlation",
    "SensorModel",
    "load_sensor_model",
    "sample_observation",
    "synthesize_sensor_model",
    "StrategyConfig",
    "preplanned_baseline_mse",
    "FieldTruth",
    "WorldConfig",
    "chebyshev_ring",
    "generate_field",
    "travel_time",
    "__version__",
]
