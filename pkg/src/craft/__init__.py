"""Edge/fog node placement: system model, diversity-adaptive GA, baselines."""

from .model import (
    Deployment,
    EdgeGene,
    Fitness,
    FogGene,
    GeneBounds,
    NetworkGraph,
    SiteCandidate,
    SiteKind,
    TaskSpec,
    WiredLink,
    repair_deployment,
    validate_deployment,
)
from .scenario import CompModel, Scenario, ScenarioConfig, generate, load, save
from .objectives import EvalReport, capacity_feasible, evaluate
from .genetic import GaParams, GenerationStats, OptimizeError, evolve
from .baselines import LatticeDomain, exhaustive_oracle, random_placement

__version__ = "0.1.0"
