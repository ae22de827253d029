"""FTRL-based adversarial bandit policies, environments, and a reproducible
Monte-Carlo experiment harness."""

from . import (  # noqa: F401
    core,
    environments,
    harness,
    policies,
    potentials,
    runner,
    schedules,
    solver,
)
from .core import (  # noqa: F401
    EstimateVector,
    LossVector,
    ProbabilityVector,
    RoundRecord,
    RunRecord,
    importance_weighted_estimate,
    random_regret,
)
from .environments import make_environment  # noqa: F401
from .harness import ExperimentConfig, ExperimentSummary, run_experiment  # noqa: F401
from .policies import make_policy  # noqa: F401
from .potentials import Potential, TwoArmDualMap  # noqa: F401
from .solver import FtrlProblem, KktCertificate, solve  # noqa: F401

__version__ = "0.1.0"
