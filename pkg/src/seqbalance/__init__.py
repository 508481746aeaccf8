"""Sequential experiment balancing.

Online assignment of arriving subjects to control or treatment with the
pigeonhole rule, compared against complete randomization and offline
matched pairs by the minimum-cost matching distance between the groups.
"""

from .atesim import DgpConfig, ate_study, diff_in_means, generate_population
from .core import ArrivalSequence, AssignmentTrace, CovariateSpace, Subject, l2_distance
from .designs import (
    Partition,
    PigeonholeState,
    assign,
    build_clustered,
    build_grid,
    build_mixed,
    build_natural_discrete,
    build_partition,
    build_uniform_1d,
    crd_assign,
    matched_pair_assign,
    pigeonhole_assign,
    single_pigeonhole_assign,
)
from .errors import SeqBalanceError
from .harness import DesignSpec, InstanceSpec, exact_expected_discrepancy, fit_rate, run_mc
from .kernels import BACKEND
from .matching import Matching, discrepancy, min_weight_pairing

__version__ = "0.1.0"

__all__ = [
    "ArrivalSequence",
    "AssignmentTrace",
    "BACKEND",
    "CovariateSpace",
    "DesignSpec",
    "DgpConfig",
    "InstanceSpec",
    "Matching",
    "Partition",
    "PigeonholeState",
    "SeqBalanceError",
    "Subject",
    "assign",
    "ate_study",
    "build_clustered",
    "build_grid",
    "build_mixed",
    "build_natural_discrete",
    "build_partition",
    "build_uniform_1d",
    "crd_assign",
    "diff_in_means",
    "discrepancy",
    "exact_expected_discrepancy",
    "fit_rate",
    "generate_population",
    "l2_distance",
    "matched_pair_assign",
    "min_weight_pairing",
    "pigeonhole_assign",
    "run_mc",
    "single_pigeonhole_assign",
]
