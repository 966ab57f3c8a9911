"""Bicriteria prediction with expert advice: learners, adversaries and regret measurement."""

from .adversaries import (AdaptiveLowerBound, adaptive_lb, build_appendixB, build_linK, build_theorem1,
                          build_theorem2, random_bounded_variance, threshold_losses)
from .harness import ExperimentConfig, run_experiment, slope_fit
from .learners import ExponentialWeights, FollowLazyLeader, ShrinkingDartboard, make_learner
from .meta import asl_run, epoch_schedule, run_learner
from .metrics import (check_assumption2, check_assumption2_prime, count_switches, max_interval_excess,
                      regret_primary, regret_secondary, report, sleeping_regret)
from .params import AssumptionParams, InfeasibleStreamError, OracleStarvedError, ceil_pow
from .sleeping import a1_run, a2_run, a2_weight_update, oracle1_timeline, oracle2_timeline, restart_a1_run
from .streams import AdaptiveStream, LossStream, read_stream, write_stream
from .trace import RunTrace, read_trace, write_trace

__version__ = "0.1.0"
