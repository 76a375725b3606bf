"""Distributed hypothesis testing over directed weighted networks.

Nodes repeatedly observe private signals, apply a local Bayesian update,
exchange beliefs with neighbors, and pool them log-linearly.  The package
simulates the protocol, predicts its convergence rates from network
centrality and per-node divergences, and checks the predictions with
concentration bounds, conjugate (large-deviation) rates, and exhaustive
small-scenario enumeration.
"""
from .analysis import (AbsorbedBelief, HoeffdingBounds, RatePrediction,
                       RejectionTrace, UnboundedRatios, divergence_table,
                       empirical_rejection, hoeffding_exponents,
                       network_divergence, predict_rates, residual_variance)
from .config import (CompiledScenario, ConfigError, ScenarioConfig,
                     bundled_names, compile_from_dict, compile_scenario,
                     load_bundled, load_scenario)
from .engine import (AllZeroMessage, AllZeroPosterior, BeliefState,
                     QuantizationSpec, StepInput, ZeroPrior,
                     baseline_linear_step, bayes_step, consensus_step,
                     dequantize_normalize, init_beliefs, quantize_message,
                     step)
from .ldp import (ConjugatePair, InfeasiblePreimage, PathSpaceTooLarge,
                  RateFunctionValue, SupremumAtInfinity, brute_force_tail,
                  fenchel_legendre, g_map, lambda_tilde, rate_function_j)
from .models import (BernoulliModel, CategoricalModel,
                     DistinguishabilityReport, GammaModel,
                     GaussianMixtureModel, GaussianModel, HypothesisSet,
                     MgfDiverges, NodeModel, OutOfSupport,
                     QuadratureNotConverged, distinguishability,
                     kl_divergence, log_likelihood, log_ratio_bound,
                     pair_log_mgf, sample)
from .network import (CentralityVector, GraphStructure, NegativeWeight,
                      NotStronglyConnected, RowSumViolation, StochasticMatrix,
                      cyclic_classes, is_strongly_connected, period,
                      stationary_distribution, validate_stochastic)
from .runner import RunEvent, RunResult, read_trace, run, write_trace

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
