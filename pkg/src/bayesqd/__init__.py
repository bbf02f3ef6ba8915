"""Constrained, mixed-variable Bayesian quality-diversity optimization.

Modules
-------
space        mixed continuous / discrete / categorical spaces, LHS and Sobol' sampling
kernels      product kernels with Gower or hypersphere level correlations
gp           ordinary-kriging Gaussian process with multistart COBYLA fitting
archive      feature grid and elite archive with feasibility rules
map_elites   constrained MAP-Elites
bayesian_qd  surrogate-assisted QD loop (LCB objective, expected-violation constraints)
benchmarks   mixed-variable Rosenbrock, Trid and Styblinski-Tang suites
harness      repetitions, quantile aggregation and CSV output
cli          ``bayesqd`` command-line entry point
"""
from .archive import Archive, FeatureGrid, InsertOutcome, niche_count, normalized_qd_score, qd_score
from .bayesian_qd import BqdConfig, BqdResult, expected_violation, lcb, run_bqd
from .benchmarks import SUITES, get_suite
from .gp import GpModel, fit
from .harness import Algorithm, ExperimentSpec, aggregate_quantiles, run_experiment
from .kernels import KernelHyperparams, KernelMode, kernel_matrix, product_kernel
from .map_elites import MapElitesConfig, run_map_elites
from .problem import QdProblem
from .space import MixedPoint, MixedSpace, PointSet, lhs_sample, sobol_points

__version__ = "0.1.0"

__all__ = [
    "Algorithm", "Archive", "BqdConfig", "BqdResult", "ExperimentSpec", "FeatureGrid", "GpModel",
    "InsertOutcome", "KernelHyperparams", "KernelMode", "MapElitesConfig", "MixedPoint", "MixedSpace",
    "PointSet", "QdProblem", "SUITES", "aggregate_quantiles", "expected_violation", "fit", "get_suite",
    "kernel_matrix", "lcb", "lhs_sample", "niche_count", "normalized_qd_score", "product_kernel",
    "qd_score", "run_bqd", "run_experiment", "run_map_elites", "sobol_points",
]
