"""Sparse polynomial chaos expansions.

A ranking-based block coordinate descent solver (Rank-PCE) for Elastic Net
PCE regression, OMP and LARS baselines, analytic moments and Sobol indices,
mixed continuous/categorical inputs and benchmark problems.
"""
__version__ = "0.1.0"

from .basis import (
    BasisSpec,
    DesignSystem,
    PolynomialFamily,
    build_design_system,
    design_matrix,
    eval_basis,
    generate_multi_indices,
)
from .model import PceModel
from .regression import ElasticNetConfig, coordinate_descent, cross_validate
from .ranking import RankSolverConfig, rank_pce_fit
from .baselines import BaselineConfig, lars_fit, omp_fit
from .stats import (
    mean_from_model,
    partial_variance,
    sensitivity_report,
    sobol_index,
    total_index,
    variance_from_model,
)
from .data import DataError, Dataset, Schema, VariableSpec, load_csv
from .fields import RandomFieldSpec, energy_fraction, kl_decompose, realize_field
from .benchmarks import ackley, ishigami, make_problem, run_convergence

__all__ = [
    "BasisSpec", "DesignSystem", "PolynomialFamily", "build_design_system", "design_matrix",
    "eval_basis", "generate_multi_indices", "PceModel", "ElasticNetConfig", "coordinate_descent",
    "cross_validate", "RankSolverConfig", "rank_pce_fit", "BaselineConfig", "lars_fit", "omp_fit",
    "mean_from_model", "partial_variance", "sensitivity_report", "sobol_index", "total_index",
    "variance_from_model", "DataError", "Dataset", "Schema", "VariableSpec", "load_csv",
    "RandomFieldSpec", "energy_fraction", "kl_decompose", "realize_field", "ackley", "ishigami",
    "make_problem", "run_convergence",
]
