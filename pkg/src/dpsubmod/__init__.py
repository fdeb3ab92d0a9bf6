"""Differentially private empirical risk minimisation with norms induced by
submodular set functions."""

from .erm import Dataset, DualProblem, ErmProblem, LossModel, solve_erm
from .mechanisms import PrivacyParams, objective_perturb, output_perturb, private_frank_wolfe
from .submodular import SubmodularFn, gaussian_width_mc, lovasz_extension, make_function, omega_inf

__all__ = [
    "Dataset",
    "DualProblem",
    "ErmProblem",
    "LossModel",
    "PrivacyParams",
    "SubmodularFn",
    "gaussian_width_mc",
    "lovasz_extension",
    "make_function",
    "objective_perturb",
    "omega_inf",
    "output_perturb",
    "private_frank_wolfe",
    "solve_erm",
]
