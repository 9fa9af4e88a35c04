"""Haar measures, modular functions and pushforwards along quotient maps.

Matrix Lie groups are handled through coordinate charts with automatic
differentiation and tensor quadrature; finite groups are handled exactly
with rational arithmetic.
"""
from .errors import (CertificateError, ChartError, ConfigError, DomainError, HaarPushError, IntegrationError,
                     NotNormalError, SubgroupError)
from .groups import GroupChart, aff1, borel3, by_name, euclidean, haar_density, heis3, modular, modular_parts
from .integrate import IntegralResult, Integrator, integrate_box
from .measure import Density, PropernessCert, TestFunction, bump, bump_density, check_membership, pair
from .quotient import QuotientPresentation, Split, SubgroupEmbedding, compose, make_projection, weil_normalize
from .pushforward import PushforwardHandle, pull_back, pushforward_density, pushforward_pair
from .finite import FinGroup, FinMap, FinMeasure, fin_group, fin_modular, fin_pushforward, fin_quotient_group
from .chains import FinChain, LieChain, get_chain
from .verify import ChainConfig, VerificationReport, run_check, run_suite

__version__ = "0.1.0"

__all__ = [
    "HaarPushError", "DomainError", "ChartError", "SubgroupError", "NotNormalError", "CertificateError",
    "IntegrationError", "ConfigError",
    "GroupChart", "aff1", "borel3", "by_name", "euclidean", "haar_density", "heis3", "modular", "modular_parts",
    "IntegralResult", "Integrator", "integrate_box",
    "Density", "PropernessCert", "TestFunction", "bump", "bump_density", "check_membership", "pair",
    "QuotientPresentation", "Split", "SubgroupEmbedding", "compose", "make_projection", "weil_normalize",
    "PushforwardHandle", "pull_back", "pushforward_density", "pushforward_pair",
    "FinGroup", "FinMap", "FinMeasure", "fin_group", "fin_modular", "fin_pushforward", "fin_quotient_group",
    "FinChain", "LieChain", "get_chain",
    "ChainConfig", "VerificationReport", "run_check", "run_suite",
]
