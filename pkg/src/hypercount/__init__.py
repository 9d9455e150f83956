"""Counting connected uniform hypergraphs and the giant component of H^r(n, p)."""
from .errors import DomainError, ForestError, GuardError, NoSuchHypergraphError
from .params import ModelParams, RhoProfile, EnumerationInstance, psi_r, solve_rho, rho_profile

__version__ = "0.1.0"
