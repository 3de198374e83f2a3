"""Normalized random measures with point-process atoms."""

from ._core import (
    DomainError,
    default_config,
    fit,
    gfc,
    joint_kn_law,
    kappa,
    log_pochhammer,
    prior_analysis,
    prior_moments,
    psi,
    run,
    synthetic,
    version,
)

__all__ = [
    "DomainError",
    "default_config",
    "fit",
    "gfc",
    "joint_kn_law",
    "kappa",
    "log_pochhammer",
    "prior_analysis",
    "prior_moments",
    "psi",
    "run",
    "synthetic",
    "version",
]
