"""Busy-period distribution of the M/M/c queue."""

from .model import BusyPeriodDistribution, ExponentialMixture, ModelParams, PoleSet
from .spectral import bp_distribution

__all__ = ["BusyPeriodDistribution", "ExponentialMixture", "ModelParams", "PoleSet", "bp_distribution"]
