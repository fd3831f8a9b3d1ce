"""Simulator for GHZ-like semi-quantum secret sharing, its insider attacks and countermeasures."""

from .adversary import AdversarySpec, InterceptResend, PassiveTap, TrojanHorse, make_adversary
from .analysis import AggregateReport, ExperimentPlan, run_experiment
from .protocol import RunConfig, RunReport, run_measure_resend, run_randomization_based

__all__ = [
    "AdversarySpec",
    "AggregateReport",
    "ExperimentPlan",
    "InterceptResend",
    "PassiveTap",
    "RunConfig",
    "RunReport",
    "TrojanHorse",
    "make_adversary",
    "run_experiment",
    "run_measure_resend",
    "run_randomization_based",
]

__version__ = "0.1.0"
