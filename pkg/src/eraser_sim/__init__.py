"""Simulation of a two-atom resonance-fluorescence quantum eraser.

Two atoms each emit a sigma and a pi photon; which atom emitted which photon
is the path information.  The package builds the biphoton state from the
atomic level scheme, passes it through filters, beamsplitters and which-way
detectors, and compares numerical complementarity measures (predictability,
concurrence, eraser visibilities) with their closed forms.
"""

from .experiments import (
    ExperimentReport,
    ScenarioConfig,
    coherence_dataset,
    run,
    run_conditional,
    run_conventional,
    run_double_partial,
    sweep,
)
from .measures import MeasureRecord, closed_form_suite, concurrence, predictability
from .optics import prepare_biphoton

__all__ = [
    "ExperimentReport",
    "MeasureRecord",
    "ScenarioConfig",
    "closed_form_suite",
    "concurrence",
    "coherence_dataset",
    "predictability",
    "prepare_biphoton",
    "run",
    "run_conditional",
    "run_conventional",
    "run_double_partial",
    "sweep",
]

__version__ = "0.1.0"
