"""Experiment configs, runs, reports, demos and the command line."""

from .config import ExperimentConfig, build_setup
from .experiments import (
    RunReport,
    deepsets_check,
    discretized_translation_demo,
    invariant_case_config,
    mollifier_sweep,
    rotation_demo,
    run_experiment,
    scaling_demo,
    translation_scaling_config,
)
from .oracle import brute_force_equivariant_oracle
