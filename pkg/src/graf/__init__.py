"""Differentiable discrete radar ambiguity function with Wirtinger-calculus gradients."""

from . import autodiff
from .ambiguity import BARKER13, AmbiguitySurface, Waveform, ambiguity, ambiguity_oracle, zero_doppler_cut
from .autodiff import Tape, Var, backward, grad_check
from .errors import GrafError, InvalidArgumentError, NumericalError, UsageError
from .losses import (
    ExclusionRegion,
    LossSpec,
    LossTerm,
    ScenarioSet,
    composite_loss,
    constant_modulus_penalty,
    experiment_loss,
    isl,
    mainlobe_width_diff,
    match_loss,
    multi_scenario_loss,
    phase_smoothness,
    psl,
    spectral_variance,
    to_db,
    waveform_metrics,
)
from .optimizers import (
    AdamConfig,
    GAConfig,
    Objective,
    RunRecord,
    adam_step,
    apply_spectral_mask,
    optimize_ga,
    optimize_gradient,
    project_unit_modulus,
    random_phases,
    seeded_rng,
)
from .experiment import (
    ParetoPoint,
    SweepConfig,
    emit_spectrum,
    load_records,
    pareto_filter,
    run_sweep,
    summarize,
)

__version__ = "0.1.0"
