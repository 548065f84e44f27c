"""Finite-group equivariant maps and the conversion of fully-connected
generator networks into group convolutional networks of equal depth."""

from .convert import (
    ConversionProblem,
    ConversionReport,
    certify,
    commutation_errors,
    convert,
    lift_first_layer,
    lift_hidden_layer,
    stabilizer_average,
    validate_conditions,
)
from .deepsets import DeepSetsLayer, deepsets_apply, deepsets_to_kernel, kernel_to_deepsets
from .equivariant import (
    EquivariantMap,
    GeneratorMap,
    check_equivariance,
    g_closure,
    generator_distance,
    lift_generator,
    restrict_to_generator,
)
from .errors import *  # noqa: F403
from .fnn import Activation, AffineLayer, FitResult, FnnModel, fit_generator, fnn_forward, mse_loss_and_grads
from .gconv import (
    ConvKernel,
    GcnnModel,
    check_kernel_invariance,
    gcnn_forward,
    gconv_apply,
    kernel_from_univariate,
    univariate_from_kernel,
)
from .groups import (
    ActionDecomposition,
    FiniteGroup,
    GroupAction,
    builtin_group,
    compose,
    decompose,
    natural_action,
    regular_action,
    translate,
    trivial_action,
)
from .signal import SampleSet, check_invariant_measure, is_absolutely_continuous

__version__ = "0.1.0"
