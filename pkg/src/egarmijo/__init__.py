"""Exponentiated gradient with Armijo line search over density matrices."""
from .baselines import (
    BaselineConfig,
    diluted_rpr_solve,
    diluted_rpr_step,
    frank_wolfe_solve,
    rpr_solve,
    rpr_step,
)
from .dataset import MeasurementDataset
from .geometry import (
    DIVERGENCE_INFINITY,
    DensityMatrix,
    assert_density,
    maximally_mixed,
    relative_entropy,
    von_neumann_entropy,
)
from .losses import (
    EntropyLeastSquaresLoss,
    HedgedLoss,
    LinearLoss,
    LogLikelihoodLoss,
    LossModel,
    MaxEntropyLoss,
)
from .solver import (
    ArmijoConfig,
    PhiContext,
    SolveTrace,
    StopRule,
    armijo_search,
    eg_step,
    optimality_gap,
    solve_eg,
)

__version__ = "0.1.0"
