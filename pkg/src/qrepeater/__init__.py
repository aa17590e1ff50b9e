"""Cavity-QED quantum repeater simulator and rate-analysis toolkit."""

from .qmat import (
    DensityOperator,
    HermitianOperator,
    PureState,
    DimensionError,
    ValidationError,
    tensor,
    partial_trace,
    eigh,
    evolve,
    project,
    fidelity,
)
from .field import CoherentBranchState, CatSpec, LossChannel
from .distribution import (
    BellDiagonalPair,
    DistributionParams,
    distribute_pair,
    distribute_quad,
    fidelity_curve,
)
from .purification import TripletEvolutionSpec, purify, purified_fidelity_closed_form
from .swapping import (
    ChainSpec,
    chain_compose,
    modified_bell_basis,
    swap_conventional,
    swap_dynamical,
)

__version__ = "0.1.0"
