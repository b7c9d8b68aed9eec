from .signal import SignalVector, TensorSignal
from .prior import DiscretePrior, PriorKind, SupportArrays
from .overlap import OverlapPMF, RateFunctionRow, SpreadProfileRow
from .channel import ChannelInstance, DenseObservation, GramFactorization, ProjectionObservation
from .estimates import (
    BayesMapComparison,
    BetaGridSimulation,
    ChiSquareValue,
    DivergenceEstimate,
    DivergenceKind,
    ImmseRow,
    KlCurvePoint,
    MaxProjectionEstimate,
    MonteCarloEstimate,
    MutualInformationCheck,
    PosteriorSummary,
)
from .second_moment import ConditionalChiSquareBound, Prop5Calibration, Prop5Row, TruncationEvent
from .config import CheckResult, SweepConfig, SweepRecord, parse_grid

__all__ = [
    "SignalVector", "TensorSignal",
    "DiscretePrior", "PriorKind", "SupportArrays",
    "OverlapPMF", "RateFunctionRow", "SpreadProfileRow",
    "ChannelInstance", "DenseObservation", "GramFactorization", "ProjectionObservation",
    "BayesMapComparison", "BetaGridSimulation", "ChiSquareValue", "DivergenceEstimate", "DivergenceKind", "ImmseRow",
    "KlCurvePoint", "MaxProjectionEstimate", "MonteCarloEstimate", "MutualInformationCheck",
    "PosteriorSummary",
    "ConditionalChiSquareBound", "Prop5Calibration", "Prop5Row", "TruncationEvent",
    "CheckResult", "SweepConfig", "SweepRecord", "parse_grid",
]
