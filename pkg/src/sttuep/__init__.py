"""Shadow-tomography transmission with unequal error protection over a BSC."""

from .fec import ChannelSpec, CodeSpec
from .protocol import EstimateReport, TransmissionOutcome, UepConfig, estimate_all, min_copies, transmit
from .qsim import BasisString, PauliObservable, StateVector, expectation, haar_random_state, named_state
from .shadows import ShadowBatch, ShadowRecord, acquire

__all__ = [
    "BasisString",
    "ChannelSpec",
    "CodeSpec",
    "EstimateReport",
    "PauliObservable",
    "ShadowBatch",
    "ShadowRecord",
    "StateVector",
    "TransmissionOutcome",
    "UepConfig",
    "acquire",
    "estimate_all",
    "expectation",
    "haar_random_state",
    "min_copies",
    "named_state",
    "transmit",
]
