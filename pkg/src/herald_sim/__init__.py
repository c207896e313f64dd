"""Heralded single-photon preparation with an asymmetric two-port bucket detector."""

__version__ = "0.1.0"

from .detector import (  # noqa: E402
    ALL_SIGNATURES,
    HERALD,
    DetectorParams,
    InvalidParameterError,
    Signature,
    SignatureTable,
    TwoPortConfig,
    herald_prob_table,
    signature_prob,
    single_detector_click_prob,
)
from .conditioning import (  # noqa: E402
    ConditionalState,
    DegenerateHeraldError,
    PreparationReport,
    SqueezingParam,
    auto_cutoff,
    conditional_state,
    pair_number_weights,
    prepare,
)

__all__ = [
    "ALL_SIGNATURES",
    "HERALD",
    "ConditionalState",
    "DegenerateHeraldError",
    "DetectorParams",
    "InvalidParameterError",
    "PreparationReport",
    "Signature",
    "SignatureTable",
    "SqueezingParam",
    "TwoPortConfig",
    "auto_cutoff",
    "conditional_state",
    "herald_prob_table",
    "pair_number_weights",
    "prepare",
    "signature_prob",
    "single_detector_click_prob",
]
