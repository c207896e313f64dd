"""Heralded state of a down-conversion source and its single-photon fidelity.

The source emits n photon pairs with probability (1 - chi^2) chi^(2n).
Detecting the herald signature on one arm leaves the other arm in a
photon-number-diagonal state whose (unnormalized) weights are
(1 - chi^2) chi^(2n) P_herald(n).  The trace of that state is the
heralding probability and its normalized n=1 weight is the fidelity.

All infinite sums are truncated at a Fock cutoff N with a certified
geometric tail bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

from .detector import (
    HERALD,
    InvalidParameterError,
    TwoPortConfig,
    check_count,
    signature_prob,
)

DEFAULT_TOLERANCE = 1e-12
# float binomial coefficients overflow a little past n = 1020
MAX_CUTOFF = 1000


class DegenerateHeraldError(ArithmeticError):
    """The herald (almost) never fires, so the fidelity is 0/0."""

    def __init__(self, message: str, herald_probability: float = 0.0):
        super().__init__(message)
        self.herald_probability = herald_probability


@dataclass(frozen=True)
class SqueezingParam:
    chi: float

    def __post_init__(self):
        chi = float(self.chi)
        if not (0.0 <= chi < 1.0):
            raise InvalidParameterError(f"chi must lie in [0, 1), got {self.chi!r}")
        object.__setattr__(self, "chi", chi)


ChiLike = Union[float, SqueezingParam]


def as_chi(chi: ChiLike) -> float:
    if isinstance(chi, SqueezingParam):
        return chi.chi
    return SqueezingParam(chi).chi


def _check_tolerance(tolerance: float) -> float:
    tolerance = float(tolerance)
    if not tolerance > 0.0:
        raise InvalidParameterError(f"tolerance must be positive, got {tolerance!r}")
    return tolerance


def pair_number_weights(chi: ChiLike, cutoff: int) -> List[float]:
    """Photon-pair number distribution (1 - chi^2) chi^(2n), n = 0..cutoff."""
    q = as_chi(chi) ** 2
    cutoff = check_count("cutoff", cutoff)
    return [(1.0 - q) * q**n for n in range(cutoff + 1)]


def geometric_tail(chi: ChiLike, cutoff: int) -> float:
    """sum_{n > cutoff} chi^(2n) = chi^(2(cutoff+1)) / (1 - chi^2)."""
    q = as_chi(chi) ** 2
    return q ** (cutoff + 1) / (1.0 - q)


def auto_cutoff(chi: ChiLike, tolerance: float = DEFAULT_TOLERANCE) -> int:
    """Smallest N whose geometric tail sum_{n>N} chi^(2n) is at most ``tolerance``.

    Every click probability is at most 1, so this also bounds what the
    truncated sums leave out.
    """
    q = as_chi(chi) ** 2
    tolerance = _check_tolerance(tolerance)
    if q == 0.0:
        return 0
    # log estimate, then fix up against the exact inequality
    n = max(0, math.ceil(math.log(tolerance * (1.0 - q)) / math.log(q)) - 1)
    while n > 0 and geometric_tail(chi, n - 1) <= tolerance:
        n -= 1
    while geometric_tail(chi, n) > tolerance:
        n += 1
    return n


@dataclass(frozen=True)
class ConditionalState:
    """Unnormalized diagonal weights of the heralded arm.

    ``tail_bound`` bounds the total weight of the omitted n > cutoff terms.
    """

    cutoff: int
    weights: Tuple[float, ...]
    tail_bound: float

    @property
    def trace(self) -> float:
        return math.fsum(self.weights)

    def normalized(self) -> List[float]:
        tr = self.trace
        return [w / tr for w in self.weights]


def conditional_state(
    chi: ChiLike,
    cfg: TwoPortConfig,
    tolerance: float = DEFAULT_TOLERANCE,
    cutoff: Optional[int] = None,
) -> ConditionalState:
    """Heralded state truncated at ``auto_cutoff(chi, tolerance)`` unless ``cutoff`` is given."""
    chi = as_chi(chi)
    if cutoff is None:
        cutoff = auto_cutoff(chi, tolerance)
    cutoff = check_count("cutoff", cutoff)
    if cutoff > MAX_CUTOFF:
        raise InvalidParameterError(
            f"Fock cutoff {cutoff} exceeds {MAX_CUTOFF}; chi={chi} is too close to 1 "
            "for the requested tolerance"
        )
    return _extend(ConditionalState(-1, (), 1.0), chi, cfg, cutoff)


def _extend(state: ConditionalState, chi: float, cfg: TwoPortConfig, cutoff: int) -> ConditionalState:
    """Append the weights for n = state.cutoff+1 .. cutoff."""
    q = chi * chi
    new = tuple(
        (1.0 - q) * q**n * signature_prob(n, HERALD, cfg) if q**n else 0.0
        for n in range(state.cutoff + 1, cutoff + 1)
    )
    # (1 - chi^2) * sum_{n>N} chi^(2n)
    tail = chi ** (2 * (cutoff + 1))
    return ConditionalState(cutoff, state.weights + new, tail)


@dataclass(frozen=True)
class PreparationReport:
    fidelity: float
    herald_probability: float
    cutoff: int
    truncation_error: float
    chi: float
    config: TwoPortConfig

    def as_record(self) -> dict:
        cfg = self.config
        return {
            "chi": self.chi,
            "eta_ref": cfg.reflectivity,
            "loss_reflected": cfg.detector_reflected.loss,
            "dark_reflected": cfg.detector_reflected.dark_count,
            "loss_transmitted": cfg.detector_transmitted.loss,
            "dark_transmitted": cfg.detector_transmitted.dark_count,
            "fidelity": self.fidelity,
            "herald_prob": self.herald_probability,
            "cutoff": self.cutoff,
            "truncation_error": self.truncation_error,
        }


def prepare(
    chi: ChiLike, cfg: TwoPortConfig, tolerance: float = DEFAULT_TOLERANCE
) -> PreparationReport:
    """Fidelity and heralding probability of the heralded single photon.

    The cutoff starts at ``auto_cutoff`` and is raised until the omitted
    tail is at most ``tolerance`` relative to the heralding probability,
    which bounds the absolute truncation error of the fidelity by
    ``tolerance``.

    Raises DegenerateHeraldError when the heralding probability is not
    resolvable above the tail bound.
    """
    chi = as_chi(chi)
    tolerance = _check_tolerance(tolerance)
    state = conditional_state(chi, cfg, tolerance)
    q = chi * chi
    while state.trace > 0.0 and state.tail_bound > tolerance * state.trace:
        need = max(math.ceil(math.log(tolerance * state.trace) / math.log(q)) - 1, state.cutoff + 1)
        if need > MAX_CUTOFF:
            raise DegenerateHeraldError(
                f"herald probability {state.trace:.3g} too small to resolve to relative "
                f"accuracy {tolerance:g} within {MAX_CUTOFF} Fock terms",
                herald_probability=state.trace,
            )
        state = _extend(state, chi, cfg, need)

    trace = state.trace
    if trace <= 10.0 * state.tail_bound:
        raise DegenerateHeraldError(
            f"herald probability {trace:.3g} is not resolvable above the truncation "
            f"bound {state.tail_bound:.3g} (chi={chi}, eta_ref={cfg.reflectivity})",
            herald_probability=trace,
        )
    fidelity = state.weights[1] / trace if state.cutoff >= 1 else 0.0
    return PreparationReport(
        fidelity=fidelity,
        herald_probability=trace,
        cutoff=state.cutoff,
        truncation_error=state.tail_bound / trace,
        chi=chi,
        config=cfg,
    )
