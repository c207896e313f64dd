"""Click statistics of a two-port bucket-detector network.

An n-photon Fock state hits a beamsplitter of reflectivity ``eta_ref``.
Each output port feeds a non-number-resolving ("bucket") detector with
its own per-photon loss probability and per-window dark-count probability.
The four possible click patterns are the measurement signatures; their
probabilities as a function of n are the diagonal weights of the POVM.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple


class InvalidParameterError(ValueError):
    """Raised when a probability or count is outside its allowed range."""


def check_probability(name: str, value: float) -> float:
    value = float(value)
    if not (0.0 <= value <= 1.0):  # also rejects NaN
        raise InvalidParameterError(f"{name} must lie in [0, 1], got {value!r}")
    return value


def check_count(name: str, value: int) -> int:
    if isinstance(value, bool) or int(value) != value or value < 0:
        raise InvalidParameterError(f"{name} must be a nonnegative integer, got {value!r}")
    return int(value)


@dataclass(frozen=True)
class DetectorParams:
    """Bucket detector: ``loss`` is the per-photon miss probability,
    ``dark_count`` the probability of a spurious click per window."""

    loss: float = 0.0
    dark_count: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "loss", check_probability("loss", self.loss))
        object.__setattr__(self, "dark_count", check_probability("dark_count", self.dark_count))


@dataclass(frozen=True)
class TwoPortConfig:
    reflectivity: float
    detector_reflected: DetectorParams = field(default_factory=DetectorParams)
    detector_transmitted: DetectorParams = field(default_factory=DetectorParams)

    def __post_init__(self):
        object.__setattr__(
            self, "reflectivity", check_probability("reflectivity", self.reflectivity)
        )

    @classmethod
    def symmetric(cls, reflectivity: float, loss: float = 0.0, dark_count: float = 0.0):
        """Both detectors share ``loss`` and ``dark_count``."""
        det = DetectorParams(loss, dark_count)
        return cls(reflectivity, det, det)


class Signature(NamedTuple):
    detector1_clicked: bool
    detector2_clicked: bool

    def __str__(self):
        return "".join("C" if c else "S" for c in self)


#: click at the reflected-port detector, silence at the other
HERALD = Signature(True, False)
ALL_SIGNATURES = (
    Signature(False, False),
    Signature(True, False),
    Signature(False, True),
    Signature(True, True),
)


def single_detector_click_prob(photons_arriving: int, det: DetectorParams) -> float:
    """Probability that a bucket detector clicks when ``photons_arriving`` photons reach it.

    The detector stays silent only if every photon is lost and no dark count
    fires, so the click probability is ``1 - loss**i * (1 - dark_count)``
    (with ``0**0 == 1``).
    """
    i = check_count("photons_arriving", photons_arriving)
    # float power already gives 0.0**0 == 1.0
    return 1.0 - det.loss**i * (1.0 - det.dark_count)


def binomial_coefficients(n: int) -> List[float]:
    """Row n of Pascal's triangle as floats, built by the multiplicative recurrence."""
    row = [1.0] * (n + 1)
    for i in range(1, n + 1):
        row[i] = row[i - 1] * (n - i + 1) / i
    return row


def signature_prob(n: int, sig: Signature, cfg: TwoPortConfig) -> float:
    """Probability of observing ``sig`` given n photons incident on the beamsplitter.

    Sums over the number ``i`` of reflected photons: binomial routing weight
    times the click-or-silence factor of each detector.
    """
    n = check_count("n", n)
    clicked1, clicked2 = sig
    r = cfg.reflectivity
    t = 1.0 - r
    det1, det2 = cfg.detector_reflected, cfg.detector_transmitted
    keep1, keep2 = 1.0 - det1.dark_count, 1.0 - det2.dark_count
    total = 0.0
    for i, c in enumerate(binomial_coefficients(n)):
        route = c * r**i * t ** (n - i)
        if route == 0.0:
            continue
        s1 = det1.loss**i * keep1
        s2 = det2.loss ** (n - i) * keep2
        total += route * (1.0 - s1 if clicked1 else s1) * (1.0 - s2 if clicked2 else s2)
    return total


@dataclass(frozen=True)
class SignatureTable:
    """Diagonal POVM weights ``probs[sig][n]`` for n = 0..cutoff."""

    cutoff: int
    probs: Dict[Signature, List[float]]

    def column(self, sig: Signature = HERALD) -> List[float]:
        return self.probs[Signature(*sig)]

    def completeness_error(self) -> float:
        """Largest deviation of the per-n signature sum from 1."""
        return max(
            abs(math.fsum(self.probs[s][n] for s in ALL_SIGNATURES) - 1.0)
            for n in range(self.cutoff + 1)
        )


def herald_prob_table(cfg: TwoPortConfig, cutoff: int) -> SignatureTable:
    cutoff = check_count("cutoff", cutoff)
    probs = {
        sig: [signature_prob(n, sig, cfg) for n in range(cutoff + 1)] for sig in ALL_SIGNATURES
    }
    return SignatureTable(cutoff, probs)
