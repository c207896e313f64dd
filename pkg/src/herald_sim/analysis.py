"""Parameter sweeps, the fidelity/success trade-off, and splitting-ratio optimization."""
from __future__ import annotations

import datetime as _dt
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .conditioning import (
    DEFAULT_TOLERANCE,
    MAX_CUTOFF,
    auto_cutoff,
    DegenerateHeraldError,
    as_chi,
    prepare,
)
from .detector import DetectorParams, InvalidParameterError, TwoPortConfig, check_probability

logger = logging.getLogger(__name__)

AXIS_NAMES = ("eta_ref", "loss", "dark")
DEFAULT_CHI = 0.1


class InvalidGridError(InvalidParameterError):
    pass


class AllDegenerateError(ArithmeticError):
    """Every scanned splitting ratio gave a degenerate herald."""


def make_config(eta_ref: float, loss: float = 0.0, dark: float = 0.0) -> TwoPortConfig:
    return TwoPortConfig.symmetric(eta_ref, loss, dark)


@dataclass(frozen=True)
class AxisSpec:
    name: str
    start: float
    stop: float
    points: int
    log: bool = False

    def __post_init__(self):
        if self.name not in AXIS_NAMES:
            raise InvalidGridError(f"unknown axis {self.name!r}; expected one of {AXIS_NAMES}")
        for v in (self.start, self.stop):
            if not (0.0 <= v <= 1.0):
                raise InvalidGridError(f"{self.name} axis bound {v!r} outside [0, 1]")
        if not self.start <= self.stop:
            raise InvalidGridError(f"{self.name} axis: start {self.start} > stop {self.stop}")
        if isinstance(self.points, bool) or int(self.points) != self.points or self.points < 2:
            raise InvalidGridError(f"{self.name} axis needs at least 2 points, got {self.points!r}")
        if self.log and self.start <= 0.0:
            raise InvalidGridError(f"log-spaced {self.name} axis needs start > 0")

    def values(self) -> np.ndarray:
        if self.log:
            return np.geomspace(self.start, self.stop, int(self.points))
        return np.linspace(self.start, self.stop, int(self.points))


@dataclass(frozen=True)
class SweepGrid:
    """One or two swept axes; parameters not swept take the fixed values."""

    axes: Tuple[AxisSpec, ...]
    chi: float = DEFAULT_CHI
    eta_ref: float = 0.5
    loss: float = 0.0
    dark: float = 0.0

    def __post_init__(self):
        axes = tuple(self.axes)
        if not 1 <= len(axes) <= 2:
            raise InvalidGridError("a sweep needs one or two axes")
        if len({a.name for a in axes}) != len(axes):
            raise InvalidGridError("the two axes must sweep different parameters")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "chi", as_chi(self.chi))
        for name in AXIS_NAMES:
            check_probability(name, getattr(self, name))

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(a.name for a in self.axes)

    def points(self):
        """Parameter dicts in row-major order (first axis slowest)."""
        base = {"eta_ref": self.eta_ref, "loss": self.loss, "dark": self.dark}
        for combo in itertools.product(*(a.values() for a in self.axes)):
            p = dict(base)
            p.update({a.name: float(v) for a, v in zip(self.axes, combo)})
            yield p


@dataclass(frozen=True)
class SweepPoint:
    params: Dict[str, float]
    fidelity: Optional[float]
    herald_prob: float
    status: str  # "ok" or "degenerate"


@dataclass(frozen=True)
class SweepResult:
    grid: SweepGrid
    points: List[SweepPoint]
    tolerance: float
    timestamp: Optional[str] = None
    version: str = __version__

    def records(self) -> List[dict]:
        names = self.grid.names
        return [
            {
                **{n: p.params[n] for n in names},
                "fidelity": p.fidelity,
                "herald_prob": p.herald_prob,
                "status": p.status,
            }
            for p in self.points
        ]

    def column(self, key: str) -> np.ndarray:
        return np.array(
            [np.nan if r[key] is None else r[key] for r in self.records()], dtype=float
        )

    def metadata(self) -> dict:
        g = self.grid
        meta = {
            "chi": g.chi,
            "eta_ref": g.eta_ref,
            "loss": g.loss,
            "dark": g.dark,
            "axes": [a.name for a in g.axes],
            "tolerance": self.tolerance,
            "version": self.version,
        }
        if self.timestamp is not None:
            meta["timestamp"] = self.timestamp
        return meta


def evaluate(chi: float, params: Dict[str, float], tolerance: float) -> SweepPoint:
    cfg = make_config(params["eta_ref"], params["loss"], params["dark"])
    try:
        rep = prepare(chi, cfg, tolerance)
    except DegenerateHeraldError as exc:
        return SweepPoint(params, None, exc.herald_probability, "degenerate")
    return SweepPoint(params, rep.fidelity, rep.herald_probability, "ok")


def sweep(
    grid: SweepGrid, tolerance: float = DEFAULT_TOLERANCE, timestamp: bool = True
) -> SweepResult:
    points = [evaluate(grid.chi, p, tolerance) for p in grid.points()]
    stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds") if timestamp else None
    return SweepResult(grid, points, tolerance, stamp)


# Figure grids. The axis samplings are choices; no sampling is published.
def fig1_grid(chi: float = DEFAULT_CHI) -> SweepGrid:
    """Ideal detectors, fidelity against splitting ratio."""
    return SweepGrid((AxisSpec("eta_ref", 0.01, 1.0, 100),), chi=chi)


def fig2_grid(chi: float = DEFAULT_CHI) -> SweepGrid:
    """Fidelity against loss at eta_ref = 0.1 and 0.5."""
    return SweepGrid(
        (AxisSpec("eta_ref", 0.1, 0.5, 2), AxisSpec("loss", 0.0, 0.99, 100)), chi=chi
    )


def fig3_grid(chi: float = DEFAULT_CHI) -> SweepGrid:
    """Fidelity over (dark count, splitting ratio) with no loss."""
    return SweepGrid(
        (AxisSpec("dark", 1e-8, 1e-2, 50, log=True), AxisSpec("eta_ref", 0.01, 1.0, 50)),
        chi=chi,
    )


PRESETS: Dict[str, Callable[[float], SweepGrid]] = {
    "fig1": fig1_grid,
    "fig2": fig2_grid,
    "fig3": fig3_grid,
}


class TradeoffPoint(NamedTuple):
    eta_ref: float
    fidelity: float
    herald_probability: float


def _detectors(detector) -> Tuple[DetectorParams, DetectorParams]:
    if isinstance(detector, DetectorParams):
        return detector, detector
    d1, d2 = detector
    return d1, d2


def tradeoff_curve(
    chi: float,
    detector,
    eta_ref_grid: Sequence[float],
    tolerance: float = DEFAULT_TOLERANCE,
) -> List[TradeoffPoint]:
    """(eta_ref, fidelity, heralding probability) along ``eta_ref_grid``.

    ``detector`` is one DetectorParams for both ports or a (reflected,
    transmitted) pair.  Degenerate points are dropped and logged.
    """
    d1, d2 = _detectors(detector)
    out = []
    for eta in eta_ref_grid:
        try:
            rep = prepare(chi, TwoPortConfig(float(eta), d1, d2), tolerance)
        except DegenerateHeraldError:
            logger.info("eta_ref=%g omitted from trade-off curve: herald never fires", eta)
            continue
        out.append(TradeoffPoint(float(eta), rep.fidelity, rep.herald_probability))
    return out


INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(f: Callable[[float], float], lo: float, hi: float, tol: float):
    """Maximize a unimodal ``f`` on [lo, hi]; returns (x, f(x)) with final bracket width <= tol."""
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


@dataclass(frozen=True)
class OptimumReport:
    eta_ref_star: float
    fidelity_star: float
    bracket: Tuple[float, float]
    refinement_tolerance: float
    interior: bool
    chi: float = DEFAULT_CHI
    detectors: Tuple[DetectorParams, DetectorParams] = field(
        default=(DetectorParams(), DetectorParams())
    )

    def as_record(self) -> dict:
        d1, d2 = self.detectors
        return {
            "chi": self.chi,
            "loss": d1.loss,
            "dark": d1.dark_count,
            "eta_ref_star": self.eta_ref_star,
            "fidelity_star": self.fidelity_star,
            "bracket_lo": self.bracket[0],
            "bracket_hi": self.bracket[1],
            "refinement_tolerance": self.refinement_tolerance,
            "interior": self.interior,
        }


def optimize_eta_ref(
    chi: float,
    detector=DetectorParams(),
    refinement_tolerance: float = 1e-6,
    scan_points: int = 1024,
    tolerance: float = DEFAULT_TOLERANCE,
) -> OptimumReport:
    """Splitting ratio maximizing the heralded fidelity.

    Scans eta_ref = k/scan_points for k = 1..scan_points, then runs a golden
    section search between the neighbours of the best scanned point.  When
    the search runs into the edge of (0, 1] the optimum is reported as
    non-interior at the best scanned point.
    """
    chi = as_chi(chi)
    if not refinement_tolerance > 0.0:
        raise InvalidParameterError("refinement_tolerance must be positive")
    d1, d2 = _detectors(detector)

    def fid(eta: float) -> float:
        try:
            return prepare(chi, TwoPortConfig(eta, d1, d2), tolerance).fidelity
        except DegenerateHeraldError:
            return -math.inf

    scan = [k / scan_points for k in range(1, scan_points + 1)]
    values = [fid(x) for x in scan]
    k = max(range(scan_points), key=values.__getitem__)
    if values[k] == -math.inf:
        raise AllDegenerateError(f"herald never fires for any eta_ref (chi={chi})")

    lo = scan[k - 1] if k > 0 else 0.0
    hi = scan[k + 1] if k < scan_points - 1 else 1.0
    x, fx = golden_section_max(fid, lo, hi, refinement_tolerance)
    if fx < values[k]:
        x, fx = scan[k], values[k]

    at_left = k == 0 and x - lo <= 2 * refinement_tolerance
    at_right = k == scan_points - 1 and hi - x <= 2 * refinement_tolerance
    if at_left or at_right:
        edge = scan[k]
        neighbour = scan[1] if at_left else scan[-2]
        return OptimumReport(
            eta_ref_star=edge,
            fidelity_star=values[k],
            bracket=(min(edge, neighbour), max(edge, neighbour)),
            refinement_tolerance=refinement_tolerance,
            interior=False,
            chi=chi,
            detectors=(d1, d2),
        )
    return OptimumReport(
        eta_ref_star=x,
        fidelity_star=fx,
        bracket=(lo, hi),
        refinement_tolerance=refinement_tolerance,
        interior=True,
        chi=chi,
        detectors=(d1, d2),
    )


def fidelity_on_grid(
    chi: float, detector, eta_refs, tolerance: float = DEFAULT_TOLERANCE
) -> np.ndarray:
    """Vectorized fidelity over an array of splitting ratios (NaN where degenerate).

    Evaluates the herald probabilities for all ratios at once; meant for
    dense scans where one ``prepare`` call per point would be slow.
    """
    chi = as_chi(chi)
    d1, d2 = _detectors(detector)
    eta = np.asarray(eta_refs, dtype=float)
    q = chi * chi

    def weights(cutoff):
        w = np.zeros((cutoff + 1,) + eta.shape)
        for n in range(cutoff + 1):
            coeff = 1.0
            p = np.zeros_like(eta)
            for i in range(n + 1):
                if i:
                    coeff = coeff * (n - i + 1) / i
                click1 = 1.0 - d1.loss**i * (1.0 - d1.dark_count)
                silent2 = d2.loss ** (n - i) * (1.0 - d2.dark_count)
                p += coeff * eta**i * (1.0 - eta) ** (n - i) * click1 * silent2
            w[n] = (1.0 - q) * q**n * p
        return w

    cutoff = max(1, auto_cutoff(chi, tolerance))
    while True:
        w = weights(cutoff)
        trace = w.sum(axis=0)
        tail = q ** (cutoff + 1)
        positive = trace > 0.0
        if tail == 0.0 or not positive.any():
            break
        need = math.ceil(math.log(tolerance * trace[positive].min()) / math.log(q)) - 1
        if tail <= tolerance * trace[positive].min() or cutoff >= MAX_CUTOFF:
            break
        cutoff = min(MAX_CUTOFF, max(cutoff + 1, need))
    with np.errstate(invalid="ignore", divide="ignore"):
        out = w[1] / trace
    # same resolvability rule as prepare()
    out[~(trace > 10.0 * tail) | (tail > tolerance * trace)] = np.nan
    return out
