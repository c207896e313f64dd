"""Event-level Monte Carlo of the heralding experiment.

Each trial draws a pair number n, routes the n herald-arm photons through
the beamsplitter one by one, applies per-photon loss and per-detector dark
counts, and records the click signature.  The fidelity estimate is the
fraction of heralded trials with exactly one pair.

Trials are split into fixed-size blocks.  Block b draws from a Philox
stream keyed on (seed, b), so the totals do not depend on how many worker
threads process the blocks.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from .conditioning import ChiLike, PreparationReport, as_chi, auto_cutoff
from .detector import ALL_SIGNATURES, HERALD, Signature, TwoPortConfig

BLOCK_SIZE = 1 << 16
PAIR_CAP_TOLERANCE = 1e-15


class ZeroHeraldsError(ArithmeticError):
    """No trial produced the herald signature."""


def block_rng(seed: int, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(block),))
    return np.random.Generator(np.random.Philox(ss))


def default_pair_cap(chi: ChiLike) -> int:
    return auto_cutoff(chi, PAIR_CAP_TOLERANCE)


def _pair_numbers(q: float, cap: int, u: np.ndarray) -> np.ndarray:
    # inverse CDF of the geometric law restricted to 0..cap
    if q == 0.0:
        return np.zeros(u.shape, dtype=np.int64)
    mass = -math.expm1((cap + 1) * math.log(q))  # 1 - q**(cap+1)
    n = np.floor(np.log1p(-u * mass) / math.log(q))
    return np.clip(n, 0, cap).astype(np.int64)


def sample_pair_number(
    chi: ChiLike, rng: np.random.Generator, pair_cap: Optional[int] = None
) -> int:
    """Draw n with probability proportional to chi^(2n), n <= pair_cap."""
    chi = as_chi(chi)
    cap = default_pair_cap(chi) if pair_cap is None else pair_cap
    q = chi * chi
    if q == 0.0:
        return 0
    mass = -math.expm1((cap + 1) * math.log(q))
    n = math.floor(math.log1p(-rng.random() * mass) / math.log(q))
    return min(max(n, 0), cap)


def simulate_trial(n: int, cfg: TwoPortConfig, rng: np.random.Generator) -> Signature:
    """Photon-by-photon simulation of one heralding window."""
    survived = [0, 0]
    dets = (cfg.detector_reflected, cfg.detector_transmitted)
    for _ in range(n):
        port = 0 if rng.random() < cfg.reflectivity else 1
        if rng.random() >= dets[port].loss:
            survived[port] += 1
    clicks = [survived[k] > 0 or rng.random() < dets[k].dark_count for k in (0, 1)]
    return Signature(*clicks)


@dataclass(frozen=True)
class McConfig:
    trials: int
    seed: int
    chi: float
    cfg: TwoPortConfig
    pair_cap: Optional[int] = None

    def __post_init__(self):
        if isinstance(self.trials, bool) or int(self.trials) != self.trials or self.trials < 1:
            raise ValueError(f"trials must be a positive integer, got {self.trials!r}")
        if not (0 <= int(self.seed) < 2**64):
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        object.__setattr__(self, "chi", as_chi(self.chi))
        if self.pair_cap is None:
            object.__setattr__(self, "pair_cap", default_pair_cap(self.chi))


@dataclass(frozen=True)
class McEstimate:
    fidelity_hat: float
    fidelity_se: float
    herald_prob_hat: float
    herald_prob_se: float
    herald_count: int
    single_pair_heralds: int
    trials: int
    signature_counts: Dict[Signature, int]


def _simulate_block(mc: McConfig, block: int, size: int) -> np.ndarray:
    """Counts per (signature index, heralded-single-pair flag) for one block.

    Returns [count(SS), count(CS), count(SC), count(CC), heralds with n == 1].
    """
    rng = block_rng(mc.seed, block)
    cfg = mc.cfg
    d1, d2 = cfg.detector_reflected, cfg.detector_transmitted
    n = _pair_numbers(mc.chi * mc.chi, mc.pair_cap, rng.random(size))
    # summing independent per-photon Bernoulli routings and survivals
    reflected = rng.binomial(n, cfg.reflectivity)
    kept1 = rng.binomial(reflected, 1.0 - d1.loss)
    kept2 = rng.binomial(n - reflected, 1.0 - d2.loss)
    click1 = (kept1 > 0) | (rng.random(size) < d1.dark_count)
    click2 = (kept2 > 0) | (rng.random(size) < d2.dark_count)
    code = click1.astype(np.int64) + 2 * click2.astype(np.int64)
    counts = np.bincount(code, minlength=4)
    heralded = click1 & ~click2
    single = int(np.count_nonzero(heralded & (n == 1)))
    # code order: SS=0, CS=1, SC=2, CC=3
    return np.array([counts[0], counts[1], counts[2], counts[3], single], dtype=np.int64)


def run(mc: McConfig, workers: int = 1) -> McEstimate:
    """Estimate fidelity and heralding probability from ``mc.trials`` trials.

    Bit-identical for a given (seed, trials) whatever ``workers`` is.
    """
    nblocks = -(-mc.trials // BLOCK_SIZE)
    sizes = [min(BLOCK_SIZE, mc.trials - b * BLOCK_SIZE) for b in range(nblocks)]
    if workers <= 1 or nblocks == 1:
        parts = [_simulate_block(mc, b, s) for b, s in enumerate(sizes)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda bs: _simulate_block(mc, *bs), enumerate(sizes)))
    totals = np.zeros(5, dtype=np.int64)
    for p in parts:
        totals += p
    sig_counts = {
        Signature(False, False): int(totals[0]),
        Signature(True, False): int(totals[1]),
        Signature(False, True): int(totals[2]),
        Signature(True, True): int(totals[3]),
    }
    heralds = sig_counts[HERALD]
    if heralds == 0:
        raise ZeroHeraldsError(f"no heralds in {mc.trials} trials (chi={mc.chi})")
    single = int(totals[4])
    f_hat = single / heralds
    p_hat = heralds / mc.trials
    return McEstimate(
        fidelity_hat=f_hat,
        fidelity_se=math.sqrt(f_hat * (1.0 - f_hat) / heralds),
        herald_prob_hat=p_hat,
        herald_prob_se=math.sqrt(p_hat * (1.0 - p_hat) / mc.trials),
        herald_count=heralds,
        single_pair_heralds=single,
        trials=mc.trials,
        signature_counts={s: sig_counts[s] for s in ALL_SIGNATURES},
    )


@dataclass(frozen=True)
class McComparison:
    fidelity_z: float
    herald_prob_z: float
    n_sigma: float

    @property
    def passed(self) -> bool:
        return abs(self.fidelity_z) <= self.n_sigma and abs(self.herald_prob_z) <= self.n_sigma


def _z(hat: float, ref: float, n: int) -> float:
    # binomial standard error taken at the reference proportion; the plug-in
    # (Wald) error is zero whenever the estimate sits at 0 or 1
    se = math.sqrt(ref * (1.0 - ref) / n)
    if se == 0.0:
        return 0.0 if hat == ref else math.inf
    return (hat - ref) / se


def compare(report: PreparationReport, est: McEstimate, n_sigma: float = 5.0) -> McComparison:
    """Standardized distance between analytic values and Monte Carlo estimates."""
    return McComparison(
        fidelity_z=_z(est.fidelity_hat, report.fidelity, est.herald_count),
        herald_prob_z=_z(est.herald_prob_hat, report.herald_probability, est.trials),
        n_sigma=n_sigma,
    )
