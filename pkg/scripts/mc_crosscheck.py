"""Analytic vs Monte Carlo comparison over the standard 24-point grid."""
import argparse
import itertools

from herald_sim.conditioning import prepare
from herald_sim.detector import TwoPortConfig
from herald_sim.montecarlo import McConfig, compare, run


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=10**6)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    print("chi,eta_ref,loss,dark,F_analytic,F_mc,z_F,P_analytic,P_mc,z_P,verdict")
    fails = 0
    for chi, eta, loss, dark in itertools.product((0.1, 0.3), (0.1, 0.5, 0.9), (0.0, 0.3), (0.0, 1e-3)):
        cfg = TwoPortConfig.symmetric(eta, loss, dark)
        est = run(McConfig(args.trials, args.seed, chi, cfg), workers=args.workers)
        rep = prepare(chi, cfg)
        c = compare(rep, est)
        fails += not c.passed
        print(f"{chi},{eta},{loss},{dark},{rep.fidelity:.6f},{est.fidelity_hat:.6f},{c.fidelity_z:+.2f},"
              f"{rep.herald_probability:.6e},{est.herald_prob_hat:.6e},{c.herald_prob_z:+.2f},"
              f"{'PASS' if c.passed else 'FAIL'}")
    raise SystemExit(1 if fails else 0)


if __name__ == "__main__":
    main()
