"""Envelope convergence table.

Probes the box-constrained envelope u_{lam,mu} of a kink function against the
two limit regimes: mu -> 0 at fixed lam (uniform gaps shrink, Lipschitz
constants stay bounded) and lam -> infinity at fixed mu (values converge but
the Lipschitz constants blow up, so the sequence is flagged).

Usage: python scripts/tau_convergence.py
"""

import sys

from affval.funcs import AffineFn, PAFn
from affval.geometry import box
from affval.sequences import tau_probe
from affval.transforms import moreau_box


def main():
    base = PAFn([AffineFn([0.5], 0.0), AffineFn([-0.5], 0.0)], box([-1], [1]))

    js = list(range(0, 11))
    seq = [moreau_box(base, 1.0, 2.0 ** -j) for j in js]
    probe = tau_probe(seq, base, per_axis=17)
    print("mu -> 0 at lam = 1")
    print("   j      mu        sup gap    Lipschitz")
    for j, gaps, lip in zip(js, probe.sup_gaps, probe.lipschitz_values):
        print(f"  {j:2d}  {2.0**-j:9.5f}  {gaps[0]:.6f}   {lip:9.4f}")
    print(f"  tau-consistent: {probe.tau_consistent}")

    js2 = list(range(0, 9, 2))
    neg = [moreau_box(base, 2.0 ** j, 1.0) for j in js2]
    nprobe = tau_probe(neg, base, per_axis=17)
    print("lam -> infinity at mu = 1 (control)")
    print("   j      lam       sup gap    Lipschitz")
    for j, gaps, lip in zip(js2, nprobe.sup_gaps, nprobe.lipschitz_values):
        print(f"  {j:2d}  {2.0**j:9.1f}  {gaps[0]:.6f}   {lip:9.4f}")
    print(f"  tau-consistent: {nprobe.tau_consistent} "
          f"(Lipschitz bounded: {nprobe.lipschitz_ok})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
