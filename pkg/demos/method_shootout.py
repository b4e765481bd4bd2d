"""Fit every identifier (and the boosting ensemble) on one scenario.

Prints the same table the ``armcal compare`` command produces.  Expect a
minute or so: the particle filter and the genetic algorithm dominate the
runtime.

Usage: python demos/method_shootout.py [seed]
"""

import sys
import time

import numpy as np

from armcal import evaluate as ev
from armcal import identify
from armcal import kinematics as kin
from armcal import measurement as ms


def main():
    seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
    chain = kin.default_chain()
    model = ms.default_encoder()

    rng = np.random.default_rng(seed)
    flat = np.concatenate([
        rng.uniform(-1, 1, 12) * 1.5,
        rng.uniform(-1, 1, 11) * 0.008,
        [0.0],
    ])
    true_x = kin.KinematicErrorVector.from_flat(flat)
    full = ms.simulate_dataset(model, chain, true_x, n=120, noise_sigma=0.1,
                               seed=seed, joint_range=np.pi / 4)
    train, test = ev.split_dataset(full, 0.8, seed=seed)

    methods = identify.METHOD_NAMES + ("ensemble",)
    t0 = time.time()
    report = ev.compare_table(methods, train, test, model, chain,
                              descriptor=f"shootout seed={seed}")
    print(ev.report_to_text(report))
    print(f"\n{len(methods)} fits in {time.time() - t0:.1f} s")


if __name__ == "__main__":
    main()
