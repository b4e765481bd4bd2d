"""Watch the boosting ensemble accumulate its stages.

Each stage fits one identifier to whatever length error the previous
stages left behind; stages that do not improve the training fit get weight
zero.  The printout shows train and test RMSE after each stage — the train
column can only go down.

Usage: python demos/boosting_stages.py [seed]
"""

import sys

import numpy as np

from armcal import ensemble as ens
from armcal import evaluate as ev
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

    fitted = ens.boost_fit(train, model, chain, seed=seed)

    pre = ev.compute_metrics(ms.residuals(model, chain, test))
    print(f"{'stage':>5}  {'method':<6} {'weight':>6}  {'train':>7}  {'test':>7}")
    print(f"{0:>5}  {'-':<6} {'-':>6}  "
          f"{fitted.train_rmse_history[0]:>7.4f}  {pre.rmse:>7.4f}")
    for k in range(1, len(fitted.stages) + 1):
        part = fitted.truncated(k)
        m = ev.compute_metrics(ens.ensemble_residuals(part, test))
        print(f"{k:>5}  {fitted.base_order[k - 1]:<6} "
              f"{fitted.stage_weights[k - 1]:>6.1f}  "
              f"{fitted.train_rmse_history[k]:>7.4f}  {m.rmse:>7.4f}")


if __name__ == "__main__":
    main()
