"""Two equally good actions: does the policy keep both?

BimodalBandit pays about 1 for actions near (0.6, 0.6) or (-0.6, -0.6) and
almost nothing elsewhere. A push-forward actor can put mass on both peaks;
a squashed Gaussian has one mean per state and has to pick a side or
smear out between them.

    python demos/bimodal_bandit.py            # about 5 minutes per policy
    python demos/bimodal_bandit.py --steps 3000
"""

import argparse

import numpy as np

from pacer import envs
from pacer.actor import sample_actions_batch
from pacer.diagnostics import bimodality_report
from pacer.presets import desk_config
from pacer.trainer import run_training


def ascii_hist(actions, bins=21):
    # project onto the diagonal the two peaks sit on
    proj = actions.mean(axis=1)
    counts, edges = np.histogram(proj, bins=bins, range=(-1, 1))
    top = counts.max()
    for c, lo in zip(counts, edges[:-1]):
        print(f"  {lo:+.2f} | " + "#" * int(40 * c / top))


parser = argparse.ArgumentParser()
parser.add_argument("--steps", type=int, default=10_000)
parser.add_argument("--seed", type=int, default=0)
args = parser.parse_args()

for kind in ("pushforward", "gaussian"):
    cfg = desk_config("BimodalBandit", total_steps=args.steps, seed=args.seed, policy_kind=kind)
    res = run_training(envs.make("BimodalBandit"), cfg)
    state = res.state

    s = state.normalizer.normalize(np.zeros(1))
    acts = sample_actions_batch(state.actor, s, 20_000, "eval", np.random.default_rng(1))
    rep = bimodality_report(acts)

    print(f"\n{kind} policy, final eval return {res.final_eval:.3f}")
    print(f"  mass per mode {np.round(rep.mass, 3)}, cluster means {np.round(rep.cluster_centers, 2).tolist()}")
    print(f"  verdict: {'PASS' if rep.passed else 'FAIL'}")
    ascii_hist(acts)
