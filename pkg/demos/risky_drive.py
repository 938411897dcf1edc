"""Risk-averse driving with a CVaR objective.

RiskyDrive rewards speed, but above v = 4 a crash costing -10 becomes more
likely the faster you go. At top speed the expected reward (4.5) still beats
the speed limit (4), so a risk-neutral agent speeds; the worst-quarter mean
at top speed is 0, so a CVaR-0.25 agent should slow down.

    python demos/risky_drive.py             # two runs, roughly 10 minutes each
    python demos/risky_drive.py --steps 6000
"""

import argparse

import numpy as np

from pacer import envs
from pacer.diagnostics import return_quantiles
from pacer.presets import desk_config
from pacer.trainer import evaluate, run_training

parser = argparse.ArgumentParser()
parser.add_argument("--steps", type=int, default=15_000)
parser.add_argument("--seed", type=int, default=0)
args = parser.parse_args()

# what each objective sees at top speed
env = envs.make("RiskyDrive")
r = np.sort(env.reward_at(np.full(200_000, 6.0), np.random.default_rng(0)))
print(f"reward at v=6: mean {r.mean():.2f}, worst-quarter mean {r[:len(r) // 4].mean():.2f}")

levels = np.linspace(0.05, 0.95, 7)
for level in (0.25, 1.0):
    cfg = desk_config("RiskyDrive", total_steps=args.steps, seed=args.seed, utility="cvar", cvar_level=level)
    state = run_training(envs.make("RiskyDrive"), cfg).state
    ev = evaluate(state.actor, envs.make("RiskyDrive"), 20, state.normalizer, seed=123)
    print(f"\nCVaR level {level}: return {ev.mean:.1f} +- {ev.std:.1f}, overspeed fraction {ev.overspeed_fraction:.3f}")

    # critic's return quantiles at v=3 for braking vs flooring it
    s = np.array([3.0])
    for a in (-1.0, 1.0):
        z = return_quantiles(state.critics, s, np.array([a]), levels, normalizer=state.normalizer)
        print(f"  action {a:+.0f}: quantiles at {np.round(levels, 2).tolist()} -> {np.round(z, 1).tolist()}")
