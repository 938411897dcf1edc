"""The critic learns a whole return distribution, not just its mean.

One state, one step reward r ~ Bernoulli(1/2), discount 0.5. The return
sum_t 0.5^t r_t has binary digits r_0 r_1 r_2 ..., so it is exactly uniform
on [0, 2]: its tau-quantile is 2 tau. Distributional TD should recover that
straight line from single-step samples.

    python demos/distributional_td.py [steps]
"""

import sys

import numpy as np

from pacer.actor import PushForwardPolicy
from pacer.approximator import AdamState, Tape, adam_step_
from pacer.critic import QuantileHuberParams, TwinCritics, critic_loss, polyak_update, twin_min_values
from pacer.replay import Batch

rng = np.random.default_rng(0)
actor = PushForwardPolicy.create(1, np.array([-1.0]), np.array([1.0]), (8,), rng=rng)
critics = TwinCritics.create(1, 1, (64, 64), 64, 0.005, rng)
opts = [AdamState.for_params(q) for q in critics.online]
# small kappa: the Huber-smoothed loss with kappa=1 pulls the tails inward
params = QuantileHuberParams(kappa=0.05, K=32)

B = 64
STEPS = int(sys.argv[1]) if len(sys.argv) > 1 else 4000
zeros = np.zeros((B, 1))
tau_hats = (np.arange(10) + 0.5) / 10
for step in range(1, STEPS + 1):
    batch = Batch(zeros, rng.uniform(-1, 1, (B, 1)), rng.integers(0, 2, B).astype(float), zeros, np.zeros(B, bool))
    tape = Tape()
    loss = critic_loss(critics, actor, batch, params, 0.5, None, rng, tape)
    grads = tape.backward(loss)
    for q, opt in zip(critics.online, opts):
        adam_step_(q, grads[q.name], opt, 1e-3)
    polyak_update(critics)
    if step % 1000 == 0:
        z = twin_min_values(critics, critics.online, np.zeros((1, 1)), np.zeros((1, 1)), tau_hats[None])[0]
        print(f"step {step}: max |z(tau) - 2 tau| = {np.abs(z - 2 * tau_hats).max():.3f}")

print("tau   learned  exact")
for t, v in zip(tau_hats, z):
    print(f"{t:.2f}  {v:7.3f}  {2 * t:5.2f}")
