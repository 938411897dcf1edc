import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from pacer.actor import PushForwardPolicy, act, sample_noise
from pacer.approximator import AdamState, ParamVector, Tape, adam_step_, gradient_check, ops
from pacer.critic import (IqnSpec, QuantileHuberParams, QuantileReturn, TwinCritics, critic_loss, huber_quantile_loss,
                          init_iqn, polyak_update, quantile_values, sample_quantiles, td_deltas, td_target)
from pacer.errors import TrainingError
from pacer.replay import Batch
from pacer.utility import identity, reward_reshape


def make_setup(seed=0, hidden=(16, 16), n_cos=8, state_dim=2, action_dim=1):
    rng = np.random.default_rng(seed)
    actor = PushForwardPolicy.create(state_dim, -np.ones(action_dim), np.ones(action_dim), (8,), rng=rng)
    critics = TwinCritics.create(state_dim, action_dim, hidden, n_cos, 0.005, rng)
    return actor, critics


def make_batch(rng, n=4, state_dim=2, action_dim=1, reward=None):
    r = rng.normal(size=n) if reward is None else np.full(n, float(reward))
    return Batch(rng.normal(size=(n, state_dim)), rng.uniform(-1, 1, (n, action_dim)), r,
                 rng.normal(size=(n, state_dim)), np.zeros(n, bool))


def zero_net(critics):
    for q in critics.online + critics.target:
        q.values[:] = 0.0


# --- sample_quantiles --------------------------------------------------------

class FixedDraw:
    def __init__(self, values):
        self.values = np.asarray(values)

    def random(self, shape):
        return self.values.reshape(shape)


def test_single_draw_grid():
    taus, hats = sample_quantiles(1, FixedDraw([0.4]))
    assert taus.tolist() == [0.0, 0.4, 1.0]
    assert hats.tolist() == pytest.approx([0.2, 0.7])
    q = QuantileReturn(taus, np.array([1.0, 2.0]))
    assert q.weights.tolist() == pytest.approx([0.4, 0.6])
    assert q.mean() == pytest.approx(0.4 * 1 + 0.6 * 2)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 64), st.integers(0, 2**32 - 1))
def test_weights_sum_to_one_and_sorted(K, seed):
    taus, hats = sample_quantiles(K, np.random.default_rng(seed), batch=3)
    assert taus.shape == (3, K + 2) and hats.shape == (3, K + 1)
    assert np.allclose(np.diff(taus, axis=-1).sum(-1), 1.0, atol=1e-15)
    assert np.all(np.diff(taus, axis=-1) >= 0) and np.all(taus[:, 0] == 0) and np.all(taus[:, -1] == 1)
    assert np.all((hats > 0) & (hats < 1))


def test_quantile_draws_reproducible_and_validated():
    a = sample_quantiles(32, np.random.default_rng(3))
    b = sample_quantiles(32, np.random.default_rng(3))
    assert np.array_equal(a[0], b[0])
    with pytest.raises(ValueError):
        sample_quantiles(0, np.random.default_rng(0))
    with pytest.raises(ValueError):
        QuantileHuberParams(kappa=0.0)


# --- quantile_values -----------------------------------------------------------

def test_zero_head_gives_zero_atoms():
    _, critics = make_setup()
    q = critics.online[0]
    last = critics.spec.trunk.n_layers - 1
    q.view(f"fc{last}.weight")[:] = 0
    q.view(f"fc{last}.bias")[:] = 0
    z = quantile_values(critics.spec, q, np.ones((3, 2)), np.zeros((3, 1)), np.array([0.1, 0.5, 0.9]))
    assert z.shape == (3, 3) and np.all(z == 0)


def test_atom_gradient_wrt_action_and_params():
    _, critics = make_setup(seed=4)
    rng = np.random.default_rng(5)
    s, th = rng.normal(size=(3, 2)), rng.uniform(0.05, 0.95, size=(3, 4))
    w = rng.normal(size=(3, 4))
    a = ParamVector(rng.uniform(-1, 1, size=3), [("a", (3, 1))], "a")

    def f_action(params, tape):
        av = params.layer("a", tape) if tape is not None else params.view("a")
        z = quantile_values(critics.spec, critics.online[0], s, av, th, tape)
        return ops.sum(z * w) if tape is not None else float(np.sum(z * w))

    assert gradient_check(f_action, a, tol=1e-4).passed

    def f_params(params, tape):
        z = quantile_values(critics.spec, params, s, a.view("a"), th, tape)
        return ops.sum(z * w) if tape is not None else float(np.sum(z * w))

    assert gradient_check(f_params, critics.online[0], tol=1e-4).passed


def test_layout_names():
    spec = IqnSpec(3, 1, (16, 8), 64)
    names = [n for n, _ in spec.layout()]
    assert names[:4] == ["fc0.weight", "fc0.bias", "embed.weight", "embed.bias"]
    assert dict(spec.layout())["embed.weight"] == (64, 16)


def fit_normal(mu, sigma, kappa, steps=1500, seed=0):
    """Supervised quantile-Huber regression of a fixed (s, a) onto N(mu, sigma^2) samples."""
    rng = np.random.default_rng(seed)
    spec = IqnSpec(1, 1, (32, 32), 32)
    q = init_iqn(spec, rng, "q")
    opt = AdamState.for_params(q)
    s, a = np.zeros((16, 1)), np.zeros((16, 1))
    for _ in range(steps):
        _, hats = sample_quantiles(31, rng, 16)
        y = rng.normal(mu, sigma, size=(16, 32))
        tape = Tape()
        z = quantile_values(spec, q, s, a, hats, tape)
        delta = ops.sub(y[:, :, None], ops.reshape(z, (16, 1, 32)))
        loss = ops.sum(ops.quantile_huber(delta, hats[:, None, :], kappa)) * (1 / 16)
        adam_step_(q, tape.backward(loss)["q"], opt, 3e-3)
    grid = (np.arange(400) + 0.5) / 400
    z = quantile_values(spec, q, np.zeros((1, 1)), np.zeros((1, 1)), grid[None])[0]
    return np.mean(np.abs(z - (mu + sigma * stats.norm.ppf(grid))))


def test_supervised_fit_to_standard_normal():
    # kappa=1 biases the minimiser toward the centre (W1 about 0.18 on N(0,1)),
    # so the pure-quantile limit is approached with a small threshold
    assert fit_normal(0.0, 1.0, kappa=0.05) <= 0.05


def test_supervised_fit_shifted_normal():
    assert fit_normal(1.5, 0.5, kappa=0.05, seed=1) <= 0.05


# --- huber_quantile_loss -----------------------------------------------------

def direct_rho(delta, tau, kappa):
    w = abs(tau - (1.0 if delta < 0 else 0.0))
    if abs(delta) <= kappa:
        return w * delta * delta / (2 * kappa)
    return w * (abs(delta) - kappa / 2)


def test_huber_hand_values():
    assert huber_quantile_loss(0.0, 0.3, 1.0) == 0.0
    assert huber_quantile_loss(2.0, 0.5, 1.0) == pytest.approx(0.75, abs=1e-15)
    assert huber_quantile_loss(-0.5, 0.9, 1.0) == pytest.approx(0.0125, abs=1e-15)


def test_huber_matches_direct_evaluation_and_taped_op():
    rng = np.random.default_rng(0)
    d = rng.normal(scale=3, size=10_000)
    t = rng.uniform(size=10_000)
    k = rng.uniform(0.05, 3, size=10_000)
    ref = np.array([direct_rho(*x) for x in zip(d, t, k)])
    assert np.max(np.abs(huber_quantile_loss(d, t, k) - ref)) <= 1e-12
    taped = ops.quantile_huber(ops.Var(d), t, k).value
    assert np.max(np.abs(taped - ref)) <= 1e-12


def test_huber_asymmetry_monotone_in_tau():
    grid = np.linspace(0.01, 0.99, 99)
    for delta in (0.3, 2.0):
        assert np.all(np.diff(huber_quantile_loss(delta, grid)) > 0)
    for delta in (-0.3, -2.0):
        assert np.all(np.diff(huber_quantile_loss(delta, grid)) < 0)


# --- td_deltas / critic_loss ---------------------------------------------------

def test_gamma_zero_deltas_independent_of_target_index():
    actor, critics = make_setup()
    rng = np.random.default_rng(1)
    b = make_batch(rng)
    taus, _ = sample_quantiles(5, rng, 4)
    taus2, _ = sample_quantiles(7, rng, 4)
    d = td_deltas(critics, actor, b, taus, taus2, 0.0, identity(), rng)
    assert d.shape == (4, 8, 6)
    assert np.allclose(d, d[:, :1, :])


def test_zero_nets_unit_reward_all_deltas_one():
    actor, critics = make_setup()
    zero_net(critics)
    rng = np.random.default_rng(2)
    b = make_batch(rng, reward=1.0)
    taus, _ = sample_quantiles(4, rng, 4)
    d = td_deltas(critics, actor, b, taus, taus, 0.9, identity(), rng)
    assert np.all(d == 1.0)


def test_reward_reshape_applied_to_targets():
    actor, critics = make_setup()
    zero_net(critics)
    rng = np.random.default_rng(2)
    b = make_batch(rng, reward=2.0)
    taus, _ = sample_quantiles(3, rng, 4)
    d = td_deltas(critics, actor, b, taus, taus, 0.5, reward_reshape(np.tanh), rng)
    assert np.allclose(d, np.tanh(2.0))


def test_target_uses_twin_minimum():
    actor, critics = make_setup(seed=3)
    rng = np.random.default_rng(0)
    b = make_batch(rng)
    _, hats = sample_quantiles(4, rng, 4)
    y = td_target(critics, actor, b.reward, b.next_state, hats, 0.9, identity(), np.random.default_rng(7))
    r7 = np.random.default_rng(7)
    a2 = act(actor, b.next_state, sample_noise(actor, "train", r7, 4))
    z1 = quantile_values(critics.spec, critics.target[0], b.next_state, a2, hats)
    z2 = quantile_values(critics.spec, critics.target[1], b.next_state, a2, hats)
    assert np.allclose(y, b.reward[:, None] + 0.9 * np.minimum(z1, z2))


def test_loss_zero_when_all_deltas_zero():
    actor, critics = make_setup()
    zero_net(critics)
    rng = np.random.default_rng(0)
    b = make_batch(rng, reward=0.0)
    assert critic_loss(critics, actor, b, QuantileHuberParams(1.0, 8), 0.9, None, rng) == 0.0


def test_single_atom_reduction():
    actor, critics = make_setup()
    zero_net(critics)
    rng = np.random.default_rng(0)
    b = make_batch(rng, n=1, reward=2.5)
    taus = np.array([[0.0, 1.0]])  # one atom at tau_hat = 0.5
    loss = critic_loss(critics, actor, b, QuantileHuberParams(1.0, 1), 0.0, None, rng, taus=taus, taus_next=taus)
    assert loss == pytest.approx(2 * huber_quantile_loss(2.5, 0.5, 1.0))


def test_loss_matches_explicit_double_sum():
    actor, critics = make_setup(seed=6)
    rng = np.random.default_rng(3)
    b = make_batch(rng, n=3)
    taus, hats = sample_quantiles(4, rng, 3)
    taus2, hats2 = sample_quantiles(4, rng, 3)
    loss = critic_loss(critics, actor, b, QuantileHuberParams(1.0, 4), 0.9, None, np.random.default_rng(11),
                       taus=taus, taus_next=taus2)
    y = td_target(critics, actor, b.reward, b.next_state, hats2, 0.9, identity(), np.random.default_rng(11))
    ref = 0.0
    for q in critics.online:
        z = quantile_values(critics.spec, q, b.state, b.action, hats)
        for n in range(3):
            for i in range(5):
                for j in range(5):
                    ref += direct_rho(y[n, i] - z[n, j], hats[n, j], 1.0)
    assert loss == pytest.approx(ref / 3, rel=1e-12)


def test_gradient_flow_contract():
    actor, critics = make_setup(seed=2)
    rng = np.random.default_rng(0)
    b = make_batch(rng)
    tape = Tape()
    for p in critics.target + (actor.params,):
        tape.watch(p)
    loss = critic_loss(critics, actor, b, QuantileHuberParams(1.0, 4), 0.9, None, rng, tape)
    g = tape.backward(loss)
    for name in ("target1", "target2", "actor"):
        assert np.all(g[name].values == 0.0)
    assert np.any(g["critic1"].values != 0) and np.any(g["critic2"].values != 0)


def test_critic_loss_gradient_check():
    actor, critics = make_setup(seed=8, hidden=(6,), n_cos=4)
    b = make_batch(np.random.default_rng(0), n=2)
    q = critics.online[0]

    def f(params, tape):
        critics.online = (params, critics.online[1])
        loss = critic_loss(critics, actor, b, QuantileHuberParams(1.0, 3), 0.9, None, np.random.default_rng(5), tape)
        return loss

    assert gradient_check(f, q, tol=1e-4).passed


def test_twin_symmetry():
    actor, critics = make_setup(seed=9)
    b = make_batch(np.random.default_rng(0))
    l1 = critic_loss(critics, actor, b, QuantileHuberParams(1.0, 6), 0.9, None, np.random.default_rng(4))
    critics.online = critics.online[::-1]
    l2 = critic_loss(critics, actor, b, QuantileHuberParams(1.0, 6), 0.9, None, np.random.default_rng(4))
    assert l1 == pytest.approx(l2, rel=1e-14)


def test_non_finite_loss_raises():
    actor, critics = make_setup()
    b = make_batch(np.random.default_rng(0))
    b.reward[0] = np.inf
    with pytest.raises(TrainingError):
        critic_loss(critics, actor, b, QuantileHuberParams(1.0, 4), 0.9, None, np.random.default_rng(0))


def test_td_fixed_point_constant_reward():
    # r = 1, gamma = 0.5: every atom converges to 1 / (1 - gamma) = 2
    rng = np.random.default_rng(0)
    actor = PushForwardPolicy.create(1, -np.ones(1), np.ones(1), (4,), rng=rng)
    critics = TwinCritics.create(1, 1, (16, 16), 16, 0.05, rng)
    opts = [AdamState.for_params(q) for q in critics.online]
    params = QuantileHuberParams(1.0, 8)
    for _ in range(600):
        b = Batch(np.zeros((16, 1)), rng.uniform(-1, 1, (16, 1)), np.ones(16), np.zeros((16, 1)), np.zeros(16, bool))
        tape = Tape()
        g = tape.backward(critic_loss(critics, actor, b, params, 0.5, None, rng, tape))
        for q, o in zip(critics.online, opts):
            adam_step_(q, g[q.name], o, 3e-3)
        polyak_update(critics)
    z = quantile_values(critics.spec, critics.online[0], np.zeros((1, 1)), np.zeros((1, 1)),
                        np.linspace(0.05, 0.95, 10)[None])
    assert np.allclose(z, 2.0, atol=0.1)


# --- polyak --------------------------------------------------------------------

def test_polyak_cases():
    _, critics = make_setup()
    for t in critics.target:
        t.values[:] = 0.0
    for q in critics.online:
        q.values[:] = 1.0
    polyak_update(critics, 0.005)
    assert np.allclose(critics.target[0].values, 0.005)
    polyak_update(critics, 1.0)
    assert np.array_equal(critics.target[1].values, critics.online[1].values)
    with pytest.raises(ValueError):
        polyak_update(critics, 0.0)


def test_polyak_geometric_convergence():
    _, critics = make_setup()
    gap0 = np.abs(critics.target[0].values - 3.0)
    for q in critics.online:
        q.values[:] = 3.0
    gaps = []
    for _ in range(50):
        polyak_update(critics, 0.1)
        gaps.append(np.max(np.abs(critics.target[0].values - 3.0)))
    assert np.all(np.diff(gaps) < 0)
    assert gaps[-1] == pytest.approx(np.max(gap0) * 0.9**50, rel=1e-9)
