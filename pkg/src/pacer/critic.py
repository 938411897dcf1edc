"""Implicit quantile twin critics and distributional TD learning."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .actor import act, sample_noise
from .approximator import MlpSpec, ParamVector, init_layout, ops
from .errors import TrainingError
from .utility import UtilityFunction, identity, reshape_reward


@dataclass(frozen=True)
class IqnSpec:
    """Trunk on (state, action); a cosine embedding of tau gates the first hidden layer."""

    state_dim: int
    action_dim: int
    hidden_dims: tuple = (400, 300)
    n_cos: int = 64

    @property
    def trunk(self) -> MlpSpec:
        return MlpSpec(self.state_dim + self.action_dim, tuple(self.hidden_dims), 1)

    def layout(self):
        layout = self.trunk.layout()
        h0 = self.trunk.hidden_dims[0]
        return layout[:2] + [("embed.weight", (self.n_cos, h0)), ("embed.bias", (h0,))] + layout[2:]


@dataclass(frozen=True)
class QuantileHuberParams:
    kappa: float = 1.0
    K: int = 32

    def __post_init__(self):
        if self.kappa <= 0 or self.K < 1:
            raise ValueError("kappa must be positive and K at least 1")


@dataclass
class QuantileReturn:
    """A return distribution as a weighted mixture of Dirac atoms."""

    taus: np.ndarray
    atoms: np.ndarray

    @property
    def tau_hats(self):
        return 0.5 * (self.taus[..., 1:] + self.taus[..., :-1])

    @property
    def weights(self):
        return np.diff(self.taus, axis=-1)

    def mean(self):
        return float(np.sum(self.weights * self.atoms))


def init_iqn(spec: IqnSpec, rng, name="critic") -> ParamVector:
    return init_layout(spec.layout(), rng, name)


@dataclass
class TwinCritics:
    spec: IqnSpec
    online: tuple
    target: tuple
    polyak: float = 0.005

    @classmethod
    def create(cls, state_dim, action_dim, hidden_dims=(400, 300), n_cos=64, polyak=0.005, rng=None):
        spec = IqnSpec(state_dim, action_dim, tuple(hidden_dims), n_cos)
        rng = np.random.default_rng() if rng is None else rng
        q1 = init_iqn(spec, rng, "critic1")
        q2 = init_iqn(spec, rng, "critic2")
        return cls(spec, (q1, q2), (q1.copy("target1"), q2.copy("target2")), polyak)


def sample_quantiles(K: int, rng: np.random.Generator, batch=None):
    """Sorted U(0, 1) draws with the endpoints 0 and 1 appended.

    Returns ``(taus, tau_hats)``: ``K + 2`` grid points and ``K + 1``
    midpoints per row, so the atom weights ``diff(taus)`` sum to one.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    shape = (K,) if batch is None else (batch, K)
    draws = np.sort(rng.random(shape), axis=-1)
    zeros = np.zeros(shape[:-1] + (1,))
    taus = np.concatenate([zeros, draws, zeros + 1.0], axis=-1)
    return taus, 0.5 * (taus[..., 1:] + taus[..., :-1])


def cosine_features(tau_hats, n_cos: int):
    """cos(pi * j * tau) for j = 0 .. n_cos - 1, appended as a last axis."""
    j = np.arange(n_cos, dtype=np.float64)
    if isinstance(tau_hats, ops.Var):
        t = ops.reshape(tau_hats, tau_hats.shape + (1,))
        return ops.cos(t * (np.pi * j))
    return np.cos(np.pi * np.asarray(tau_hats, dtype=np.float64)[..., None] * j)


def quantile_values(spec: IqnSpec, params: ParamVector, s, a, tau_hats, tape=None, feats=None):
    """Quantile atoms ``z(s, a, tau_hat)`` of shape ``(B, N)``.

    ``s`` is ``(B, state_dim)``, ``a`` is ``(B, action_dim)`` (array or
    variable), ``tau_hats`` is ``(B, N)`` or ``(N,)``. A plain array comes
    back unless a tape or a taped input is involved. ``feats`` may carry
    precomputed :func:`cosine_features` of ``tau_hats``.
    """
    sv = np.asarray(s, dtype=np.float64)
    B = sv.shape[0]
    th = tau_hats if isinstance(tau_hats, ops.Var) else np.broadcast_to(np.asarray(tau_hats, dtype=np.float64), (B, np.shape(tau_hats)[-1]))
    N = th.shape[-1]
    trunk = spec.trunk
    layer = lambda name: params.layer(name, tape)  # noqa: E731

    x = ops.concat([sv, a], axis=-1) if isinstance(a, ops.Var) else np.concatenate([sv, np.asarray(a, dtype=np.float64)], axis=-1)
    h0 = ops.relu(ops.affine(x, layer("fc0.weight"), layer("fc0.bias")))
    if feats is None:
        feats = cosine_features(th, spec.n_cos)
    feats = ops.reshape(feats, (B * N, spec.n_cos))
    phi = ops.relu(ops.affine(feats, layer("embed.weight"), layer("embed.bias")))
    H0 = trunk.hidden_dims[0]
    h = ops.reshape(ops.reshape(h0, (B, 1, H0)) * ops.reshape(phi, (B, N, H0)), (B * N, H0))
    for i in range(1, trunk.n_layers):
        h = ops.affine(h, layer(f"fc{i}.weight"), layer(f"fc{i}.bias"))
        if i < trunk.n_layers - 1:
            h = ops.relu(h)
    out = ops.reshape(h, (B, N))
    return out if out.tape is not None else out.value


def huber_quantile_loss(delta, tau, kappa: float = 1.0):
    """Asymmetric Huber quantile penalty, elementwise over broadcast inputs."""
    delta = np.asarray(delta, dtype=np.float64)
    w = np.abs(np.asarray(tau, dtype=np.float64) - (delta < 0))
    ad = np.abs(delta)
    return w * np.where(ad <= kappa, 0.5 * delta * delta / kappa, ad - 0.5 * kappa)


def twin_min_values(critics: TwinCritics, pair, s, a, tau_hats, tape=None):
    feats = None if isinstance(tau_hats, ops.Var) else cosine_features(tau_hats, critics.spec.n_cos)
    z1 = quantile_values(critics.spec, pair[0], s, a, tau_hats, tape, feats)
    z2 = quantile_values(critics.spec, pair[1], s, a, tau_hats, tape, feats)
    if isinstance(z1, ops.Var) or isinstance(z2, ops.Var):
        return ops.minimum(z1, z2)
    return np.minimum(z1, z2)


def td_target(critics: TwinCritics, actor, reward, next_state, tau_hats_next, gamma: float,
              utility: UtilityFunction, rng):
    """``psi(r) + gamma * min(target twins)(s', pi(s', xi), tau_hat_i)``, shape ``(B, N')``."""
    reward = np.asarray(reward, dtype=np.float64).reshape(-1)
    r = np.asarray(reshape_reward(utility, reward), dtype=np.float64)
    if gamma == 0.0:
        return np.broadcast_to(r[:, None], (r.shape[0], np.shape(tau_hats_next)[-1])).copy()
    next_state = np.asarray(next_state, dtype=np.float64)
    xi = sample_noise(actor, "train", rng, next_state.shape[0])
    a_next = act(actor, next_state, xi)
    z_next = twin_min_values(critics, critics.target, next_state, a_next, tau_hats_next)
    return r[:, None] + gamma * z_next


def td_deltas(critics: TwinCritics, actor, batch, taus, taus_next, gamma: float,
              utility: UtilityFunction | None, rng, online=0):
    """Pairwise TD errors ``delta[b, i, j]`` (i: target atom, j: online atom)."""
    utility = identity() if utility is None else utility
    tau_hats = 0.5 * (taus[..., 1:] + taus[..., :-1])
    tau_hats_next = 0.5 * (taus_next[..., 1:] + taus_next[..., :-1])
    y = td_target(critics, actor, batch.reward, batch.next_state, tau_hats_next, gamma, utility, rng)
    z = quantile_values(critics.spec, critics.online[online], batch.state, batch.action, tau_hats)
    return y[:, :, None] - z[:, None, :]


def critic_loss(critics: TwinCritics, actor, batch, params: QuantileHuberParams, gamma: float,
                utility: UtilityFunction | None, rng, tape=None, taus=None, taus_next=None):
    """Batch mean of the summed pairwise quantile Huber loss, over both twins.

    Targets are computed outside the tape, so neither the target critics nor
    the actor receive gradient from this loss.
    """
    utility = identity() if utility is None else utility
    B = len(batch)
    if taus is None:
        taus, _ = sample_quantiles(params.K, rng, B)
    if taus_next is None:
        taus_next, _ = sample_quantiles(params.K, rng, B)
    taus = np.broadcast_to(taus, (B, np.shape(taus)[-1]))
    taus_next = np.broadcast_to(taus_next, (B, np.shape(taus_next)[-1]))
    tau_hats = 0.5 * (taus[:, 1:] + taus[:, :-1])
    tau_hats_next = 0.5 * (taus_next[:, 1:] + taus_next[:, :-1])

    y = td_target(critics, actor, batch.reward, batch.next_state, tau_hats_next, gamma, utility, rng)
    total = 0.0
    feats = cosine_features(tau_hats, critics.spec.n_cos)
    for q in critics.online:
        z = quantile_values(critics.spec, q, batch.state, batch.action, tau_hats, tape, feats)
        if isinstance(z, ops.Var):
            delta = ops.sub(y[:, :, None], ops.reshape(z, (B, 1, z.shape[1])))
            per = ops.quantile_huber(delta, tau_hats[:, None, :], params.kappa)
            total = total + ops.sum(per) * (1.0 / B)
        else:
            delta = y[:, :, None] - z[:, None, :]
            total = total + huber_quantile_loss(delta, tau_hats[:, None, :], params.kappa).sum() / B
    value = total.value if isinstance(total, ops.Var) else total
    if not np.isfinite(value):
        raise TrainingError("critic loss is not finite")
    return total


def polyak_update(critics: TwinCritics, polyak: float | None = None) -> None:
    """Move the target twins a fraction ``polyak`` toward the online twins."""
    p = critics.polyak if polyak is None else polyak
    if not 0.0 < p <= 1.0:
        raise ValueError("polyak must lie in (0, 1]")
    for tgt, src in zip(critics.target, critics.online):
        tgt.values *= 1.0 - p
        tgt.values += p * src.values
