"""Utility functions: reward reshaping and distorted expectations.

A utility is either applied to every reward before it enters the TD target
(``reward_reshape``) or used to reweight the quantile atoms of the return
distribution (``distortion``). The two kinds are mutually exclusive.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .approximator import ops
from .errors import ConfigurationError

CVAR_LEVELS = (0.25, 0.5, 0.75, 0.9, 1.0)


@dataclass(frozen=True)
class UtilityFunction:
    kind: str
    reshape: Callable | None = None
    distortion: Callable | None = None
    derivative: Callable | None = None
    cvar_level: float | None = None
    label: str = ""

    def __post_init__(self):
        if self.kind not in ("reward_reshape", "distortion"):
            raise ConfigurationError(f"unknown utility kind {self.kind!r}", "utility.kind")
        if self.kind == "reward_reshape" and self.reshape is None:
            raise ConfigurationError("reward_reshape utility needs a reshape map", "utility.kind")
        if self.kind == "distortion" and (self.distortion is None or self.derivative is None):
            raise ConfigurationError("distortion utility needs psi and psi'", "utility.kind")


def identity() -> UtilityFunction:
    """Risk-neutral distortion psi(tau) = tau."""
    return UtilityFunction(
        "distortion",
        distortion=lambda t: np.asarray(t, dtype=np.float64),
        derivative=lambda t: np.ones_like(np.asarray(t, dtype=np.float64)),
        cvar_level=1.0,
        label="identity",
    )


def cvar(level: float) -> UtilityFunction:
    """Conditional value at risk: the mean of the worst ``level`` fraction."""
    if not 0.0 < level <= 1.0:
        raise ConfigurationError("CVaR level must lie in (0, 1]", "utility.cvar_level")
    eta = float(level)
    return UtilityFunction(
        "distortion",
        distortion=lambda t: np.minimum(np.asarray(t, dtype=np.float64) / eta, 1.0),
        derivative=lambda t: (np.asarray(t, dtype=np.float64) <= eta) / eta,
        cvar_level=eta,
        label=f"cvar{eta:g}",
    )


def reward_reshape(fn: Callable, label: str = "reshape") -> UtilityFunction:
    return UtilityFunction("reward_reshape", reshape=fn, label=label)


def from_config(kind: str, cvar_level: float = 1.0) -> UtilityFunction:
    """Build from the ``utility.kind`` / ``utility.cvar_level`` config keys."""
    if kind in ("identity", "neutral"):
        return identity()
    if kind in ("cvar", "distortion"):
        return cvar(cvar_level)
    if kind == "tanh":
        return reward_reshape(np.tanh, "tanh")
    raise ConfigurationError(f"unknown utility kind {kind!r}", "utility.kind")


def reshape_reward(u: UtilityFunction, r):
    """psi(r) for reshape utilities; the identity for distortions."""
    if u.kind == "reward_reshape":
        return u.reshape(r)
    return r


def atom_weights(u: UtilityFunction, taus) -> np.ndarray:
    """``(tau_{i+1} - tau_i) * psi'(tau_hat_i)`` for every atom.

    ``taus`` holds the full grid including the 0 and 1 endpoints along the
    last axis. Reshape utilities leave the atoms unweighted beyond their
    probability mass.
    """
    taus = np.asarray(taus, dtype=np.float64)
    widths = np.diff(taus, axis=-1)
    if u.kind == "reward_reshape":
        return widths
    tau_hats = 0.5 * (taus[..., 1:] + taus[..., :-1])
    return widths * u.derivative(tau_hats)


def distorted_value(u: UtilityFunction, taus, atoms):
    """Distorted expectation of a Dirac mixture.

    ``atoms`` may be an array or a taped variable with the atom axis last;
    the result is differentiable in the atoms.
    """
    w = atom_weights(u, taus)
    if isinstance(atoms, ops.Var):
        return ops.sum(atoms * w, axis=-1)
    return np.sum(np.asarray(atoms) * w, axis=-1)


def distortion_weight_check(u: UtilityFunction, taus) -> float:
    """Total atom weight; 1 for an exact distortion on a fine grid."""
    return float(np.sum(atom_weights(u, taus), axis=-1))
