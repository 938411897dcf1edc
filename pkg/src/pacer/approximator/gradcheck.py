from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mlp import ParamVector
from .tape import Tape, Var


@dataclass
class GradCheckReport:
    max_rel_error: float
    passed: bool
    tol: float
    analytic: np.ndarray
    numeric: np.ndarray

    def __str__(self):
        verdict = "PASS" if self.passed else "FAIL"
        return f"{verdict}: max relative error {self.max_rel_error:.3e} (tol {self.tol:.1e})"


def relative_error(a, b, floor: float = 1e-6) -> np.ndarray:
    a, b = np.asarray(a), np.asarray(b)
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)


def numeric_gradient(f, params: ParamVector, step: float = 1e-5) -> np.ndarray:
    """Central differences of ``f(params, None)`` in every coordinate."""
    x = params.values
    out = np.empty_like(x)
    for i in range(x.size):
        orig = x[i]
        x[i] = orig + step
        fp = float(_value(f(params, None)))
        x[i] = orig - step
        fm = float(_value(f(params, None)))
        x[i] = orig
        out[i] = (fp - fm) / (2.0 * step)
    return out


def _value(out):
    return out.value if isinstance(out, Var) else out


def gradient_check(f, params: ParamVector, tol: float = 1e-4, step: float = 1e-5,
                   adjoint: float = 1.0, floor: float = 1e-6) -> GradCheckReport:
    """Compare the tape gradient of a scalar function with central differences.

    ``f(params, tape)`` must return a scalar (a ``Var`` when ``tape`` is
    given) and be deterministic: draw any randomness from a generator
    seeded inside ``f`` so every evaluation sees the same numbers.
    ``adjoint`` scales the seed of the reverse sweep; anything other than
    1 corrupts the analytic gradient on purpose.
    """
    tape = Tape()
    tape.watch(params)
    out = f(params, tape)
    analytic = tape.backward(out, adjoint)[params.name].values
    numeric = numeric_gradient(f, params, step)
    err = float(np.max(relative_error(analytic, numeric, floor))) if analytic.size else 0.0
    return GradCheckReport(err, err <= tol, tol, analytic, numeric)
