"""Flat parameter vectors and multilayer perceptrons."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError
from . import tape as T


class ParamVector:
    """A flat float64 vector with a named layout.

    ``layout`` is a list of ``(tensor name, shape)`` pairs; tensors are laid
    out back to back in that order.
    """

    def __init__(self, values, layout, name: str = "params"):
        values = np.ascontiguousarray(values, dtype=np.float64)
        layout = [(str(n), tuple(int(d) for d in s)) for n, s in layout]
        total = int(np.sum([int(np.prod(s)) for _, s in layout])) if layout else 0
        if values.ndim != 1 or values.shape[0] != total:
            raise ConfigurationError(
                f"{name}: {values.size} values do not match layout total {total}"
            )
        self.values = values
        self.layout = layout
        self.name = name
        self._slots = {}
        start = 0
        for n, s in layout:
            stop = start + int(np.prod(s))
            self._slots[n] = (start, stop, s)
            start = stop

    @classmethod
    def zeros(cls, layout, name="params"):
        total = int(np.sum([int(np.prod(s)) for _, s in layout]))
        return cls(np.zeros(total), layout, name)

    @classmethod
    def from_array(cls, array, name="input"):
        """Wrap one array (e.g. an action batch) so a tape can watch it."""
        array = np.asarray(array, dtype=np.float64)
        return cls(array.reshape(-1).copy(), [(name, array.shape)], name)

    def __len__(self):
        return self.values.shape[0]

    def __repr__(self):
        return f"ParamVector({self.name!r}, n={len(self)}, tensors={[n for n, _ in self.layout]})"

    def slot(self, name):
        return self._slots[name]

    def view(self, name) -> np.ndarray:
        start, stop, shape = self._slots[name]
        return self.values[start:stop].reshape(shape)

    def layer(self, name, tape=None):
        """The named tensor, differentiable when a tape is given."""
        if tape is None:
            return self.view(name)
        return tape.layer(self, name)

    def copy(self, name=None) -> "ParamVector":
        return ParamVector(self.values.copy(), self.layout, name or self.name)

    def like(self, values) -> "ParamVector":
        return ParamVector(values, self.layout, self.name)

    def locate(self, index: int) -> str:
        """Name of the tensor holding flat position ``index``."""
        for n, (start, stop, _) in self._slots.items():
            if start <= index < stop:
                return n
        raise IndexError(index)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))


_OUTPUT_ACTIVATIONS = ("identity", "tanh")


@dataclass(frozen=True)
class MlpSpec:
    input_dim: int
    hidden_dims: tuple = (400, 300)
    output_dim: int = 1
    hidden_activation: str = "relu"
    output_activation: str = "identity"

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        if not self.hidden_dims:
            raise ConfigurationError("hidden_dims must be nonempty", "hidden_dims")
        if min((self.input_dim, self.output_dim) + self.hidden_dims) <= 0:
            raise ConfigurationError("all layer sizes must be positive", "hidden_dims")
        if self.hidden_activation != "relu":
            raise ConfigurationError(f"unsupported hidden activation {self.hidden_activation!r}")
        if self.output_activation not in _OUTPUT_ACTIVATIONS:
            raise ConfigurationError(f"unsupported output activation {self.output_activation!r}")

    @property
    def dims(self):
        return (self.input_dim,) + self.hidden_dims + (self.output_dim,)

    def layout(self, prefix: str = "fc"):
        dims = self.dims
        out = []
        for i in range(len(dims) - 1):
            out.append((f"{prefix}{i}.weight", (dims[i], dims[i + 1])))
            out.append((f"{prefix}{i}.bias", (dims[i + 1],)))
        return out

    @property
    def n_layers(self):
        return len(self.dims) - 1


def init_layout(layout, rng: np.random.Generator, name: str) -> ParamVector:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every weight and its bias."""
    params = ParamVector.zeros(layout, name)
    fan_in = None
    for tensor, shape in layout:
        if tensor.endswith("weight"):
            fan_in = shape[0]
        bound = 1.0 / np.sqrt(fan_in if fan_in else shape[0])
        params.view(tensor)[...] = rng.uniform(-bound, bound, size=shape)
    return params


def init_params(spec: MlpSpec, rng: np.random.Generator, name: str = "mlp") -> ParamVector:
    return init_layout(spec.layout(), rng, name)


def mlp_forward(spec: MlpSpec, params: ParamVector, x, tape=None, prefix: str = "fc"):
    """Evaluate the network on a batch ``x`` of shape ``(..., input_dim)``.

    Without a tape the result is a plain ndarray. With one, the parameters
    are watched (unless stopped on that tape) and a :class:`Var` comes back.
    """
    xv = x.value if isinstance(x, T.Var) else np.asarray(x, dtype=np.float64)
    if xv.shape[-1] != spec.input_dim:
        raise ConfigurationError(
            f"input has {xv.shape[-1]} features, network expects {spec.input_dim}"
        )
    expected = spec.layout(prefix)
    if [s for _, s in params.layout] != [s for _, s in expected]:
        raise ConfigurationError(f"{params.name}: layout does not match {spec}")

    last = spec.n_layers - 1
    if tape is None and not isinstance(x, T.Var):
        h = xv
        for i in range(spec.n_layers):
            h = h @ params.view(f"{prefix}{i}.weight") + params.view(f"{prefix}{i}.bias")
            if i < last:
                h = np.maximum(h, 0.0)
            elif spec.output_activation == "tanh":
                h = np.tanh(h)
        return h

    h = x
    for i in range(spec.n_layers):
        w = params.layer(f"{prefix}{i}.weight", tape)
        b = params.layer(f"{prefix}{i}.bias", tape)
        h = T.affine(h, w, b)
        if i < last:
            h = T.relu(h)
        elif spec.output_activation == "tanh":
            h = T.tanh(h)
    return h
