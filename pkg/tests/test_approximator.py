import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pacer.approximator import (AdamState, MlpSpec, ParamVector, Tape, adam_step, adam_step_, backward,
                                gradient_check, init_params, load_params, mlp_forward, ops, save_params)
from pacer.errors import CheckpointError, ConfigurationError, TrainingError, UsageError


def scalar_param(x, name="theta"):
    return ParamVector(np.array([float(x)]), [("theta", (1,))], name)


# --- mlp_forward -----------------------------------------------------------

@pytest.mark.parametrize("act", ["identity", "tanh"])
def test_zero_net_gives_zero_output(act):
    spec = MlpSpec(3, (5, 4), 2, output_activation=act)
    params = ParamVector.zeros(spec.layout())
    out = mlp_forward(spec, params, np.array([0.3, -1.0, 2.0]))
    assert out.shape == (2,)
    assert np.all(out == 0.0)


def test_single_affine_hand_value():
    # one hidden layer of width 1 with identity behaviour on positive values
    spec = MlpSpec(1, (1,), 1)
    p = ParamVector.zeros(spec.layout())
    p.view("fc0.weight")[:] = 1.0
    p.view("fc1.weight")[:] = 2.0
    p.view("fc1.bias")[:] = 1.0
    assert mlp_forward(spec, p, np.array([3.0]))[0] == 7.0


def test_tanh_output_in_open_interval():
    spec = MlpSpec(4, (8,), 3, output_activation="tanh")
    p = init_params(spec, np.random.default_rng(0))
    p.values *= 50
    out = mlp_forward(spec, p, np.random.default_rng(1).normal(size=(100, 4)) * 10)
    assert np.all(np.abs(out) <= 1.0)


def test_dimension_mismatch_raises():
    spec = MlpSpec(3, (4,), 1)
    p = init_params(spec, np.random.default_rng(0))
    with pytest.raises(ConfigurationError):
        mlp_forward(spec, p, np.zeros(2))
    with pytest.raises(ConfigurationError):
        mlp_forward(MlpSpec(3, (5,), 1), p, np.zeros(3))


def test_spec_validation():
    with pytest.raises(ConfigurationError):
        MlpSpec(3, (), 1)
    with pytest.raises(ConfigurationError):
        MlpSpec(0, (4,), 1)
    with pytest.raises(ConfigurationError):
        MlpSpec(3, (4,), 1, output_activation="sigmoid")


def test_forward_deterministic_and_tape_agrees():
    spec = MlpSpec(3, (6, 5), 2, output_activation="tanh")
    p = init_params(spec, np.random.default_rng(3))
    x = np.random.default_rng(4).normal(size=(7, 3))
    a = mlp_forward(spec, p, x)
    b = mlp_forward(spec, p, x)
    tape = Tape()
    c = mlp_forward(spec, p, x, tape)
    assert np.array_equal(a, b)
    assert np.array_equal(a, c.value)
    assert len(tape) > 0


def test_init_range():
    spec = MlpSpec(16, (9,), 1)
    p = init_params(spec, np.random.default_rng(0))
    assert np.all(np.abs(p.view("fc0.weight")) <= 1 / 4)
    assert np.all(np.abs(p.view("fc1.weight")) <= 1 / 3)


def test_param_vector_layout_invariant():
    with pytest.raises(ConfigurationError):
        ParamVector(np.zeros(5), [("w", (2, 3))])
    p = ParamVector(np.arange(6.0), [("w", (2, 2)), ("b", (2,))])
    assert p.locate(5) == "b"
    assert p.view("w").tolist() == [[0, 1], [2, 3]]


# --- backward --------------------------------------------------------------

def test_square_gradient():
    th = scalar_param(3.0)
    tape = Tape()
    x = tape.layer(th, "theta")
    g = backward(tape, ops.sum(ops.square(x)))
    assert g["theta"].values[0] == 6.0


def test_constant_output_zero_gradient():
    th = scalar_param(3.0)
    tape = Tape()
    tape.watch(th)
    g = tape.backward(ops.Var(np.array(5.0)))
    assert g["theta"].values[0] == 0.0


def test_empty_tape_is_usage_error():
    with pytest.raises(UsageError):
        Tape().backward(ops.Var(np.array(1.0)))


def test_relu_derivative_at_zero_is_zero():
    p = ParamVector(np.array([0.0, 1.0, -1.0]), [("x", (3,))], "x")
    tape = Tape()
    y = ops.sum(ops.relu(tape.layer(p, "x")))
    assert tape.backward(y)["x"].values.tolist() == [0.0, 1.0, 0.0]


def test_backward_deterministic():
    spec = MlpSpec(3, (6,), 1)
    p = init_params(spec, np.random.default_rng(0))
    x = np.random.default_rng(1).normal(size=(4, 3))

    def grad():
        tape = Tape()
        return tape.backward(ops.sum(mlp_forward(spec, p, x, tape)))[p.name].values

    assert np.array_equal(grad(), grad())


def test_stopped_params_get_exact_zero():
    spec = MlpSpec(2, (3,), 1)
    p = init_params(spec, np.random.default_rng(0), "a")
    q = init_params(spec, np.random.default_rng(1), "b")
    tape = Tape()
    tape.stop(q)
    y = ops.sum(mlp_forward(spec, p, np.ones((2, 2)), tape) * mlp_forward(spec, q, np.ones((2, 2)), tape))
    g = tape.backward(y)
    assert np.all(g["b"].values == 0.0)
    assert np.any(g["a"].values != 0.0)


def _mlp_objective(spec, x):
    def f(params, tape):
        out = mlp_forward(spec, params, x, tape)
        return ops.sum(ops.square(out)) if isinstance(out, ops.Var) else float(np.sum(out**2))
    return f


@pytest.mark.parametrize("seed", range(5))
def test_mlp_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    spec = MlpSpec(3, (5, 4), 2, output_activation="tanh")
    p = init_params(spec, rng)
    rep = gradient_check(_mlp_objective(spec, rng.normal(size=(6, 3))), p, tol=1e-4)
    assert rep.passed, str(rep)


PRIMITIVES = {
    "affine": lambda v, c: ops.affine(v, c["w"], c["b"]),
    "relu": lambda v, c: ops.relu(v),
    "tanh": lambda v, c: ops.tanh(v),
    "sum": lambda v, c: ops.sum(v, axis=0),
    "product": lambda v, c: v * c["m"],
    "exp": lambda v, c: ops.exp(v),
    "square": lambda v, c: ops.square(v),
    "sqrt": lambda v, c: ops.sqrt(ops.square(v) + 0.5),
    "cos": lambda v, c: ops.cos(v),
}


@pytest.mark.parametrize("name", sorted(PRIMITIVES))
def test_primitive_gradients_100_seeds(name):
    op = PRIMITIVES[name]
    worst = 0.0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=(3, 4))
        if name == "relu":
            # keep away from the kink so central differences are valid
            x = np.where(np.abs(x) < 1e-3, 0.5, x)
        consts = {"w": rng.normal(size=(4, 2)), "b": rng.normal(size=2), "m": rng.normal(size=(3, 4))}
        w = rng.normal(size=op(ops.Var(x), consts).shape)
        p = ParamVector(x.reshape(-1).copy(), [("x", (3, 4))], "x")

        def f(params, tape, op=op, consts=consts, w=w):
            v = params.layer("x", tape) if tape is not None else ops.Var(params.view("x"))
            out = ops.sum(op(v, consts) * w)
            return out if tape is not None else float(out.value)

        rep = gradient_check(f, p, tol=1e-4)
        worst = max(worst, rep.max_rel_error)
    assert worst < 1e-4


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=2, max_size=6),
       st.lists(st.floats(-3, 3), min_size=2, max_size=6))
def test_broadcast_ops_sum_gradients(a, b):
    n = min(len(a), len(b))
    x = np.array(a[:n])
    y = np.array(b[:n])
    p = ParamVector(np.concatenate([x, y]), [("x", (n,)), ("y", (1, n))], "p")
    tape = Tape()
    out = ops.sum(tape.layer(p, "x") + tape.layer(p, "y") * 2.0)
    g = tape.backward(out)["p"]
    assert np.allclose(g.view("x"), 1.0)
    assert np.allclose(g.view("y"), 2.0)


# --- adam --------------------------------------------------------------------

def ref_adam(theta, grads, lr, b1=0.9, b2=0.999, eps=1e-8):
    m = v = 0.0
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        mh = m / (1 - b1**t)
        vh = v / (1 - b2**t)
        theta = theta - lr * mh / (np.sqrt(vh) + eps)
    return theta


def test_adam_zero_gradient():
    p = ParamVector(np.array([1.0, -2.0]), [("w", (2,))], "w")
    st_ = AdamState.for_params(p)
    new, s2 = adam_step(p, p.like(np.zeros(2)), st_, 0.1)
    assert np.array_equal(new.values, p.values)
    assert s2.t == 1 and st_.t == 0


def test_adam_first_step_is_sign():
    p = ParamVector(np.array([1.0, -2.0, 0.5]), [("w", (3,))], "w")
    g = np.array([3.0, -0.01, 1e3])
    new, _ = adam_step(p, p.like(g), AdamState.for_params(p), 0.01)
    assert np.allclose(p.values - new.values, 0.01 * np.sign(g), rtol=1e-6)


def test_adam_matches_scalar_reference():
    rng = np.random.default_rng(0)
    gs = rng.normal(size=(20, 4))
    p = ParamVector(np.zeros(4), [("w", (4,))], "w")
    s = AdamState.for_params(p)
    for g in gs:
        adam_step_(p, p.like(g), s, 1e-2)
    for i in range(4):
        assert p.values[i] == pytest.approx(ref_adam(0.0, gs[:, i], 1e-2), abs=1e-14)
    # two identical steps accumulate the same moments as the reference
    q = ParamVector(np.zeros(1), [("w", (1,))], "w")
    s = AdamState.for_params(q)
    for _ in range(2):
        q, s = adam_step(q, q.like(np.array([0.7])), s, 0.1)
    assert q.values[0] == pytest.approx(ref_adam(0.0, [0.7, 0.7], 0.1), abs=1e-14)


def test_adam_non_finite_gradient_names_parameter():
    p = ParamVector(np.zeros(3), [("a", (1,)), ("b", (2,))], "net")
    with pytest.raises(TrainingError, match="net.b"):
        adam_step(p, p.like(np.array([0.0, np.nan, 1.0])), AdamState.for_params(p), 0.1)


# --- gradient_check ----------------------------------------------------------

def test_gradcheck_quadratic_form():
    A = np.array([[2.0, 0.5], [0.5, 1.0]])
    p = ParamVector(np.array([0.3, -0.7]), [("x", (2,))], "x")

    def f(params, tape):
        if tape is None:
            x = params.values
            return float(x @ A @ x)
        x = params.layer("x", tape)
        return ops.sum(x * ops.matmul(ops.reshape(x, (1, 2)), A)[0])

    assert gradient_check(f, p, tol=1e-6).passed


def test_gradcheck_tanh_mlp():
    spec = MlpSpec(2, (6,), 1, output_activation="tanh")
    p = init_params(spec, np.random.default_rng(7))
    assert gradient_check(_mlp_objective(spec, np.random.default_rng(8).normal(size=(5, 2))), p, tol=1e-4).passed


def test_gradcheck_detects_corrupted_adjoint():
    spec = MlpSpec(2, (6,), 1, output_activation="tanh")
    p = init_params(spec, np.random.default_rng(7))
    rep = gradient_check(_mlp_objective(spec, np.random.default_rng(8).normal(size=(5, 2))), p, adjoint=1.5)
    assert not rep.passed


# --- checkpoints ---------------------------------------------------------------

def test_checkpoint_round_trip(tmp_path):
    spec = MlpSpec(3, (4,), 2)
    p = init_params(spec, np.random.default_rng(0), "actor")
    save_params(tmp_path / "actor", p)
    raw = (tmp_path / "actor.bin").read_bytes()
    assert np.array_equal(np.frombuffer(raw, "<f8"), p.values)
    q = load_params(tmp_path / "actor")
    assert np.array_equal(q.values, p.values) and q.layout == p.layout and q.name == "actor"


def test_checkpoint_truncated(tmp_path):
    p = ParamVector(np.arange(4.0), [("w", (4,))], "w")
    save_params(tmp_path / "w", p)
    (tmp_path / "w.bin").write_bytes(b"\0" * 8)
    with pytest.raises(CheckpointError):
        load_params(tmp_path / "w")
    with pytest.raises(CheckpointError):
        load_params(tmp_path / "missing")
