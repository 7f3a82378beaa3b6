import numpy as np
import pytest
import scipy.sparse as sp

from ignn import autodiff as ad
from ignn.errors import UsageError

from oracles import central_differences, max_relative_error


def grad_of(build, **arrays):
    tape = ad.Tape()
    tv = {k: tape.variable(v, name=k) for k, v in arrays.items()}
    return tape.backward(build(**tv)).by_name()


def check_op(build, rtol=1e-6, **arrays):
    """Compare backprop with central differences for ``total(build(...))``-style scalar builders."""
    analytic = grad_of(build, **arrays)
    params = {k: np.array(v, dtype=float) for k, v in arrays.items()}

    def f(p):
        return build(**{k: ad.Tensor(v) for k, v in p.items()}).item()

    numeric = central_differences(f, params)
    err, count = max_relative_error(analytic, numeric)
    assert count > 0
    assert err < rtol


rng = np.random.default_rng(0)
A = rng.standard_normal((3, 4))
B = rng.standard_normal((4, 2))
C = rng.standard_normal((3, 4))
R = rng.standard_normal((1, 4))
S = sp.random(3, 3, density=0.6, random_state=1, format="csr")


# -- forward examples -----------------------------------------------------------


def test_forward_examples():
    assert np.array_equal(ad.matmul(ad.Tensor(np.eye(3)), ad.Tensor(A)).value, A)
    assert ad.matmul(ad.Tensor([[2.0]]), ad.Tensor([[3.0]])).item() == 6.0
    assert np.array_equal(ad.spmm(sp.csr_matrix((3, 3)), ad.Tensor(A)).value, np.zeros((3, 4)))
    assert np.array_equal(ad.spmm(sp.identity(3, format="csr"), ad.Tensor(A)).value, A)
    assert ad.relu(ad.Tensor([[-1.0]])).item() == 0.0
    assert ad.sigmoid(ad.Tensor([[0.0]])).item() == 0.5
    np.testing.assert_allclose(ad.l2_normalize_rows(ad.Tensor([[3.0, 4.0]])).value, [[0.6, 0.8]], atol=1e-12)


def test_spmm_mean_star():
    # star with centre 0 and leaves 1, 2; mean aggregation
    m = sp.csr_matrix(np.array([[0, 0.5, 0.5], [1, 0, 0], [1, 0, 0]]))
    x = np.array([[9.0, 9.0], [1.0, 2.0], [3.0, 6.0]])
    assert ad.spmm(m, ad.Tensor(x)).value[0].tolist() == [2.0, 4.0]


def test_row_pair_inner_bounds():
    z = ad.l2_normalize_rows(ad.Tensor(rng.standard_normal((10, 4))))
    i, j = np.triu_indices(10, 1)
    s = ad.row_pair_inner(z, i, j).value
    assert s.shape == (45, 1)
    assert np.all(np.abs(s) <= 1 + 1e-12)


def test_sigmoid_stable_extremes():
    v = ad.sigmoid(ad.Tensor([[-800.0, 800.0]])).value
    assert np.all(np.isfinite(v))
    assert v[0, 0] == 0.0 and v[0, 1] == 1.0


# -- gradients --------------------------------------------------------------------


def test_backward_examples():
    g = grad_of(lambda w: ad.total(w), w=np.zeros((2, 2)))
    assert np.array_equal(g["w"], np.ones((2, 2)))
    g = grad_of(lambda w: ad.total(ad.sigmoid(w)), w=np.zeros((1, 1)))
    assert g["w"][0, 0] == 0.25


def test_matmul_sum_gradient_is_column_sums():
    g = grad_of(lambda a, b: ad.total(ad.matmul(a, b)), a=A, b=B)
    assert np.allclose(g["a"], np.tile(B.sum(axis=1), (3, 1)))


@pytest.mark.parametrize(
    "name,build,arrays",
    [
        ("matmul", lambda a, b: ad.total(ad.matmul(a, b)), dict(a=A, b=B)),
        ("spmm", lambda a: ad.total(ad.square(ad.spmm(S, a))), dict(a=A)),
        ("add", lambda a, c: ad.total(ad.square(ad.add(a, c))), dict(a=A, c=C)),
        ("add_row", lambda a, r: ad.total(ad.square(ad.add(a, r))), dict(a=A, r=R)),
        ("sub", lambda a, c: ad.total(ad.square(ad.sub(a, c))), dict(a=A, c=C)),
        ("hadamard", lambda a, c: ad.total(ad.hadamard(a, c)), dict(a=A, c=C)),
        ("scale_shift", lambda a: ad.total(ad.square(ad.shift(ad.scale(a, -2.5), 0.3))), dict(a=A)),
        ("relu", lambda a: ad.total(ad.square(ad.relu(a))), dict(a=A)),
        ("sigmoid", lambda a: ad.total(ad.sigmoid(a)), dict(a=A)),
        ("log", lambda a: ad.total(ad.log(ad.shift(ad.square(a), 0.5))), dict(a=A)),
        ("concat", lambda a, c: ad.total(ad.square(ad.matmul(ad.concat_cols(a, c), ad.Tensor(np.ones((8, 1)))))),
         dict(a=A, c=C)),
        ("l2norm", lambda a: ad.total(ad.hadamard(ad.l2_normalize_rows(a), ad.Tensor(C))), dict(a=A)),
        ("pair_inner", lambda a: ad.total(ad.square(ad.row_pair_inner(a, np.array([0, 1, 2, 0]), np.array([1, 2, 0, 0])))),
         dict(a=A)),
    ],
)
def test_op_gradients(name, build, arrays):
    check_op(build, **arrays)


def test_two_layer_network_gradient():
    x = ad.Tensor(rng.standard_normal((6, 3)))
    w1 = rng.standard_normal((3, 5))
    w2 = rng.standard_normal((5, 2))

    def build(w1, w2):
        h = ad.relu(ad.matmul(x, w1))
        return ad.total(ad.sigmoid(ad.matmul(h, w2)))

    check_op(build, rtol=1e-4, w1=w1, w2=w2)


def test_gradient_accumulates_over_reuse():
    g = grad_of(lambda a: ad.total(ad.hadamard(a, a)), a=A)
    assert np.allclose(g["a"], 2 * A)


def test_linearity_of_backward():
    def l1(a):
        return ad.total(ad.square(ad.sigmoid(a)))

    def l2(a):
        return ad.total(ad.relu(a))

    g1 = grad_of(l1, a=A)["a"]
    g2 = grad_of(l2, a=A)["a"]
    gc = grad_of(lambda a: ad.add(ad.scale(l1(a), 2.0), ad.scale(l2(a), -3.0)), a=A)["a"]
    np.testing.assert_allclose(gc, 2.0 * g1 - 3.0 * g2, rtol=0, atol=1e-12)


def test_backward_deterministic():
    build = lambda a, b: ad.total(ad.sigmoid(ad.matmul(a, b)))  # noqa: E731
    g1 = grad_of(build, a=A, b=B)
    g2 = grad_of(build, a=A, b=B)
    assert all(np.array_equal(g1[k], g2[k]) for k in g1)


def test_unreached_variable_gets_zero_gradient():
    tape = ad.Tape()
    a = tape.variable(A)
    b = tape.variable(B)
    grads = tape.backward(ad.total(a))
    assert np.array_equal(grads[b], np.zeros_like(B))


def test_log_clamp_gradient():
    g = grad_of(lambda a: ad.total(ad.log(a)), a=np.array([[0.0, 2.0]]))
    assert g["a"].tolist() == [[0.0, 0.5]]


# -- errors -----------------------------------------------------------------------


def test_backward_needs_scalar():
    tape = ad.Tape()
    a = tape.variable(A)
    with pytest.raises(UsageError):
        tape.backward(ad.scale(a, 2.0))


def test_backward_rejects_foreign_loss():
    t1, t2 = ad.Tape(), ad.Tape()
    a = t1.variable(A)
    with pytest.raises(UsageError):
        t2.backward(ad.total(a))


def test_mixed_tapes_rejected():
    a = ad.Tape().variable(A)
    c = ad.Tape().variable(C)
    with pytest.raises(UsageError):
        ad.add(a, c)


@pytest.mark.parametrize(
    "fn",
    [
        lambda: ad.matmul(ad.Tensor(A), ad.Tensor(A)),
        lambda: ad.add(ad.Tensor(A), ad.Tensor(B)),
        lambda: ad.hadamard(ad.Tensor(A), ad.Tensor(B)),
        lambda: ad.spmm(S, ad.Tensor(B)),
        lambda: ad.concat_cols(ad.Tensor(A), ad.Tensor(B)),
        lambda: ad.row_pair_inner(ad.Tensor(A), np.array([0, 1]), np.array([1])),
        lambda: ad.Tensor(np.zeros((2, 2, 2))),
    ],
)
def test_shape_errors(fn):
    with pytest.raises(UsageError):
        fn()
