import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from steerlab import _kernel_py, densemat
from steerlab._backend import BACKEND, kernel
from tests.conftest import random_hermitian, random_matrix


def triple_loop(a, b):
    n = len(a)
    out = [[0j] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            for k in range(n):
                out[i][j] += a[i][k] * b[k][j]
    return np.array(out)


def faddeev_leverrier(a):
    """Characteristic polynomial coefficients, highest degree first."""
    n = a.shape[0]
    coeffs = [1.0 + 0j]
    m = np.zeros_like(a)
    for k in range(1, n + 1):
        m = a @ m + coeffs[-1] * np.eye(n)
        coeffs.append(-np.trace(a @ m) / k)
    return [c.real for c in coeffs]


def bisection_roots(coeffs, lo, hi, grid=20000):
    def p(x):
        acc = 0.0
        for c in coeffs:
            acc = acc * x + c
        return acc

    xs = np.linspace(lo, hi, grid)
    vals = [p(x) for x in xs]
    roots = []
    for x0, x1, v0, v1 in zip(xs[:-1], xs[1:], vals[:-1], vals[1:]):
        if v0 == 0.0:
            roots.append(x0)
        elif v0 * v1 < 0:
            a, b, fa = x0, x1, v0
            for _ in range(200):
                mid = 0.5 * (a + b)
                fm = p(mid)
                if fa * fm <= 0:
                    b = mid
                else:
                    a, fa = mid, fm
            roots.append(0.5 * (a + b))
    return np.array(roots)


def test_identity_product(rng):
    a = random_matrix(rng, 3)
    assert np.array_equal(densemat.mat_mul(np.eye(3), a), a)


def test_rank_one_product():
    out = densemat.mat_mul([[0, 1], [0, 0]], [[0, 0], [1, 0]])
    assert np.array_equal(out, np.array([[1, 0], [0, 0]]))


def test_product_matches_triple_loop(rng):
    a, b = random_matrix(rng, 4), random_matrix(rng, 4)
    assert np.max(np.abs(densemat.mat_mul(a, b) - triple_loop(a, b))) < 1e-14


def test_product_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension mismatch"):
        densemat.mat_mul(np.eye(2), np.eye(3))


@pytest.mark.parametrize("bad", [np.eye(7), np.ones((2, 3)), np.array([[np.nan, 0], [0, 1]])])
def test_rejects_bad_matrices(bad):
    with pytest.raises(ValueError):
        densemat.as_matrix(bad)


def test_adjoint_single_entry():
    out = densemat.adjoint([[0, 1j], [0, 0]])
    assert np.array_equal(out, np.array([[0, 0], [-1j, 0]]))


def test_adjoint_fixed_point_and_involution(rng):
    h = random_hermitian(rng, 5)
    assert np.array_equal(densemat.adjoint(h), h)
    a = random_matrix(rng, 5)
    assert np.array_equal(densemat.adjoint(densemat.adjoint(a)), a)


def test_eigvals_diagonal():
    assert np.allclose(densemat.herm_eigvals(np.diag([3.0, 1.0, 2.0])), [1, 2, 3], atol=1e-14)


def test_eigvals_flip():
    assert np.allclose(densemat.herm_eigvals([[0, 1], [1, 0]]), [-1, 1], atol=1e-14)


@pytest.mark.parametrize("seed", range(5))
def test_eigvals_match_charpoly_bisection(seed):
    rng = np.random.default_rng(seed)
    h = random_hermitian(rng, 5)
    bound = float(np.max(np.sum(np.abs(h), axis=1))) + 1.0
    oracle = bisection_roots(faddeev_leverrier(h), -bound, bound)
    assert len(oracle) == 5
    got = densemat.herm_eigvals(h)
    assert np.max(np.abs(got - oracle)) < 1e-9
    assert abs(got.sum() - np.trace(h).real) < 1e-10


def test_eigvals_rejects_non_hermitian():
    with pytest.raises(ValueError, match="not Hermitian"):
        densemat.herm_eigvals([[0, 1], [0, 0]])


def rotation(n, p, q, theta, phase):
    u = np.eye(n, dtype=complex)
    c, s = math.cos(theta), math.sin(theta)
    u[p, p], u[q, q] = c, c
    u[p, q] = -s * np.exp(1j * phase)
    u[q, p] = s * np.exp(-1j * phase)
    return u


def test_eigvals_recover_rotated_diagonal(rng):
    d = rng.normal(size=6)
    u = np.eye(6, dtype=complex)
    for _ in range(12):
        p, q = sorted(rng.choice(6, 2, replace=False))
        u = u @ rotation(6, p, q, rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi))
    a = u @ np.diag(d) @ u.conj().T
    assert np.max(np.abs(densemat.herm_eigvals(a) - np.sort(d))) < 1e-9


def test_compiled_and_python_eigvals_agree(rng):
    for n in range(1, 7):
        h = random_hermitian(rng, n)
        assert np.max(np.abs(kernel.herm_eigvals(h) - _kernel_py.herm_eigvals(h))) < 1e-12


def test_backend_is_compiled():
    # the build ships the extension; the fallback is exercised explicitly elsewhere
    assert BACKEND == "compiled"


def test_frobenius_examples(rng):
    a = random_matrix(rng, 3)
    assert densemat.frobenius_distance(a, a) == 0.0
    assert densemat.frobenius_distance(np.zeros((2, 2)), np.eye(2)) == pytest.approx(math.sqrt(2), abs=1e-15)


complex_entries = st.builds(complex, st.floats(-3, 3), st.floats(-3, 3))


def matrices(n):
    return st.lists(complex_entries, min_size=n * n, max_size=n * n).map(
        lambda xs: np.array(xs).reshape(n, n))


@given(matrices(4), matrices(4), matrices(4))
def test_triangle_inequality(a, b, c):
    d = densemat.frobenius_distance
    assert d(a, c) <= d(a, b) + d(b, c) + 1e-12


@given(matrices(4), matrices(4), matrices(4))
def test_associativity(a, b, c):
    mm = densemat.mat_mul
    assert densemat.frobenius_distance(mm(mm(a, b), c), mm(a, mm(b, c))) < 1e-12


@given(matrices(5), matrices(5))
def test_trace_cyclic(a, b):
    mm = densemat.mat_mul
    assert abs(densemat.trace(mm(a, b)) - densemat.trace(mm(b, a))) < 1e-12
