import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from modular_entropy.reallin import (
    ANTILINEAR,
    GENERAL,
    LINEAR,
    ComplexVector,
    OperatorError,
    RealLinearMap,
    apply_function,
    classify,
    complex_structure,
    complexify,
    conjugation,
    herm_inner,
    polar_decompose_antilinear,
    realify,
    spectral_decompose,
    to_complex,
    to_real,
)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def random_complex(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


@given(arrays(float, st.integers(1, 6).map(lambda n: 2 * n), elements=finite))
def test_real_complex_roundtrip(x):
    assert np.array_equal(to_real(to_complex(x)), x)


@given(arrays(complex, st.integers(1, 5), elements=st.complex_numbers(max_magnitude=10, allow_nan=False)))
def test_complex_structure_is_multiplication_by_i(z):
    n = z.size
    assert np.allclose(to_complex(complex_structure(n) @ to_real(z)), 1j * z)
    assert np.allclose(to_complex(conjugation(n) @ to_real(z)), z.conj())


def test_herm_inner_is_conjugate_linear_in_first_slot(rng):
    x, y = random_complex(rng, 3), random_complex(rng, 3)
    c = 0.3 - 1.7j
    assert np.isclose(herm_inner(c * x, y), np.conj(c) * herm_inner(x, y))
    assert np.isclose(herm_inner(x, c * y), c * herm_inner(x, y))
    assert np.isclose(herm_inner(x, x).imag, 0.0)


def test_herm_inner_accepts_complex_vectors_and_checks_dimension(rng):
    x = ComplexVector.from_complex(random_complex(rng, 2))
    assert np.isclose(herm_inner(x, x), x.norm() ** 2)
    with pytest.raises(ValueError):
        herm_inner(random_complex(rng, 2), random_complex(rng, 3))


def test_complex_vector_arithmetic(rng):
    z = random_complex(rng, 3)
    v = ComplexVector.from_complex(z)
    assert v.dim == 3
    assert np.allclose(v.multiply_by_i().z, 1j * z)
    assert np.allclose((v + v - v * 0.5).z, 1.5 * z)
    assert np.allclose((-v).z, -z)


def test_classify(rng):
    a = random_complex(rng, 3, 3)
    assert classify(realify(a)) == LINEAR
    assert classify(realify(a) @ conjugation(3)) == ANTILINEAR
    assert classify(rng.normal(size=(6, 6))) == GENERAL
    assert np.allclose(complexify(realify(a)), a)


def test_real_linear_map_kind_follows_composition(rng):
    a = RealLinearMap.from_complex_matrix(random_complex(rng, 2, 2))
    c = RealLinearMap.conjugation(2)
    assert a.kind == LINEAR and c.kind == ANTILINEAR
    assert (a @ c).kind == ANTILINEAR
    assert (c @ c).kind == LINEAR
    assert np.allclose((c @ c).matrix, RealLinearMap.identity(2).matrix)


def test_polar_decomposition_of_random_antilinear(rng):
    n = 4
    s = RealLinearMap(realify(random_complex(rng, n, n)) @ conjugation(n))
    j, delta = polar_decompose_antilinear(s)
    assert j.kind == ANTILINEAR and delta.kind == LINEAR
    assert np.allclose(j.matrix.T @ j.matrix, np.eye(2 * n), atol=1e-12)
    spec = spectral_decompose(delta)
    assert np.all(np.asarray(spec.eigenvalues) > 0)
    root = apply_function(spec, np.sqrt)
    assert np.allclose((j @ root).matrix, s.matrix, atol=1e-11)


def test_polar_decomposition_rejects_linear_and_singular(rng):
    with pytest.raises(OperatorError):
        polar_decompose_antilinear(RealLinearMap.identity(2))
    singular = np.zeros((4, 4))
    singular[:2, :2] = conjugation(1)
    with pytest.raises(OperatorError):
        polar_decompose_antilinear(RealLinearMap(singular))


def test_spectral_decomposition_merges_and_reconstructs(rng):
    q, _ = np.linalg.qr(random_complex(rng, 3, 3))
    a = q @ np.diag([2.0, 2.0, 0.5]) @ q.conj().T
    spec = spectral_decompose(RealLinearMap.from_complex_matrix(a))
    assert np.allclose(sorted(spec.eigenvalues), [0.5, 2.0])
    assert sorted(spec.multiplicities) == [1, 2]
    assert np.allclose(spec.reconstruct().complex_matrix(), a)
    total = sum(spec.projections)
    assert np.allclose(total, np.eye(6))


def test_spectral_decomposition_rejects_non_positive():
    with pytest.raises(OperatorError):
        spectral_decompose(RealLinearMap.from_complex_matrix(np.diag([1.0, -1.0])))
    with pytest.raises(OperatorError):
        spectral_decompose(RealLinearMap.conjugation(2))


def test_apply_function_complex_values_and_singularity():
    delta = RealLinearMap.from_complex_matrix(np.diag([4.0, 1.0]))
    spec = spectral_decompose(delta)
    s = 0.7
    flow = apply_function(spec, lambda lam: np.exp(1j * s * np.log(lam)))
    assert flow.kind == LINEAR
    assert np.allclose(flow.complex_matrix(), np.diag([4.0 ** (1j * s), 1.0]))
    with pytest.raises(OperatorError):
        apply_function(spec, lambda lam: 1.0 / (lam - 1.0))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_polar_pieces_satisfy_modular_like_relations(n, seed):
    rng = np.random.default_rng(seed)
    s = RealLinearMap(realify(random_complex(rng, n, n) + 3 * np.eye(n)) @ conjugation(n))
    j, delta = polar_decompose_antilinear(s)
    # j orthogonal and delta = s^T s
    assert np.allclose(j.T.matrix @ j.matrix, np.eye(2 * n), atol=1e-10)
    assert np.allclose(delta.matrix, s.matrix.T @ s.matrix, atol=1e-10)
