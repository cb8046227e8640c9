import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import logm

from modular_entropy import subspace as ss
from modular_entropy.reallin import ComplexVector, conjugation, realify, to_complex, to_real


def cvec(z):
    return ComplexVector.from_complex(np.asarray(z, dtype=complex))


def explicit_tomita(mu):
    """S(z1, z2) = (mu^{1/2} conj z2, mu^{-1/2} conj z1) as a real matrix."""
    a = np.array([[0, np.sqrt(mu)], [1 / np.sqrt(mu), 0]], dtype=complex)
    return realify(a) @ conjugation(2)


def independent_entropy(h, k):
    """-(h_H, log Delta h_H) with h_H from a least-squares solve and log from scipy."""
    b = h.real_basis
    system = np.hstack([b, h.j.matrix @ b])
    coef = np.linalg.lstsq(system, to_real(k), rcond=None)[0]
    hk = to_complex(b @ coef[: h.n])
    log_delta = logm(h.delta.complex_matrix())
    return float(-np.vdot(hk, log_delta @ hk).real)


def test_two_mode_fixture_modular_data():
    mu = 4.0
    h = ss.two_mode_fixture(mu)
    assert np.allclose(sorted(h.spectrum.eigenvalues), [0.25, 4.0])
    z = np.array([0.3 + 1.1j, -0.7 + 0.2j])
    assert np.allclose(to_complex(h.j.matrix @ to_real(z)), [z[1].conj(), z[0].conj()])
    # J Delta^{1/2} rebuilds the explicit Tomita operator, which fixes H pointwise
    s = h.j.matrix @ h.delta_power(0.5).matrix
    assert np.allclose(s, explicit_tomita(mu))
    for row in h.basis:
        assert np.allclose(s @ to_real(row), to_real(row))


def test_real_line_is_abelian():
    h = ss.real_line()
    assert np.allclose(h.delta.matrix, np.eye(2))
    assert not ss.is_factorial(h)


def test_parallel_vectors_rejected():
    with pytest.raises(ss.SubspaceError):
        ss.from_basis([[1, 0], [2, 0]])
    with pytest.raises(ss.SubspaceError):
        ss.from_basis([[1, 0, 0], [0, 1, 0]])


def test_factorial_split_shapes():
    fix = ss.two_mode_fixture()
    line = ss.real_line()
    assert ss.is_factorial(fix)
    f, a = ss.factorial_split(fix)
    assert (f.n, a.n) == (2, 0)
    f, a = ss.factorial_split(line)
    assert (f.n, a.n) == (0, 1)
    total = ss.direct_sum(fix, line)
    assert not ss.is_factorial(total)
    f, a = ss.factorial_split(total)
    assert (f.n, a.n) == (2, 1)
    assert ss.is_factorial(f)
    assert np.allclose(sorted(f.spectrum.eigenvalues), [0.25, 4.0])
    # the embeddings are isometries with complementary ranges
    w = np.hstack([f.embedding, a.embedding])
    assert np.allclose(w.conj().T @ w, np.eye(3))


def test_symplectic_complement():
    h = ss.two_mode_fixture()
    hp = ss.symplectic_complement(h)
    hpp = ss.symplectic_complement(hp)
    for row in h.basis:
        assert hpp.membership_residual(row) < 1e-10
        assert hp.membership_residual(h.j.matrix @ to_real(row)) < 1e-10
    line = ss.real_line()
    assert ss.symplectic_complement(line).membership_residual(np.array([1.0 + 0j])) < 1e-12


def test_cutting_projection_on_h_and_h_prime():
    h = ss.two_mode_fixture()
    for row in h.basis:
        assert np.allclose(ss.cutting_project(h, cvec(row)).z, row)
        hp = h.j.matrix @ to_real(row)
        assert np.allclose(ss.cutting_project(h, hp).coords, 0, atol=1e-13)


def test_oracle_recovers_constructed_decomposition(rng):
    h = ss.random_factorial_subspace(4, rng)
    x = h.real_basis @ rng.normal(size=4)
    xp = h.j.matrix @ h.real_basis @ rng.normal(size=4)
    assert np.allclose(ss.cutting_project_oracle(h, x + xp).coords, x)


def test_cutting_requires_factorial():
    with pytest.raises(ss.SubspaceError):
        ss.cutting_project(ss.real_line(), np.array([1.0 + 0j]))
    with pytest.raises(ss.SubspaceError):
        ss.cutting_project_oracle(ss.real_line(), np.array([1.0 + 0j]))


def test_cutting_projection_of_function_of_delta_lies_in_sum(rng):
    h = ss.random_factorial_subspace(4, rng)
    k = to_real(rng.normal(size=4) + 1j * rng.normal(size=4))
    fk = (h.delta.matrix - np.eye(8)) @ k
    part = ss.cutting_project(h, fk)
    assert h.membership_residual(part.coords) < 1e-10


def test_fixture_entropy_against_independent_oracle():
    h = ss.two_mode_fixture(4.0)
    k = np.array([1.0, 0.0], dtype=complex)
    expected = independent_entropy(h, k)
    for path in (ss.PATH_CUTTING, ss.PATH_ORACLE, ss.PATH_SPECTRAL):
        report = ss.vector_entropy(h, cvec(k), path)
        assert report.finite and report.path == path
        assert report.value == pytest.approx(expected, rel=1e-12)


def test_entropy_on_h_prime_is_zero_and_on_h_is_minus_log_delta():
    h = ss.two_mode_fixture()
    x = h.real_basis @ np.array([0.4, -1.2])
    xp = h.j.matrix @ x
    assert ss.vector_entropy(h, xp).value == pytest.approx(0.0, abs=1e-13)
    on_h = ss.entropy_in_subspace(h, x)
    assert ss.vector_entropy(h, x).value == pytest.approx(on_h, rel=1e-12)
    assert on_h > 0


def test_entropy_in_subspace_rejects_outside_vectors():
    h = ss.two_mode_fixture()
    with pytest.raises(ss.SubspaceError):
        ss.entropy_in_subspace(h, np.array([1j, 0.0]))


def test_entropy_of_abelian_component_is_dropped():
    total = ss.direct_sum(ss.two_mode_fixture(), ss.real_line())
    k = np.array([1.0, 0.0, 5.0 - 2.0j])
    alone = ss.vector_entropy(ss.two_mode_fixture(), cvec(k[:2])).value
    assert ss.vector_entropy(total, cvec(k)).value == pytest.approx(alone, rel=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([2, 4, 6, 8]), st.integers(0, 2**32 - 1))
def test_lemma_relations_on_random_subspaces(n, seed):
    rng = np.random.default_rng(seed)
    h = ss.random_factorial_subspace(n, rng)
    assert max(ss.cutting_lemma_residuals(h).values()) < 1e-9
    assert max(ss.modular_residuals(h).values()) < 1e-9
    k = cvec(rng.normal(size=n) + 1j * rng.normal(size=n))
    diff = ss.cutting_project(h, k).coords - ss.cutting_project_oracle(h, k).coords
    assert np.linalg.norm(diff) <= 1e-9 * k.norm()


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([2, 4, 6]), st.integers(0, 2**32 - 1))
def test_entropy_identities_on_random_subspaces(n, seed):
    rng = np.random.default_rng(seed)
    h = ss.random_factorial_subspace(n, rng)
    k = cvec(rng.normal(size=n) + 1j * rng.normal(size=n))
    s = ss.vector_entropy(h, k).value
    assert s >= 0
    # value equals -(h, log Delta h) on the H-component
    hk = ss.cutting_project_oracle(h, k)
    assert s == pytest.approx(ss.entropy_in_subspace(h, hk), rel=1e-9, abs=1e-12)
    assert ss.richardson_entropy_limit(h, k) == pytest.approx(s, rel=1e-5)
    assert ss.vector_entropy(h, k, ss.PATH_SPECTRAL).value == pytest.approx(s, rel=1e-9, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 1.0))
def test_entropy_is_quadratic_in_distance_from_h_prime(seed, weight):
    rng = np.random.default_rng(seed)
    h = ss.random_factorial_subspace(4, rng)
    xp = h.j.matrix @ h.real_basis @ rng.normal(size=4)
    x = h.real_basis @ rng.normal(size=4)
    t = weight * 1e-3
    s_x = ss.vector_entropy(h, x).value
    s = ss.vector_entropy(h, xp + t * x).value
    assert s_x > 0
    assert s == pytest.approx(t * t * s_x, rel=1e-6, abs=1e-14 * np.linalg.norm(xp) ** 2)
    assert np.linalg.norm(ss.cutting_project(h, xp + t * x).coords) == pytest.approx(t * np.linalg.norm(x), rel=1e-9, abs=1e-11 * np.linalg.norm(xp))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_entropy_is_additive_over_direct_sums(seed):
    rng = np.random.default_rng(seed)
    h1 = ss.random_factorial_subspace(2, rng)
    h2 = ss.two_mode_fixture(float(rng.uniform(1.5, 9.0)))
    k1 = rng.normal(size=2) + 1j * rng.normal(size=2)
    k2 = rng.normal(size=2) + 1j * rng.normal(size=2)
    total = ss.vector_entropy(ss.direct_sum(h1, h2), cvec(np.r_[k1, k2])).value
    parts = ss.vector_entropy(h1, cvec(k1)).value + ss.vector_entropy(h2, cvec(k2)).value
    assert total == pytest.approx(parts, rel=1e-9)


def test_cut_functions_add_up_on_eigenvalues():
    for lam in (0.1, 0.5, 2.0, 30.0):
        # a(l) + a(1/l) = 1 gives P_H + P_H' = 1 on each eigenpair
        assert ss.cut_a(lam) + ss.cut_a(1 / lam) == pytest.approx(1.0)
        assert ss.cut_b(lam) == pytest.approx(-ss.cut_b(1 / lam))
