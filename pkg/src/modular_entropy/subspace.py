"""Standard subspaces of C^n, their modular data and the entropy of a vector.

A standard subspace H is an n-real-dimensional subspace of C^n with
H + iH = C^n. Its Tomita operator S(h1 + i h2) = h1 - i h2 is polar
decomposed into J and Delta; everything else (cutting projection,
symplectic complement, entropy) is computed from those.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.linalg import null_space
from scipy.stats import unitary_group

from .reallin import (
    ComplexVector,
    OperatorError,
    RealLinearMap,
    SpectralDecomposition,
    apply_function,
    complex_structure,
    herm_inner,
    polar_decompose_antilinear,
    spectral_decompose,
    to_complex,
    to_real,
)

FACTORIAL_TOL = 1e-8
MEMBERSHIP_TOL = 1e-8
STANDARD_TOL = 1e-10

PATH_CUTTING = "cutting-formula"
PATH_ORACLE = "decomposition-oracle"
PATH_SPECTRAL = "spectral-integral"


class SubspaceError(ValueError):
    pass


def cut_a(lam: float) -> float:
    """lambda^{-1/2} (lambda^{-1/2} - lambda^{1/2})^{-1}"""
    return lam ** -0.5 / (lam ** -0.5 - lam ** 0.5)


def cut_b(lam: float) -> float:
    """(lambda^{-1/2} - lambda^{1/2})^{-1}"""
    return 1.0 / (lam ** -0.5 - lam ** 0.5)


def _vec(k) -> np.ndarray:
    if isinstance(k, ComplexVector):
        return k.coords
    k = np.asarray(k)
    return to_real(k) if np.iscomplexobj(k) else k.astype(float)


@dataclass(frozen=True, eq=False)
class StandardSubspace:
    """Standard subspace spanned over R by the rows of ``basis``.

    ``embedding`` is set on components produced by :func:`factorial_split`:
    an isometry (columns orthonormal) from the component's own C^m into the
    parent ambient space.
    """

    basis: np.ndarray  # complex, shape (n, n); row k is b_k
    delta: RealLinearMap
    j: RealLinearMap
    embedding: np.ndarray | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.basis.shape[0]

    @cached_property
    def real_basis(self) -> np.ndarray:
        """2n x n real matrix with the basis vectors as columns."""
        return to_real(self.basis).T.reshape(2 * self.n, self.n)

    @cached_property
    def spectrum(self) -> SpectralDecomposition:
        return spectral_decompose(self.delta)

    @cached_property
    def _orthobasis(self) -> np.ndarray:
        q, _ = np.linalg.qr(self.real_basis)
        return q

    def delta_power(self, z: complex) -> RealLinearMap:
        """Delta^z for complex z, e.g. ``delta_power(1j * s)`` is Delta^{is}."""
        return apply_function(self.spectrum, lambda lam: np.exp(z * np.log(lam)))

    @cached_property
    def log_delta(self) -> RealLinearMap:
        return apply_function(self.spectrum, np.log)

    @cached_property
    def cutting_matrix(self) -> np.ndarray:
        if not is_factorial(self):
            raise SubspaceError("cutting projection formula needs a factorial subspace")
        a = apply_function(self.spectrum, cut_a)
        b = apply_function(self.spectrum, cut_b)
        return a.matrix + self.j.matrix @ b.matrix

    def membership_residual(self, x) -> float:
        """Distance from x to H relative to |x| (0 for x = 0)."""
        x = _vec(x)
        nx = np.linalg.norm(x)
        if nx == 0:
            return 0.0
        q = self._orthobasis
        return float(np.linalg.norm(x - q @ (q.T @ x)) / nx)

    def contains(self, x, tol: float = MEMBERSHIP_TOL) -> bool:
        return self.membership_residual(x) <= tol


def from_basis(vectors: Sequence, embedding: np.ndarray | None = None) -> StandardSubspace:
    """Build a standard subspace of C^n from n vectors spanning it over R."""
    rows = [v.z if isinstance(v, ComplexVector) else np.asarray(v, dtype=complex) for v in vectors]
    n = len(rows)
    if n == 0:
        empty = RealLinearMap(np.zeros((0, 0)))
        return StandardSubspace(np.zeros((0, 0), dtype=complex), empty, empty, embedding)
    basis = np.array(rows, dtype=complex)
    if basis.shape != (n, n):
        raise SubspaceError(f"need n vectors in C^n, got shape {basis.shape}")

    b = to_real(basis).T
    m = np.hstack([b, complex_structure(n) @ b])
    sv = np.linalg.svd(m, compute_uv=False)
    if sv[-1] <= STANDARD_TOL * sv[0]:
        raise SubspaceError("vectors do not span a standard subspace (H + iH != C^n or H & iH != 0)")

    tomita = m @ np.diag(np.r_[np.ones(n), -np.ones(n)]) @ np.linalg.inv(m)
    j, delta = polar_decompose_antilinear(RealLinearMap(tomita))
    return StandardSubspace(basis, delta, j, embedding)


def direct_sum(h1: StandardSubspace, h2: StandardSubspace) -> StandardSubspace:
    n1, n2 = h1.n, h2.n
    rows = [np.r_[v, np.zeros(n2)] for v in h1.basis] + [np.r_[np.zeros(n1), v] for v in h2.basis]
    return from_basis(rows)


def two_mode_fixture(mu: float = 4.0) -> StandardSubspace:
    """H in C^2 spanned by (1, mu^{-1/2}) and (i, -i mu^{-1/2}).

    Delta has eigenvalues {mu, 1/mu} and J(z1, z2) = (conj z2, conj z1).
    """
    r = mu ** -0.5
    return from_basis([[1.0, r], [1j, -1j * r]])


def real_line() -> StandardSubspace:
    return from_basis([[1.0]])


def random_factorial_subspace(n: int, rng: np.random.Generator, mu_range=(1.12, 20.0)) -> StandardSubspace:
    """Random factorial standard subspace of C^n (n even).

    Every finite-dimensional factorial subspace is unitarily equivalent to a
    sum of two-mode fixtures; the basis is additionally mixed by a random
    real-linear change of basis so that nothing is orthonormal.
    """
    if n % 2:
        raise SubspaceError("a factorial standard subspace of C^n needs n even")
    lo, hi = np.log(mu_range[0]), np.log(mu_range[1])
    blocks = np.zeros((n, n), dtype=complex)
    for p in range(n // 2):
        r = np.exp(-0.5 * rng.uniform(lo, hi))
        blocks[2 * p, 2 * p : 2 * p + 2] = [1.0, r]
        blocks[2 * p + 1, 2 * p : 2 * p + 2] = [1j, -1j * r]
    u = unitary_group.rvs(n, random_state=rng) if n > 1 else np.eye(1)
    mix = rng.normal(size=(n, n)) + 2.0 * np.eye(n)
    return from_basis(mix @ (blocks @ u.T))


def is_factorial(h: StandardSubspace, tol: float = FACTORIAL_TOL) -> bool:
    return all(abs(lam - 1.0) > tol for lam in h.spectrum.eigenvalues)


def _isometry(proj_real: np.ndarray) -> np.ndarray:
    """Orthonormal complex columns spanning the range of a complex-linear projection."""
    p = proj_real[0::2, 0::2] + 1j * proj_real[1::2, 0::2]
    w, v = np.linalg.eigh(0.5 * (p + p.conj().T))
    return v[:, w > 0.5]


def factorial_split(h: StandardSubspace, tol: float = FACTORIAL_TOL):
    """Split H = H_f + H_a along the eigenvalue-1 eigenspace of Delta.

    Returns ``(factorial, abelian)``; each component lives in its own C^m
    and carries the isometry into the ambient space as ``embedding``.
    """
    n = h.n
    e_one = np.zeros((2 * n, 2 * n))
    for lam, p in zip(h.spectrum.eigenvalues, h.spectrum.projections):
        if abs(lam - 1.0) <= tol:
            e_one += p
    parts = []
    for proj in (np.eye(2 * n) - e_one, e_one):
        w = _isometry(proj)
        m = w.shape[1]
        if m == 0:
            parts.append(from_basis([], embedding=w))
            continue
        # E H is the real span of the projected basis; keep m independent directions
        local = to_real((w.conj().T @ to_complex((proj @ h.real_basis).T).T).T).T
        u, _, _ = np.linalg.svd(local, full_matrices=False)
        parts.append(from_basis(to_complex(u[:, :m].T), embedding=w))
    return tuple(parts)


def symplectic_complement(h: StandardSubspace, tol: float = 1e-8) -> StandardSubspace:
    """H' computed as J H and checked against (iH)^{perp_R}."""
    if h.n == 0:
        return h
    jb = h.j.matrix @ h.real_basis
    perp = null_space((complex_structure(h.n) @ h.real_basis).T)
    q, _ = np.linalg.qr(jb)
    diff = np.linalg.norm(q @ q.T - perp @ perp.T, 2)
    if diff > tol:
        raise SubspaceError(f"J H and (iH)^perp disagree (residual {diff:.3g}); modular data corrupted")
    return from_basis(to_complex(jb.T))


def cutting_project(h: StandardSubspace, k) -> ComplexVector:
    """P_H k = a(Delta) k + J b(Delta) k."""
    return ComplexVector(h.cutting_matrix @ _vec(k))


def cutting_project_oracle(h: StandardSubspace, k) -> ComplexVector:
    """H-component of k = h + h', by solving a linear system in the bases of H and H'."""
    if not is_factorial(h):
        raise SubspaceError("decomposition k = h + h' is not unique for non-factorial H")
    b = h.real_basis
    bp = h.j.matrix @ b
    system = np.hstack([b, bp])
    cond = np.linalg.cond(system)
    if not np.isfinite(cond) or cond > 1e13:
        raise SubspaceError(f"H + H' system is numerically singular (condition number {cond:.3g})")
    coef = np.linalg.solve(system, _vec(k))
    return ComplexVector(b @ coef[: h.n])


@dataclass(frozen=True)
class EntropyReport:
    value: float
    finite: bool
    path: str


def _clamp(value: float, scale: float) -> float:
    if value < -1e-9 * max(scale, 1.0):
        raise ArithmeticError(f"negative entropy {value:.3g}")
    return max(value, 0.0)


def vector_entropy(h: StandardSubspace, k, path: str = PATH_CUTTING) -> EntropyReport:
    """Entropy S_k of k relative to H, computed on the factorial component.

    With the product conjugate-linear in the first slot, the sign that
    makes S_h = -(h, log Delta h) >= 0 on H is S_k = -Im(k, P_H i log Delta k).
    """
    kv = _vec(k)
    if not is_factorial(h):
        hf, _ = factorial_split(h)
        if hf.n == 0:
            return EntropyReport(0.0, True, path)
        kf = to_real(hf.embedding.conj().T @ to_complex(kv))
        return vector_entropy(hf, kf, path)
    if h.n == 0:
        return EntropyReport(0.0, True, path)

    scale = float(kv @ kv) * max(abs(np.log(lam)) for lam in h.spectrum.eigenvalues)
    if path == PATH_CUTTING:
        ak = complex_structure(h.n) @ (h.log_delta.matrix @ kv)
        value = -herm_inner(kv, h.cutting_matrix @ ak).imag
    elif path == PATH_ORACLE:
        hk = cutting_project_oracle(h, kv).coords
        value = -herm_inner(hk, h.log_delta.matrix @ hk).real
    elif path == PATH_SPECTRAL:
        value = _spectral_integral(h, kv)
    else:
        raise ValueError(f"unknown entropy path {path!r}")
    value = _clamp(value, scale)
    return EntropyReport(value, bool(np.isfinite(value)), path)


def _spectral_integral(h: StandardSubspace, kv: np.ndarray) -> float:
    # (k, P_H A k) = i sum a(l) log(l) (k, E_l k) - i sum b(l) log(l) (k, J E_l k)
    total = 0.0 + 0.0j
    for lam, p in zip(h.spectrum.eigenvalues, h.spectrum.projections):
        ek = p @ kv
        total += 1j * cut_a(lam) * np.log(lam) * herm_inner(kv, ek)
        total -= 1j * cut_b(lam) * np.log(lam) * herm_inner(kv, h.j.matrix @ ek)
    return -total.imag


def entropy_in_subspace(h: StandardSubspace, x) -> float:
    """S_x = -(x, log Delta x) for x in H."""
    xv = _vec(x)
    res = h.membership_residual(xv)
    if res > MEMBERSHIP_TOL:
        raise SubspaceError(f"vector is not in H (relative residual {res:.3g})")
    value = -herm_inner(xv, h.log_delta.matrix @ xv).real
    return _clamp(value, float(xv @ xv))


def entropy_difference_quotient(h: StandardSubspace, k, s: float) -> float:
    """-Im(k, P_H (Delta^{is} k - k)) / s, which tends to S_k as s -> 0."""
    kv = _vec(k)
    dk = h.delta_power(1j * s).matrix @ kv - kv
    return -herm_inner(kv, h.cutting_matrix @ dk).imag / s


def richardson_entropy_limit(h: StandardSubspace, k, steps=(1e-2, 1e-3, 1e-4)) -> float:
    """Extrapolate the difference quotient to s = 0 assuming a power series in s."""
    table = [entropy_difference_quotient(h, k, s) for s in steps]
    ratio = steps[0] / steps[1]
    order = 1
    while len(table) > 1:
        fac = ratio ** order
        table = [(fac * fine - coarse) / (fac - 1) for coarse, fine in zip(table, table[1:])]
        order += 1
    return table[0]


def modular_residuals(h: StandardSubspace, s_values=(0.1, 0.5, 1.0)) -> dict:
    """Residuals of J^2 = 1, J Delta J = Delta^{-1} and Delta^{is} H = H."""
    n2 = 2 * h.n
    j, d = h.j.matrix, h.delta.matrix
    d_inv = np.linalg.inv(d)
    out = {
        "J^2 = 1": float(np.abs(j @ j - np.eye(n2)).max()),
        "J Delta J = Delta^-1": float(np.abs(j @ d @ j - d_inv).max() / np.abs(d_inv).max()),
    }
    worst = 0.0
    for s in s_values:
        u = h.delta_power(1j * s).matrix
        for col in h.real_basis.T:
            worst = max(worst, h.membership_residual(u @ col))
    out["Delta^is H = H"] = worst
    return out


def cutting_lemma_residuals(h: StandardSubspace, s_values=(0.1, 0.5, 1.0)) -> dict:
    """Matrix residuals of the finite-dimensional cutting-projection identities."""
    p = h.cutting_matrix
    pp = symplectic_complement(h).cutting_matrix
    i_c = complex_structure(h.n)
    n2 = 2 * h.n
    scale = max(1.0, float(np.abs(p).max()))
    comm = 0.0
    for s in s_values:
        u = h.delta_power(1j * s).matrix
        comm = max(comm, float(np.abs(u @ p - p @ u).max()))
    return {
        "P^2 = P": float(np.abs(p @ p - p).max()) / scale,
        "P_H + P_H' = 1": float(np.abs(p + pp - np.eye(n2)).max()) / scale,
        "P^* = -i P i": float(np.abs(p.T + i_c @ p @ i_c).max()) / scale,
        "Delta^is P = P Delta^is": comm / scale,
    }
