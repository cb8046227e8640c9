"""Truncated bosonic Fock space over C^n.

Vectors are coefficient arrays over occupation multi-indices (n_1, ..., n_n)
with total particle number at most ``cutoff``. Number-preserving maps
(second quantisation) act exactly on the truncated space; Weyl operators
do not, and every result produced by them carries a bound on the norm of
the discarded part in ``tail``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import factorial, lgamma

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .reallin import ANTILINEAR, LINEAR, ComplexVector, RealLinearMap, complexify, conjugation
from .subspace import StandardSubspace, cutting_project, is_factorial, vector_entropy

TAIL_TOL = 1e-10
MAX_BASIS = 250_000


class CutoffError(ValueError):
    """A truncated result would discard more norm than the declared tolerance."""


class FockConsistencyError(ArithmeticError):
    pass


@dataclass(frozen=True)
class _Basis:
    n: int
    cutoff: int
    indices: np.ndarray  # (D, n) occupation numbers
    grade: np.ndarray
    raising: tuple  # sparse a_j^dagger, one per mode

    @property
    def size(self) -> int:
        return self.indices.shape[0]


@lru_cache(maxsize=16)
def fock_basis(n: int, cutoff: int) -> _Basis:
    idx = [c for total in range(cutoff + 1) for c in _compositions(total, n)]
    indices = np.array(idx, dtype=np.int64).reshape(len(idx), n)
    lookup = {tuple(row): pos for pos, row in enumerate(idx)}
    grade = indices.sum(axis=1)
    raising = []
    for j in range(n):
        rows, cols, vals = [], [], []
        for pos in np.nonzero(grade < cutoff)[0]:
            target = list(idx[pos])
            target[j] += 1
            rows.append(lookup[tuple(target)])
            cols.append(pos)
            vals.append(np.sqrt(target[j]))
        raising.append(sp.csr_matrix((vals, (rows, cols)), shape=(len(idx),) * 2))
    return _Basis(n, cutoff, indices, grade, tuple(raising))


def _compositions(total: int, parts: int):
    """Tuples of ``parts`` non-negative ints summing to ``total``."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    for cut in itertools.combinations(range(total + parts - 1), parts - 1):
        bounds = (-1,) + cut + (total + parts - 1,)
        yield tuple(bounds[i + 1] - bounds[i] - 1 for i in range(parts))


@dataclass(frozen=True, eq=False)
class FockVector:
    n: int
    cutoff: int
    coeffs: np.ndarray
    tail: float = 0.0

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.shape != (fock_basis(self.n, self.cutoff).size,):
            raise ValueError("coefficient table does not match the (n, cutoff) basis")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def vacuum(cls, n: int, cutoff: int) -> "FockVector":
        c = np.zeros(fock_basis(n, cutoff).size, dtype=complex)
        c[0] = 1.0
        return cls(n, cutoff, c)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def grade_norms(self) -> np.ndarray:
        b = fock_basis(self.n, self.cutoff)
        return np.sqrt(np.bincount(b.grade, weights=np.abs(self.coeffs) ** 2, minlength=self.cutoff + 1))

    def __sub__(self, other: "FockVector") -> "FockVector":
        _same_space(self, other)
        return FockVector(self.n, self.cutoff, self.coeffs - other.coeffs, self.tail + other.tail)

    def __mul__(self, c: complex) -> "FockVector":
        return FockVector(self.n, self.cutoff, complex(c) * self.coeffs, abs(c) * self.tail)

    __rmul__ = __mul__


def _same_space(a: FockVector, b: FockVector) -> None:
    if (a.n, a.cutoff) != (b.n, b.cutoff):
        raise ValueError("Fock vectors live in different truncated spaces")


def overlap(a: FockVector, b: FockVector) -> complex:
    """(a, b), conjugate-linear in a."""
    _same_space(a, b)
    return complex(np.vdot(a.coeffs, b.coeffs))


def _as_complex(h) -> np.ndarray:
    if isinstance(h, ComplexVector):
        return h.z
    return np.atleast_1d(np.asarray(h, dtype=complex))


def exp_series_tail(x: float, order: int) -> float:
    """sum_{k > order} x^k / k!, summed directly so there is no cancellation."""
    total, k = 0.0, order + 1
    term = np.exp(k * np.log(x) - lgamma(k + 1)) if x > 0 else 0.0
    while term > 1e-300 and (total == 0.0 or term > 1e-18 * total):
        total += term
        k += 1
        term *= x / k
    return total


def coherent_vector(h, cutoff: int) -> FockVector:
    """Unnormalised coherent vector e^h = sum_n (h^{(x)n})_s / sqrt(n!), truncated.

    ``tail`` is the exact norm of the dropped grades, sqrt(sum_{k>N} |h|^{2k}/k!).
    """
    z = _as_complex(h)
    b = fock_basis(z.size, cutoff)
    sqrt_fact = np.sqrt(np.array([float(factorial(k)) for k in range(cutoff + 1)]))
    with np.errstate(invalid="ignore"):
        powers = np.where(b.indices == 0, 1.0 + 0j, z[None, :] ** b.indices)
    coeffs = np.prod(powers / sqrt_fact[b.indices], axis=1)
    tail = np.sqrt(exp_series_tail(float(np.vdot(z, z).real), cutoff))
    return FockVector(z.size, cutoff, coeffs, float(tail))


def _apply_exp_nilpotent(op, v: np.ndarray, cutoff: int) -> np.ndarray:
    out, term = v.copy(), v
    for k in range(1, cutoff + 1):
        term = op @ term / k
        if not term.any():
            break
        out = out + term
    return out


def weyl_apply(h, v: FockVector, tol: float = TAIL_TOL) -> FockVector:
    """V(h) v with V(h) = exp(a^dagger(h) - a(h)) = e^{-|h|^2/2} e^{a^dagger(h)} e^{-a(h)}.

    On coherent vectors this is V(h) e^k = e^{-|h|^2/2 - (h, k)} e^{h + k}.
    The lowering factor is exact on the truncated space and the raising
    factor is exact on every kept grade, so only grades above the cutoff are
    lost; their norm is bounded using |a^dagger(h)| <= |h| sqrt(k + 1) on
    grade k.
    """
    z = _as_complex(h)
    if z.size != v.n:
        raise ValueError("mode dimension mismatch")
    b = fock_basis(v.n, v.cutoff)
    create = sum(zj * r for zj, r in zip(z, b.raising))
    annihilate = sum(np.conj(zj) * r.T for zj, r in zip(z, b.raising))
    norm_h2 = float(np.vdot(z, z).real)

    lowered = _apply_exp_nilpotent(-annihilate, v.coeffs, v.cutoff)
    coeffs = np.exp(-0.5 * norm_h2) * _apply_exp_nilpotent(create, lowered, v.cutoff)

    grade_norms = np.sqrt(np.bincount(b.grade, weights=np.abs(lowered) ** 2, minlength=v.cutoff + 1))
    dropped = np.exp(-0.5 * norm_h2) * sum(
        w * _raise_tail_bound(np.sqrt(norm_h2), k, v.cutoff) for k, w in enumerate(grade_norms) if w
    )
    tail = v.tail + dropped
    if tail > tol:
        raise CutoffError(f"Weyl operator pushes norm {tail:.3g} above cutoff {v.cutoff}")
    return FockVector(v.n, v.cutoff, coeffs, float(tail))


def _raise_tail_bound(r: float, k: int, cutoff: int) -> float:
    """Bound on sum_{j > cutoff - k} |a^dagger(h)^j w| / j! for unit w of grade k."""
    if r == 0:
        return 0.0
    total, j = 0.0, cutoff - k + 1
    while True:
        log_term = j * np.log(r) + 0.5 * (lgamma(k + j + 1) - lgamma(k + 1)) - lgamma(j + 1)
        term = np.exp(log_term)
        total += term
        if term < 1e-20 * max(total, 1e-300) or j > 10 * (cutoff + 10):
            return total
        j += 1


def cutoff_for(norm: float, n: int, tol: float = TAIL_TOL, minimum: int = 0) -> int:
    """Smallest cutoff at which V(h) xi with |h| = norm loses less than ``tol``."""
    cutoff = minimum
    while _raise_tail_bound(norm, 0, cutoff) >= tol:
        cutoff += 1
    size = _basis_size(n, cutoff)
    if size > MAX_BASIS:
        raise CutoffError(f"|h| = {norm:.3g} needs cutoff {cutoff}, i.e. {size} basis states for {n} modes")
    return cutoff


def _basis_size(n: int, cutoff: int) -> int:
    from math import comb

    return comb(cutoff + n, n)


@lru_cache(maxsize=16)
def _hopping(n: int, cutoff: int) -> tuple:
    b = fock_basis(n, cutoff)
    return tuple(tuple((b.raising[i] @ b.raising[j].T).tocsr() for j in range(n)) for i in range(n))


def second_quantized_generator(x: np.ndarray, n: int, cutoff: int):
    """d Gamma(x) = sum_ij x_ij a_i^dagger a_j on the truncated space."""
    hop = _hopping(n, cutoff)
    out = sp.csr_matrix((fock_basis(n, cutoff).size,) * 2, dtype=complex)
    for i in range(n):
        for j in range(n):
            if x[i, j] != 0:
                out = out + x[i, j] * hop[i][j]
    return out


def gamma_apply(u: RealLinearMap, v: FockVector) -> FockVector:
    """Second quantisation Gamma(u) v for a unitary or antiunitary u."""
    if u.dim != v.n:
        raise ValueError("mode dimension mismatch")
    coeffs = v.coeffs
    if u.kind == ANTILINEAR:
        # u = (u C) C, and Gamma(C) conjugates occupation-basis coefficients
        u = RealLinearMap(u.matrix @ conjugation(u.dim))
        coeffs = coeffs.conj()
    if u.kind != LINEAR:
        raise ValueError("expected a unitary or antiunitary map")
    m = complexify(u.matrix)
    if np.abs(m.conj().T @ m - np.eye(u.dim)).max() > 1e-10:
        raise ValueError("map is not (anti)unitary")
    t, z = scipy.linalg.schur(m, output="complex")
    gen = z @ np.diag(np.log(np.diag(t))) @ z.conj().T
    if np.abs(gen).max() == 0:
        return FockVector(v.n, v.cutoff, coeffs, v.tail)
    out = expm_multiply(second_quantized_generator(gen, v.n, v.cutoff), coeffs)
    return FockVector(v.n, v.cutoff, out, v.tail)


def vacuum_overlap_flow(x, sub: StandardSubspace, s: float, cutoff: int) -> complex:
    """(V(x) xi, Gamma(Delta^{is}) V(x) xi) on the truncated space."""
    z = _as_complex(x)
    coh = weyl_apply(z, FockVector.vacuum(z.size, cutoff))
    return overlap(coh, gamma_apply(sub.delta_power(1j * s), coh))


def fock_side_entropy(x, sub: StandardSubspace, step: float = 1e-3, cutoff: int | None = None) -> float:
    """i d/ds (V(x) xi, Gamma(Delta^{is}) V(x) xi) at s = 0, five-point central difference."""
    if cutoff is None:
        cutoff = cutoff_for(float(np.linalg.norm(_as_complex(x))), sub.n, minimum=25)
    f = {m: vacuum_overlap_flow(x, sub, m * step, cutoff) for m in (-2, -1, 1, 2)}
    deriv = (f[-2] - 8 * f[-1] + 8 * f[1] - f[2]) / (12 * step)
    return float((1j * deriv).real)


def coherent_relative_entropy(
    h, sub: StandardSubspace, check: bool = True, tol: float = 1e-5, step: float = 1e-3, cutoff: int | None = None
) -> float:
    """Relative entropy between the coherent state of h and the vacuum on R(H).

    Equals the vector entropy S_h. With ``check`` the value is compared with
    the Fock-space derivative evaluated on the H-component P_H h; the
    cutoff is then chosen from |P_H h| unless given.
    """
    if not is_factorial(sub):
        raise ValueError("coherent_relative_entropy needs a factorial subspace")
    z = _as_complex(h)
    value = vector_entropy(sub, ComplexVector.from_complex(z)).value
    if check:
        h_part = cutting_project(sub, ComplexVector.from_complex(z)).z
        fock = fock_side_entropy(h_part, sub, step=step, cutoff=cutoff)
        if abs(fock - value) > tol * max(1.0, abs(value)):
            raise FockConsistencyError(f"Fock-side derivative {fock:.12g} differs from S_h = {value:.12g}")
    return value
