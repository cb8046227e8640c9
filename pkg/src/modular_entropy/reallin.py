"""Real-linear operators on C^n, represented as real 2n x 2n matrices.

A complex vector z is stored as the interleaved real array
(Re z_1, Im z_1, ..., Re z_n, Im z_n). Complex-linear and antilinear maps
both become plain real matrices; which one a matrix is gets decided by
its (anti)commutation with the complex structure ``complex_structure(n)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

LINEAR = "complex-linear"
ANTILINEAR = "antilinear"
GENERAL = "general"

# relative tolerance for classifying a matrix and merging eigenvalues
CLASSIFY_TOL = 1e-10
EIG_MERGE_TOL = 1e-9


class OperatorError(ValueError):
    """Raised when an operator does not have the structure an operation needs."""


def complex_structure(n: int) -> np.ndarray:
    """Matrix of multiplication by i on R^{2n}."""
    block = np.array([[0.0, -1.0], [1.0, 0.0]])
    return np.kron(np.eye(n), block)


def conjugation(n: int) -> np.ndarray:
    """Matrix of coordinate-wise complex conjugation on R^{2n}."""
    return np.kron(np.eye(n), np.diag([1.0, -1.0]))


def to_real(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape[:-1] + (2 * z.shape[-1],))
    out[..., 0::2] = z.real
    out[..., 1::2] = z.imag
    return out


def to_complex(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x[..., 0::2] + 1j * x[..., 1::2]


def realify(a) -> np.ndarray:
    """Real 2n x 2n matrix of the complex-linear map with complex matrix ``a``."""
    a = np.asarray(a, dtype=complex)
    return np.kron(a.real, np.eye(2)) + np.kron(a.imag, complex_structure(1))


def complexify(m) -> np.ndarray:
    """Inverse of :func:`realify`; only meaningful for complex-linear ``m``."""
    m = np.asarray(m, dtype=float)
    return m[0::2, 0::2] + 1j * m[1::2, 0::2]


@dataclass(frozen=True)
class ComplexVector:
    coords: np.ndarray

    def __post_init__(self):
        c = np.array(self.coords, dtype=float).reshape(-1)
        if c.size % 2:
            raise ValueError("coords must have even length 2*dim")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @classmethod
    def from_complex(cls, z) -> "ComplexVector":
        return cls(to_real(np.atleast_1d(z)))

    @property
    def dim(self) -> int:
        return self.coords.size // 2

    @property
    def z(self) -> np.ndarray:
        return to_complex(self.coords)

    def multiply_by_i(self) -> "ComplexVector":
        return ComplexVector(complex_structure(self.dim) @ self.coords)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coords))

    def __add__(self, other):
        return ComplexVector(self.coords + _coords(other))

    def __sub__(self, other):
        return ComplexVector(self.coords - _coords(other))

    def __neg__(self):
        return ComplexVector(-self.coords)

    def __mul__(self, c: float):
        return ComplexVector(float(c) * self.coords)

    __rmul__ = __mul__


def _coords(x) -> np.ndarray:
    if isinstance(x, ComplexVector):
        return x.coords
    if np.iscomplexobj(x):
        return to_real(x)
    return np.asarray(x, dtype=float)


def herm_inner(x, y) -> complex:
    """Hermitian product (x, y), conjugate-linear in ``x``.

    The real part is the R^{2n} dot product and the imaginary part is the
    symplectic form.
    """
    a, b = _coords(x), _coords(y)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.size // 2} vs {b.size // 2}")
    return complex(np.vdot(to_complex(a), to_complex(b)))


def classify(m: np.ndarray, tol: float = CLASSIFY_TOL) -> str:
    if m.size == 0:
        return LINEAR
    n = m.shape[0] // 2
    i_c = complex_structure(n)
    scale = max(1.0, float(np.abs(m).max()))
    if np.abs(m @ i_c - i_c @ m).max() <= tol * scale:
        return LINEAR
    if np.abs(m @ i_c + i_c @ m).max() <= tol * scale:
        return ANTILINEAR
    return GENERAL


@dataclass(frozen=True)
class RealLinearMap:
    """A real-linear map of C^n. ``kind`` is always derived from the matrix."""

    matrix: np.ndarray
    kind: str = field(init=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % 2:
            raise ValueError(f"expected a square 2n x 2n matrix, got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "kind", classify(m))

    @classmethod
    def from_complex_matrix(cls, a) -> "RealLinearMap":
        return cls(realify(a))

    @classmethod
    def identity(cls, n: int) -> "RealLinearMap":
        return cls(np.eye(2 * n))

    @classmethod
    def conjugation(cls, n: int) -> "RealLinearMap":
        return cls(conjugation(n))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0] // 2

    @property
    def T(self) -> "RealLinearMap":
        """Adjoint with respect to Re(.,.)."""
        return RealLinearMap(self.matrix.T)

    def __matmul__(self, other):
        if isinstance(other, RealLinearMap):
            return RealLinearMap(self.matrix @ other.matrix)
        if isinstance(other, ComplexVector):
            return ComplexVector(self.matrix @ other.coords)
        return self.matrix @ np.asarray(other)

    def __add__(self, other: "RealLinearMap") -> "RealLinearMap":
        return RealLinearMap(self.matrix + other.matrix)

    def __sub__(self, other: "RealLinearMap") -> "RealLinearMap":
        return RealLinearMap(self.matrix - other.matrix)

    def __neg__(self) -> "RealLinearMap":
        return RealLinearMap(-self.matrix)

    def __mul__(self, c: float) -> "RealLinearMap":
        return RealLinearMap(float(c) * self.matrix)

    __rmul__ = __mul__

    def complex_matrix(self) -> np.ndarray:
        if self.kind != LINEAR:
            raise OperatorError(f"{self.kind} map has no complex matrix")
        return complexify(self.matrix)


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: tuple
    projections: tuple  # real 2n x 2n matrices, complex-linear
    multiplicities: tuple

    @property
    def dim(self) -> int:
        return self.projections[0].shape[0] // 2 if self.projections else 0

    def reconstruct(self) -> RealLinearMap:
        return apply_function(self, lambda lam: lam)


def polar_decompose_antilinear(s: RealLinearMap) -> tuple[RealLinearMap, RealLinearMap]:
    """Split an invertible antilinear ``s`` as ``s = j @ delta^{1/2}``.

    ``delta = s^T s`` is complex-linear and positive; ``j`` is antilinear
    and orthogonal (antiunitary).
    """
    if s.kind != ANTILINEAR:
        raise OperatorError(f"expected an antilinear map, got {s.kind}")
    sv = np.linalg.svd(s.matrix, compute_uv=False)
    if sv[-1] <= 1e-12 * sv[0]:
        raise OperatorError(f"singular operator (condition number {sv[0] / max(sv[-1], 1e-300):.3g})")
    delta = RealLinearMap(_symmetrize(s.matrix.T @ s.matrix))
    spec = spectral_decompose(delta)
    inv_sqrt = apply_function(spec, lambda lam: lam ** -0.5)
    j = RealLinearMap(s.matrix @ inv_sqrt.matrix)
    return j, delta


def _symmetrize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def spectral_decompose(delta: RealLinearMap, tol: float = EIG_MERGE_TOL) -> SpectralDecomposition:
    """Eigen-decomposition of a positive complex-linear operator.

    The eigensolve is done on the n x n Hermitian complex matrix, so each
    eigenvalue of the 2n x 2n real matrix arrives already paired with its
    partner; eigenvalues within relative ``tol`` are merged into one
    eigenspace.
    """
    if delta.kind != LINEAR:
        raise OperatorError(f"expected a complex-linear map, got {delta.kind}")
    m = delta.matrix
    scale = max(1.0, float(np.abs(m).max()))
    if np.abs(m - m.T).max() > 1e-9 * scale:
        raise OperatorError("operator is not symmetric")
    a = complexify(m)
    w, v = np.linalg.eigh(0.5 * (a + a.conj().T))
    if w[0] <= 0:
        raise OperatorError(f"non-positive eigenvalue {w[0]:.3g}")

    groups: list[list[int]] = []
    for idx in range(len(w)):
        if groups and w[idx] - w[groups[-1][-1]] <= tol * w[idx]:
            groups[-1].append(idx)
        else:
            groups.append([idx])

    eigenvalues, projections, mults = [], [], []
    for g in groups:
        vecs = v[:, g]
        eigenvalues.append(float(np.mean(w[g])))
        projections.append(realify(vecs @ vecs.conj().T))
        mults.append(len(g))
    return SpectralDecomposition(tuple(eigenvalues), tuple(projections), tuple(mults))


def apply_function(spec: SpectralDecomposition, f: Callable[[float], complex]) -> RealLinearMap:
    """Return sum_j f(lambda_j) P_j. Complex values of f act through i."""
    n = spec.dim
    i_c = complex_structure(n)
    out = np.zeros((2 * n, 2 * n))
    for lam, p in zip(spec.eigenvalues, spec.projections):
        try:
            val = complex(f(lam))
        except ZeroDivisionError:
            val = complex(np.inf)
        if not np.isfinite(val):
            raise OperatorError(f"function is singular at eigenvalue {lam!r}")
        out += val.real * p
        if val.imag:
            out += val.imag * (i_c @ p)
    return RealLinearMap(out)
