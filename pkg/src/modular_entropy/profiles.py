"""Compactly supported Cauchy profiles sampled on a grid."""
from __future__ import annotations

import numpy as np


def bump(r2: np.ndarray) -> np.ndarray:
    """exp(1/(r^2 - 1)) for r^2 < 1, exactly 0 elsewhere."""
    r2 = np.asarray(r2, dtype=float)
    out = np.zeros_like(r2)
    inside = r2 < 1.0
    out[inside] = np.exp(1.0 / (r2[inside] - 1.0))
    return out


def bump_derivative(x: np.ndarray) -> np.ndarray:
    """d/dx exp(1/(x^2 - 1)) in one dimension."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    xi = x[inside]
    out[inside] = np.exp(1.0 / (xi**2 - 1.0)) * (-2.0 * xi / (xi**2 - 1.0) ** 2)
    return out


def _r2(coords, center, width):
    center = np.broadcast_to(np.asarray(center, dtype=float), (len(coords),))
    return sum(((c - c0) / width) ** 2 for c, c0 in zip(coords, center)), center


def sample(spec: dict | None, coords: tuple) -> tuple[np.ndarray, list | None]:
    """Sample a profile spec on meshgrid ``coords``.

    Returns the samples and the support box as a list of (lo, hi) per axis,
    or None when the profile vanishes identically.
    Recognised profiles: ``zero``, ``bump``, ``poly-bump``, ``two-bumps``,
    ``mode`` (a single periodic Fourier mode, not compactly supported).
    """
    shape = coords[0].shape
    d = len(coords)
    if spec is None or spec.get("profile", "zero") == "zero":
        return np.zeros(shape), None

    kind = spec["profile"]
    amp = float(spec.get("amplitude", 1.0))
    if kind == "bump":
        width = float(spec.get("width", 1.0))
        r2, center = _r2(coords, spec.get("center", 0.0), width)
        return amp * bump(r2), [(c - width, c + width) for c in center]
    if kind == "poly-bump":
        width = float(spec.get("width", 1.0))
        r2, center = _r2(coords, spec.get("center", 0.0), width)
        poly = np.polynomial.polynomial.polyval((coords[0] - center[0]) / width, spec.get("coefficients", [0.0, 1.0]))
        return amp * poly * bump(r2), [(c - width, c + width) for c in center]
    if kind == "two-bumps":
        first, box1 = sample({**spec.get("first", {}), "profile": "bump"}, coords)
        second, box2 = sample({**spec.get("second", {}), "profile": "bump"}, coords)
        return amp * (first + second), union_box(box1, box2)
    if kind == "mode":
        wavenumber = np.broadcast_to(np.asarray(spec.get("wavenumber", 1.0), dtype=float), (d,))
        phase = sum(k * c for k, c in zip(wavenumber, coords))
        return amp * np.cos(phase), [(-np.inf, np.inf)] * d
    raise ValueError(f"unknown profile {kind!r}")


def union_box(a: list | None, b: list | None) -> list | None:
    if a is None:
        return b
    if b is None:
        return a
    return [(min(p[0], q[0]), max(p[1], q[1])) for p, q in zip(a, b)]


def profile_functions_1d(spec: dict | None):
    """Analytic (value, derivative) callables of a 1-d profile spec."""
    if spec is None or spec.get("profile", "zero") == "zero":
        zero = lambda x: 0.0  # noqa: E731
        return zero, zero
    kind = spec["profile"]
    amp = float(spec.get("amplitude", 1.0))
    width = float(spec.get("width", 1.0))
    center = float(np.ravel(spec.get("center", 0.0))[0])

    def scaled_bump(x):
        u = (x - center) / width
        return float(bump(np.array([u * u]))[0]), float(bump_derivative(np.array([u]))[0]) / width

    if kind == "bump":
        def value(x):
            return amp * scaled_bump(x)[0]

        def deriv(x):
            return amp * scaled_bump(x)[1]

        return value, deriv
    if kind == "poly-bump":
        coef = np.asarray(spec.get("coefficients", [0.0, 1.0]), dtype=float)
        dcoef = np.polynomial.polynomial.polyder(coef)

        def value(x):
            u = (x - center) / width
            return amp * np.polynomial.polynomial.polyval(u, coef) * scaled_bump(x)[0]

        def deriv(x):
            u = (x - center) / width
            b, db = scaled_bump(x)
            p = np.polynomial.polynomial.polyval(u, coef)
            dp = np.polynomial.polynomial.polyval(u, dcoef) / width
            return amp * (dp * b + p * db)

        return value, deriv
    if kind == "two-bumps":
        f1, d1 = profile_functions_1d({**spec.get("first", {}), "profile": "bump"})
        f2, d2 = profile_functions_1d({**spec.get("second", {}), "profile": "bump"})
        return (lambda x: amp * (f1(x) + f2(x))), (lambda x: amp * (d1(x) + d2(x)))
    raise ValueError(f"no analytic form for profile {kind!r}")
