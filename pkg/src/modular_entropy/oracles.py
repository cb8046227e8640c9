"""Grid-independent reference values, computed by adaptive quadrature."""
from __future__ import annotations

import numpy as np
from scipy.integrate import quad

from .profiles import profile_functions_1d, sample


def _box_1d(spec):
    _, box = sample(spec, (np.zeros(1),))
    return None if box is None else box[0]


def wedge_entropy_at_origin(f_spec, g_spec, mass: float, cut: float = 0.0) -> float:
    """pi int_{x >= cut} (x - cut) (f'^2 + m^2 f^2 + g^2) dx for 1-d Cauchy data at x0 = 0.

    Valid only for the wedge whose tip sits on the data slice, i.e. lambda = 0
    (cut = 0), or for the spatial translate of that statement.
    """
    f, df = profile_functions_1d(f_spec)
    g, _ = profile_functions_1d(g_spec)
    boxes = [b for b in (_box_1d(f_spec), _box_1d(g_spec)) if b is not None]
    if not boxes:
        return 0.0
    lo = max(cut, min(b[0] for b in boxes))
    hi = max(b[1] for b in boxes)
    if hi <= lo:
        return 0.0
    points = sorted({p for b in boxes for p in b if lo < p < hi})

    def integrand(x):
        return (x - cut) * (df(x) ** 2 + mass**2 * f(x) ** 2 + g(x) ** 2)

    val, _ = quad(integrand, lo, hi, points=points or None, epsabs=0.0, epsrel=1e-13, limit=500)
    return float(np.pi * val)
