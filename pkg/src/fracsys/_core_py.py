"""Pure numpy implementations of the hot kernels (fallback for ``_core``)."""
import math

import numpy as np

BACKEND = "python"

SERIES_FROM = 30
SERIES_TERMS = 6


def sphere_kernel(r, rho, delta, m, d, t_ref, w_ref, sphere_const):
    """Sphere average of ``|rho w - x|^(-m)`` over ``|rho w - x| >= delta``, ``|x| = r > 0``.

    Integrates over the polar angle ``theta`` in ``[theta_c, pi]`` with the
    reference rule ``(t_ref, w_ref)`` on ``[0, 1]`` mapped onto it; ``d >= 2``.
    """
    rho = np.asarray(rho, dtype=float)
    t_ref = np.asarray(t_ref, dtype=float)
    w_ref = np.asarray(w_ref, dtype=float)
    cosc = (rho * rho + r * r - delta * delta) / (2.0 * r * rho)
    cosc = np.where(np.abs(rho - r) >= delta, 1.0, np.clip(cosc, -1.0, 1.0))
    thc = np.arccos(cosc)
    span = math.pi - thc
    th = thc[:, None] + span[:, None] * t_ref[None, :]
    dist2 = rho[:, None] ** 2 + r * r - 2.0 * r * rho[:, None] * np.cos(th)
    vals = dist2 ** (-0.5 * m)
    if d > 2:
        vals = vals * np.sin(th) ** (d - 2)
    return sphere_const * span * (vals @ w_ref)


def _h(y, s):
    # second antiderivative of y^(-1-2s)
    if s == 0.5:
        return -np.log(y)
    return y ** (1.0 - 2.0 * s) / (2.0 * s * (2.0 * s - 1.0))


def hat_weights(s, kmax):
    """Integrals of unit-spacing hat functions against ``y^(-1-2s)`` on ``[1, inf)``.

    Entry ``k-1`` is the weight of the hat centred at ``y = k``; the first hat
    is cut at ``y = 1`` (only its descending half contributes).  From
    ``k = SERIES_FROM`` on, the second difference of ``H`` is summed as its
    Taylor series, which avoids the cancellation of the direct formula.
    """
    w = np.empty(kmax)
    # k = 1: H(2) - H(1) - H'(1), with H'(1) = -1/(2s)
    w[0] = _h(2.0, s) - _h(1.0, s) + 1.0 / (2.0 * s)
    k = np.arange(2, kmax + 1, dtype=float)
    direct = k < SERIES_FROM
    kd = k[direct]
    w[1:][direct] = _h(kd + 1.0, s) - 2.0 * _h(kd, s) + _h(kd - 1.0, s)
    ks = k[~direct]
    w[1:][~direct] = _series(ks, s)
    return w


def _series(k, s):
    # sum_j 2 H^(2j)(k) / (2j)!, H^(2j)(k) = (1+2s)_(2j-2) k^(-(2j-1)-2s)
    out = np.zeros_like(k)
    rising = 1.0
    fact = 2.0
    kp = k ** (-1.0 - 2.0 * s)
    inv2 = 1.0 / (k * k)
    for j in range(1, SERIES_TERMS + 1):
        out += 2.0 * rising / fact * kp
        kp = kp * inv2
        rising *= (2 * j - 1 + 2.0 * s) * (2 * j + 2.0 * s)
        fact *= (2 * j + 1) * (2 * j + 2)
    return out


def f_values(a, b, y, alpha):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    y = np.asarray(y, dtype=float)
    y2 = y * y
    t1 = (1.0 - a + np.sqrt((a + b) ** 2 + y2)) ** (-2.0 * alpha)
    t2 = (1.0 - a + np.sqrt((a - b) ** 2 + y2)) ** (-2.0 * alpha)
    t3 = ((1.0 + b) ** 2 + y2) ** (-alpha)
    t4 = ((1.0 - b) ** 2 + y2) ** (-alpha)
    return (t1 - t3) + (t2 - t4)
