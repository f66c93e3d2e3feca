"""Background geometry of the (1+n)-dimensional hyperspherical black hole exterior.

The exterior metric is static and spherically symmetric with lapse

    A(r) = 1 - (r_s / r)^(d+1),        d = n - 3 >= 1,

where r_s is the horizon radius.  Everything downstream (multiplier
construction, inequality scans, mode evolution) is driven by a handful of
scalar functions of r collected here:

* the lapse A(r) and the photon-sphere radius r_ps,
* the logarithmic radial coordinate h(r) = log[(r^(d+1) - r_s^(d+1)) /
  (((d+1)/2) r_s^(d+1))] and its explicit inverse,
* the tortoise coordinate r_* with dr_*/dr = 1/A, anchored at r_ps,
* the angular Laplacian eigenvalues on S^(d+2),
* the localized-energy weights c_r, c_omega, c_0.

Near the horizon all formulas are evaluated through y = (r - r_s)/r to avoid
the catastrophic cancellation in 1 - (r_s/r)^(d+1) when r - r_s << r_s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad


class DomainError(ValueError):
    """Raised when a radius is at or below the horizon (or a parameter is bad)."""


def photon_sphere_radius(d: int, r_s: float) -> float:
    """Trapped-null-geodesic radius r_ps = ((d+3)/2)^(1/(d+1)) r_s."""
    if d < 1:
        raise DomainError(f"need d >= 1, got d={d}")
    if r_s <= 0:
        raise DomainError(f"need r_s > 0, got r_s={r_s}")
    return ((d + 3) / 2.0) ** (1.0 / (d + 1)) * r_s


@dataclass(frozen=True)
class BackgroundParams:
    """The space-time: dimension parameter d = n - 3 and horizon radius r_s."""

    d: int
    r_s: float = 1.0
    r_ps: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "r_ps", photon_sphere_radius(self.d, self.r_s))


def _check_exterior(r, bg: BackgroundParams):
    if np.any(np.asarray(r) <= bg.r_s):
        raise DomainError(f"radius must exceed the horizon r_s={bg.r_s}")


def y_of_r(r, bg: BackgroundParams):
    """Horizon-distance variable y = (r - r_s)/r in (0, 1)."""
    _check_exterior(r, bg)
    return (np.asarray(r, dtype=float) - bg.r_s) / np.asarray(r, dtype=float)


def lapse_from_y(y, d: int):
    """A as a function of y: 1 - (1-y)^(d+1), evaluated without cancellation."""
    y = np.asarray(y, dtype=float)
    return -np.expm1((d + 1) * np.log1p(-y))


def lapse(r, bg: BackgroundParams):
    """Metric lapse A(r) = 1 - (r_s/r)^(d+1), in (0, 1) on the exterior."""
    return lapse_from_y(y_of_r(r, bg), bg.d)


def sphere_eigenvalue(ell: int, d: int) -> float:
    """Laplacian eigenvalue lambda_ell = ell (ell + d + 1) on the unit S^(d+2)."""
    if ell < 0:
        raise DomainError(f"need ell >= 0, got {ell}")
    return float(ell * (ell + d + 1))


def h_of_y(y, bg: BackgroundParams):
    """h as a function of y = (r - r_s)/r.

    The areal radius loses all resolution once r - r_s ~ eps_mach * r_s, so
    deep-horizon work (h below about -30) must carry y, not r, and come
    through here.
    """
    d = bg.d
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0) or np.any(y >= 1):
        raise DomainError("need 0 < y < 1")
    # (d+1) log r - (d+1) log r_s = -(d+1) log(1-y)
    return -(d + 1) * np.log1p(-y) + np.log(lapse_from_y(y, d)) - math.log((d + 1) / 2.0)


def h_of_r(r, bg: BackgroundParams):
    """Log coordinate h(r) = log[(r^(d+1)-r_s^(d+1)) / (((d+1)/2) r_s^(d+1))].

    Monotone increasing, h(r_ps) = 0, h -> -inf at the horizon.  Computed as
    (d+1) log(r/r_s) + log A(r) - log((d+1)/2) so it stays accurate down to
    y ~ machine epsilon.
    """
    d = bg.d
    _check_exterior(r, bg)
    r = np.asarray(r, dtype=float)
    # (d+1) log(r/r_s), exact both near the horizon and at large r
    t = (d + 1) * np.log1p((r - bg.r_s) / bg.r_s)
    return t + np.log(-np.expm1(-t)) - math.log((d + 1) / 2.0)


def r_of_theta(theta, bg: BackgroundParams):
    """Explicit inverse of h_of_r: r with h(r) = theta.

    r^(d+1) = r_s^(d+1) (((d+1)/2) e^theta + 1).
    """
    d = bg.d
    theta = np.asarray(theta, dtype=float)
    c = (d + 1) / 2.0
    # log(1 + c e^theta), safe against overflow of e^theta
    big = theta > 500.0
    t_safe = np.where(big, 0.0, theta)
    log_term = np.where(big, math.log(c) + theta, np.log1p(c * np.exp(t_safe)))
    return bg.r_s * np.exp(log_term / (d + 1))


def y_of_theta(theta, bg: BackgroundParams):
    """y = (r - r_s)/r at r = r_of_theta(theta), stable for very negative theta."""
    d = bg.d
    theta = np.asarray(theta, dtype=float)
    c = (d + 1) / 2.0
    big = theta > 500.0
    t_safe = np.where(big, 0.0, theta)
    log_term = np.where(big, math.log(c) + theta, np.log1p(c * np.exp(t_safe)))
    return -np.expm1(-log_term / (d + 1))


def tortoise(r, bg: BackgroundParams, ref_point: float | None = None):
    """Tortoise coordinate r_*(r) = int_ref^r dx / A(x), anchored at r_ps.

    No elementary closed form exists for general d; integrate 1/A = 1 +
    r_s^(d+1)/(r^(d+1) - r_s^(d+1)) by adaptive quadrature (abs tol 1e-10).
    """
    if ref_point is None:
        ref_point = bg.r_ps
    _check_exterior(ref_point, bg)
    d = bg.d

    def excess(x):
        # 1/A - 1, written through y to stay stable near the horizon
        a = lapse_from_y((x - bg.r_s) / x, d)
        return (1.0 - a) / a

    def one_point(rv):
        _check_exterior(rv, bg)
        val, _ = quad(excess, ref_point, rv, epsabs=1e-10, epsrel=1e-12, limit=200)
        return (rv - ref_point) + val

    if np.isscalar(r) or np.asarray(r).ndim == 0:
        return one_point(float(r))
    return np.array([one_point(float(rv)) for rv in np.asarray(r)])


def tortoise_of_theta(theta: float, bg: BackgroundParams) -> float:
    """Tortoise coordinate of the point with h = theta, integrated in h.

    Since dr_*/dr = 1/A and A h' = (d+1)/r, one has dr_*/dh = r/(d+1); the
    integrand is smooth all the way to arbitrarily negative theta, unlike the
    r-space quadrature which degenerates once r is within machine epsilon of
    the horizon.
    """
    val, _ = quad(lambda x: float(r_of_theta(x, bg)) / (bg.d + 1), 0.0, float(theta),
                  epsabs=1e-12, epsrel=1e-12, limit=200)
    return val


def le_coefficients(r, bg: BackgroundParams):
    """Localized-energy weights (c_r, c_omega, c_0).

    c_r     = 1 / (r^(d+3) (1 - log y)^2)
    c_omega = (1/r) ((r - r_ps)/r)^2          (vanishes at the photon sphere)
    c_0     = y^(-1) / (r^3 (1 - log y)^4)

    with y = (r - r_s)/r.  c_omega degenerates at r_ps (trapping loss);
    c_0 blows up at the horizon while c_r tends to zero there.
    """
    r = np.asarray(r, dtype=float)
    y = y_of_r(r, bg)
    one_minus_log = 1.0 - np.log(y)
    c_r = 1.0 / (r ** (bg.d + 3) * one_minus_log**2)
    c_w = ((r - bg.r_ps) / r) ** 2 / r
    c_0 = 1.0 / (y * r**3 * one_minus_log**4)
    return c_r, c_w, c_0


@dataclass(frozen=True)
class RadialGrid:
    """Strictly increasing exterior radii with cached lapse and log coordinate."""

    coordinate_kind: str  # "areal_r" or "tortoise_rstar"
    points: np.ndarray    # areal radii, all > r_s
    cached_lapse: np.ndarray
    y: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        # monotonicity is checked on y, not r: deep near-horizon nodes are
        # distinct in y (and h) long after their radii collide in float64
        if np.any(np.diff(self.y) <= 0):
            raise DomainError("grid points must be strictly increasing")

    def __len__(self):
        return len(self.points)


def grid_from_h(bg: BackgroundParams, h_values) -> RadialGrid:
    """Grid specified by h values (uniform-in-h grids resolve the horizon)."""
    h_values = np.asarray(h_values, dtype=float)
    y = y_of_theta(h_values, bg)
    r = bg.r_s / (1.0 - y)
    return RadialGrid("areal_r", r, lapse_from_y(y, bg.d), y, h_values)


def grid_uniform_h(bg: BackgroundParams, h_lo: float, h_hi: float, n: int) -> RadialGrid:
    return grid_from_h(bg, np.linspace(h_lo, h_hi, n))


def grid_uniform_logr(bg: BackgroundParams, r_lo: float, r_hi: float, n: int) -> RadialGrid:
    """Uniform in log r; for the far region where the construction is algebraic."""
    _check_exterior(r_lo, bg)
    r = np.geomspace(r_lo, r_hi, n)
    y = y_of_r(r, bg)
    return RadialGrid("areal_r", r, lapse_from_y(y, bg.d), y, h_of_r(r, bg))
