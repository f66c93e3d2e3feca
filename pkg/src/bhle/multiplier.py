"""The radial multiplier f(r) and the second-order operator l(.).

The multiplier is

    f(r) = g(r) + (d+2)/(d+3) * r_ps r_s^(d+1) / r^(d+2) * a(h(r)),
    g(r) = (r^(d+2) - r_ps^(d+2)) / r^(d+2),

with a(x) the piecewise smoothing profile

    a(x) = -(1/eps) (eps x + 1)/(delta (eps x + 1) - 1) - 1/eps,  x <= -1/eps
         = x,                                                    -1/eps <= x <= 0
         = x - 2 x^3/(3 alpha^2) + x^5/(5 alpha^4),               0 <= x <= alpha
         = 8 alpha / 15,                                          x >= alpha

(alpha = 5 - delta0).  f is C^1 everywhere and C^2 except for a jump of f''
at r_{-1/eps}; the jump feeds a boundary term in the integrated identity.

The scalar operator

    l(w) = -(1/4) r^-(d+2) d/dr [ A r^(d+2) d/dr { A r^-(d+2) d/dr (w r^(d+2)) } ]

governs the zeroth-order bulk term.  Two independent routes are provided:
`l_f_closed` (hand-derived branch formulas, one expression valid in all four
regions once the branch derivatives of a are inserted) and
`l_operator_oracle` (nested Richardson-extrapolated finite differences applied
to the raw definition).  Their agreement is the main correctness check.

All branch derivatives of a are hard-coded symbolic expressions; the steep
exponential branch makes runtime differentiation of a unreliable exactly
where its third derivative matters most.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    BackgroundParams,
    DomainError,
    h_of_r,
    lapse_from_y,
    r_of_theta,
    y_of_r,
    y_of_theta,
)


@dataclass(frozen=True)
class MultiplierParams:
    """Smoothing parameters (eps, delta, delta0) and the derived alpha = 5 - delta0.

    Pass ``alpha_override`` to probe the construction outside its admissible
    window (e.g. alpha = 6 ablations); normal use derives alpha from delta0.
    """

    eps: float = 0.05
    delta: float = 0.1
    delta0: float = 0.1
    alpha_override: float | None = None
    alpha: float = field(init=False)

    def __post_init__(self):
        if self.eps <= 0:
            raise DomainError(f"need eps > 0, got {self.eps}")
        if not 0 < self.delta < 1:
            raise DomainError(f"need 0 < delta < 1, got {self.delta}")
        if self.alpha_override is not None:
            if self.alpha_override <= 0:
                raise DomainError("alpha override must be positive")
            object.__setattr__(self, "alpha", float(self.alpha_override))
        else:
            if not 0 < self.delta0 < 1:
                raise DomainError(f"need 0 < delta0 < 1, got {self.delta0}")
            object.__setattr__(self, "alpha", 5.0 - self.delta0)

    @property
    def x_break(self) -> float:
        """Argument of a at which f'' jumps: x = -1/eps."""
        return -1.0 / self.eps


def a_eval(x, order: int, mp: MultiplierParams, side: int = +1):
    """Profile a(x) or its derivative of the given order (0..3).

    ``side`` selects the one-sided value at the breakpoint x = -1/eps where
    a'' and a''' are discontinuous: side < 0 takes the exponential-branch
    limit, side > 0 (default) the linear-branch limit.
    """
    if order not in (0, 1, 2, 3):
        raise ValueError(f"order must be 0..3, got {order}")
    x = np.asarray(x, dtype=float)
    eps, delta, alpha = mp.eps, mp.delta, mp.alpha
    xb = mp.x_break

    on_first = (x < xb) | ((x == xb) & (side < 0))
    on_lin = (~on_first) & (x <= 0.0)
    on_quintic = (x > 0.0) & (x < alpha)
    on_flat = x >= alpha

    out = np.zeros_like(x)
    # exponential branch: R = delta*eps*x + delta - 1 (never zero for x <= -1/eps,
    # but np.where evaluates the expression everywhere, hence the errstate guard)
    R = delta * eps * x + delta - 1.0
    u = eps * x + 1.0
    np_err = np.errstate(divide="ignore", invalid="ignore", over="ignore")
    np_err.__enter__()
    if order == 0:
        out = np.where(on_first, -(1.0 / eps) * u / R - 1.0 / eps, out)
        out = np.where(on_lin, x, out)
        xq = np.where(on_quintic, x, 0.0)
        out = np.where(on_quintic, xq - 2 * xq**3 / (3 * alpha**2) + xq**5 / (5 * alpha**4), out)
        out = np.where(on_flat, 8 * alpha / 15.0, out)
    elif order == 1:
        out = np.where(on_first, 1.0 / R**2, out)
        out = np.where(on_lin, 1.0, out)
        out = np.where(on_quintic, (x**2 - alpha**2) ** 2 / alpha**4, out)
    elif order == 2:
        out = np.where(on_first, -2 * delta * eps / R**3, out)
        out = np.where(on_quintic, 4 * x * (x**2 - alpha**2) / alpha**4, out)
    else:  # order == 3
        out = np.where(on_first, 6 * (delta * eps) ** 2 / R**4, out)
        out = np.where(on_quintic, 4 * (3 * x**2 - alpha**2) / alpha**4, out)
    np_err.__exit__(None, None, None)
    return out if out.ndim else float(out)


def g_eval(r, bg: BackgroundParams):
    """Baseline profile g(r) = 1 - (r_ps/r)^(d+2); zero at the photon sphere."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= bg.r_s):
        raise DomainError("g_eval below the horizon")
    out = 1.0 - (bg.r_ps / r) ** (bg.d + 2)
    return out if out.ndim else float(out)


def _lg(r, bg: BackgroundParams):
    """Closed form of l(g)."""
    d, rs = bg.d, bg.r_s
    r = np.asarray(r, dtype=float)
    return (d + 2) / (4 * r ** (2 * d + 5)) * (
        d * r ** (2 * d + 2) + (d + 3) * rs ** (d + 1) * r ** (d + 1)
        - (d + 2) ** 2 * rs ** (2 * d + 2)
    )


def _lh(r, bg: BackgroundParams):
    """Closed form of l applied to the unsmoothed log piece K h(r)/r^(d+2)."""
    d, rs = bg.d, bg.r_s
    r = np.asarray(r, dtype=float)
    return -((d + 2) * (d + 1) / 4.0) * bg.r_ps * rs ** (d + 1) / r ** (2 * d + 6) * (
        2 * r ** (d + 1) - (d + 3) * rs ** (d + 1)
    )


class MultiplierProfile:
    """f, f', l(f) and the f'' jump for a fixed background and parameter set.

    Immutable after construction; evaluations are pure, so instances may be
    shared freely across workers.  Per-grid evaluation tables are memoized.
    """

    def __init__(self, background: BackgroundParams, params: MultiplierParams):
        self.background = background
        self.params = params
        d = background.d
        # K multiplies a(h(r))/r^(d+2) in f
        self.K = (d + 2) / (d + 3) * background.r_ps * background.r_s ** (d + 1)
        self.r_break_low = float(r_of_theta(params.x_break, background))
        self.r_break_high = float(r_of_theta(params.alpha, background))
        self._tables: dict[int, dict[str, np.ndarray]] = {}

    # -- elementary ingredients -------------------------------------------

    def _coords(self, r, h):
        """Resolve the (r, h, y) triple from whichever coordinate was given.

        The breakpoint r_{-1/eps} sits within ~1e-9 r_s of the horizon for the
        default eps, so near-horizon callers must pass h: the areal radius has
        no resolution left there, while r recovered from h is fully accurate
        in a relative sense wherever it enters only through powers of r.
        """
        bg = self.background
        if h is None:
            if r is None:
                raise DomainError("pass either r or h")
            r = np.asarray(r, dtype=float)
            y = y_of_r(r, bg)
            h = h_of_r(r, bg)
        else:
            h = np.asarray(h, dtype=float)
            y = y_of_theta(h, bg)
            r = bg.r_s / (1.0 - y)
        return r, h, y

    def _pole(self, r, h):
        """1 / (r^(d+1) - r_s^(d+1)) = 2 e^(-h) / ((d+1) r_s^(d+1)), stable in h."""
        d, rs = self.background.d, self.background.r_s
        return 2.0 * np.exp(-h) / ((d + 1) * rs ** (d + 1))

    def f(self, r=None, side: int = +1, *, h=None):
        # g written inline rather than via g_eval: on the h path the recovered
        # radius may round to exactly r_s, which is harmless here (r enters
        # only through its powers) but would trip g_eval's exterior check
        r, h, _ = self._coords(r, h)
        d = self.background.d
        out = 1.0 - (self.background.r_ps / r) ** (d + 2) + self.K * a_eval(h, 0, self.params, side) / r ** (d + 2)
        return out if np.ndim(out) else float(out)

    def f_prime(self, r=None, side: int = +1, *, h=None):
        """f'(r) = g' + K [ -(d+2) a(h)/r^(d+3) + a'(h) h'(r) / r^(d+2) ].

        Diverges like e^{-h} toward the horizon; use `f_prime_lapse` when the
        product A f' is what is actually needed there.
        """
        d = self.background.d
        r, h, y = self._coords(r, h)
        a0 = a_eval(h, 0, self.params, side)
        a1 = a_eval(h, 1, self.params, side)
        gp = (d + 2) * self.background.r_ps ** (d + 2) / r ** (d + 3)
        hp = (d + 1) * r**d * self._pole(r, h)
        out = gp + self.K * (-(d + 2) * a0 / r ** (d + 3) + a1 * hp / r ** (d + 2))
        return out if np.ndim(out) else float(out)

    def f_prime_lapse(self, r=None, side: int = +1, *, h=None):
        """A(r) f'(r) in a form with the e^{-h} blow-up cancelled analytically.

        Uses A(r) h'(r) = (d+1)/r, so the expression stays finite on grids
        that run arbitrarily deep toward the horizon.
        """
        d = self.background.d
        r, h, y = self._coords(r, h)
        A = lapse_from_y(y, d)
        a0 = a_eval(h, 0, self.params, side)
        a1 = a_eval(h, 1, self.params, side)
        gp = (d + 2) * self.background.r_ps ** (d + 2) / r ** (d + 3)
        out = A * (gp - self.K * (d + 2) * a0 / r ** (d + 3)) + self.K * a1 * (d + 1) / r ** (d + 3)
        return out if np.ndim(out) else float(out)

    # -- the operator l ----------------------------------------------------

    def _l_terms(self, r, h):
        """Coefficients T1, T2, T3 of a', a'', a''' in l(f) = l(g) + sum Ti a^(i)."""
        d, rs = self.background.d, self.background.r_s
        rps = self.background.r_ps
        T1 = ((d + 1) * (d + 2) / 2.0) * rps * rs ** (d + 1) / r ** (2 * d + 6) * (
            rps ** (d + 1) - r ** (d + 1)
        )
        T2 = ((d + 1) ** 2 * (d + 2) * (d + 5) / (4.0 * (d + 3))) * rps * rs ** (d + 1) / r ** (d + 5)
        T3 = -((d + 1) ** 3 * (d + 2) / (4.0 * (d + 3))) * rps * rs ** (d + 1) / r**4 * self._pole(r, h)
        return T1, T2, T3

    def l_f(self, r=None, side: int = +1, *, h=None):
        """Region-appropriate closed form of l(f); one-sided at r_{-1/eps}."""
        r, h, _ = self._coords(r, h)
        T1, T2, T3 = self._l_terms(r, h)
        out = (
            _lg(r, self.background)
            + T1 * a_eval(h, 1, self.params, side)
            + T2 * a_eval(h, 2, self.params, side)
            + T3 * a_eval(h, 3, self.params, side)
        )
        return out if np.ndim(out) else float(out)

    def l_f_lapse(self, r=None, side: int = +1, *, h=None):
        """A(r) l(f)(r), with the 1/(r^(d+1)-r_s^(d+1)) pole cancelled exactly."""
        d, rs = self.background.d, self.background.r_s
        r, h, y = self._coords(r, h)
        A = lapse_from_y(y, d)
        T1, T2, _ = self._l_terms(r, h)
        T3A = -((d + 1) ** 3 * (d + 2) / (4.0 * (d + 3))) * self.background.r_ps * rs ** (d + 1) / r ** (d + 5)
        out = A * (
            _lg(r, self.background)
            + T1 * a_eval(h, 1, self.params, side)
            + T2 * a_eval(h, 2, self.params, side)
        ) + T3A * a_eval(h, 3, self.params, side)
        return out if np.ndim(out) else float(out)

    def f_second_jump(self) -> float:
        """Jump f''(r_b^-) - f''(r_b^+) = 2 delta eps K h'(r_b)^2 / r_b^(d+2) > 0."""
        d = self.background.d
        rb = self.r_break_low
        hp = (d + 1) * rb**d * float(self._pole(rb, self.params.x_break))
        return 2.0 * self.params.delta * self.params.eps * self.K * hp**2 / rb ** (d + 2)

    def jump_boundary_coefficient(self) -> float:
        """Coefficient (1/4) r_b^(d+2) A(r_b)^2 * [f'' jump] of the boundary term.

        Reduces analytically to (1/2) delta eps K (d+1)^2 / r_b^2, which is the
        O(eps delta) smallness that lets the boundary term be absorbed.
        """
        d = self.background.d
        rb = self.r_break_low
        return 0.5 * self.params.delta * self.params.eps * self.K * (d + 1) ** 2 / rb**2

    # -- memoized grid tables ----------------------------------------------

    def table(self, grid) -> dict[str, np.ndarray]:
        """Values of f, f', l(f) on a RadialGrid, computed once per grid.

        Evaluation flows through the grid's h values, so the tables remain
        accurate on grids that resolve the deep near-horizon region.
        """
        key = id(grid)
        if key not in self._tables:
            self._tables[key] = {
                "f": np.asarray(self.f(h=grid.h)),
                "f_prime": np.asarray(self.f_prime(h=grid.h)),
                "l_f": np.asarray(self.l_f(h=grid.h)),
            }
        return self._tables[key]


# -- module-level operation wrappers (the public spellings) -----------------

def f_eval(r, prof: MultiplierProfile, side: int = +1, *, h=None):
    return prof.f(r, side, h=h)


def f_prime(r, prof: MultiplierProfile, side: int = +1, *, h=None):
    return prof.f_prime(r, side, h=h)


def l_f_closed(r, prof: MultiplierProfile, side: int = +1, *, h=None):
    return prof.l_f(r, side, h=h)


def f_second_jump(prof: MultiplierProfile) -> float:
    return prof.f_second_jump()


def lg_closed(r, bg: BackgroundParams):
    return _lg(r, bg)


def lh_closed(r, bg: BackgroundParams):
    return _lh(r, bg)


def derivative(fun, x: float, h: float) -> float:
    """d fun / dx via a 5-point stencil, Richardson-extrapolated (O(h^6))."""

    def five_point(step):
        return (
            -fun(x + 2 * step) + 8 * fun(x + step) - 8 * fun(x - step) + fun(x - 2 * step)
        ) / (12 * step)

    d_h = five_point(h)
    d_h2 = five_point(h / 2)
    return (16 * d_h2 - d_h) / 15.0


def l_operator_oracle(w, r: float, bg: BackgroundParams, rel_step: float = 0.02) -> float:
    """l(w) straight from its nested-derivative definition, by finite differences.

    Completely independent of the closed forms: only the scalar callable
    ``w(r)`` and the lapse enter.  The step is scaled to the local h-spacing
    so accuracy is uniform in both the near-horizon and far regimes.  The
    point must sit well inside the exterior (the stencil reaches ~7 steps).
    """
    d, rs = bg.d, bg.r_s
    if r <= rs:
        raise DomainError("oracle point below the horizon")
    dr_per_dh = (r ** (d + 1) - rs ** (d + 1)) / ((d + 1) * r**d)
    step = rel_step * min(dr_per_dh, r)
    if step <= 0 or r - 7 * step <= rs:
        raise DomainError("oracle point too close to the horizon for its stencil")

    def A(x):
        return lapse_from_y((x - rs) / x, d)

    def inner(x):
        return derivative(lambda s: w(s) * s ** (d + 2), x, step)

    def middle(x):
        return derivative(lambda s: A(s) * s ** (-(d + 2)) * inner(s), x, step)

    outer = derivative(lambda s: A(s) * s ** (d + 2) * middle(s), x=r, h=step)
    return -0.25 * r ** (-(d + 2)) * outer


def f_reference_mp(r, bg: BackgroundParams, pars: MultiplierParams):
    """f at an mpmath radius, straight from its order-0 definition.

    Used by the extended-precision oracle route.  Deliberately contains no
    derivative algebra at all: only the defining formulas for g, h and the
    four branches of a, evaluated in whatever precision r carries.  r must be
    an exact near-horizon value (e.g. from `r_of_theta_mp`) when probing the
    deep region, since a float64 radius carries no information there.
    """
    from mpmath import log as mplog, mpf

    d = bg.d
    rs, rps = mpf(bg.r_s), mpf(bg.r_ps)
    K = mpf(d + 2) / (d + 3) * rps * rs ** (d + 1)
    h = mplog((r ** (d + 1) - rs ** (d + 1)) / (mpf(d + 1) / 2 * rs ** (d + 1)))
    eps, delta, alpha = mpf(pars.eps), mpf(pars.delta), mpf(pars.alpha)
    if h <= -1 / eps:
        a = -(1 / eps) * (eps * h + 1) / (delta * (eps * h + 1) - 1) - 1 / eps
    elif h <= 0:
        a = h
    elif h <= alpha:
        a = h - 2 * h**3 / (3 * alpha**2) + h**5 / (5 * alpha**4)
    else:
        a = 8 * alpha / 15
    return 1 - (rps / r) ** (d + 2) + K * a / r ** (d + 2)


def l_operator_oracle_precise(w, r, bg: BackgroundParams, dps: int = 60) -> float:
    """l(w) from the raw nested-derivative definition, in extended precision.

    The float64 oracle above loses ~e^{|h|} eps to cancellation approaching
    the horizon (the operator there is an O(1) residue of individually huge
    terms), so points with h below about -5 need this route.  ``w`` must
    accept an mpmath radius; ``r`` should be an mpf carrying full precision
    (see `r_of_theta_mp`).  Accuracy is limited only by dps.
    """
    from mpmath import diff, mp, mpf

    d = bg.d
    rs = mpf(bg.r_s)
    with mp.workdps(dps):

        def A(x):
            return 1 - (rs / x) ** (d + 1)

        def inner(x):
            return diff(lambda s: w(s) * s ** (d + 2), x)

        def middle(x):
            return diff(lambda s: A(s) * s ** (-(d + 2)) * inner(s), x)

        outer = diff(lambda s: A(s) * s ** (d + 2) * middle(s), r)
        return float(-outer / (4 * r ** (d + 2)))


def f_second_jump_fd(prof: MultiplierProfile, dh: float = 1e-3, dps: int = 60) -> float:
    """The f'' jump at r_{-1/eps} by one-sided finite differences.

    Five-point one-sided second-derivative stencils (O(step^3)) applied to
    `f_reference_mp` on each side of the breakpoint, in extended precision;
    the step is dh units of the log coordinate converted to radius.  Cross
    check for the closed-form `f_second_jump`.
    """
    from mpmath import exp as mpexp, mp, mpf

    bg, pars = prof.background, prof.params
    d = bg.d
    with mp.workdps(dps):
        rs = mpf(bg.r_s)
        rb = rs * (1 + mpf(d + 1) / 2 * mpexp(mpf(pars.x_break))) ** (mpf(1) / (d + 1))
        step = mpf(repr(dh)) * (rb ** (d + 1) - rs ** (d + 1)) / ((d + 1) * rb**d)

        def one_sided_second(side):
            s = side * step
            v = [f_reference_mp(rb + k * s, bg, pars) for k in range(5)]
            return (35 * v[0] - 104 * v[1] + 114 * v[2] - 56 * v[3] + 11 * v[4]) / (12 * s**2)

        return float(one_sided_second(-1) - one_sided_second(+1))


def r_of_theta_mp(theta: float, bg: BackgroundParams, dps: int = 60):
    """Inverse log coordinate as an exact mpf radius (full near-horizon depth)."""
    from mpmath import exp as mpexp, mp, mpf

    with mp.workdps(dps):
        d = bg.d
        return mpf(bg.r_s) * (1 + mpf(d + 1) / 2 * mpexp(mpf(repr(theta)))) ** (mpf(1) / (d + 1))
