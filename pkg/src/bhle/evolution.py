"""Mode-decomposed evolution of the scalar wave equation on the exterior.

Separating phi = u(t, r) Y(omega) with angular eigenvalue lam = ell (ell+d+1)
reduces the wave equation to

    d_t^2 u = r^{-(d+2)} D(r^{d+2} D u) - (A lam / r^2) u,

where D = d/dr_* is the tortoise derivative (dr_*/dr = 1/A).  This is
self-adjoint against the measure r^{d+2} dr_*, so a flux-form second-order
stencil plus velocity-Verlet time stepping conserves a discrete energy to
O(dt^2) with no secular drift.  Characteristic speeds are exactly 1 in r_*,
the horizon sits at r_* = -infinity, and a truncated grid with outflow edges
is causally clean until the pulse reaches an edge (runs flag that).

Monitors accumulated during a run: the conserved energy

    E = int [v^2 + (Du)^2 + A lam u^2 / r^2] r^{d+2} dr_*,

the localized-energy integrand

    [c_r (Du)^2 + (c_omega lam / r^2 + c_0) A u^2] r^{d+2} dr_*

(the weights from geometry.le_coefficients; the c_r term absorbs the lapse of
the measure against the A of the radial gradient), and the residual of the
integrated multiplier identity, including the boundary term produced by the
f'' jump at the matching radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import solve_ivp

from .geometry import (
    BackgroundParams,
    DomainError,
    RadialGrid,
    lapse_from_y,
    r_of_theta,
    sphere_eigenvalue,
    tortoise_of_theta,
    y_of_theta,
)
from .multiplier import MultiplierParams, MultiplierProfile


class InstabilityError(RuntimeError):
    """Non-finite field values during time stepping."""


def _h_of_rstar_nodes(bg: BackgroundParams, rstar: np.ndarray) -> np.ndarray:
    """h at given tortoise positions by integrating dh/ds = (d+1)/r(h).

    The ODE is smooth on the whole line (r -> r_s makes the right side approach
    (d+1)/r_s, r -> infinity makes it decay like 1/r), so a high-order
    integrator recovers h(r_*) to near machine precision.  Anchor: h = 0 at
    r_* = 0, matching the tortoise convention anchored at the photon sphere.
    """
    d = bg.d

    def rhs(_s, hv):
        return [(d + 1) / float(r_of_theta(hv[0], bg))]

    out = np.empty_like(rstar)
    for sign in (+1, -1):
        mask = (rstar > 0) if sign > 0 else (rstar <= 0)
        if not np.any(mask):
            continue
        pts = rstar[mask]
        order = np.argsort(pts if sign > 0 else -pts)
        s_sorted = pts[order]
        sol = solve_ivp(rhs, (0.0, s_sorted[-1]), [0.0], t_eval=s_sorted,
                        method="DOP853", rtol=1e-12, atol=1e-13)
        if not sol.success:
            raise DomainError(f"tortoise grid construction failed: {sol.message}")
        vals = np.empty_like(s_sorted)
        vals[:] = sol.y[0]
        unsorted = np.empty_like(vals)
        unsorted[order] = vals
        out[mask] = unsorted
    return out


@dataclass(frozen=True)
class WaveOperator:
    """Discretized radial operator for one mode on a uniform tortoise grid."""

    bg: BackgroundParams
    ell: int
    lam: float
    rstar: np.ndarray        # node positions, uniform spacing
    delta: float             # grid spacing in r_*
    grid: RadialGrid
    w_node: np.ndarray       # r^{d+2} at nodes
    w_mid: np.ndarray        # r^{d+2} at midpoints (len n-1)
    pot: np.ndarray          # A lam / r^2 at nodes
    h_mid: np.ndarray        # h at midpoints
    le_wt_du: np.ndarray     # c_r r^{d+2}, trapezoid-weighted (monitor cache)
    le_wt_u: np.ndarray      # (c_omega lam/r^2 + c_0) A r^{d+2}, weighted

    def apply(self, u: np.ndarray) -> np.ndarray:
        """Flux-form second derivative minus the angular potential.

        Edge nodes return 0; they are owned by the outflow update in step().
        """
        lu = np.zeros_like(u)
        flux = self.w_mid * np.diff(u) / self.delta
        lu[1:-1] = (flux[1:] - flux[:-1]) / (self.delta * self.w_node[1:-1])
        lu -= self.pot * u
        lu[0] = 0.0
        lu[-1] = 0.0
        return lu


def reduce_wave_operator(ell: int, bg: BackgroundParams,
                         rstar_lo: float, rstar_hi: float, n: int) -> WaveOperator:
    """Build the mode-ell radial operator on n uniform tortoise nodes."""
    if ell < 0:
        raise DomainError(f"need ell >= 0, got {ell}")
    if n < 8:
        raise DomainError(f"need at least 8 grid points, got {n}")
    if rstar_hi <= rstar_lo:
        raise DomainError("empty tortoise range")
    rstar = np.linspace(rstar_lo, rstar_hi, n)
    delta = rstar[1] - rstar[0]
    mids = 0.5 * (rstar[:-1] + rstar[1:])
    h_all = _h_of_rstar_nodes(bg, np.concatenate([rstar, mids]))
    h_node, h_mid = h_all[:n], h_all[n:]
    y = y_of_theta(h_node, bg)
    r = bg.r_s / (1.0 - y)
    grid = RadialGrid("tortoise_rstar", r, lapse_from_y(y, bg.d), y, h_node)
    r_mid = np.asarray(r_of_theta(h_mid, bg), dtype=float)
    lam = sphere_eigenvalue(ell, bg.d)
    A = grid.cached_lapse
    pot = A * lam / r**2
    # localized-energy weights, computed from y (r itself rounds to r_s at
    # deeply negative r_* while y stays fully resolved)
    one_minus_log = 1.0 - np.log(y)
    c_r = 1.0 / (r ** (bg.d + 3) * one_minus_log**2)
    c_w = ((r - bg.r_ps) / r) ** 2 / r
    c0A = (A / y) / (r**3 * one_minus_log**4)
    w_node = r ** (bg.d + 2)
    wt = _trapz_weights(n, float(delta))
    return WaveOperator(bg, ell, lam, rstar, float(delta), grid,
                        w_node, r_mid ** (bg.d + 2), pot, h_mid,
                        c_r * w_node * wt,
                        (c_w * lam / r**2 * A + c0A) * w_node * wt)


@dataclass(frozen=True)
class ModeState:
    """One mode at one instant: amplitude u and velocity v = d_t u."""

    ell: int
    t: float
    grid: RadialGrid
    u: np.ndarray
    v: np.ndarray
    op: WaveOperator

    def __post_init__(self):
        if len(self.u) != len(self.grid) or len(self.v) != len(self.grid):
            raise DomainError("field arrays must match the grid length")


def step(state: ModeState, dt: float) -> ModeState:
    """One velocity-Verlet step with first-order outflow at the two edges.

    The interior update is time-symmetric (second order, no secular energy
    drift); edges advect out along the characteristics u_t = +/- u_x.
    """
    op = state.op
    if dt > 0.5 * op.delta + 1e-15:
        raise DomainError(f"CFL violation: dt={dt} > 0.5 * {op.delta}")
    u, v = state.u, state.v
    acc = op.apply(u)
    u_new = u + dt * v + 0.5 * dt * dt * acc
    # outflow edges, first order in space and time
    u_new[0] = u[0] + dt * (u[1] - u[0]) / op.delta
    u_new[-1] = u[-1] - dt * (u[-1] - u[-2]) / op.delta
    acc_new = op.apply(u_new)
    v_new = v + 0.5 * dt * (acc + acc_new)
    v_new[0] = (u_new[1] - u_new[0]) / op.delta
    v_new[-1] = -(u_new[-1] - u_new[-2]) / op.delta
    if not (np.all(np.isfinite(u_new)) and np.all(np.isfinite(v_new))):
        raise InstabilityError(
            f"non-finite field at t={state.t + dt:.6g} (ell={state.ell}, "
            f"dt={dt}, delta={op.delta})")
    return replace(state, t=state.t + dt, u=u_new, v=v_new)


def _trapz_weights(n: int, delta: float) -> np.ndarray:
    w = np.full(n, delta)
    w[0] = w[-1] = 0.5 * delta
    return w


def _du_node(u: np.ndarray, delta: float) -> np.ndarray:
    """Centered tortoise derivative at nodes, one-sided at the ends."""
    du = np.empty_like(u)
    du[1:-1] = (u[2:] - u[:-2]) / (2.0 * delta)
    du[0] = (u[1] - u[0]) / delta
    du[-1] = (u[-1] - u[-2]) / delta
    return du


def energy_of_mode(state: ModeState) -> float:
    """Conserved energy of the mode.

    E = int [v^2 + (Du)^2 + A lam u^2 / r^2] r^{d+2} dr_*; the gradient term
    is evaluated at cell midpoints (matching the flux stencil) and the rest by
    the trapezoid rule at nodes.
    """
    op = state.op
    du_mid = np.diff(state.u) / op.delta
    grad = float(np.sum(op.w_mid * du_mid**2)) * op.delta
    node = (state.v**2 + op.pot * state.u**2) * op.w_node
    return grad + float(np.sum(_trapz_weights(len(node), op.delta) * node))


def le_increment(state: ModeState, dt: float) -> float:
    """dt times the localized-energy integrand of the current state.

    increment = dt * int [c_r (Du)^2 + (c_omega lam / r^2 + c_0) A u^2]
                r^{d+2} dr_*.   Non-negative by construction.
    """
    op = state.op
    du = _du_node(state.u, op.delta)
    return dt * (float(op.le_wt_du @ (du * du))
                 + float(op.le_wt_u @ (state.u * state.u)))


@dataclass(frozen=True)
class EvolutionConfig:
    """Everything needed to run one family of mode evolutions."""

    bg: BackgroundParams
    mp: MultiplierParams
    ell_list: tuple
    rstar_lo: float
    rstar_hi: float
    n_points: int
    dt: float
    t_final: float
    data_kind: str = "outgoing"   # "outgoing" (v = -Du) or "symmetric" (v = 0)
    center: float = 20.0          # Gaussian center in r_*
    width: float = 1.0
    amplitude: float = 1.0

    def __post_init__(self):
        delta = (self.rstar_hi - self.rstar_lo) / (self.n_points - 1)
        if self.dt > 0.5 * delta + 1e-15:
            raise DomainError(
                f"CFL violation: dt={self.dt} exceeds half the spacing {delta}")
        if self.data_kind not in ("outgoing", "symmetric"):
            raise DomainError(f"unknown data kind {self.data_kind!r}")
        if self.t_final <= 0 or self.dt <= 0:
            raise DomainError("need positive dt and t_final")


@dataclass
class EnergyLeSeries:
    """Sampled monitors of one run (cadence: every 10 steps plus the last)."""

    ell: int
    times: np.ndarray
    energy: np.ndarray
    le_accum: np.ndarray
    base_residual: np.ndarray
    boundary_contaminated: bool = False
    contamination_time: float = math.inf


@dataclass
class EvolutionHistory:
    """Field snapshots for after-the-fact identity checks."""

    op: WaveOperator
    times: list = field(default_factory=list)
    u_snaps: list = field(default_factory=list)
    v_snaps: list = field(default_factory=list)

    def record(self, state: ModeState):
        self.times.append(state.t)
        self.u_snaps.append(state.u.copy())
        self.v_snaps.append(state.v.copy())


def initial_state(op: WaveOperator, kind: str, center: float, width: float,
                  amplitude: float) -> ModeState:
    """Gaussian pulse in r_*; outgoing data moves toward larger r_*."""
    z = (op.rstar - center) / width
    u = amplitude * np.exp(-0.5 * z * z)
    if kind == "outgoing":
        v = u * (op.rstar - center) / width**2
    elif kind == "symmetric":
        v = np.zeros_like(u)
    else:
        raise DomainError(f"unknown data kind {kind!r}")
    return ModeState(op.ell, 0.0, op.grid, u, v, op)


class _BaseIdentityMonitor:
    """Precomputed tables for the integrated multiplier identity.

    LHS(t) = G(t) - G(0) with

        G(t) = -int f v Du r^{d+2} dr_*
               - (1/2) int (A f' + (d+2) f A / r) u v r^{d+2} dr_*,

    RHS(t) = int_0^t { int [ (A f') (Du)^2
                             + ((r^{d+1}-r_ps^{d+1})/r^{d+1}) (f/r) (lam/r^2) A u^2
                             + (l(f) A) u^2 ] r^{d+2} dr_*
                       + B_jump u(r_b)^2 } ds,

    where B_jump = (1/4) r_b^{d+2} A(r_b)^2 [f''] is the boundary coefficient
    of the f'' jump at the matching radius r_b.  The l(f) weight is
    discontinuous at r_b, so the trapezoid cell containing r_b is split there
    with one-sided values to keep the spatial quadrature second order.
    """

    def __init__(self, op: WaveOperator, prof: MultiplierProfile):
        bg = op.bg
        d = bg.d
        h = op.grid.h
        r = op.grid.points
        A = op.grid.cached_lapse
        self.op = op
        self.f_n = prof.f(h=h)
        self.fa_n = prof.f_prime_lapse(h=h) + (d + 2) * self.f_n * A / r
        self.afp_mid = prof.f_prime_lapse(h=op.h_mid)
        self.lfA_n = prof.l_f_lapse(h=h)
        rps_frac = -np.expm1((d + 1) * (np.log(bg.r_ps) - np.log(r)))
        self.ang_n = rps_frac * (self.f_n / r) * (op.lam / r**2) * A
        self.w_tr = _trapz_weights(len(r), op.delta)
        self.wn = op.w_node

        # jump bookkeeping at r_b (h = x_break)
        xb = prof.params.x_break
        self.jump_coeff = prof.jump_boundary_coefficient()
        rb = float(r_of_theta(xb, bg))
        self.rb_pow = rb ** (d + 2)
        self.rstar_b = tortoise_of_theta(xb, bg)
        self.in_range = op.rstar[0] < self.rstar_b < op.rstar[-1]
        if self.in_range:
            k = int(np.searchsorted(op.rstar, self.rstar_b)) - 1
            self.k = k
            self.frac = (self.rstar_b - op.rstar[k]) / op.delta
            self.lfA_b_minus = float(prof.l_f_lapse(h=np.array([xb]), side=-1)[0])
            self.lfA_b_plus = float(prof.l_f_lapse(h=np.array([xb]), side=+1)[0])

    def u_at_break(self, u: np.ndarray) -> float:
        if not self.in_range:
            return 0.0
        return float((1.0 - self.frac) * u[self.k] + self.frac * u[self.k + 1])

    def lhs_density(self, u: np.ndarray, v: np.ndarray) -> float:
        du = _du_node(u, self.op.delta)
        dens = (-self.f_n * v * du - 0.5 * self.fa_n * u * v) * self.wn
        return float(np.sum(self.w_tr * dens))

    def rhs_density(self, u: np.ndarray) -> float:
        op = self.op
        du_mid = np.diff(u) / op.delta
        grad = float(np.sum(self.afp_mid * op.w_mid * du_mid**2)) * op.delta
        dens = (self.ang_n + self.lfA_n) * u**2 * self.wn
        total = grad + float(np.sum(self.w_tr * dens))
        if self.in_range:
            # re-do the cell containing r_b with one-sided values at the jump
            k, fr, dlt = self.k, self.frac, op.delta
            wk = self.lfA_n[k] * u[k] ** 2 * self.wn[k] \
                + self.ang_n[k] * u[k] ** 2 * self.wn[k]
            wk1 = self.lfA_n[k + 1] * u[k + 1] ** 2 * self.wn[k + 1] \
                + self.ang_n[k + 1] * u[k + 1] ** 2 * self.wn[k + 1]
            ub = self.u_at_break(u)
            ang_b = 0.5 * (self.ang_n[k] + self.ang_n[k + 1])
            wb_minus = (self.lfA_b_minus * ub**2 + ang_b * ub**2) * self.rb_pow
            wb_plus = (self.lfA_b_plus * ub**2 + ang_b * ub**2) * self.rb_pow
            naive = 0.5 * (wk + wk1) * dlt
            split = (0.5 * (wk + wb_minus) * fr * dlt
                     + 0.5 * (wb_plus + wk1) * (1.0 - fr) * dlt)
            total += split - naive
        return total

    def rhs_full(self, u: np.ndarray, include_jump: bool = True) -> float:
        val = self.rhs_density(u)
        if include_jump:
            val += self.jump_coeff * self.u_at_break(u) ** 2
        return val


def evolve(config: EvolutionConfig, ell: int | None = None,
           keep_history: bool = False, history_cadence: int = 10,
           prof: MultiplierProfile | None = None):
    """Run one mode to t_final, accumulating the monitors each step.

    Returns EnergyLeSeries, or (series, history) when keep_history is set.
    When ell is None the first entry of config.ell_list is run.
    """
    if ell is None:
        ell = int(config.ell_list[0])
    op = reduce_wave_operator(ell, config.bg, config.rstar_lo, config.rstar_hi,
                              config.n_points)
    if prof is None:
        prof = MultiplierProfile(config.bg, config.mp)
    mon = _BaseIdentityMonitor(op, prof)
    state = initial_state(op, config.data_kind, config.center, config.width,
                          config.amplitude)

    n_steps = int(round(config.t_final / config.dt))
    dt = config.t_final / n_steps if n_steps else config.dt
    edge_tol = 1e-10 * max(abs(config.amplitude), 1e-300)

    times, energies, le_vals, residuals = [], [], [], []
    history = EvolutionHistory(op) if keep_history else None

    le_sum = 0.0
    rhs_sum = 0.0
    le_prev = le_increment(state, 1.0)
    rhs_prev = mon.rhs_full(state.u)
    g0 = mon.lhs_density(state.u, state.v)
    contaminated = False
    t_contam = math.inf

    def sample(st):
        times.append(st.t)
        energies.append(energy_of_mode(st))
        le_vals.append(le_sum)
        residuals.append((mon.lhs_density(st.u, st.v) - g0) - rhs_sum)

    sample(state)
    if history is not None:
        history.record(state)

    for i in range(1, n_steps + 1):
        state = step(state, dt)
        le_now = le_increment(state, 1.0)
        le_sum += 0.5 * dt * (le_prev + le_now)
        le_prev = le_now
        rhs_now = mon.rhs_full(state.u)
        rhs_sum += 0.5 * dt * (rhs_prev + rhs_now)
        rhs_prev = rhs_now
        if not contaminated:
            edge_amp = max(np.max(np.abs(state.u[:2])), np.max(np.abs(state.u[-2:])))
            if edge_amp > edge_tol:
                contaminated = True
                t_contam = state.t
        if i % 10 == 0 or i == n_steps:
            sample(state)
        if history is not None and (i % history_cadence == 0 or i == n_steps):
            history.record(state)

    series = EnergyLeSeries(ell, np.array(times), np.array(energies),
                            np.array(le_vals), np.array(residuals),
                            contaminated, t_contam)
    if keep_history:
        return series, history
    return series


def base_identity_residual(history: EvolutionHistory, prof: MultiplierProfile,
                           include_jump: bool = True) -> float:
    """Residual of the integrated identity over the stored history.

    LHS boundary terms at the first and last snapshot minus the trapezoid
    time integral of the bulk terms (and, unless ablated, the jump boundary
    term).  Exact solutions satisfy the identity, so the residual measures
    discretization error and vanishes at second order under refinement;
    dropping the jump term leaves a resolution-independent offset whenever
    the field crosses the matching radius.
    """
    if len(history.times) < 3:
        raise DomainError("insufficient history cadence: need at least 3 snapshots")
    dts = np.diff(history.times)
    if np.any(dts <= 0):
        raise DomainError("history times must be strictly increasing")
    mon = _BaseIdentityMonitor(history.op, prof)
    lhs = (mon.lhs_density(history.u_snaps[-1], history.v_snaps[-1])
           - mon.lhs_density(history.u_snaps[0], history.v_snaps[0]))
    vals = np.array([mon.rhs_full(u, include_jump) for u in history.u_snaps])
    rhs = float(np.sum(0.5 * dts * (vals[:-1] + vals[1:])))
    return lhs - rhs
