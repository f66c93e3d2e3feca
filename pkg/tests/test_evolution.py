import math

import numpy as np
import pytest

from bhle.geometry import BackgroundParams, DomainError
from bhle.multiplier import MultiplierParams, MultiplierProfile
from bhle.evolution import (
    EvolutionConfig,
    EvolutionHistory,
    InstabilityError,
    ModeState,
    base_identity_residual,
    energy_of_mode,
    evolve,
    initial_state,
    le_increment,
    reduce_wave_operator,
    step,
)

MP = MultiplierParams()
BG1 = BackgroundParams(1)

# frozen reference values for the standard pulse (d=1, r_s=1, ell=1,
# outgoing Gaussian at r_* = 5, width 0.5), continuum quadrature oracle
ENERGY_ORACLE = 696.6721569149355
LE_ORACLE = 2.1887466136464164


def _config(**kw):
    base = dict(bg=BG1, mp=MP, ell_list=(1,), rstar_lo=-15.0, rstar_hi=25.0,
                n_points=2001, dt=1e-3, t_final=1.0, data_kind="outgoing",
                center=5.0, width=0.5, amplitude=1.0)
    base.update(kw)
    return EvolutionConfig(**base)


def test_zero_state_stays_zero():
    op = reduce_wave_operator(1, BG1, -10.0, 10.0, 201)
    st = initial_state(op, "symmetric", 0.0, 1.0, 0.0)
    for _ in range(20):
        st = step(st, 0.02)
    assert np.all(st.u == 0.0) and np.all(st.v == 0.0)
    assert energy_of_mode(st) == 0.0
    assert le_increment(st, 1.0) == 0.0


def test_constant_is_static_for_ell0():
    # lam = 0: u = const solves the equation exactly on the interior stencil
    op = reduce_wave_operator(0, BG1, -10.0, 10.0, 201)
    st = ModeState(0, 0.0, op.grid, np.ones(201), np.zeros(201), op)
    acc = op.apply(st.u)
    assert np.max(np.abs(acc[1:-1])) < 1e-12


def test_flat_space_limit_dispersion():
    # far from the hole the weighted field psi = u r^{(d+2)/2} obeys the flat
    # wave equation; an exact right mover translates rigidly
    bg = BackgroundParams(1)
    op = reduce_wave_operator(0, bg, 60.0, 140.0, 4001)
    r = op.grid.points
    w = r ** ((bg.d + 2) / 2.0)
    c = 100.0
    z = (op.rstar - c) / 1.0
    G = np.exp(-0.5 * z * z)
    dG = -G * z
    st = ModeState(0, 0.0, op.grid, G / w, -dG / w, op)
    T, dt = 10.0, 0.005
    for _ in range(int(T / dt)):
        st = step(st, dt)
    psi = st.u * w
    z2 = (op.rstar - c - T) / 1.0
    ref = np.exp(-0.5 * z2 * z2)
    err = np.linalg.norm(psi - ref) / np.linalg.norm(ref)
    assert err < 0.01


def test_time_reversal():
    op = reduce_wave_operator(1, BG1, -15.0, 25.0, 801)
    st0 = initial_state(op, "symmetric", 5.0, 1.0, 1.0)
    st = st0
    dt = 0.01
    for _ in range(100):
        st = step(st, dt)
    # flip velocity and evolve back; interior is time symmetric and the pulse
    # never reaches the edges in this window
    st = ModeState(st.ell, st.t, st.grid, st.u, -st.v, op)
    for _ in range(100):
        st = step(st, dt)
    assert np.max(np.abs(st.u - st0.u)) < 1e-10
    assert np.max(np.abs(st.v + st0.v)) < 1e-10


def test_cfl_guard():
    op = reduce_wave_operator(1, BG1, -10.0, 10.0, 101)
    st = initial_state(op, "symmetric", 0.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        step(st, op.delta)
    with pytest.raises(DomainError):
        _config(dt=0.5)


def test_instability_detection():
    op = reduce_wave_operator(1, BG1, -10.0, 10.0, 101)
    u = np.full(101, 1e308)
    st = ModeState(1, 0.0, op.grid, u, u.copy(), op)
    with pytest.raises(InstabilityError), np.errstate(over="ignore", invalid="ignore"):
        for _ in range(10):
            st = step(st, 0.05)


def test_energy_oracle_value():
    op = reduce_wave_operator(1, BG1, -15.0, 25.0, 4001)
    st = initial_state(op, "outgoing", 5.0, 0.5, 1.0)
    assert energy_of_mode(st) == pytest.approx(ENERGY_ORACLE, rel=1e-4)


def test_le_integrand_oracle_value():
    op = reduce_wave_operator(1, BG1, -15.0, 25.0, 4001)
    st = initial_state(op, "outgoing", 5.0, 0.5, 1.0)
    assert le_increment(st, 1.0) == pytest.approx(LE_ORACLE, rel=1e-4)


def test_le_angular_weight_vanishes_at_photon_sphere():
    op = reduce_wave_operator(2, BG1, -2.0, 2.0, 801)
    r = op.grid.points
    k = int(np.argmin(np.abs(r - BG1.r_ps)))
    c_w_like = ((r - BG1.r_ps) / r) ** 2
    assert c_w_like[k] < 1e-6
    # the weight tables themselves are finite and nonnegative
    assert np.all(op.le_wt_du >= 0) and np.all(op.le_wt_u >= 0)


def test_energy_drift_and_le_monotone():
    series = evolve(_config(t_final=5.0))
    e0 = series.energy[0]
    assert np.max(np.abs(series.energy - e0)) / e0 < 1e-6
    assert np.all(np.diff(series.le_accum) >= 0)
    assert not series.boundary_contaminated


def test_convergence_second_order():
    # refine space and time together; measure le_accum and final energy
    results = []
    for n, dt in ((501, 4e-3), (1001, 2e-3), (2001, 1e-3)):
        s = evolve(_config(n_points=n, dt=dt, t_final=2.0))
        results.append((s.le_accum[-1], s.energy[-1]))
    le = [r[0] for r in results]
    en = [r[1] for r in results]
    p_le = math.log2(abs(le[0] - le[1]) / abs(le[1] - le[2]))
    p_en = math.log2(abs(en[0] - en[1]) / abs(en[1] - en[2]))
    assert p_le > 1.9
    assert p_en > 1.9


def test_base_identity_residual_second_order_and_jump_matters():
    # pulse crossing the matching radius r_*(r_b) ~ -10.5: the identity holds
    # at second order only with the jump boundary term included
    prof = MultiplierProfile(BG1, MP)
    res = []
    res_ablated = []
    for n in (901, 1801, 3601):
        cfg = _config(rstar_lo=-60.0, rstar_hi=30.0, n_points=n,
                      dt=0.5 * 90.0 / (n - 1) * 0.5, t_final=25.0,
                      center=-20.0, width=1.5, data_kind="symmetric")
        _, hist = evolve(cfg, keep_history=True, history_cadence=5, prof=prof)
        res.append(base_identity_residual(hist, prof))
        res_ablated.append(base_identity_residual(hist, prof,
                                                  include_jump=False))
    assert abs(res[0] / res[1]) > 3.0
    assert abs(res[1] / res[2]) > 3.0
    # ablating the jump leaves a resolution-independent offset: the difference
    # is the time-integrated jump boundary term, identical at every resolution
    offsets = [ra - r for ra, r in zip(res_ablated, res)]
    assert abs(offsets[2]) > 4.0 * abs(res[2])
    assert offsets[2] == pytest.approx(offsets[1], rel=0.01)
    assert offsets[2] == pytest.approx(offsets[0], rel=0.01)


def test_contamination_flag():
    # small domain: the outgoing pulse hits the right edge well before t_final
    series = evolve(_config(rstar_lo=-5.0, rstar_hi=10.0, n_points=751,
                            t_final=10.0))
    assert series.boundary_contaminated
    assert series.contamination_time < 10.0


def test_trapping_signature():
    # high-ell data straddling the photon sphere accumulates more localized
    # energy relative to its conserved energy than the same data far away
    def ratio(center):
        cfg = _config(ell_list=(8,), center=center, width=0.5,
                      rstar_lo=-15.0, rstar_hi=45.0, n_points=3001,
                      dt=1e-2, t_final=12.0, data_kind="symmetric")
        s = evolve(cfg)
        return s.le_accum[-1] / s.energy[0]

    near = ratio(0.0)     # r_* = 0 is the photon sphere anchor
    far = ratio(25.0)
    assert near > 0 and far > 0
    # degenerate angular weight at r_ps suppresses nothing globally, but the
    # trapped mode lingers: its time-integrated LE per unit energy exceeds
    # the freely escaping configuration
    assert near > far


def test_history_cadence_guard():
    prof = MultiplierProfile(BG1, MP)
    hist = EvolutionHistory(reduce_wave_operator(1, BG1, -10.0, 10.0, 101))
    with pytest.raises(DomainError):
        base_identity_residual(hist, prof)


def test_config_validation():
    with pytest.raises(DomainError):
        _config(data_kind="mystery")
    with pytest.raises(DomainError):
        _config(t_final=-1.0)
    with pytest.raises(DomainError):
        reduce_wave_operator(-1, BG1, -10.0, 10.0, 101)
    with pytest.raises(DomainError):
        reduce_wave_operator(1, BG1, 10.0, -10.0, 101)
