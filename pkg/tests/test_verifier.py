import numpy as np
import pytest

from bhle.geometry import BackgroundParams, DomainError, grid_uniform_h, h_of_r
from bhle.multiplier import MultiplierParams, MultiplierProfile
from bhle.verifier import (
    CASE_IDS,
    budget_submargins,
    case3_polynomials,
    q_eval,
    q_prime,
    region_grid,
    s_eval,
    s_prime,
    s_prime_alpha5_bound,
    verify_all,
    verify_budget,
    verify_case,
)

MP = MultiplierParams()


def test_all_cases_pass_defaults():
    for d in (1, 2, 3):
        verdicts = verify_all(BackgroundParams(d), MP, n=1024)
        assert len(verdicts) == len(CASE_IDS)
        for v in verdicts:
            assert v.passed, f"{v.case_id} failed at d={d}: {v.min_margin}"


def test_case2_margin_touches_zero_at_photon_sphere():
    v = verify_case("case2", BackgroundParams(1), MP, n=2048)
    assert v.passed
    # the lower bound is saturated exactly at r_ps (both sides vanish there)
    assert abs(v.min_margin) < 1e-10
    assert v.witness_r == pytest.approx(BackgroundParams(1).r_ps, rel=1e-6)


def test_case3_polynomial_identities():
    bg = BackgroundParams(1)
    d, rs, rps = bg.d, bg.r_s, bg.r_ps
    # h = 0: the n2 factor h kills it; n3 collapses to the displayed value
    p, n1, n2, n3 = case3_polynomials(rps, bg, MP)
    assert float(n2) == pytest.approx(0.0, abs=1e-12)
    n3_expected = rps * rs ** (d + 1) * ((d + 1) ** 3 / (d + 3)) \
        * rps ** (2 * d + 2) / (rps ** (d + 1) - rs ** (d + 1)) * 4 / MP.alpha**2
    assert float(n3) == pytest.approx(n3_expected, rel=1e-12)
    assert float(n3) > 0
    # h = alpha: the (h^2 - alpha^2)^2 factor kills n1
    from bhle.geometry import r_of_theta
    r_alpha = float(r_of_theta(MP.alpha, bg))
    _, n1a, _, _ = case3_polynomials(r_alpha, bg, MP)
    assert float(n1a) == pytest.approx(0.0, abs=1e-9)


def test_case3_sum_reassembles_l_f():
    # independent cross-check: the quartet at (d=1, r_s=1, r=2) must satisfy
    # l(f) = (d+2)/(4 r^{2d+6}) (p + n1 + n2 + n3)
    bg = BackgroundParams(1)
    prof = MultiplierProfile(bg, MP)
    r = 2.0
    p, n1, n2, n3 = case3_polynomials(r, bg, MP)
    total = (bg.d + 2) / (4 * r ** (2 * bg.d + 6)) * float(p + n1 + n2 + n3)
    assert total == pytest.approx(prof.l_f(r), rel=1e-12)


def test_case3_polynomials_region_check():
    bg = BackgroundParams(1)
    with pytest.raises(DomainError):
        case3_polynomials(1.05, bg, MP)   # below r_ps
    with pytest.raises(DomainError):
        case3_polynomials(1e4, bg, MP)    # beyond r_alpha


def test_q_at_zero_exact():
    for d in range(1, 8):
        assert float(q_eval(0.0, d, MP.alpha)) == pytest.approx(d / 4 + 0.5, rel=1e-14)


def test_q_prime_nonnegative():
    x = np.linspace(0.0, MP.alpha, 2000)
    for d in range(1, 8):
        assert np.min(q_prime(x, d, MP.alpha)) >= -1e-12


def test_s_displays():
    for d in range(1, 8):
        assert float(s_eval(0.0, d, MP.alpha)) > 0
        x = np.linspace(0.0, 5.0, 2000)
        assert np.min(s_prime(x, d, MP.alpha)) > 0
    # the alpha = 5 specialization: bracketed factor at x = 0, d = 1 is 8656
    assert float(s_prime_alpha5_bound(0.0, 1)) == pytest.approx(
        8656.0 / (1250 * 4), rel=1e-14)
    with pytest.raises(DomainError):
        q_eval(MP.alpha + 1.0, 1, MP.alpha)
    with pytest.raises(DomainError):
        s_eval(6.0, 1, MP.alpha)


def test_alpha6_ablation_fails_with_witness():
    mp6 = MultiplierParams(alpha_override=6.0)
    v = verify_case("case4_fprime", BackgroundParams(1), mp6, n=2048)
    assert not v.passed
    assert v.min_margin < 0
    assert np.isfinite(v.witness_r) and v.witness_r > BackgroundParams(1).r_ps
    # the global f' > 0 condition fails with it
    vs = verify_case("sign_f", BackgroundParams(1), mp6, n=2048)
    assert not vs.passed


def test_budget_passes_defaults_and_fails_large_eps():
    for d in (1, 3):
        v = verify_budget(BackgroundParams(d), MP, n=1024)
        assert v.passed and v.min_margin > 0
    sub = budget_submargins(BackgroundParams(1), MultiplierParams(eps=0.5), 1024)
    assert sub["eps_small"][0] < 0          # e^{1/eps} no longer dominates
    assert sub["absorb"][0] > 0             # the 13/18 absorption is unaffected
    v = verify_budget(BackgroundParams(1), MultiplierParams(eps=0.5), n=1024)
    assert not v.passed


def test_budget_delta_monotonicity():
    margins = []
    for delta in (0.2, 0.1, 0.05, 0.01):
        sub = budget_submargins(BackgroundParams(1), MultiplierParams(delta=delta), 1024)
        margins.append(sub["delta_small"][0])
    assert all(b > a for a, b in zip(margins, margins[1:]))


def test_region_mismatch_and_empty_grid():
    bg = BackgroundParams(1)
    wrong = grid_uniform_h(bg, 1.0, 2.0, 64)   # region 3 grid
    with pytest.raises(DomainError):
        verify_case("case1", bg, MP, grid=wrong)
    with pytest.raises(DomainError):
        verify_budget(bg, MP, grid=grid_uniform_h(bg, -1.0, 1.0, 64))


def test_refinement_stability():
    bg = BackgroundParams(1)
    coarse = verify_case("case3_n1", bg, MP, n=1024)
    refined = verify_case("case3_n1", bg, MP, n=1024, refine=True)
    assert refined.passed
    assert refined.min_margin <= coarse.min_margin + 1e-15
    assert refined.min_margin == pytest.approx(coarse.min_margin, rel=0.05)


def test_grid_doubling_stability():
    bg = BackgroundParams(2)
    for cid in ("sign_f", "case2", "case3_n1"):
        m1 = verify_case(cid, bg, MP, n=1024).min_margin
        m2 = verify_case(cid, bg, MP, n=2048).min_margin
        scale = max(abs(m1), abs(m2), 1e-30)
        assert abs(m1 - m2) / scale < 0.05


def test_scale_covariance():
    v1 = verify_case("case4_fprime", BackgroundParams(1, 1.0), MP, n=512)
    v2 = verify_case("case4_fprime", BackgroundParams(1, 2.0), MP, n=512)
    assert v1.passed == v2.passed
    assert v2.witness_r / v1.witness_r == pytest.approx(2.0, rel=1e-9)


def test_region_grid_shapes():
    bg = BackgroundParams(1)
    g1 = region_grid("case1", bg, MP, 256)
    assert g1.h.max() <= MP.x_break + 1e-12
    g2 = region_grid("case2", bg, MP, 256)
    assert g2.h.min() >= MP.x_break - 1e-12 and g2.h.max() <= 1e-12
    with pytest.raises(DomainError):
        region_grid("nonsense", bg, MP, 256)
