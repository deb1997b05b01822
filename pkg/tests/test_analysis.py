import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stbc4x4.analysis import (abs_det_batch, determinant_terms,
                              det_closed_form, det_closed_form_batch,
                              det_difference, diophantine_gap,
                              min_det_sample, min_det_search, nvd_case_record,
                              papr, papr_sampled, phi_sweep,
                              verify_nvd_appendix)
from stbc4x4.code import (DEFAULT_PHI, assemble_codeword, make_proposed_code,
                          qam_constellation)

even = st.lists(st.integers(-3, 3).map(lambda v: 2 * v), min_size=8,
                max_size=8)


@pytest.mark.parametrize("ds, expected", [
    ((2, 0, 0, 0, 0, 0, 0, 0), 16.0),
    ((0, 0, 0, 0, 0, 0, 2, 0), 16.0),
    ((0, 0, 0, 0, 0, 0, 0, 0), 0.0),
])
def test_det_examples(code, ds, expected):
    assert det_difference(code, ds) == pytest.approx(expected, abs=1e-9)
    assert det_closed_form(ds) == pytest.approx(expected, abs=1e-9)


def test_det_matches_numpy(code):
    ds = np.array([2, -2, 0, 4, 0, 2, -2, 2])
    assert det_difference(code, ds) == pytest.approx(
        abs(np.linalg.det(assemble_codeword(code, ds))), rel=1e-12)


@settings(max_examples=300, deadline=None)
@given(even, st.floats(0, math.pi / 2))
def test_closed_form_property(ds, phi):
    code = make_proposed_code(phi)
    direct = det_difference(code, ds)
    closed = det_closed_form(ds, phi)
    assert abs(direct - closed) <= 1e-8 * max(direct, 1.0)


def test_closed_form_batch(code):
    rng = np.random.default_rng(0)
    ds = 2 * rng.integers(-3, 4, size=(1000, 8))
    direct = abs_det_batch(code, ds)
    closed = det_closed_form_batch(ds)
    assert np.all(np.abs(direct - closed) <= 1e-8 * np.maximum(direct, 1))


def test_equal_sigma_collapse_uses_sigma_squared(code):
    # s1 == s2: |det| = |2 s^2 cos(2 phi) + b|; a fourth power would be off
    ds = (2, 0, 0, 0, 0, 0, 2, 0)
    q = determinant_terms(np.array([ds]))
    s = float(q.sigma1[0])
    assert q.sigma1[0] == q.sigma2[0]
    expected = abs(2 * s ** 2 * math.cos(2 * DEFAULT_PHI) + float(q.b[0]))
    assert det_difference(code, ds) == pytest.approx(expected, rel=1e-12)
    wrong = abs(2 * s ** 4 * math.cos(2 * DEFAULT_PHI) + float(q.b[0]))
    assert det_difference(code, ds) != pytest.approx(wrong, rel=1e-3)


@settings(max_examples=200, deadline=None)
@given(even)
def test_two_square_identity(ds):
    q = determinant_terms(np.array([ds]))
    assert int((q.a[0] ** 2).sum()) == int(q.sigma1[0] * q.sigma2[0])
    assert q.b[0] == q.b_expanded[0]
    assert q.discriminant[0] <= 0


def test_case_record_tight_unequal():
    r = nvd_case_record((2, 0, 0, 0, 0, 0, 2, 2))
    assert (r.sigma1, r.sigma2) == (4, 8)
    assert (r.sigma2 - r.sigma1) ** 2 == 16
    assert r.det_direct >= 16 - 1e-9
    assert r.root_moduli == pytest.approx((0.5, 0.5))


def test_case_record_sigma2_zero():
    r = nvd_case_record((2, 0, 0, 0, 0, 0, 0, 0))
    assert (r.sigma1, r.sigma2, r.b) == (4, 0, 0)
    assert r.root_moduli is None
    assert r.det_direct == pytest.approx(16.0)


def test_diophantine_gap():
    gap, arg, residues = diophantine_gap(20)
    assert gap == 2
    x1, x2, x3, x4 = arg
    assert abs(3 * x1 ** 2 - 5 * (x2 ** 2 + x3 ** 2 + x4 ** 2)) == 2
    assert residues == {0, 2, 3}
    assert abs(3 * 1 - 5 * 1) == 2


# -- minimum determinant ---------------------------------------------------

@pytest.mark.parametrize("spread", [2, 4])
def test_min_det(code, spread):
    rep = min_det_search(code, spread)
    assert rep.min_abs_det == pytest.approx(16.0, abs=1e-8)
    assert det_difference(code, rep.argmin) == pytest.approx(16.0, abs=1e-8)
    assert rep.count_examined == ((spread + 1) ** 8 - 1) // 2
    assert rep.next_level > 16


def test_min_det_threads_agree(code):
    a = min_det_search(code, 2)
    b = min_det_search(code, 2, workers=3)
    assert a.min_abs_det == b.min_abs_det
    assert np.array_equal(a.argmin, b.argmin)


def test_pruned_matches_unpruned(code):
    p = min_det_search(code, 2)
    u = min_det_search(code, 2, prune=False)
    assert p.min_abs_det == u.min_abs_det
    assert p.next_level == u.next_level
    assert u.count_examined == 3 ** 8 - 1


def _grid_oracle(phi):
    best = math.inf
    code = make_proposed_code(phi)
    for ds in itertools.product((-2, 0, 2), repeat=8):
        if any(ds):
            x = assemble_codeword(code, np.array(ds, float))
            best = min(best, abs(np.linalg.det(x)))
    return best


def test_phi_zero_loses_coding_gain():
    rep = min_det_search(make_proposed_code(0.0), 2)
    assert rep.min_abs_det < 16
    assert rep.min_abs_det == pytest.approx(_grid_oracle(0.0), abs=1e-9)


@pytest.mark.parametrize("spread", [0, 3, 8, -2])
def test_spread_guard(code, spread):
    with pytest.raises(ValueError, match="spread"):
        min_det_search(code, spread)


def test_min_det_sample(code):
    rep = min_det_sample(code, 14, 20_000, seed=1)
    assert rep.min_abs_det >= 16 - 1e-8
    again = min_det_sample(code, 14, 20_000, seed=1)
    assert again.min_abs_det == rep.min_abs_det


# -- PAPR ------------------------------------------------------------------

@pytest.mark.parametrize("m, expected", [(4, 0.0), (16, 2.55), (64, 3.68)])
def test_papr(code, m, expected):
    rep = papr(code, qam_constellation(m))
    assert rep.value_db == pytest.approx(expected, abs=0.01)
    assert len(rep.papr_db) == 4


@pytest.mark.parametrize("m", [16, 64])
def test_papr_closed_form(code, m):
    c = qam_constellation(m)
    expected = 10 * math.log10(2 * (c.side - 1) ** 2 / c.avg_energy)
    assert papr(code, c).value_db == pytest.approx(expected, abs=1e-9)


def test_papr_sampled_agrees(code):
    c = qam_constellation(16)
    exact = papr(code, c).papr_db
    est = papr_sampled(code, c, 200_000, seed=0)
    assert np.allclose(est, exact, atol=0.05)


# -- certification ---------------------------------------------------------

def test_verify_nvd_bound2():
    rep = verify_nvd_appendix(2)
    assert rep.passed, rep.summary()
    assert rep.n_records == 3 ** 8 - 1
    assert rep.min_det_unequal >= 16 - 1e-8
    assert rep.min_det_equal >= 16 - 1e-8
    assert rep.diophantine_min_gap == 2
    assert "PASS" in rep.summary()


def test_verify_nvd_flags_bad_angle():
    rep = verify_nvd_appendix(2, diophantine_bound=4, phi=0.0)
    assert not rep.passed
    fam = [k for k, v in rep.failures.items() if v]
    assert any("s1 == s2" in k for k in fam)
    assert all(rep.counterexamples[k] for k in fam)


# -- angle sweep -----------------------------------------------------------

def test_phi_sweep_small_grid():
    sw = phi_sweep(grid_points=33, spread=2)
    assert sw.curve.shape == (33, 2)
    assert sw.curve[0, 1] < 16
    assert sw.best_value == pytest.approx(16.0, abs=1e-8)
    assert sw.plateau.size >= 1


def test_phi_sweep_guard():
    with pytest.raises(ValueError):
        phi_sweep(4)
    with pytest.raises(ValueError):
        phi_sweep(16, spread=6)
