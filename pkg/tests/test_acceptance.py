"""End-to-end acceptance checks, one test per criterion.

Each test logs a single PASS/FAIL line (shown in the terminal summary and,
with ``-s``, inline) and then asserts the same condition.
"""

import math
import time

import numpy as np
import pytest

from stbc4x4.analysis import (abs_det_batch, determinant_terms,
                              det_closed_form_batch, min_det_search, papr,
                              phi_sweep, verify_nvd_appendix)
from stbc4x4.channel import (equivalent_channel, sample_rayleigh, stream_rng,
                             vec)
from stbc4x4.cli import main
from stbc4x4.code import (DEFAULT_PHI, assemble_codeword,
                          hurwitz_radon_check, make_proposed_code,
                          qam_constellation)
from stbc4x4.simulation import SimConfig, decoder_agreement, run_cer

DET_TOL = 1e-8


def test_1_min_det(code, acceptance_log, capsys):
    found, times = {}, {}
    for spread in (2, 4, 6):
        t0 = time.perf_counter()
        found[spread] = min_det_search(code, spread).min_abs_det
        times[spread] = time.perf_counter() - t0
    cli_ok = all(main(["mindet", "--spread", str(s)]) == 0
                 and "min |det| = 16\n" in capsys.readouterr().out
                 for s in (2, 4, 6))
    ok = cli_ok and all(abs(v - 16) <= DET_TOL for v in found.values())
    detail = ", ".join(f"spread {s}: {found[s]:.12g} in {times[s]:.2f}s"
                       for s in found)
    acceptance_log(1, "min |det| = 16 at spreads 2, 4, 6", ok, detail)
    assert ok


def test_2_papr(code, acceptance_log):
    want = {4: 0.00, 16: 2.55, 64: 3.68}
    got = {m: papr(code, qam_constellation(m)).value_db for m in want}
    ok = all(abs(got[m] - want[m]) <= 0.01 for m in want)
    detail = ", ".join(f"{m}-QAM {got[m]:.4f} dB" for m in want)
    acceptance_log(2, "PAPR 0.00 / 2.55 / 3.68 dB within 0.01 dB", ok, detail)
    assert ok


def test_3_nvd_certification(acceptance_log, capsys):
    rep = verify_nvd_appendix(bound=2, diophantine_bound=20)
    code = main(["verify-nvd", "--bound", "2"])
    capsys.readouterr()
    families = {
        "discriminant": rep.failures["discriminant <= 0"],
        "s1!=s2": rep.failures["s1 != s2: |det| >= (s2-s1)^2 >= 16"],
        "s1==s2": rep.failures["s1 == s2: |det| = |2s^2 cos(2phi) + b| >= 16"]
        + rep.failures["s1 == s2: |3(s/4)^2 - 5(a1^2+a2^2+a3^2)/16| >= 2"],
        "diophantine": rep.failures["Diophantine gap >= 2"]
        + rep.failures["3X1^2 mod 5 never +-1"],
    }
    ok = (rep.passed and code == 0 and rep.n_records == 3 ** 8 - 1
          and not any(families.values()))
    detail = (f"{rep.n_records} vectors, violations {families}, "
              f"min |det| {rep.min_det_unequal:g} / {rep.min_det_equal:g}, "
              f"gap {rep.diophantine_min_gap}, exit {code}")
    acceptance_log(3, "NVD certification at bound 2", ok, detail)
    assert ok, rep.summary()


def test_4_closed_form(code, acceptance_log):
    rng = stream_rng(4)
    ds = 2 * rng.integers(-3, 4, size=(100_000, 8))
    ds = ds[ds.any(axis=1)]
    direct = abs_det_batch(code, ds)
    closed = det_closed_form_batch(ds)
    rel = np.abs(direct - closed) / np.maximum(direct, 1.0)
    # equal-sigma collapse: the quadratic term enters as sigma^2, not sigma^4
    q = determinant_terms(ds)
    eq = q.sigma1 == q.sigma2
    s2 = q.sigma1[eq].astype(float) ** 2
    collapse = np.abs(2 * s2 * math.cos(2 * DEFAULT_PHI) + q.b[eq])
    fourth = np.abs(2 * s2 ** 2 * math.cos(2 * DEFAULT_PHI) + q.b[eq])
    sq_err = np.max(np.abs(collapse - direct[eq]) / np.maximum(direct[eq], 1))
    nonzero = s2 > 0
    fourth_err = np.max(np.abs(fourth[nonzero] - direct[eq][nonzero])
                        / np.maximum(direct[eq][nonzero], 1))
    ok = rel.max() <= 1e-8 and sq_err <= 1e-8 and fourth_err > 1e-3
    detail = (f"{len(ds)} vectors, max rel err {rel.max():.2e}; "
              f"{int(eq.sum())} equal-sigma cases: sigma^2 form err "
              f"{sq_err:.2e}, sigma^4 form err {fourth_err:.2e}")
    acceptance_log(4, "closed-form determinant matches direct", ok, detail)
    assert ok


def test_5_decoder_oracle(acceptance_log):
    reports = {nr: decoder_agreement(m=4, nr=nr, trials=10_000,
                                     n0_list=(0.5, 2.0, 8.0), seed=nr)
               for nr in (1, 2)}
    ok = all(r.disagree_non_tie == 0 and r.agree_non_tie == r.non_tie
             and r.conditional_evals == 4 and r.exhaustive_evals == 4 ** 4
             for r in reports.values())
    detail = "; ".join(
        f"N_R={nr}: {r.agree_non_tie}/{r.non_tie} non-tie agree, "
        f"{r.ties} ties ({r.disagree_tie} differ), evals "
        f"{r.conditional_evals} vs {r.exhaustive_evals}"
        for nr, r in reports.items())
    acceptance_log(5, "conditional ML equals exhaustive ML", ok, detail)
    assert ok


def test_6_structural_invariants(code, acceptance_log):
    hr_ok = all(hurwitz_radon_check(code, i, j)
                for i in range(6) for j in range(6))
    hr_17 = hurwitz_radon_check(code, 0, 6)
    rng = stream_rng(6)
    worst_orth = worst_vec = 0.0
    for _ in range(1000):
        nr = int(rng.integers(1, 4))
        h = sample_rayleigh(4, nr, rng)
        eq = equivalent_channel(code, h)
        g = (eq.hcal.conj().T @ eq.hcal).real[:6, :6]
        worst_orth = max(worst_orth,
                         np.max(np.abs(g - np.diag(np.diag(g)))))
        s = rng.choice(np.array([-3.0, -1.0, 1.0, 3.0]), 8)
        direct = vec(assemble_codeword(code, s) @ h.h)
        worst_vec = max(worst_vec, np.max(np.abs(direct - eq.hcal @ s)))
    ok = hr_ok and not hr_17 and worst_orth <= 1e-10 and worst_vec <= 1e-10
    detail = (f"HR 1..6 {hr_ok}, HR(1,7) {hr_17}, max off-diagonal "
              f"{worst_orth:.2e}, max vec-model gap {worst_vec:.2e}")
    acceptance_log(6, "Hurwitz-Radon, orthogonality, vec model", ok, detail)
    assert ok


def test_7_phi_optimality(acceptance_log):
    sw = phi_sweep(grid_points=256, spread=2)
    step = (math.pi / 2) / 255
    at_zero = sw.curve[0, 1]
    ok = (abs(sw.best_phi - 0.68472) <= step
          and abs(sw.best_value - 16) <= DET_TOL and at_zero < 16)
    detail = (f"argmax {sw.best_phi:.6f} rad (step {step:.5f}), value "
              f"{sw.best_value:.10g}, plateau of {sw.plateau.size} points, "
              f"phi=0 value {at_zero:.6g}")
    acceptance_log(7, "phi sweep recovers 0.5*arccos(1/5)", ok, detail)
    assert ok


@pytest.mark.slow
def test_8_cer_slope(acceptance_log):
    cfg = SimConfig(m=4, nr=1, snr_db_list=tuple(range(6, 26, 2)),
                    max_trials=10 ** 9, target_errors=200, master_seed=2024,
                    batch_size=16384)
    t0 = time.perf_counter()
    points = run_cer(cfg)
    elapsed = time.perf_counter() - t0
    snr = np.array([p.snr_db for p in points])
    cer = np.array([p.cer for p in points])
    top = snr >= snr[-1] - 6
    slope = np.polyfit(snr[top], np.log10(cer[top]), 1)[0]
    enough = all(p.errors >= 200 for p in points)
    decreasing = bool(np.all(np.diff(cer) < 0))
    ok = enough and decreasing and slope < -0.3 and elapsed <= 600
    detail = (f"CER {cer[0]:.3g} -> {cer[-1]:.3g}, strictly decreasing "
              f"{decreasing}, slope over {snr[top][0]:g}-{snr[-1]:g} dB "
              f"{slope:.3f}/dB, {sum(p.trials for p in points)} trials in "
              f"{elapsed:.0f}s")
    acceptance_log(8, "CER monotone with high-SNR slope < -0.3/dB", ok, detail)
    assert ok
