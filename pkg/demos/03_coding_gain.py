"""Minimum determinant, the NVD certificate, PAPR and the angle sweep."""

from stbc4x4 import (make_proposed_code, min_det_search, papr, phi_sweep,
                     qam_constellation, verify_nvd_appendix)
from stbc4x4.analysis import det_closed_form, det_difference

code = make_proposed_code()

# Differences of odd-integer PAM symbols are even; spread 2 covers QPSK,
# spread 6 covers 16-QAM.
for spread in (2, 4, 6):
    rep = min_det_search(code, spread)
    print(f"spread {spread}: min |det| = {rep.min_abs_det:g} at "
          f"{rep.argmin.tolist()}, next level {rep.next_level:g}")

ds = (2, -2, 0, 2, 0, 0, 2, 2)
print(f"|det| for {ds}: direct {det_difference(code, ds):.6f}, "
      f"closed form {det_closed_form(ds):.6f}")

print(verify_nvd_appendix(bound=2).summary())

for m in (4, 16, 64):
    print(f"{m}-QAM PAPR {papr(code, qam_constellation(m)).value_db:.2f} dB")

# The layer-two rotation matters: at phi = 0 the code loses full rank.
print(f"phi = 0: min |det| = "
      f"{min_det_search(make_proposed_code(0.0), 2).min_abs_det:g}")
sw = phi_sweep(grid_points=64, spread=2)
print(f"best phi on a 64-point grid: {sw.best_phi:.4f} rad "
      f"(value {sw.best_value:g}, {sw.plateau.size} tied angles)")
