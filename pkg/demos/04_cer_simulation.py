"""Codeword error rate over quasi-static Rayleigh fading.

A short run; the acceptance suite extends the grid to 24 dB.
"""

import numpy as np

from stbc4x4 import SimConfig, run_cer
from stbc4x4.simulation import format_cer_csv

cfg = SimConfig(m=4, nr=1, snr_db_list=(6, 9, 12, 15, 18),
                max_trials=2_000_000, target_errors=100, master_seed=7)
points = run_cer(cfg)
print(format_cer_csv(points), end="")

snr = np.array([p.snr_db for p in points])
cer = np.array([p.cer for p in points])
slope = np.polyfit(snr[-3:], np.log10(cer[-3:]), 1)[0]
print(f"log10 CER slope over the last three points: {slope:.3f} per dB")

# Two receive antennas double the diversity order.
cfg2 = SimConfig(m=4, nr=2, snr_db_list=(6, 9, 12), max_trials=2_000_000,
                 target_errors=100, master_seed=7)
for p in run_cer(cfg2):
    print(f"N_R=2, {p.snr_db:g} dB: CER {p.cer:.3g}")
