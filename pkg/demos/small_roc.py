"""A small Monte Carlo run: thresholds at Pfa = 0.05, then Pd against SNR.

Uses the grid oracle in place of the SDP solver to keep the run short; swap
in DetectorId.SDP for the exact solver.

Run: python3 demos/small_roc.py
"""
from rsdetect import bench
from rsdetect.detectors import DetectorId as D
from rsdetect.scene import Scenario

sc = Scenario.reference()
dets = (D.OS_GLRT, D.GRID_ORACLE, D.MRS)
ths, _ = bench.calibrate_all(sc, 0.05, 4000, dets)
for d, t in ths.items():
    print(f"{d.value:>10} threshold {t.value:.4f}, achieved Pfa {t.achieved_pfa:.4f}")

report = bench.detection_curves(sc, ths, [-14, -12, -10, -8, -6, -4], 1000)
print(report.to_csv())
for d in dets:
    print(f"{d.value:>10}: Pd = 0.5 at {report.snr_at(d):.2f} dB")

# a steering error costs the OS-GLRT but not the Doppler-free detectors
mism = bench.mismatch_experiment(sc.replace(doppler_hz=12e3), 10e3, ths, [-10, -6, -2, 2], 1000)
for d in dets:
    print(f"{d.value:>10} with 12 kHz target, OS steered to 10 kHz:", mism.curves[d].pd)
