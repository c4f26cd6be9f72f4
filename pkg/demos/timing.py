"""Mean time per statistic for the three detectors at several L.

Run: python3 demos/timing.py
"""
from rsdetect import bench

rows = bench.timing_bench((8, 16), repetitions=200)
print(bench.timing_csv(rows))
by = {(r.detector_id.value, r.n_primary): r.mean_seconds for r in rows}
for L in (8, 16):
    print(f"L={L}: SDP is {by['Sdp', L] / by['Mrs', L]:.0f}x the MRS time")
