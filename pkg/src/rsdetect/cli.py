"""Command-line front end: ``rsdetect {verify,calibrate,roc,cfar,mismatch,bench}``.

Every subcommand writes CSV to ``--out`` (or stdout) and accepts a JSON
scenario through ``--config``.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import bench, verify
from .detectors import DetectorId
from .scene import Scenario

log = logging.getLogger("rsdetect")


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _snr_grid(text: str) -> np.ndarray:
    """``start:stop:step`` (inclusive stop) or a comma list."""
    if ":" in text:
        start, stop, step = (float(v) for v in text.split(":"))
        return np.round(np.arange(start, stop + 0.5 * step, step), 9)
    return np.asarray(_floats(text))


def _detector(text: str) -> DetectorId:
    names = {d.value.lower(): d for d in DetectorId} | {d.name.lower(): d for d in DetectorId}
    key = text.strip().lower()
    if key not in names:
        raise argparse.ArgumentTypeError(f"unknown detector {text!r}")
    return names[key]


def _detectors(text: str) -> list[DetectorId]:
    return [_detector(t) for t in text.split(",") if t.strip()]


def _load_scenario(args) -> Scenario:
    if args.config:
        sc = Scenario.from_json(Path(args.config).read_text())
    else:
        sc = Scenario.reference()
    if args.seed is not None:
        sc = sc.replace(seed=args.seed)
    return sc


def _swap_oracle(dets, oracle: bool):
    if not oracle:
        return list(dets)
    return [DetectorId.GRID_ORACLE if d is DetectorId.SDP else d for d in dets]


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
        log.info("wrote %s", out)
    else:
        sys.stdout.write(text)


def cmd_verify(args) -> int:
    failed = 0
    for r in verify.run_all():
        failed += not r.passed
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail} ({r.seconds:.2f} s)")
    print(f"{len(verify.CHECKS) - failed}/{len(verify.CHECKS)} checks passed")
    return 1 if failed else 0


def cmd_calibrate(args) -> int:
    sc = _load_scenario(args)
    dets = _swap_oracle(args.detectors, args.oracle)
    ths, _ = bench.calibrate_all(sc, args.pfa, args.trials, dets, threads=args.threads)
    rows = (
        [d.value, bench.fmt(sc.one_lag_corr), bench.fmt(sc.noise_power), bench.fmt(t.pfa_target),
         bench.fmt(t.value), bench.fmt(t.ci95[0]), bench.fmt(t.ci95[1])]
        for d, t in ths.items()
    )
    _emit(bench.write_csv(["detector", "rho", "sigma2", "pfa", "threshold", "pfa_lo", "pfa_hi"], rows), args.out)
    return 0


def _curves(args, sc: Scenario, assumed_hz: float | None) -> int:
    dets = _swap_oracle(args.detectors, args.oracle)
    ths, _ = bench.calibrate_all(sc, args.pfa, args.h0_trials, dets, threads=args.threads)
    grid = _snr_grid(args.snr)
    if assumed_hz is None:
        report = bench.detection_curves(sc, ths, grid, args.trials, threads=args.threads)
    else:
        report = bench.mismatch_experiment(sc, assumed_hz, ths, grid, args.trials, threads=args.threads)
    for d in ths:
        log.info("%s: SNR at Pd=0.5 is %.3f dB", d.value, report.snr_at(d))
    _emit(report.to_csv(), args.out)
    return 0


def cmd_roc(args) -> int:
    return _curves(args, _load_scenario(args), None)


def cmd_mismatch(args) -> int:
    sc = _load_scenario(args)
    if not args.config and args.true_doppler is None:
        sc = sc.replace(doppler_hz=12e3)
    if args.true_doppler is not None:
        sc = sc.replace(doppler_hz=args.true_doppler)
    return _curves(args, sc, args.assumed_doppler)


def cmd_cfar(args) -> int:
    sc = _load_scenario(args)
    det = _swap_oracle([args.detector], args.oracle)[0]
    scan = bench.cfar_scan(
        det, args.rho, args.sigma2, args.pfa, args.trials,
        scenario=sc, paired_seeds=args.paired, threads=args.threads,
    )
    for r in scan.rows:
        log.info("rho=%g sigma2=%g threshold=%.6f KS p=%.3g", r.rho, r.sigma2, r.threshold.value, r.ks_pvalue)
    log.info("thresholds overlap: %s; min KS p-value %.3g", scan.all_overlap(), scan.min_ks_pvalue())
    _emit(scan.to_csv(), args.out)
    return 0


def cmd_bench(args) -> int:
    sc = _load_scenario(args)
    dets = _swap_oracle(args.detectors, args.oracle)
    rows = bench.timing_bench(args.lengths, args.trials, dets, scenario=sc, seed=sc.seed)
    _emit(bench.timing_csv(rows), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON scenario file")
    common.add_argument("--seed", type=int, help="override the scenario seed")
    common.add_argument("--pfa", type=float, default=1e-2, help="target false-alarm rate (default 1e-2)")
    common.add_argument("--out", help="CSV output path (default stdout)")
    common.add_argument("--threads", type=int, default=1, help="worker processes")
    common.add_argument("--oracle", action="store_true", help="use the grid oracle in place of the SDP solver")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="rsdetect", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    all_dets = "OsGlrt,Mrs,Sdp"

    p = sub.add_parser("verify", parents=[common], help="deterministic invariant and oracle checks")
    p.add_argument("--trials", type=int, help="ignored; accepted for a uniform interface")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("calibrate", parents=[common], help="H0 thresholds at --pfa")
    p.add_argument("--trials", type=int, default=20_000)
    p.add_argument("--detectors", type=_detectors, default=_detectors(all_dets))
    p.set_defaults(func=cmd_calibrate)

    for name, func, helptext in (
        ("roc", cmd_roc, "Pd versus SNR"),
        ("mismatch", cmd_mismatch, "Pd versus SNR with the OS-GLRT steered to a wrong Doppler"),
    ):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--trials", type=int, default=10_000, help="H1 trials per SNR point")
        p.add_argument("--h0-trials", type=int, default=20_000, help="H0 trials for the thresholds")
        p.add_argument("--snr", default="-14:2:1", help="start:stop:step or comma list, dB; write negative values as --snr=-14:-4:1")
        p.add_argument("--detectors", type=_detectors, default=_detectors(all_dets))
        if name == "mismatch":
            p.add_argument("--assumed-doppler", type=float, default=10e3, help="Hz used by the OS-GLRT")
            p.add_argument("--true-doppler", type=float, help="Hz in the data (default 12 kHz)")
        p.set_defaults(func=func)

    p = sub.add_parser("cfar", parents=[common], help="thresholds across noise covariances")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--detector", type=_detector, default=DetectorId.MRS)
    p.add_argument("--rho", type=_floats, default=[0.0, 0.5, 0.9])
    p.add_argument("--sigma2", type=_floats, default=[1.0, 100.0])
    p.add_argument("--paired", action="store_true", help="reuse the same white draws for every covariance")
    p.set_defaults(func=cmd_cfar)

    p = sub.add_parser("bench", parents=[common], help="mean time per statistic")
    p.add_argument("--trials", type=int, default=1000, help="repetitions per detector and L")
    p.add_argument("--lengths", type=_ints, default=[8, 12, 16, 20])
    p.add_argument("--detectors", type=_detectors, default=_detectors(all_dets))
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"rsdetect: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
