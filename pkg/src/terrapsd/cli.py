"""Command-line front end: ``terrapsd {process,synth,table,psd-dump}``."""
import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import classify, io, pipeline, preprocess, roughness, spectrum, synth
from .errors import TerrainError

log = logging.getLogger("terrapsd")


def _collect_clouds(inputs):
    files = []
    for item in inputs:
        p = Path(item)
        if p.is_dir():
            found = io.list_clouds(p)
            if not found:
                raise FileNotFoundError(f"no point-cloud files in directory {p}")
            files.extend(found)
        elif p.is_file():
            files.append(p)
        else:
            raise FileNotFoundError(f"no such file or directory: {p}")
    if not files:
        raise FileNotFoundError("no point-cloud inputs given")
    return files


def _fmt_sci(v):
    return f"{v * 1e6:.1f}e-6"


def summarize(results, groups=None):
    """Per-group statistics of successful patches as text lines.

    ``groups`` maps patch index to a group label (default: one group).
    Reports the patch-to-patch spread and the mean within-patch sigma.
    """
    by_group = {}
    for r in results:
        if r.ok:
            key = "all" if groups is None else groups.get(r.index, "?")
            by_group.setdefault(key, []).append(r.cell)
    lines = [f"patches: {len(results)} total, {sum(r.ok for r in results)} analysed"]
    for key in sorted(by_group, key=str):
        cells = by_group[key]
        R = np.array([c.roughness.R_hat for c in cells])
        w = np.array([c.roughness.w_hat for c in cells])
        sR = np.mean([c.roughness.sigma_R for c in cells])
        sw = np.mean([c.roughness.sigma_w for c in cells])
        ddof = 1 if len(cells) > 1 else 0
        iso = classify.iso_classify(float(R.mean())).describe()
        lines.append(
            f"segment {key}: n={len(cells)} "
            f"R_mean={_fmt_sci(R.mean())} m^3/rad (std {_fmt_sci(R.std(ddof=ddof))}, "
            f"mean sigma_R {_fmt_sci(sR)}) "
            f"w_mean={w.mean():.2f} (std {w.std(ddof=ddof):.2f}, mean sigma_w {sw:.2f}) "
            f"iso={iso}"
        )
    return lines


def _write_debug(directory, results):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "scatter.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["patch_index", "kind", "w", "lnR"])
        for r in results:
            if r.ok:
                for kind, wi, bi in r.cell.roughness.scatter_rows():
                    w.writerow([r.index, kind, f"{wi:.6f}", f"{bi:.6f}"])
    for r in results:
        if not r.ok:
            continue
        band = r.cell.roughness.band
        with open(directory / f"psd_{r.index:04d}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["omega", "phi"])
            for om, ph in zip(band.omega, r.mean_phi):
                w.writerow([f"{om:.6f}", f"{ph:.6e}"])


def cmd_process(args):
    config = pipeline.load_config(args.config)
    files = _collect_clouds(args.inputs)
    clouds = [io.read_cloud(f) for f in files]
    if args.poses:
        poses = io.read_pose_log(args.poses)
        attitudes = io.match_poses(poses, len(clouds), [c.timestamp for c in clouds])
    else:
        log.warning("no pose log given: tilt compensation skipped (uncompensated mode)")
        attitudes = None
    results = pipeline.process_sequence(clouds, attitudes, config, jobs=args.jobs)
    cells = [r.cell for r in results if r.ok]

    if args.out:
        io.write_map_csv(args.out, cells)
        report = sys.stdout
    else:
        io.write_map_csv(sys.stdout, cells)
        report = sys.stderr
    if args.geojson:
        io.write_geojson(args.geojson, cells, config.spec)
    if args.debug_dir:
        _write_debug(args.debug_dir, results)

    groups = None
    if args.truth:
        groups = {int(row["patch_index"]): row["segment"] for row in io.read_truth(args.truth)}
    for line in summarize(results, groups):
        print(line, file=report)
    for r in results:
        if not r.ok:
            print(f"patch {r.index} ({files[r.index].name}) dropped: {r.reason}", file=report)
    if not cells:
        log.error("no patch could be analysed")
        return 1
    return 0


def cmd_synth(args):
    script = io.load_traverse_script(args.script)
    if args.seed is not None:
        script.seed = args.seed
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    patches = synth.generate_traverse(script)
    width = max(4, len(str(len(patches) - 1)))
    ext = "." + args.format
    for p in patches:
        io.write_cloud(out / f"patch_{p.index:0{width}d}{ext}", p.cloud)
    io.write_pose_log(out / "poses.csv", [p.cloud.timestamp for p in patches], [p.attitude for p in patches])
    io.write_truth(out / "truth.csv", patches)
    with open(out / "segments.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["segment", "name", "phi0", "w", "first_patch", "patches"])
        first = 0
        for i, seg in enumerate(script.segments):
            w.writerow([i, seg.model.name, f"{seg.model.phi0:.6e}", f"{seg.model.w:.4f}", first, seg.patches])
            first += seg.patches
    nseg = len(script.segments)
    print(f"wrote {len(patches)} patches in {nseg} segment{'s' if nseg != 1 else ''} to {out}")
    return 0


def cmd_table(args):
    lo, hi = classify.waveband_limits(args.length, args.step)
    print(f"waveband: omega_1 = {lo:.4f} rad/m, omega_L = {hi:.4f} rad/m")
    print(f"{'class':<6}{'phi0 [1e-6 m^3/rad]':>22}{'rms [mm]':>12}")
    for letter, phi0, rms in classify.iso_table(args.length, args.step):
        print(f"{letter:<6}{phi0 * 1e6:>22.0f}{rms * 1e3:>12.3f}")
    return 0


def cmd_psd_dump(args):
    z, step = io.read_profile(args.profile, args.step)
    if z.size % 2:
        z = z[:-1]
    profile = preprocess.detrend(z, step)
    config = spectrum.WelchConfig(args.segments, args.overlap, args.window)
    est = spectrum.welch_psd(profile, step, config)
    fit = roughness.fit_power_law(est)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["omega", "phi", "phi_fit"])
        for om, ph in zip(est.omega, est.phi):
            w.writerow([f"{om:.6f}", f"{ph:.9e}", f"{fit.R * om ** fit.w:.9e}"])
    finally:
        if args.out:
            out.close()
    report = sys.stdout if args.out else sys.stderr
    print(
        f"R = {fit.R:.6e} m^3/rad, w = {fit.w:.5f}, ln R = {fit.b:.6f}, "
        f"residual_rms = {fit.residual_rms:.3e}, bins = {fit.bins_used}",
        file=report,
    )
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="terrapsd", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("process", help="point-cloud patches to a roughness map CSV")
    p.add_argument("inputs", nargs="+", help="cloud files (.xyz/.txt/.csv/.ply) or a directory of .xyz/.txt/.ply files")
    p.add_argument("--poses", help="pose log CSV (t, roll_deg, pitch_deg); omit for uncompensated mode")
    p.add_argument("--config", help="INI file overriding pipeline defaults")
    p.add_argument("-o", "--out", help="map CSV path (default: stdout)")
    p.add_argument("--geojson", help="also write labelled patch polygons as GeoJSON")
    p.add_argument("--debug-dir", help="write per-patch PSD and (w, ln R) scatter CSVs here")
    p.add_argument("--truth", help="truth.csv from `synth`, to group the summary by segment")
    p.add_argument("-j", "--jobs", type=int, default=1, help="worker processes")
    p.set_defaults(func=cmd_process)

    p = sub.add_parser("synth", help="generate a synthetic traverse from a script")
    p.add_argument("script", help="INI traverse script")
    p.add_argument("out", help="output directory")
    p.add_argument("--seed", type=int, help="override the script seed")
    p.add_argument("--format", choices=("xyz", "ply"), default="xyz")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("table", help="ISO 8608 classes with band-limited rms")
    p.add_argument("--length", "-L", type=float, default=0.9, help="patch length, m")
    p.add_argument("--step", "-B", type=float, default=0.008, help="grid step, m")
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("psd-dump", help="PSD and power-law fit of one profile")
    p.add_argument("profile", help="text profile: one z column or x, z columns")
    p.add_argument("--step", type=float, help="sample spacing, m (required for one-column files)")
    p.add_argument("--segments", type=int, default=1)
    p.add_argument("--overlap", type=float, default=0.5)
    p.add_argument("--window", choices=("rectangular", "hann"), default="rectangular")
    p.add_argument("-o", "--out", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_psd_dump)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        # TerrainError subclasses ValueError
        kind = exc.code if isinstance(exc, TerrainError) else type(exc).__name__
        print(f"terrapsd {args.command}: error [{kind}]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
