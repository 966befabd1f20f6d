"""Readers and writers: XYZ/PLY clouds, pose logs, traverse scripts, CSV maps."""
import configparser
import csv
import json
import re
from pathlib import Path

import numpy as np

from .classify import CSV_COLUMNS
from .errors import InvalidArgumentError
from .preprocess import Attitude, PatchSpec, PointCloud
from .synth import Defect, Segment, SurfaceModel, TraverseScript

#: suffixes picked up from a traverse directory; CSV clouds must be named
#: explicitly since pose logs and sidecars share that suffix
CLOUD_SUFFIXES = (".xyz", ".txt", ".ply")
_TIME_RE = re.compile(r"^\s*(?:#|comment)\s*t\s*[=:]?\s*([-+0-9.eE]+)\s*$")


def read_xyz(path):
    """Whitespace- or comma-separated ``x y z [r g b]`` text, one point per line.

    Lines starting with ``#`` are comments; ``# t = <seconds>`` sets the
    cloud timestamp.
    """
    pts, rgb, stamp = [], [], None
    with open(path) as fh:
        for line in fh:
            m = _TIME_RE.match(line)
            if m:
                stamp = float(m.group(1))
                continue
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) not in (3, 6):
                raise ValueError(f"{path}: expected 3 or 6 columns, got {len(parts)}")
            vals = [float(p) for p in parts]
            pts.append(vals[:3])
            if len(vals) == 6:
                rgb.append(vals[3:])
    if rgb and len(rgb) != len(pts):
        raise ValueError(f"{path}: RGB columns on some lines only")
    return PointCloud(
        np.array(pts, dtype=np.float64).reshape(-1, 3),
        "vehicle",
        np.array(rgb) if rgb else None,
        stamp,
    )


def read_ply(path):
    """ASCII PLY with float ``x``, ``y``, ``z`` vertex properties."""
    with open(path) as fh:
        if fh.readline().strip() != "ply":
            raise ValueError(f"{path}: not a PLY file")
        props, count, fmt, stamp = [], None, None, None
        in_vertex = False
        for line in fh:
            words = line.split()
            if not words:
                continue
            m = _TIME_RE.match(line)
            if m:
                stamp = float(m.group(1))
            elif words[0] == "format":
                fmt = words[1]
            elif words[0] == "element":
                in_vertex = words[1] == "vertex"
                if in_vertex:
                    count = int(words[2])
            elif words[0] == "property" and in_vertex:
                props.append(words[-1])
            elif words[0] == "end_header":
                break
        if fmt != "ascii":
            raise ValueError(f"{path}: only ASCII PLY is supported (format {fmt})")
        if count is None or not {"x", "y", "z"} <= set(props):
            raise ValueError(f"{path}: vertex element lacks x, y, z")
        rows = []
        for _ in range(count):
            rows.append([float(v) for v in fh.readline().split()[: len(props)]])
    data = np.array(rows, dtype=np.float64).reshape(-1, len(props))
    idx = [props.index(c) for c in ("x", "y", "z")]
    rgb = None
    if {"red", "green", "blue"} <= set(props):
        rgb = data[:, [props.index(c) for c in ("red", "green", "blue")]]
    return PointCloud(data[:, idx], "vehicle", rgb, stamp)


def read_cloud(path):
    path = Path(path)
    if path.suffix.lower() == ".ply":
        return read_ply(path)
    return read_xyz(path)


def write_xyz(path, cloud):
    with open(path, "w") as fh:
        if cloud.timestamp is not None:
            fh.write(f"# t = {cloud.timestamp:.6f}\n")
        data = cloud.points if cloud.rgb is None else np.hstack([cloud.points, cloud.rgb])
        np.savetxt(fh, data, fmt="%.10f")


def write_ply(path, cloud):
    n = len(cloud)
    header = ["ply", "format ascii 1.0"]
    if cloud.timestamp is not None:
        header.append(f"comment t {cloud.timestamp:.6f}")
    header += [f"element vertex {n}", "property float x", "property float y", "property float z"]
    data = cloud.points
    fmt = ["%.10f"] * 3
    if cloud.rgb is not None:
        header += ["property uchar red", "property uchar green", "property uchar blue"]
        data = np.hstack([data, cloud.rgb])
        fmt += ["%d"] * 3
    header.append("end_header")
    with open(path, "w") as fh:
        fh.write("\n".join(header) + "\n")
        np.savetxt(fh, data, fmt=fmt)


def write_cloud(path, cloud):
    if Path(path).suffix.lower() == ".ply":
        write_ply(path, cloud)
    else:
        write_xyz(path, cloud)


def list_clouds(directory):
    """Cloud files of a directory in patch order (natural sort on names)."""
    directory = Path(directory)
    files = [p for p in directory.iterdir() if p.suffix.lower() in CLOUD_SUFFIXES and p.is_file()]

    def key(p):
        return [int(t) if t.isdigit() else t for t in re.split(r"(\d+)", p.name)]

    return sorted(files, key=key)


def read_pose_log(path):
    """CSV with columns ``t, roll_deg, pitch_deg``; returns an (N, 3) array."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh, skipinitialspace=True)
        cols = {c.strip() for c in reader.fieldnames or ()}
        if not {"t", "roll_deg", "pitch_deg"} <= cols:
            raise ValueError(f"{path}: pose log needs columns t, roll_deg, pitch_deg")
        rows = [
            (float(r["t"]), float(r["roll_deg"]), float(r["pitch_deg"]))
            for r in ({k.strip(): v for k, v in row.items()} for row in reader)
        ]
    return np.array(rows, dtype=np.float64).reshape(-1, 3)


def write_pose_log(path, times, attitudes):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "roll_deg", "pitch_deg"])
        for t, a in zip(times, attitudes):
            w.writerow([f"{t:.6f}", f"{np.degrees(a.roll):.9f}", f"{np.degrees(a.pitch):.9f}"])


def match_poses(poses, n_patches, times=None):
    """Attitude per patch: nearest timestamp when every patch has one,
    otherwise by index."""
    poses = np.asarray(poses, dtype=np.float64)
    if poses.shape[0] == 0:
        raise ValueError("pose log is empty")
    if times is not None and all(t is not None for t in times):
        idx = [int(np.argmin(np.abs(poses[:, 0] - t))) for t in times]
    else:
        if poses.shape[0] < n_patches:
            raise ValueError(f"pose log has {poses.shape[0]} rows for {n_patches} patches")
        idx = range(n_patches)
    return [Attitude.from_degrees(poses[i, 1], poses[i, 2]) for i in idx]


def read_profile(path, step=None):
    """Elevation profile text: one column ``z`` (needs ``step``) or ``x, z``.

    Returns ``(z, step)``.
    """
    data = np.loadtxt(path, delimiter=None, comments="#", ndmin=2, converters=None)
    if data.shape[1] == 1:
        if step is None:
            raise ValueError("single-column profile needs an explicit grid step")
        return data[:, 0], float(step)
    x, z = data[:, 0], data[:, 1]
    dx = np.diff(x)
    if not np.allclose(dx, dx[0], rtol=1e-6, atol=1e-12):
        raise ValueError(f"{path}: profile is not uniformly sampled")
    return z, float(step if step is not None else dx[0])


def load_traverse_script(path):
    """Parse an INI traverse script.

    ``[traverse]`` holds ``seed, noise, length, width, step, origin_x,
    origin_y, max_roll_deg, max_pitch_deg, period, margin_cells, density,
    spread`` (radians; default ``none``, independent rows) and
    ``jitter``; each
    ``[segment ...]`` section holds ``phi0, w, patches`` (sections keep file
    order); each ``[defect ...]`` section holds ``index, height, extent``.
    """
    ini = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    if not ini.read(path):
        raise OSError(f"cannot read traverse script {path}")
    t = ini["traverse"] if ini.has_section("traverse") else ini[ini.default_section]
    spec = PatchSpec(
        origin=(t.getfloat("origin_x", 1.0), t.getfloat("origin_y", -0.45)),
        length=t.getfloat("length", 0.9),
        width=t.getfloat("width", 0.9),
        step=t.getfloat("step", 0.008),
    )
    segments, defects = [], []
    for name in ini.sections():
        s = ini[name]
        if name.startswith("segment"):
            model = SurfaceModel(s.getfloat("phi0"), s.getfloat("w", -2.0), s.get("name", name))
            segments.append(Segment(model, s.getint("patches", 1)))
        elif name.startswith("defect"):
            defects.append(Defect(s.getint("index"), s.getfloat("height", 0.03), s.getfloat("extent", 0.4)))
    if not segments:
        raise InvalidArgumentError(f"{path}: no [segment] sections")
    raw = t.get("spread", "none").strip().lower()
    spread = None if raw in ("", "none") else float(raw)
    return TraverseScript(
        segments,
        spec,
        noise=t.getfloat("noise", 0.004),
        max_roll_deg=t.getfloat("max_roll_deg", 0.0),
        max_pitch_deg=t.getfloat("max_pitch_deg", 0.0),
        defects=defects,
        seed=t.getint("seed", 0),
        margin_cells=t.getint("margin_cells", 4),
        period=t.getfloat("period", 0.5),
        density=t.getint("density", 1),
        spread=spread,
        jitter=t.getfloat("jitter", 0.0),
    )


def write_truth(path, patches):
    """Ground-truth sidecar: one row per generated patch."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["patch_index", "segment", "name", "phi0", "w", "defect", "roll_deg", "pitch_deg"])
        for p in patches:
            w.writerow([
                p.index, p.segment, p.model.name, f"{p.model.phi0:.6e}", f"{p.model.w:.4f}",
                int(p.defect), f"{np.degrees(p.attitude.roll):.6f}", f"{np.degrees(p.attitude.pitch):.6f}",
            ])


def read_truth(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_map_csv(path_or_file, cells):
    """Roughness map CSV, one row per patch cell."""
    own = not hasattr(path_or_file, "write")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for c in cells:
            w.writerow(c.to_row())
    finally:
        if own:
            fh.close()


def read_map_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_geojson(path, cells, spec):
    """Labelled patch squares as a GeoJSON-like FeatureCollection."""
    hx = 0.5 * spec.n * spec.step
    hy = 0.5 * spec.m * spec.step
    feats = []
    for c in cells:
        ring = [
            [c.x - hx, c.y - hy], [c.x + hx, c.y - hy], [c.x + hx, c.y + hy],
            [c.x - hx, c.y + hy], [c.x - hx, c.y - hy],
        ]
        props = c.to_row()
        props["defect"] = bool(c.defect)
        props["iso_class"] = c.iso.describe()
        feats.append({"type": "Feature", "geometry": {"type": "Polygon", "coordinates": [ring]},
                      "properties": props})
    with open(path, "w") as fh:
        json.dump({"type": "FeatureCollection", "features": feats}, fh, indent=1)
