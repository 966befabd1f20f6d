"""Point clouds to detrended, uniformly sampled elevation profiles.

Coordinates are metres. The longitudinal (travel) axis is ``x``; a patch grid
has one row per lateral position ``y`` and one column per ``x`` step, so every
row is a longitudinal elevation profile.
"""
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import (
    ContractViolationError,
    DegeneratePatchError,
    InsufficientDataError,
    InvalidArgumentError,
)

FRAMES = ("vehicle", "world")

#: interior gaps up to this many cells are bridged by linear interpolation
MAX_FILL_GAP = 3
#: rows with a larger invalid fraction are dropped before spectral analysis
MAX_ROW_INVALID = 0.20
#: a rasterized patch with a larger invalid fraction is rejected outright
MAX_PATCH_INVALID = 0.50


@dataclass
class PointCloud:
    points: np.ndarray
    frame: str = "vehicle"
    rgb: np.ndarray | None = None
    timestamp: float | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.size == 0:
            pts = pts.reshape(0, 3)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise InvalidArgumentError(f"points must have shape (N, 3), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise InvalidArgumentError("point coordinates must be finite")
        if self.frame not in FRAMES:
            raise InvalidArgumentError(f"unknown frame {self.frame!r}")
        if self.rgb is not None:
            rgb = np.asarray(self.rgb)
            if rgb.shape != pts.shape:
                raise InvalidArgumentError("rgb must have one row per point")
            self.rgb = rgb
        self.points = pts

    def __len__(self):
        return self.points.shape[0]

    @property
    def x(self):
        return self.points[:, 0]

    @property
    def y(self):
        return self.points[:, 1]

    @property
    def z(self):
        return self.points[:, 2]

    def subset(self, keep):
        rgb = None if self.rgb is None else self.rgb[keep]
        return PointCloud(self.points[keep], self.frame, rgb, self.timestamp)

    def as_world(self):
        """Relabel as world frame without rotating (the uncompensated mode)."""
        return PointCloud(self.points, "world", self.rgb, self.timestamp)


@dataclass(frozen=True)
class Attitude:
    """Vehicle roll and pitch in radians."""

    roll: float = 0.0
    pitch: float = 0.0

    def __post_init__(self):
        for name in ("roll", "pitch"):
            v = getattr(self, name)
            if not np.isfinite(v):
                raise InvalidArgumentError(f"{name} must be finite, got {v}")
            if abs(v) >= np.pi / 2:
                raise InvalidArgumentError(f"|{name}| must be below pi/2, got {v}")

    @classmethod
    def from_degrees(cls, roll_deg, pitch_deg):
        return cls(np.radians(roll_deg), np.radians(pitch_deg))


@dataclass(frozen=True)
class PatchSpec:
    """Axis-aligned region of interest; ``origin`` is its minimum-(x, y) corner."""

    origin: tuple = (1.0, -0.45)
    length: float = 0.9
    width: float = 0.9
    step: float = 0.008

    def __post_init__(self):
        if not self.step > 0:
            raise InvalidArgumentError("grid step must be positive")
        if not self.length > 2 * self.step:
            raise InvalidArgumentError("patch length must exceed two grid steps")
        if not self.width >= self.step:
            raise InvalidArgumentError("patch width must be at least one grid step")
        if self.n < 8:
            raise InvalidArgumentError(f"profiles need at least 8 samples, got {self.n}")

    @property
    def n(self):
        """Samples per profile, truncated to an even count."""
        n = int(round(self.length / self.step))
        return n - (n % 2)

    @property
    def m(self):
        """Number of longitudinal profiles."""
        return max(1, int(round(self.width / self.step)))

    @property
    def extent(self):
        """(x_min, x_max, y_min, y_max) actually covered by the grid."""
        x0, y0 = self.origin
        return x0, x0 + self.n * self.step, y0, y0 + self.m * self.step

    @property
    def center(self):
        x0, x1, y0, y1 = self.extent
        return 0.5 * (x0 + x1), 0.5 * (y0 + y1)

    def shifted(self, origin):
        return PatchSpec(tuple(origin), self.length, self.width, self.step)


@dataclass
class ElevationPatch:
    grid: np.ndarray
    step: float
    valid: np.ndarray
    index: int = 0
    origin: tuple = (0.0, 0.0)
    counts: np.ndarray | None = field(default=None, repr=False)

    @property
    def shape(self):
        return self.grid.shape

    @property
    def invalid_fraction(self):
        return 1.0 - self.valid.mean()


def tilt_matrix(att):
    """Vehicle-to-world rotation compensating roll and pitch (yaw untouched)."""
    ct, st = np.cos(att.roll), np.sin(att.roll)
    cp, sp = np.cos(att.pitch), np.sin(att.pitch)
    return np.array(
        [
            [cp, sp * st, sp * ct],
            [0.0, ct, -st],
            [-sp, cp * st, cp * ct],
        ]
    )


def compensate_tilt(cloud, att):
    """Rotate a vehicle-frame cloud into the world frame."""
    if cloud.frame != "vehicle":
        raise ContractViolationError("tilt compensation expects a vehicle-frame cloud")
    if not isinstance(att, Attitude):
        att = Attitude(*att)
    rot = tilt_matrix(att)
    return PointCloud(cloud.points @ rot.T, "world", cloud.rgb, cloud.timestamp)


def extract_patch(cloud, spec):
    """Points whose (x, y) fall inside the patch rectangle (half-open)."""
    if cloud.frame != "world":
        raise ContractViolationError(
            "patch extraction needs a world-frame cloud; compensate tilt or call as_world()"
        )
    x0, x1, y0, y1 = spec.extent
    x, y = cloud.x, cloud.y
    inside = (x >= x0) & (x < x1) & (y >= y0) & (y < y1)
    return cloud.subset(inside)


def remove_plane(cloud):
    """Subtract the least-squares plane ``z = a + b x + c y`` from a cloud.

    A first-order surface trend (such as residual vehicle tilt) is otherwise
    turned into step artefacts when points are binned onto the grid.
    """
    if len(cloud) < 3:
        raise InsufficientDataError("plane removal needs at least 3 points")
    x = cloud.x - cloud.x.mean()
    y = cloud.y - cloud.y.mean()
    design = np.column_stack([np.ones_like(x), x, y])
    coef, *_ = np.linalg.lstsq(design, cloud.z, rcond=None)
    pts = cloud.points.copy()
    pts[:, 2] -= design @ coef
    return PointCloud(pts, cloud.frame, cloud.rgb, cloud.timestamp)


def outlier_mask(cloud, window=0.05, k_sigma=3.0, max_fraction=0.10, min_neighbors=3):
    """Boolean mask of points to keep after the moving-window z test."""
    npts = len(cloud)
    if npts < 10:
        raise InsufficientDataError(f"outlier filter needs at least 10 points, got {npts}")
    z = cloud.z - cloud.z.mean()
    count, mean, std = kernels.window_moments(cloud.x, cloud.y, z, 0.5 * window)
    # window moments carry rounding error of order eps * |z|
    tol = 1e-9 * max(np.abs(z).max(), np.finfo(float).tiny)
    dev = np.abs(z - mean)
    dev[dev <= tol] = 0.0
    judged = count >= min_neighbors
    with np.errstate(divide="ignore", invalid="ignore"):
        score = np.where(std > tol, dev / std, np.where(dev > 0, np.inf, 0.0))
    flagged = judged & (score > k_sigma)
    budget = int(np.floor(max_fraction * npts))
    if flagged.sum() > budget:
        worst = np.argsort(-np.where(flagged, score, -1.0), kind="stable")[:budget]
        flagged = np.zeros(npts, dtype=bool)
        flagged[worst] = True
    return ~flagged


def filter_outliers(cloud, window=0.05, k_sigma=3.0, max_fraction=0.10):
    """Drop points whose z strays more than ``k_sigma`` local stds from the
    leave-one-out mean of a ``window``-wide square neighbourhood.

    At most ``max_fraction`` of the input is removed; when more points fail
    the test only the most extreme ones go.
    """
    return cloud.subset(outlier_mask(cloud, window, k_sigma, max_fraction))


def rasterize(cloud, spec, index=0):
    """Bin points into the patch grid (cell mean), bridging short gaps."""
    if len(cloud) == 0:
        raise InsufficientDataError("cannot rasterize an empty point set")
    x0, y0 = spec.origin
    B = spec.step
    col = np.floor((cloud.x - x0) / B).astype(np.int64)
    row = np.floor((cloud.y - y0) / B).astype(np.int64)
    inside = (col >= 0) & (col < spec.n) & (row >= 0) & (row < spec.m)
    row, col, z = row[inside], col[inside], cloud.z[inside]
    # fixed accumulation order keeps cell means independent of input order
    order = np.lexsort((z, col, row))
    sums, counts = kernels.bin_accumulate(row[order], col[order], z[order], spec.m, spec.n)
    filled = counts > 0
    grid = np.zeros((spec.m, spec.n))
    grid[filled] = sums[filled] / counts[filled]
    grid, valid = kernels.fill_gaps(grid, filled, MAX_FILL_GAP)
    grid[~valid] = np.nan
    patch = ElevationPatch(grid, B, valid, index, tuple(spec.origin), counts)
    if patch.invalid_fraction > MAX_PATCH_INVALID:
        raise DegeneratePatchError(
            f"{patch.invalid_fraction:.0%} of patch cells are empty (limit {MAX_PATCH_INVALID:.0%})"
        )
    return patch


def detrend_rows(rows, step):
    """Remove the least-squares line from every row of a 2-D array."""
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    n = rows.shape[1]
    if n < 8:
        raise InsufficientDataError(f"detrending needs at least 8 samples, got {n}")
    if not np.all(np.isfinite(rows)):
        raise InsufficientDataError("profile contains invalid samples")
    xc = (np.arange(n) - 0.5 * (n - 1)) * step
    mean = rows.mean(axis=1, keepdims=True)
    slope = (rows - mean) @ xc / (xc @ xc)
    return rows - mean - slope[:, None] * xc[None, :]


def detrend(profile, step):
    """Subtract the ordinary-least-squares line fitted against x = i * step."""
    profile = np.asarray(profile, dtype=np.float64)
    if profile.ndim != 1:
        raise InvalidArgumentError("detrend expects a 1-D profile")
    return detrend_rows(profile[None, :], step)[0]


def prepare_profiles(patch, max_invalid=MAX_ROW_INVALID):
    """Select analysable rows of a patch and return them detrended.

    Returns ``(profiles, kept_rows, dropped)`` where ``dropped`` is a list of
    ``(row, reason)`` pairs. Rows that survive with a few invalid cells (runs
    too long or at an end) are completed by linear interpolation with the end
    values held, so every profile is uniformly sampled.
    """
    frac_bad = 1.0 - patch.valid.mean(axis=1)
    kept, dropped, rows = [], [], []
    xi = np.arange(patch.grid.shape[1])
    for r, bad in enumerate(frac_bad):
        if bad > max_invalid:
            dropped.append((r, f"row-invalid-{bad:.0%}"))
            continue
        z = patch.grid[r]
        ok = patch.valid[r]
        if not ok.all():
            z = np.interp(xi, xi[ok], z[ok])
        kept.append(r)
        rows.append(z)
    if not rows:
        return np.empty((0, patch.grid.shape[1])), kept, dropped
    return detrend_rows(np.array(rows), patch.step), kept, dropped
