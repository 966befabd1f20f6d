"""Synthetic terrain with known roughness, used as the ground-truth oracle.

Profiles are sums of cosines on the exact wavenumber grid of the profile,
``a_k = sqrt(2 * phi(omega_k) * d_omega)`` with independent uniform phases, so
the periodogram of an undisturbed profile returns the target PSD bin by bin.
The Nyquist bin can only carry a real alternating sequence; it gets amplitude
``sqrt(phi * d_omega)`` and a random sign.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError
from .preprocess import Attitude, ElevationPatch, PatchSpec, PointCloud, tilt_matrix
from .spectrum import Waveband

#: stereo reconstruction accuracy used as the default sensor noise, metres
DEFAULT_NOISE = 0.004


@dataclass(frozen=True)
class SurfaceModel:
    phi0: float
    w: float = -2.0
    name: str = ""

    def __post_init__(self):
        if not self.phi0 >= 0:
            raise InvalidArgumentError("phi0 must be non-negative")

    def psd(self, omega):
        return self.phi0 * np.asarray(omega, dtype=np.float64) ** self.w


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def expected_variance(model, n, step):
    """Variance of a generated profile: the discrete sum of phi over the band."""
    band = Waveband(n, step)
    return float(np.sum(model.psd(band.omega)) * band.d_omega)


def _amplitudes(model, band):
    amp = np.sqrt(2.0 * model.psd(band.omega) * band.d_omega)
    amp[-1] = np.sqrt(model.psd(band.omega[-1]) * band.d_omega)
    return amp


@dataclass(frozen=True)
class PlaneWaveSurface:
    """``z(x, y) = sum_k a_k cos(omega_k x + kappa_k y + p_k)``.

    Any cut at constant ``y`` sampled at ``x = i * step`` carries exactly the
    target amplitude in bin ``k``, while the surface stays continuous in
    both coordinates. The Nyquist wave runs straight along ``x`` with phase
    0 or pi so that it survives sampling intact.
    """

    omega: np.ndarray
    kappa: np.ndarray
    amp: np.ndarray
    phase: np.ndarray

    @classmethod
    def random(cls, model, n, step, seed=None, spread=0.5):
        if not 0 <= spread < np.pi / 2:
            raise InvalidArgumentError("heading spread must lie in [0, pi/2)")
        band = Waveband(n, step)
        rng = _rng(seed)
        phase = rng.uniform(0.0, 2 * np.pi, size=band.l)
        heading = rng.uniform(-spread, spread, size=band.l)
        phase[-1] = np.pi * (phase[-1] > np.pi)
        heading[-1] = 0.0
        return cls(band.omega, band.omega * np.tan(heading), _amplitudes(model, band), phase)

    def __call__(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64))
        flat_x, flat_y = x.ravel(), y.ravel()
        z = np.empty(flat_x.size)
        # chunks bound the (points x bins) temporary
        for s in range(0, flat_x.size, 8192):
            arg = np.outer(flat_x[s:s + 8192], self.omega) + np.outer(flat_y[s:s + 8192], self.kappa)
            z[s:s + 8192] = np.cos(arg + self.phase) @ self.amp
        return z.reshape(x.shape)


def generate_profiles(model, n, step, count, seed=None, x=None, y=None, spread=None):
    """``count`` profiles of ``n`` samples, shape (count, n).

    ``x`` overrides the sample positions (default ``i * step``); the profiles
    are periodic in the patch length, so positions outside it are valid.
    Profiles are independent unless ``spread`` (radians) is given: then they
    are cuts at lateral positions ``y`` (default ``j * step``) through one
    :class:`PlaneWaveSurface` with headings uniform in ``[-spread, spread]``.
    """
    if x is None:
        x = np.arange(n) * step
    if spread is not None:
        y = np.arange(count) * step if y is None else np.asarray(y, dtype=np.float64)
        if y.shape != (count,):
            raise InvalidArgumentError("y needs one lateral position per profile")
        surface = PlaneWaveSurface.random(model, n, step, seed, spread)
        return surface(np.asarray(x)[None, :], y[:, None])
    band = Waveband(n, step)
    rng = _rng(seed)
    omega = band.omega
    amp = _amplitudes(model, band)
    phase = rng.uniform(0.0, 2 * np.pi, size=(count, band.l))
    phase[:, -1] = np.pi * rng.integers(0, 2, size=count)
    arg = np.outer(omega, x)
    # sum_k a_k cos(w_k x + p_k) = (a cos p) @ cos(w x) - (a sin p) @ sin(w x)
    return (amp * np.cos(phase)) @ np.cos(arg) - (amp * np.sin(phase)) @ np.sin(arg)


def generate_profile(model, n, step, seed=None):
    return generate_profiles(model, n, step, 1, seed)[0]


def generate_patch(model, spec, seed=None, spread=None, index=0):
    """Fully valid m x n elevation patch.

    Rows are independent by default; ``spread`` switches on the laterally
    continuous plane-wave surface of :func:`generate_profiles`.
    """
    rows = generate_profiles(model, spec.n, spec.step, spec.m, seed, spread=spread)
    return ElevationPatch(rows, spec.step, np.ones(rows.shape, dtype=bool), index, tuple(spec.origin))


@dataclass(frozen=True)
class Segment:
    model: SurfaceModel
    patches: int

    def __post_init__(self):
        if self.patches < 1:
            raise InvalidArgumentError("segment length must be at least one patch")


@dataclass(frozen=True)
class Defect:
    """Raised square plate (e.g. a manhole cover) centred in a patch."""

    index: int
    height: float = 0.03
    extent: float = 0.4


@dataclass
class TraverseScript:
    segments: list
    spec: PatchSpec = field(default_factory=PatchSpec)
    noise: float = DEFAULT_NOISE
    attitudes: list | None = None
    max_roll_deg: float = 0.0
    max_pitch_deg: float = 0.0
    defects: list = field(default_factory=list)
    seed: int = 0
    margin_cells: int = 4
    period: float = 0.5
    #: points per grid cell along each axis (sub-lattice density)
    density: int = 1
    #: plane-wave heading spread in radians; None gives independent rows
    spread: float | None = None
    #: random offset of each point within its lattice site, as a fraction of
    #: the site size (only with ``spread``)
    jitter: float = 0.0

    def __post_init__(self):
        if not self.segments:
            raise InvalidArgumentError("a traverse needs at least one segment")
        if self.noise < 0:
            raise InvalidArgumentError("noise must be non-negative")
        if self.density < 1:
            raise InvalidArgumentError("density must be a positive integer")
        if not 0 <= self.jitter <= 1:
            raise InvalidArgumentError("jitter must lie in [0, 1]")
        if self.jitter and self.spread is None:
            raise InvalidArgumentError("jittered points need the continuous surface (spread)")
        if self.attitudes is not None and len(self.attitudes) != self.n_patches:
            raise InvalidArgumentError("attitude schedule must have one entry per patch")
        for d in self.defects:
            if not 0 <= d.index < self.n_patches:
                raise InvalidArgumentError(f"defect index {d.index} outside the traverse")

    @property
    def n_patches(self):
        return sum(s.patches for s in self.segments)

    def segment_of(self):
        return [i for i, s in enumerate(self.segments) for _ in range(s.patches)]


@dataclass
class SynthPatch:
    index: int
    cloud: PointCloud
    attitude: Attitude
    segment: int
    model: SurfaceModel
    defect: bool
    world: np.ndarray = field(repr=False, default=None)
    #: noise-free world elevation averaged per patch grid cell, shape (m, n)
    grid: np.ndarray = field(repr=False, default=None)

    def __iter__(self):
        yield self.cloud
        yield self.attitude


def _defect_bump(xx, yy, spec, defect):
    cx, cy = spec.center
    half = 0.5 * defect.extent
    inside = (np.abs(xx - cx) <= half) & (np.abs(yy - cy) <= half)
    return np.where(inside, defect.height, 0.0)


def _attitudes(script, rng):
    if script.attitudes is not None:
        return [a if isinstance(a, Attitude) else Attitude(*a) for a in script.attitudes]
    rolls = rng.uniform(-script.max_roll_deg, script.max_roll_deg, script.n_patches)
    pitches = rng.uniform(-script.max_pitch_deg, script.max_pitch_deg, script.n_patches)
    return [Attitude.from_degrees(r, p) for r, p in zip(rolls, pitches)]


def generate_traverse(script):
    """Vehicle-frame clouds plus attitudes, one per patch of the script.

    Each patch is an independent terrain sample, evaluated on a lattice of
    ``density**2`` points per grid cell over the patch plus a margin,
    rotated into the vehicle frame with the inverse tilt matrix and
    perturbed with Gaussian z noise. Without ``spread`` the sub-rows of a
    grid row share its profile; with it the points sample a continuous
    :class:`PlaneWaveSurface`, optionally jittered off the lattice.
    """
    spec = script.spec
    root = np.random.SeedSequence(script.seed)
    att_seed, *patch_seeds = root.spawn(script.n_patches + 1)
    attitudes = _attitudes(script, np.random.default_rng(att_seed))
    defects = {d.index: d for d in script.defects}
    seg_of = script.segment_of()

    g = script.margin_cells
    d = script.density
    x0, y0 = spec.origin
    B = spec.step
    sub = (np.arange(d) + 0.5) / d
    xs = x0 + (np.arange(-g, spec.n + g)[:, None] + sub[None, :]).ravel() * B
    ys = y0 + (np.arange(-g, spec.m + g)[:, None] + sub[None, :]).ravel() * B
    lattice_x, lattice_y = np.meshgrid(xs, ys)

    out = []
    for i in range(script.n_patches):
        rng = np.random.default_rng(patch_seeds[i])
        model = script.segments[seg_of[i]].model
        xx, yy = lattice_x, lattice_y
        if script.spread is None:
            rows = generate_profiles(model, spec.n, B, spec.m + 2 * g, rng, x=xs - x0)
            zz = np.repeat(rows, d, axis=0)
        else:
            surface = PlaneWaveSurface.random(model, spec.n, B, rng, script.spread)
            if script.jitter:
                half = 0.5 * script.jitter * B / d
                xx = xx + rng.uniform(-half, half, xx.shape)
                yy = yy + rng.uniform(-half, half, yy.shape)
            zz = surface(xx - x0, yy - y0)
        if i in defects:
            zz = zz + _defect_bump(xx, yy, spec, defects[i])
        world = np.column_stack([xx.ravel(), yy.ravel(), zz.ravel()])
        att = attitudes[i]
        pts = world @ tilt_matrix(att)  # row-vector form of R^T p
        if script.noise > 0:
            pts[:, 2] += rng.normal(0.0, script.noise, pts.shape[0])
        cloud = PointCloud(pts, "vehicle", timestamp=i * script.period)
        grid = _cell_means(world, spec)
        out.append(SynthPatch(i, cloud, att, seg_of[i], model, i in defects, world, grid))
    return out


def _cell_means(world, spec):
    x0, y0 = spec.origin
    col = np.floor((world[:, 0] - x0) / spec.step).astype(np.int64)
    row = np.floor((world[:, 1] - y0) / spec.step).astype(np.int64)
    inside = (col >= 0) & (col < spec.n) & (row >= 0) & (row < spec.m)
    flat = row[inside] * spec.n + col[inside]
    size = spec.m * spec.n
    sums = np.bincount(flat, world[inside, 2], minlength=size)
    counts = np.bincount(flat, minlength=size)
    with np.errstate(invalid="ignore", divide="ignore"):
        return (sums / counts).reshape(spec.m, spec.n)
