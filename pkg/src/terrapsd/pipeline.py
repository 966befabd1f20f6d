"""End-to-end processing of patch clouds into roughness map cells."""
import configparser
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import classify, preprocess, roughness, spectrum
from .errors import InsufficientDataError, InvalidArgumentError, TerrainError

log = logging.getLogger("terrapsd")

#: three half-overlapping Hann segments; the plain periodogram is biased by
#: detrending leakage on steep spectra
PIPELINE_WELCH = spectrum.WelchConfig(segments=3, overlap=0.5, window="hann")


@dataclass(frozen=True)
class FilterConfig:
    enabled: bool = True
    window: float = 0.05
    k_sigma: float = 3.0
    max_fraction: float = 0.10

    def __post_init__(self):
        if not self.window > 0 or not self.k_sigma > 0 or not 0 <= self.max_fraction <= 1:
            raise InvalidArgumentError("invalid outlier filter parameters")


@dataclass(frozen=True)
class PipelineConfig:
    spec: preprocess.PatchSpec = field(default_factory=preprocess.PatchSpec)
    welch: spectrum.WelchConfig = PIPELINE_WELCH
    filter: FilterConfig = field(default_factory=FilterConfig)
    thresholds: tuple = classify.DEFAULT_THRESHOLDS
    defect_window: int = 7
    defect_factor: float = 4.0
    max_row_invalid: float = preprocess.MAX_ROW_INVALID
    #: subtract the patch's best-fit plane before gridding
    remove_plane: bool = True
    #: forward travel between consecutive patches; default 70% patch overlap
    advance: float | None = None

    def __post_init__(self):
        lo, hi = self.thresholds
        if not 0 < lo <= hi:
            raise InvalidArgumentError("label thresholds must satisfy 0 < low <= high")
        if self.defect_window < 1 or not self.defect_factor > 0:
            raise InvalidArgumentError("invalid defect detector parameters")
        if not 0 <= self.max_row_invalid < 1:
            raise InvalidArgumentError("max_row_invalid must lie in [0, 1)")
        if self.welch.segment_length(self.spec.n) < 8:
            raise InvalidArgumentError("Welch segments shorter than 8 samples")
        if self.advance is not None and self.advance < 0:
            raise InvalidArgumentError("advance must be non-negative")

    def patch_center(self, index):
        """Map position of patch ``index`` assuming straight travel along x."""
        step = 0.3 * self.spec.length if self.advance is None else self.advance
        cx, cy = self.spec.center
        return cx + index * step, cy


def load_config(path=None, **overrides):
    """Defaults, then an INI file, then keyword overrides.

    Sections and keys::

        [patch]   length width step origin_x origin_y
        [welch]   segments overlap window
        [filter]  enabled window k_sigma max_fraction
        [labels]  low high
        [defects] window factor
        [rows]    max_invalid remove_plane
        [map]     advance
    """
    cfg = PipelineConfig()
    if path is not None:
        ini = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        if not ini.read(path):
            raise OSError(f"cannot read config file {path}")
        cfg = _apply_ini(cfg, ini)
    if overrides:
        cfg = replace(cfg, **overrides)
    return cfg


def _apply_ini(cfg, ini):
    spec = cfg.spec
    if ini.has_section("patch"):
        s = ini["patch"]
        spec = preprocess.PatchSpec(
            origin=(s.getfloat("origin_x", spec.origin[0]), s.getfloat("origin_y", spec.origin[1])),
            length=s.getfloat("length", spec.length),
            width=s.getfloat("width", spec.width),
            step=s.getfloat("step", spec.step),
        )
    welch = cfg.welch
    if ini.has_section("welch"):
        s = ini["welch"]
        welch = spectrum.WelchConfig(
            s.getint("segments", welch.segments),
            s.getfloat("overlap", welch.overlap),
            s.get("window", welch.window),
        )
    flt = cfg.filter
    if ini.has_section("filter"):
        s = ini["filter"]
        flt = FilterConfig(
            s.getboolean("enabled", flt.enabled),
            s.getfloat("window", flt.window),
            s.getfloat("k_sigma", flt.k_sigma),
            s.getfloat("max_fraction", flt.max_fraction),
        )
    thresholds = cfg.thresholds
    if ini.has_section("labels"):
        s = ini["labels"]
        thresholds = (s.getfloat("low", thresholds[0]), s.getfloat("high", thresholds[1]))
    window, factor = cfg.defect_window, cfg.defect_factor
    if ini.has_section("defects"):
        window = ini["defects"].getint("window", window)
        factor = ini["defects"].getfloat("factor", factor)
    max_bad, plane = cfg.max_row_invalid, cfg.remove_plane
    if ini.has_section("rows"):
        max_bad = ini["rows"].getfloat("max_invalid", max_bad)
        plane = ini["rows"].getboolean("remove_plane", plane)
    advance = cfg.advance
    if ini.has_section("map") and "advance" in ini["map"]:
        advance = ini["map"].getfloat("advance")
    return PipelineConfig(spec, welch, flt, thresholds, window, factor, max_bad, plane, advance)


@dataclass
class PatchResult:
    index: int
    cell: classify.RoughnessMapCell | None = None
    reason: str = ""
    dropped: list = field(default_factory=list)
    mean_phi: np.ndarray | None = field(default=None, repr=False)

    @property
    def ok(self):
        return self.cell is not None


def analyse_patch(patch, config=None):
    """Roughness of a rasterized patch.

    Returns ``(PatchRoughness, dropped, mean_phi)`` where ``dropped`` lists
    ``(row, reason)`` for every profile left out.
    """
    config = config or PipelineConfig()
    profiles, kept, dropped = preprocess.prepare_profiles(patch, config.max_row_invalid)
    if profiles.shape[0] == 0:
        raise InsufficientDataError("no analysable profiles in patch")
    band = spectrum.Waveband(profiles.shape[1], patch.step)
    phi = spectrum.welch_rows(profiles, patch.step, config.welch)
    fit = roughness.fit_rows(band.omega, phi)
    for r, ok, nb in zip(kept, fit["ok"], fit["bins"]):
        if not ok:
            dropped.append((r, f"unfittable-{int(nb)}-bins"))
    result = roughness.aggregate_patch((fit["b"][fit["ok"]], fit["w"][fit["ok"]]), band)
    return result, dropped, phi[fit["ok"]].mean(axis=0)


def process_cloud(cloud, attitude=None, config=None, index=0):
    """One patch: tilt compensation, extraction, filtering, gridding, PSD, fit."""
    config = config or PipelineConfig()
    try:
        if attitude is None:
            world = cloud if cloud.frame == "world" else cloud.as_world()
        else:
            world = preprocess.compensate_tilt(cloud, attitude)
        pts = preprocess.extract_patch(world, config.spec)
        if config.remove_plane:
            pts = preprocess.remove_plane(pts)
        if config.filter.enabled:
            f = config.filter
            pts = preprocess.filter_outliers(pts, f.window, f.k_sigma, f.max_fraction)
        patch = preprocess.rasterize(pts, config.spec, index)
        rough, dropped, mean_phi = analyse_patch(patch, config)
    except TerrainError as exc:
        return PatchResult(index, reason=f"{exc.code}: {exc}")
    cell = classify.RoughnessMapCell.build(index, config.patch_center(index), rough, config.thresholds)
    return PatchResult(index, cell, dropped=dropped, mean_phi=mean_phi)


def _process_star(args):
    return process_cloud(*args)


def process_sequence(clouds, attitudes=None, config=None, jobs=1):
    """Process patches in order and flag defects across the successful ones.

    Results come back in input order whatever ``jobs`` is.
    """
    config = config or PipelineConfig()
    clouds = list(clouds)
    if attitudes is None:
        attitudes = [None] * len(clouds)
    tasks = [(c, a, config, i) for i, (c, a) in enumerate(zip(clouds, attitudes))]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_process_star, tasks))
    else:
        results = [_process_star(t) for t in tasks]

    for res in results:
        if not res.ok:
            log.warning("patch %d dropped [%s]", res.index, res.reason)
        for row, why in res.dropped:
            log.info("patch %d row %d dropped [%s]", res.index, row, why)

    good = [r for r in results if r.ok]
    if len(good) >= config.defect_window:
        flags = classify.detect_defects(
            [r.cell.roughness for r in good], config.defect_window, config.defect_factor
        )
        for r, flag in zip(good, flags):
            r.cell.defect = bool(flag)
    elif good:
        log.warning(
            "defect detection skipped: %d patches, window needs %d", len(good), config.defect_window
        )
    return results
