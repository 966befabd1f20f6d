"""ISO 8608 bands, band-limited rms, semantic labels and defect flags."""
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError, InvalidArgumentError

ISO_LETTERS = "ABCDEFGH"
#: PSD at omega_0 = 1 rad/m for classes A..H, m^3/rad
ISO_PHI0 = {c: 4.0**i * 1e-6 for i, c in enumerate(ISO_LETTERS)}
OMEGA_0 = 1.0

DEFAULT_THRESHOLDS = (64e-6, 1024e-6)
LABELS = ("low", "medium", "high")

CSV_COLUMNS = (
    "patch_index", "x", "y", "R", "sigma_R", "w", "sigma_w",
    "omega1", "omegaL", "iso_band", "label", "defect",
)


@dataclass(frozen=True)
class IsoBand:
    letter: str
    lower: str | None = None
    upper: str | None = None
    note: str = ""

    @property
    def between(self):
        return None if self.lower is None else (self.lower, self.upper)

    def describe(self):
        if self.note:
            return f"{self.letter} ({self.note})"
        if self.lower is not None:
            return f"{self.letter} (between {self.lower} and {self.upper})"
        return self.letter


def iso_classify(R):
    """Nearest ISO class in log space; also the bracketing pair if off-row.

    Nearest in log space is the same as splitting at geometric midpoints.
    Values outside A..H are clamped with a note.
    """
    if not (np.isfinite(R) and R > 0):
        raise InvalidArgumentError(f"overall energy must be positive, got {R}")
    levels = np.log(np.array([ISO_PHI0[c] for c in ISO_LETTERS]))
    x = np.log(R)
    if x < levels[0] and not np.isclose(x, levels[0], rtol=0, atol=1e-9):
        return IsoBand("A", note="below-band")
    if x > levels[-1] and not np.isclose(x, levels[-1], rtol=0, atol=1e-9):
        return IsoBand("H", note="above-band")
    nearest = int(np.argmin(np.abs(levels - x)))
    if abs(levels[nearest] - x) <= 1e-9:
        return IsoBand(ISO_LETTERS[nearest])
    hi = int(np.searchsorted(levels, x))
    return IsoBand(ISO_LETTERS[nearest], ISO_LETTERS[hi - 1], ISO_LETTERS[hi])


def _limits(band, omega_l=None):
    if omega_l is not None:
        lo, hi = band, omega_l
    elif hasattr(band, "omega_1"):
        lo, hi = band.omega_1, band.omega_l
    else:
        lo, hi = band
    if not 0 < lo < hi:
        raise InvalidArgumentError(f"invalid waveband ({lo}, {hi})")
    return lo, hi


def waveband_limits(length, step):
    """(omega_1, omega_l) = (2 pi / L, pi / B)."""
    return 2 * np.pi / length, np.pi / step


def band_rms(phi0, omega_1, omega_l, omega_0=OMEGA_0):
    """rms elevation of a w = -2 surface integrated over [omega_1, omega_l]."""
    lo, hi = _limits(omega_1, omega_l)
    return float(np.sqrt(phi0 * omega_0**2 * (1.0 / lo - 1.0 / hi)))


def sensitivity_floor(rms_flat, band, omega_0=OMEGA_0):
    """Smallest distinguishable PSD level at omega_0 given a flat-ground rms.

    ``band`` is a Waveband or an ``(omega_1, omega_l)`` pair.
    """
    if rms_flat < 0:
        raise InvalidArgumentError("rms must be non-negative")
    lo, hi = _limits(band)
    return rms_flat**2 / (1.0 / lo - 1.0 / hi) / omega_0**2


def iso_table(length=0.9, step=0.008):
    """Rows of (letter, phi0, rms) for the waveband of an L x B patch."""
    lo, hi = waveband_limits(length, step)
    return [(c, ISO_PHI0[c], band_rms(ISO_PHI0[c], lo, hi)) for c in ISO_LETTERS]


def semantic_label(R, thresholds=DEFAULT_THRESHOLDS):
    low, high = thresholds
    if R < low:
        return "low"
    if R > high:
        return "high"
    return "medium"


def rolling_median(values, window):
    """Median over a length-``window`` run containing each index.

    The run is centred where possible and slid inward at the ends so that it
    always holds ``window`` values.
    """
    v = np.asarray(values, dtype=np.float64)
    n = v.size
    out = np.empty(n)
    for i in range(n):
        s = min(max(i - window // 2, 0), n - window)
        out[i] = np.median(v[s:s + window])
    return out


def detect_defects(sequence, window=7, factor=4.0):
    """Flag patches whose overall energy spikes above ``factor`` times the
    rolling median of its neighbourhood.

    ``sequence`` holds PatchRoughness objects or plain R values in traverse
    order.
    """
    R = np.array([getattr(p, "R_hat", p) for p in sequence], dtype=np.float64)
    if window < 1:
        raise InvalidArgumentError("window must be positive")
    if R.size < window:
        raise InsufficientDataError(f"need at least {window} patches, got {R.size}")
    return R > factor * rolling_median(R, window)


@dataclass
class RoughnessMapCell:
    patch_index: int
    x: float
    y: float
    roughness: object
    iso: IsoBand
    label: str
    defect: bool = False

    @classmethod
    def build(cls, patch_index, center, roughness, thresholds=DEFAULT_THRESHOLDS):
        return cls(
            patch_index,
            float(center[0]),
            float(center[1]),
            roughness,
            iso_classify(roughness.R_hat),
            semantic_label(roughness.R_hat, thresholds),
        )

    def to_row(self):
        r = self.roughness
        band = r.band
        return {
            "patch_index": self.patch_index,
            "x": f"{self.x:.4f}",
            "y": f"{self.y:.4f}",
            "R": f"{r.R_hat:.6e}",
            "sigma_R": f"{r.sigma_R:.6e}",
            "w": f"{r.w_hat:.5f}",
            "sigma_w": f"{r.sigma_w:.5f}",
            "omega1": f"{band.omega_1:.5f}",
            "omegaL": f"{band.omega_l:.5f}",
            "iso_band": self.iso.letter,
            "label": self.label,
            "defect": int(bool(self.defect)),
        }
