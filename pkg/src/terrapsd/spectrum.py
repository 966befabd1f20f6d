"""Discrete waveband and one-sided Welch PSD of elevation profiles.

PSD values are in m^3/rad against wavenumber in rad/m, normalised so that
``sum(phi) * d_omega`` equals the profile variance (exactly for a single
rectangular segment, in expectation for tapered or averaged configurations).
"""
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolationError, InvalidArgumentError

WINDOWS = ("rectangular", "hann")
DETREND_TOL = 1e-9


@dataclass(frozen=True)
class Waveband:
    """Wavenumbers 2*pi*k/(n*B) for k = 1 .. n/2."""

    n: int
    step: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 4 or self.n % 2:
            raise InvalidArgumentError(f"sample count must be even and >= 4, got {self.n}")
        if not self.step > 0:
            raise InvalidArgumentError(f"grid step must be positive, got {self.step}")

    @property
    def length(self):
        return self.n * self.step

    @property
    def l(self):
        return self.n // 2

    @property
    def d_omega(self):
        return 2 * np.pi / (self.n * self.step)

    @property
    def omega(self):
        return 2 * np.pi * np.arange(1, self.l + 1) / (self.n * self.step)

    @property
    def omega_1(self):
        return 2 * np.pi / self.length

    @property
    def omega_l(self):
        return np.pi / self.step


def make_waveband(n, step):
    return Waveband(int(n), float(step))


@dataclass(frozen=True)
class WelchConfig:
    segments: int = 1
    overlap: float = 0.5
    window: str = "rectangular"

    def __post_init__(self):
        if int(self.segments) != self.segments or self.segments < 1:
            raise InvalidArgumentError("segments must be a positive integer")
        if not 0.0 <= self.overlap < 1.0:
            raise InvalidArgumentError("overlap must lie in [0, 1)")
        if self.window not in WINDOWS:
            raise InvalidArgumentError(f"window must be one of {WINDOWS}")

    def segment_length(self, n):
        return int(n // (1 + (self.segments - 1) * (1 - self.overlap)))

    def segment_starts(self, n):
        """Start indices, placed symmetrically so a reversed profile reuses them."""
        M = self.segment_length(n)
        span = n - M
        raw = np.linspace(0, span, self.segments)
        starts = np.floor(raw + 0.5).astype(int)
        half = self.segments // 2
        for i in range(half):
            starts[self.segments - 1 - i] = span - starts[i]
        return starts

    def taper(self, M):
        if self.window == "hann":
            return np.hanning(M)
        return np.ones(M)


#: single rectangular segment: a plain periodogram
PERIODOGRAM = WelchConfig()


@dataclass
class SpectrumEstimate:
    band: Waveband
    phi: np.ndarray
    n_segments: int = 1
    window: str = "rectangular"
    overlap: float = 0.0

    @property
    def omega(self):
        return self.band.omega

    def total_power(self):
        """Integrated PSD over the band, i.e. the estimated profile variance."""
        return float(np.sum(self.phi) * self.band.d_omega)


def check_detrended(rows, step, tol=DETREND_TOL):
    """Raise unless every row has negligible mean and least-squares slope."""
    rows = np.atleast_2d(rows)
    n = rows.shape[1]
    scale = np.max(np.abs(rows), axis=1)
    live = scale > 0
    if not live.any():
        return
    r = rows[live]
    xc = (np.arange(n) - 0.5 * (n - 1)) * step
    mean = r.mean(axis=1)
    rise = (r @ xc) / (xc @ xc) * (n * step)
    bad = (np.abs(mean) > tol * scale[live]) | (np.abs(rise) > tol * scale[live])
    if bad.any():
        raise ContractViolationError(
            f"{int(bad.sum())} profile(s) are not detrended; detrend before estimating the PSD"
        )


def welch_rows(rows, step, config=PERIODOGRAM, check=True):
    """One-sided PSD of every row; returns an array of shape (rows, n/2).

    Segments are zero-padded to the full profile length so every
    configuration reports on the same waveband.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    n = rows.shape[1]
    band = Waveband(n, step)
    if check:
        check_detrended(rows, step)
    M = config.segment_length(n)
    if M < 4:
        raise InvalidArgumentError(f"segments of {M} samples are too short")
    taper = config.taper(M)
    acc = np.zeros((rows.shape[0], band.l))
    for s in config.segment_starts(n):
        seg = rows[:, s:s + M] * taper
        spec = np.fft.rfft(seg, n=n, axis=1)[:, 1:]
        acc += spec.real**2 + spec.imag**2
    weight = np.full(band.l, 2.0)
    weight[-1] = 1.0
    return acc * weight * step / (2 * np.pi * config.segments * np.sum(taper**2))


def welch_psd(profile, step, config=PERIODOGRAM, check=True):
    """One-sided Bartlett-Welch PSD of a detrended profile over its waveband.

    Raises ContractViolationError when the profile still carries a mean or a
    linear trend (pass ``check=False`` to skip the test).
    """
    profile = np.asarray(profile, dtype=np.float64)
    if profile.ndim != 1:
        raise InvalidArgumentError("welch_psd expects a 1-D profile; use welch_rows for grids")
    phi = welch_rows(profile[None, :], step, config, check)[0]
    return SpectrumEstimate(
        Waveband(profile.size, step),
        phi,
        config.segments,
        config.window,
        config.overlap if config.segments > 1 else 0.0,
    )
