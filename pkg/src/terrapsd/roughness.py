"""Power-law fits of profile spectra and their patch-level aggregate.

A profile spectrum is modelled as ``phi(omega) = R * omega**w``. The fit is an
unweighted least-squares line in log-log space, so ``b = ln R`` is the
intercept at omega = 1 rad/m, which lies below the measured band and is
therefore an extrapolation.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneratePatchError, InvalidArgumentError, UnfittableSpectrumError

MIN_BINS = 3


@dataclass(frozen=True)
class ProfileRoughness:
    R: float
    w: float
    b: float
    residual_rms: float
    bins_used: int


@dataclass
class PatchRoughness:
    R_hat: float
    sigma_R: float
    w_hat: float
    sigma_w: float
    m: int
    band: object = None
    b_mean: float = float("nan")
    sigma_b: float = float("nan")
    b: np.ndarray = field(default=None, repr=False)
    w: np.ndarray = field(default=None, repr=False)

    def scatter_rows(self):
        """(kind, w, ln R) rows: one per profile plus the aggregate point."""
        rows = [("profile", float(wi), float(bi)) for wi, bi in zip(self.w, self.b)]
        rows.append(("patch", self.w_hat, self.b_mean))
        return rows


def fit_rows(omega, phi):
    """Vectorised log-log fit of each row of ``phi`` against ``omega``.

    Returns a dict of arrays ``b, w, residual_rms, bins`` and a boolean ``ok``;
    rows with fewer than three positive bins have ``ok`` False and NaN
    parameters. Zero bins are excluded from the fit.
    """
    omega = np.asarray(omega, dtype=np.float64)
    phi = np.atleast_2d(np.asarray(phi, dtype=np.float64))
    use = phi > 0
    bins = use.sum(axis=1)
    ok = bins >= MIN_BINS
    x = np.broadcast_to(np.log(omega), phi.shape)
    with np.errstate(divide="ignore"):
        y = np.where(use, np.log(np.where(use, phi, 1.0)), 0.0)
    cnt = np.maximum(bins, 1)
    xm = np.where(use, x, 0.0).sum(axis=1) / cnt
    ym = y.sum(axis=1) / cnt
    dx = np.where(use, x - xm[:, None], 0.0)
    dy = np.where(use, y - ym[:, None], 0.0)
    sxx = (dx * dx).sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = (dx * dy).sum(axis=1) / sxx
    b = ym - w * xm
    resid = np.where(use, y - (b[:, None] + w[:, None] * x), 0.0)
    rms = np.sqrt((resid**2).sum(axis=1) / cnt)
    nan = np.full(phi.shape[0], np.nan)
    return {
        "b": np.where(ok, b, nan),
        "w": np.where(ok, w, nan),
        "residual_rms": np.where(ok, rms, nan),
        "bins": bins,
        "ok": ok,
    }


def fit_power_law(spec, phi=None):
    """Fit ``phi = R * omega**w`` to one spectrum.

    Accepts a SpectrumEstimate, or ``(omega, phi)`` arrays.
    """
    if phi is None:
        omega, phi = spec.omega, spec.phi
    else:
        omega = spec
    res = fit_rows(omega, phi)
    if not res["ok"][0]:
        raise UnfittableSpectrumError(
            f"need at least {MIN_BINS} positive PSD bins, got {int(res['bins'][0])}"
        )
    b = float(res["b"][0])
    return ProfileRoughness(
        R=float(np.exp(b)),
        w=float(res["w"][0]),
        b=b,
        residual_rms=float(res["residual_rms"][0]),
        bins_used=int(res["bins"][0]),
    )


def delta_method(mu_x, var_x, g="exp"):
    """First-order propagation of mean and variance through ``g``.

    Only ``"exp"`` and ``"identity"`` are supported. Returns ``(mu_y, var_y)``
    with ``mu_y = g(mu_x)`` and ``var_y = g'(mu_x)**2 * var_x``.
    """
    if var_x < 0:
        raise InvalidArgumentError(f"variance must be non-negative, got {var_x}")
    if g == "exp":
        mu_y = float(np.exp(mu_x))
        return mu_y, mu_y * mu_y * var_x
    if g == "identity":
        return float(mu_x), float(var_x)
    raise InvalidArgumentError(f"unsupported transform {g!r}")


def _mean_std(v):
    # fsum is correctly rounded, so results do not depend on profile order
    if np.all(v == v[0]):
        return float(v[0]), 0.0
    mean = math.fsum(v) / v.size
    var = math.fsum((v - mean) ** 2) / (v.size - 1)
    return mean, math.sqrt(var)


def aggregate_patch(profiles, band=None):
    """Patch roughness from per-profile fits (ProfileRoughness list or a
    ``(b, w)`` pair of arrays).

    ``R_hat = exp(mean b)`` and its standard deviation follows from the delta
    method; spreads use the sample standard deviation (divisor m - 1).
    """
    if isinstance(profiles, tuple) and len(profiles) == 2:
        b, w = (np.asarray(a, dtype=np.float64) for a in profiles)
    else:
        b = np.array([p.b for p in profiles], dtype=np.float64)
        w = np.array([p.w for p in profiles], dtype=np.float64)
    m = b.size
    if m < 2:
        raise DegeneratePatchError(f"patch aggregation needs at least 2 profiles, got {m}")
    b_mean, sigma_b = _mean_std(b)
    w_mean, sigma_w = _mean_std(w)
    R_hat, var_R = delta_method(b_mean, sigma_b**2, "exp")
    return PatchRoughness(
        R_hat=R_hat,
        sigma_R=math.sqrt(var_R),
        w_hat=w_mean,
        sigma_w=sigma_w,
        m=m,
        band=band,
        b_mean=b_mean,
        sigma_b=sigma_b,
        b=b,
        w=w,
    )
