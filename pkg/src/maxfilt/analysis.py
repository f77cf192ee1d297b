"""Empirical verification harness: bilipschitz estimation for filter banks,
orbit-separation trials, and a discretized diffeomorphism-stability
experiment on the circle.

Estimates here are Monte Carlo, never certificates; the theoretical upper
bound (the bank's Frobenius norm) is a hard ceiling the estimator must not
exceed, while the lower bound is reported alongside the sample-size
prescription so users can see how far desk scale sits from the guarantee
regime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import groups
from .core import (GroupAction, LeftOrthogonal, ColumnPermutation, PhaseCircle,
                   ShiftAndConjugate, SlidingWindowShift, ValidationError,
                   filter_bank_apply, group_order, quotient_distance)
from .templates import random_bank_parameters


def sample_point(group: GroupAction, rng: np.random.Generator) -> np.ndarray:
    """Standard normal draw in the group's ambient space (complex where needed)."""
    if isinstance(group, (PhaseCircle, ShiftAndConjugate)):
        n = group.r if isinstance(group, PhaseCircle) else group.n
        return rng.standard_normal(n) + 1j * rng.standard_normal(n)
    if isinstance(group, (LeftOrthogonal, ColumnPermutation)):
        return rng.standard_normal(group.shape)
    if isinstance(group, SlidingWindowShift):
        return rng.standard_normal(group.shape)
    return rng.standard_normal(group.dim)


def bank_frobenius(bank: Sequence) -> float:
    return math.sqrt(sum(float(np.linalg.norm(getattr(t, "vector", t))) ** 2 for t in bank))


def random_bank(group: GroupAction, n: int, rng_seed: int) -> list:
    """n unit-norm random templates shaped for the group's ambient space.

    Sliding-window templates are constrained to a single slice, as the fast
    path requires.
    """
    from .templates import Template

    rng = np.random.default_rng(rng_seed)
    out = []
    for i in range(n):
        if isinstance(group, SlidingWindowShift):
            z = np.zeros(group.shape)
            slab = rng.standard_normal((group.c, group.w))
            z[:, :, 0] = slab / np.linalg.norm(slab)
        else:
            z = sample_point(group, rng)
            z = z / np.linalg.norm(z)
        out.append(Template(vector=z, group_kind=group.kind, label=f"bank-{i}"))
    return out


@dataclass
class LipschitzReport:
    lower_est: float
    upper_est: float
    argmin_pair: tuple
    argmax_pair: tuple
    samples: int
    theory_delta: Optional[float] = None
    theory_upper: Optional[float] = None

    def to_dict(self) -> dict:
        return {"lower_est": self.lower_est, "upper_est": self.upper_est,
                "samples": self.samples, "theory_delta": self.theory_delta,
                "theory_upper": self.theory_upper}


def estimate_lipschitz(group: GroupAction, bank: Sequence, samples: int,
                       rng_seed: int) -> LipschitzReport:
    """Sample ratio ||Phi(x) - Phi(y)|| / d([x], [y]) over random pairs.

    Reports the extremes together with the guaranteed ceiling (the bank
    Frobenius norm) and, for finite groups, the lower-bound constant the
    random-bank prescription would certify at its own (astronomical) sample
    size.
    """
    if len(bank) == 0:
        raise ValidationError("filter bank is empty")
    rng = np.random.default_rng(rng_seed)
    lower, upper = math.inf, -math.inf
    argmin_pair = argmax_pair = None
    used = 0
    for _ in range(samples):
        x = sample_point(group, rng)
        y = sample_point(group, rng)
        dist = quotient_distance(group, x, y)
        if dist <= 1e-8:
            continue
        used += 1
        gap = float(np.linalg.norm(filter_bank_apply(group, bank, x)
                                   - filter_bank_apply(group, bank, y)))
        ratio = gap / dist
        if ratio < lower:
            lower, argmin_pair = ratio, (x, y)
        if ratio > upper:
            upper, argmax_pair = ratio, (x, y)
    if used == 0:
        raise ValidationError("degenerate sampler: every pair fell in one orbit")
    order = group_order(group)
    theory_delta = None
    if order is not None:
        theory_delta = random_bank_parameters(order, group.dim)[1]
    return LipschitzReport(lower_est=lower, upper_est=upper,
                           argmin_pair=argmin_pair, argmax_pair=argmax_pair,
                           samples=used, theory_delta=theory_delta,
                           theory_upper=bank_frobenius(bank))


@dataclass
class SeparationReport:
    trials: int
    checked: int
    violations: int
    threshold: float = 1e-9
    violating_pairs: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"trials": self.trials, "checked": self.checked,
                "violations": self.violations, "threshold": self.threshold}


def separation_test(group: GroupAction, bank: Sequence, trials: int,
                    rng_seed: int) -> SeparationReport:
    """Count distinct-orbit pairs whose feature vectors collide.

    A pair counts as a violation when its quotient distance exceeds 1e-6 but
    the feature gap (sup norm) stays within the threshold.  Expected zero for
    banks of sufficient size.
    """
    rng = np.random.default_rng(rng_seed)
    checked = violations = 0
    report = SeparationReport(trials=trials, checked=0, violations=0)
    for _ in range(trials):
        x = sample_point(group, rng)
        y = sample_point(group, rng)
        if quotient_distance(group, x, y) <= 1e-6:
            continue
        checked += 1
        gap = float(np.max(np.abs(filter_bank_apply(group, bank, x)
                                  - filter_bank_apply(group, bank, y))))
        if gap <= report.threshold:
            violations += 1
            if len(report.violating_pairs) < 8:
                report.violating_pairs.append((x, y))
    report.checked = checked
    report.violations = violations
    return report


# ---------------------------------------------------------------------------
# Diffeomorphic distortion on the discrete circle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Warp:
    """Smooth displacement field tau(t) = offset + sum_j a_j sin(2 pi j t / grid + phi_j)."""

    grid: int
    offset: float = 0.0
    amplitudes: tuple = ()
    phases: tuple = ()

    def displacement(self) -> np.ndarray:
        t = np.arange(self.grid)
        tau = np.full(self.grid, self.offset)
        for j, (a, ph) in enumerate(zip(self.amplitudes, self.phases), start=1):
            tau += a * np.sin(2.0 * math.pi * j * t / self.grid + ph)
        return tau

    def slope(self) -> float:
        """max |tau'| evaluated analytically on the grid."""
        t = np.arange(self.grid)
        deriv = np.zeros(self.grid)
        for j, (a, ph) in enumerate(zip(self.amplitudes, self.phases), start=1):
            deriv += a * (2.0 * math.pi * j / self.grid) \
                * np.cos(2.0 * math.pi * j * t / self.grid + ph)
        return float(np.max(np.abs(deriv)))


def make_warp(grid: int, target_slope: float, n_modes: int, rng_seed: int) -> Warp:
    """Random band-limited warp scaled to hit the requested max |tau'| exactly
    on the grid."""
    if target_slope < 0:
        raise ValidationError("target slope must be nonnegative")
    rng = np.random.default_rng(rng_seed)
    amps = rng.standard_normal(n_modes) / np.arange(1, n_modes + 1)
    phases = rng.uniform(0.0, 2.0 * math.pi, n_modes)
    raw = Warp(grid=grid, amplitudes=tuple(amps), phases=tuple(phases))
    s = raw.slope()
    if s == 0:
        raise ValidationError("degenerate warp draw")
    scale = target_slope / s
    return Warp(grid=grid, amplitudes=tuple(a * scale for a in amps),
                phases=tuple(phases))


def apply_warp(f: np.ndarray, warp: Warp) -> np.ndarray:
    """Distortion operator: (L f)(t) = f(t - tau(t)) by circular linear
    interpolation.  Integer constant displacements reduce to exact rolls, so
    translation equivariance is preserved for true group elements."""
    f = np.asarray(f, dtype=float)
    n = len(f)
    if warp.grid != n:
        raise ValidationError("warp grid does not match signal length")
    pos = np.arange(n) - warp.displacement()
    i0 = np.floor(pos).astype(int)
    frac = pos - i0
    return (1.0 - frac) * f[i0 % n] + frac * f[(i0 + 1) % n]


@dataclass
class StabilityReport:
    distortion_size: float
    filter_gap: float
    ratio: float

    def to_dict(self) -> dict:
        return {"distortion_size": self.distortion_size,
                "filter_gap": self.filter_gap, "ratio": self.ratio}


def diffeo_stability_experiment(h: np.ndarray, f: np.ndarray, warp: Warp,
                                grid: int) -> StabilityReport:
    """Gap between the translation max filter of f and of its warped version,
    normalized by ||f|| times the warp's Jacobian proxy max |tau'| <= 1/2."""
    h = np.asarray(h, dtype=float)
    f = np.asarray(f, dtype=float)
    if len(h) != grid or len(f) != grid:
        raise ValidationError("signals must live on the declared grid")
    slope = warp.slope()
    if slope > 0.5 + 1e-12:
        raise ValidationError(f"warp slope {slope:.3f} exceeds the 1/2 cap")
    base = groups.mf_cyclic(h, f).value
    warped = groups.mf_cyclic(h, apply_warp(f, warp)).value
    gap = abs(base - warped)
    nf = float(np.linalg.norm(f))
    ratio = gap / (nf * slope) if slope > 0 and nf > 0 else 0.0
    return StabilityReport(distortion_size=slope, filter_gap=gap, ratio=ratio)


def gaussian_bump(grid: int, width: float, center: Optional[int] = None) -> np.ndarray:
    """Localized template on the circle; decays fast enough that its
    translates barely overlap themselves."""
    c = grid // 2 if center is None else center
    t = np.arange(grid)
    dist = np.minimum(np.abs(t - c), grid - np.abs(t - c))
    return np.exp(-0.5 * (dist / width) ** 2)


def band_limited_signal(grid: int, max_freq: int, rng_seed: int) -> np.ndarray:
    """Random real signal with spectrum supported on frequencies <= max_freq."""
    rng = np.random.default_rng(rng_seed)
    spec = np.zeros(grid // 2 + 1, dtype=complex)
    m = min(max_freq, grid // 2)
    spec[1:m + 1] = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    f = np.fft.irfft(spec, n=grid)
    return f / np.linalg.norm(f) * math.sqrt(grid)


def theil_sen_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Median of pairwise slopes; robust trend estimate."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    slopes = []
    for i in range(len(xs)):
        for j in range(i + 1, len(xs)):
            if xs[j] != xs[i]:
                slopes.append((ys[j] - ys[i]) / (xs[j] - xs[i]))
    if not slopes:
        raise ValidationError("need at least two distinct x values")
    return float(np.median(slopes))


def stability_sweep(h: np.ndarray, grid: int, slopes: Sequence[float], n_modes: int,
                    rng_seed: int, f: Optional[np.ndarray] = None) -> dict:
    """Run the stability experiment across a sweep of distortion sizes.

    One random warp shape is drawn and rescaled to each requested slope, so
    the sweep isolates the dependence on distortion size; the Theil-Sen slope
    of ratio against distortion is the trend statistic used to certify no
    growth."""
    if f is None:
        f = band_limited_signal(grid, max_freq=max(4, grid // 16), rng_seed=rng_seed + 1)
    top = max(slopes)
    base = make_warp(grid, target_slope=top, n_modes=n_modes, rng_seed=rng_seed)
    reports = []
    for s in slopes:
        warp = Warp(grid=grid,
                    amplitudes=tuple(a * (s / top) for a in base.amplitudes),
                    phases=base.phases)
        reports.append(diffeo_stability_experiment(h, f, warp, grid))
    trend = theil_sen_slope([r.distortion_size for r in reports],
                            [r.ratio for r in reports])
    return {"reports": reports, "trend_slope": trend}
