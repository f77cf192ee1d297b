"""Specialized max filtering algorithms, one per group kind.

Each function computes ``max_g <z, g x>`` together with witnesses, in the
best known complexity for its group: FFT cross-correlation for circular
shifts, sorting for (signed/patch) permutations, SVD for one-sided
orthogonal actions, linear assignment for column permutations.  All are pure
functions invoked through :func:`maxfilt.core.max_filter`.
"""

from __future__ import annotations

import numpy as np

from ._assignment import max_profit_assignment
from .core import DimensionMismatch, FilterResult, NumericFailure, ValidationError, tie_tolerance


def _check_same_shape(z, x):
    if z.shape != x.shape:
        raise DimensionMismatch(f"operand shapes differ: {z.shape} vs {x.shape}")


# ---------------------------------------------------------------------------
# Circular shifts
# ---------------------------------------------------------------------------

def cyclic_correlation(z: np.ndarray, x: np.ndarray, use_fft: bool = True) -> np.ndarray:
    """corr[a] = <z, roll(x, a)> over all n circular shifts."""
    n = len(z)
    if use_fft:
        return np.real(np.fft.ifft(np.fft.fft(z) * np.conj(np.fft.fft(x))))
    return np.array([float(z @ np.roll(x, a)) for a in range(n)])


def mf_cyclic(z, x, use_fft: bool = True) -> FilterResult:
    """Max over all circular shifts of the cross-correlation, O(n log n).

    The FFT runs at the exact signal length (no zero-padding) so the
    correlation wraps at exactly n.
    """
    z = np.asarray(z, dtype=float)
    x = np.asarray(x, dtype=float)
    _check_same_shape(z, x)
    corr = cyclic_correlation(z, x, use_fft=use_fft)
    best = float(corr.max())
    tol = tie_tolerance(z, x)
    witnesses = [int(a) for a in np.flatnonzero(corr >= best - tol)]
    return FilterResult(value=best, witnesses=witnesses)


# ---------------------------------------------------------------------------
# Permutation families (sorting)
# ---------------------------------------------------------------------------

def _descending_order(v: np.ndarray) -> np.ndarray:
    # Stable descending order with original-index tie-breaking.
    return np.argsort(-v, kind="stable")


def mf_sort_permutation(z, x) -> FilterResult:
    """<sort(z), sort(x)> with both sorted descending; O(d log d).

    Witness is the permutation aligning the sorted orders (ties broken by
    original index), encoded as ``p`` with ``g x = x[p]``.
    """
    z = np.asarray(z, dtype=float)
    x = np.asarray(x, dtype=float)
    _check_same_shape(z, x)
    iz = _descending_order(z)
    ix = _descending_order(x)
    value = float(z[iz] @ x[ix])
    perm = np.empty(len(z), dtype=int)
    perm[iz] = ix
    return FilterResult(value=value, witnesses=[perm])


def mf_signed_permutation(z, x) -> FilterResult:
    """<sort(|z|), sort(|x|)> descending; witness = (perm, signs)."""
    z = np.asarray(z, dtype=float)
    x = np.asarray(x, dtype=float)
    _check_same_shape(z, x)
    az, ax = np.abs(z), np.abs(x)
    iz = _descending_order(az)
    ix = _descending_order(ax)
    value = float(az[iz] @ ax[ix])
    perm = np.empty(len(z), dtype=int)
    perm[iz] = ix
    # Pick signs so each matched pair contributes |z_i||x_j|.
    signs = np.ones(len(z))
    for i, j in zip(iz, ix):
        s = np.sign(z[i]) * np.sign(x[j])
        signs[i] = s if s != 0 else 1.0
    return FilterResult(value=value, witnesses=[(perm, signs)])


def mf_sign_flips(z, x) -> FilterResult:
    """sum |z_i x_i| over diagonal +-1 matrices; witness = sign vector."""
    z = np.asarray(z, dtype=float)
    x = np.asarray(x, dtype=float)
    _check_same_shape(z, x)
    prod = z * x
    signs = np.where(prod >= 0, 1.0, -1.0)
    return FilterResult(value=float(np.abs(prod).sum()), witnesses=[signs])


def mf_patch_permutation(z, x, patches) -> FilterResult:
    """Sum over patches of the within-patch sorted inner product."""
    z = np.asarray(z, dtype=float)
    x = np.asarray(x, dtype=float)
    _check_same_shape(z, x)
    covered = sorted(i for p in patches for i in p)
    if covered != list(range(len(z))):
        raise ValidationError("patch specification does not tile the index set")
    value = 0.0
    perm = np.empty(len(z), dtype=int)
    for p in patches:
        idx = np.asarray(p)
        sub = mf_sort_permutation(z[idx], x[idx])
        value += sub.value
        perm[idx] = idx[sub.witnesses[0]]
    return FilterResult(value=value, witnesses=[perm])


# ---------------------------------------------------------------------------
# Orthogonal actions
# ---------------------------------------------------------------------------

def mf_orthogonal(z, x) -> FilterResult:
    """|z| * |x| over the full orthogonal group; witness maps x/|x| to z/|z|."""
    z = np.asarray(z, dtype=float)
    x = np.asarray(x, dtype=float)
    _check_same_shape(z, x)
    nz, nx = np.linalg.norm(z), np.linalg.norm(x)
    d = len(z)
    if nz == 0 or nx == 0:
        return FilterResult(value=0.0, witnesses=[np.eye(d)])
    u = x / nx
    v = z / nz
    w = u - v
    nw = np.linalg.norm(w)
    if nw <= 1e-14:
        g = np.eye(d)
    else:
        w /= nw
        g = np.eye(d) - 2.0 * np.outer(w, w)   # reflection sending u to v
    return FilterResult(value=float(nz * nx), witnesses=[g])


def mf_left_orthogonal(z, x) -> FilterResult:
    """Nuclear norm of x z^T over O(k) acting on the left of (k, n) matrices.

    Witness is the orthogonal polar factor R = V U^T of the k x k product,
    so that <z, R x> equals the sum of singular values.
    """
    z = np.asarray(z, dtype=float)
    x = np.asarray(x, dtype=float)
    _check_same_shape(z, x)
    m = x @ z.T
    try:
        u, s, vt = np.linalg.svd(m)
    except np.linalg.LinAlgError as exc:
        raise NumericFailure(f"SVD did not converge: {exc}") from exc
    r = vt.T @ u.T
    return FilterResult(value=float(s.sum()), witnesses=[r])


def mf_column_permutation(z, x) -> FilterResult:
    """Maximum-profit linear assignment over column permutations, O(n^3).

    profit[j, i] = <z_col_j, x_col_i>; witness ``p`` satisfies ``g x = x[:, p]``.
    """
    z = np.asarray(z, dtype=float)
    x = np.asarray(x, dtype=float)
    _check_same_shape(z, x)
    profit = z.T @ x
    value, col = max_profit_assignment(profit)
    return FilterResult(value=value, witnesses=[col])


# ---------------------------------------------------------------------------
# Complex kinds
# ---------------------------------------------------------------------------

def mf_phase(z, x) -> FilterResult:
    """|z^* x| over the unit phase circle; witness is the optimal phase c."""
    z = np.asarray(z, dtype=complex)
    x = np.asarray(x, dtype=complex)
    _check_same_shape(z, x)
    w = np.vdot(z, x)
    mag = abs(w)
    if mag <= 1e-300:
        return FilterResult(value=0.0, witnesses=[complex(1.0)])
    # <z, c x> = Re(c * z^* x) is maximized at c = conj(w)/|w|.
    return FilterResult(value=float(mag), witnesses=[complex(np.conj(w) / mag)])


def complex_shift_correlation(z: np.ndarray, x: np.ndarray, use_fft: bool = True) -> np.ndarray:
    """corr[a] = z^* (roll(x, a)) over all circular shifts of a complex signal."""
    n = len(z)
    if use_fft:
        return np.fft.ifft(np.fft.fft(np.conj(z)) * np.conj(np.fft.fft(np.conj(x))))
    return np.array([np.vdot(z, np.roll(x, a)) for a in range(n)])


def mf_shift_conjugate(z, x, use_fft: bool = True) -> FilterResult:
    """Max over shifts x phases x conjugation of Re(z^* g x).

    Both FFT cross-correlations (with x and conj(x)) are scanned; witness =
    (shift, conjugation flag, unit phase).  Realizes O(2) x C_n on closed
    planar curves encoded as complex signals.
    """
    z = np.asarray(z, dtype=complex)
    x = np.asarray(x, dtype=complex)
    _check_same_shape(z, x)
    corr_plain = complex_shift_correlation(z, x, use_fft=use_fft)
    corr_conj = complex_shift_correlation(z, np.conj(x), use_fft=use_fft)
    tol = tie_tolerance(z, x)
    best = max(float(np.abs(corr_plain).max()), float(np.abs(corr_conj).max()))
    witnesses = []
    for conj_flag, corr in ((False, corr_plain), (True, corr_conj)):
        for a in np.flatnonzero(np.abs(corr) >= best - tol):
            w = corr[a]
            phase = complex(np.conj(w) / abs(w)) if abs(w) > 1e-300 else complex(1.0)
            witnesses.append((int(a), conj_flag, phase))
    return FilterResult(value=best, witnesses=witnesses)


# ---------------------------------------------------------------------------
# Sliding windows
# ---------------------------------------------------------------------------

def template_slice_index(z: np.ndarray) -> int:
    """Index of the single slice a sliding-window template is supported on."""
    occupancy = np.abs(z).sum(axis=(0, 1))
    nonzero = np.flatnonzero(occupancy > 0)
    if len(nonzero) == 0:
        return 0
    if len(nonzero) > 1:
        raise ValidationError("sliding-window template must be supported on a single slice")
    return int(nonzero[0])


def mf_sliding_window(z, x) -> FilterResult:
    """Max over slice positions of <z_slice, x_slice(a)> for a (c, w, T) tensor.

    The template must be supported on a single slice; witness is the cyclic
    slice shift (so the best-aligned position is ``(t0 - shift) mod T`` where
    t0 is the template's slice).
    """
    z = np.asarray(z, dtype=float)
    x = np.asarray(x, dtype=float)
    _check_same_shape(z, x)
    t0 = template_slice_index(z)
    zs = z[:, :, t0]
    scores = np.einsum("cw,cwt->t", zs, x)
    # scores[p] = <z_slice, x_slice(p)>; shift a places x_slice(p) at t0 when
    # a = (t0 - p) mod T.
    T = x.shape[2]
    best = float(scores.max())
    tol = tie_tolerance(z, x)
    witnesses = [int((t0 - p) % T) for p in np.flatnonzero(scores >= best - tol)]
    return FilterResult(value=best, witnesses=witnesses)
