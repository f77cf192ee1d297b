"""Ambient-space data model and the generic max filtering evaluation contract.

A group action is described by a tagged, immutable descriptor; ``max_filter``
dispatches to a specialized algorithm per kind (see :mod:`maxfilt.groups`).
``brute_force_max_filter`` enumerates group elements (or a dense parameter
grid for continuous kinds) and is the independent oracle everything else is
tested against.

Conventions
-----------
* Real kinds act on 1-D float arrays; ``PhaseCircle`` and ``ShiftAndConjugate``
  act on 1-D complex arrays with the real inner product ``Re(z^* x)``;
  ``LeftOrthogonal`` / ``ColumnPermutation`` act on (k, n) matrices with the
  Frobenius inner product; ``SlidingWindowShift`` acts on (c, w, T) tensors.
* Witnesses are per-kind lightweight encodings (shift offset, permutation
  array, orthogonal matrix, unit phase, ...); ``apply_witness`` materializes
  the group element's action on a vector.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import ClassVar, Optional, Sequence

import numpy as np


class ValidationError(ValueError):
    """Input violates a structural precondition (shape, finiteness, group spec)."""


class DimensionMismatch(ValidationError):
    """Operand dimensions do not match the group's ambient space."""


class NumericFailure(RuntimeError):
    """A numerical routine failed to converge or produced non-finite output."""


class EnumerationCapExceeded(ValidationError):
    """Requested enumeration is larger than the configured cap."""


# ---------------------------------------------------------------------------
# Group action descriptors
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Enumerated:
    """Explicit finite list of orthogonal matrices, closed under product/inverse."""

    matrices: tuple
    kind: ClassVar[str] = "enumerated"

    def __post_init__(self):
        mats = tuple(np.asarray(m, dtype=float) for m in self.matrices)
        if not mats:
            raise ValidationError("enumerated group needs at least one matrix")
        d = mats[0].shape[0]
        for m in mats:
            if m.shape != (d, d):
                raise ValidationError("enumerated group matrices must share shape")
            if np.max(np.abs(m.T @ m - np.eye(d))) > 1e-10:
                raise ValidationError("enumerated group matrix is not orthogonal")
        # Closure under product and inverse; inverse = transpose for orthogonal
        # matrices.  O(m^2 d^3) once at construction so per-call cost stays O(md).
        def member(m):
            return any(np.max(np.abs(m - g)) <= 1e-8 for g in mats)

        for a in mats:
            if not member(a.T):
                raise ValidationError("enumerated group not closed under inverse")
            for b in mats:
                if not member(a @ b):
                    raise ValidationError("enumerated group not closed under product")
        object.__setattr__(self, "matrices", mats)

    @property
    def dim(self) -> int:
        return self.matrices[0].shape[0]

    @property
    def order(self) -> int:
        return len(self.matrices)


@dataclass(frozen=True)
class CyclicShift:
    """Circular translations of a length-n real signal."""

    n: int
    kind: ClassVar[str] = "cyclic"

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError("signal length must be positive")

    @property
    def dim(self) -> int:
        return self.n


@dataclass(frozen=True)
class FullPermutation:
    """All d! coordinate permutations."""

    d: int
    kind: ClassVar[str] = "perm"

    def __post_init__(self):
        if self.d < 1:
            raise ValidationError("dimension must be positive")

    @property
    def dim(self) -> int:
        return self.d


@dataclass(frozen=True)
class SignedPermutation:
    """Permutations composed with per-coordinate sign flips."""

    d: int
    kind: ClassVar[str] = "signedperm"

    def __post_init__(self):
        if self.d < 1:
            raise ValidationError("dimension must be positive")

    @property
    def dim(self) -> int:
        return self.d


@dataclass(frozen=True)
class SignFlips:
    """Diagonal +-1 matrices."""

    d: int
    kind: ClassVar[str] = "signflips"

    def __post_init__(self):
        if self.d < 1:
            raise ValidationError("dimension must be positive")

    @property
    def dim(self) -> int:
        return self.d


@dataclass(frozen=True)
class FullOrthogonal:
    """The whole orthogonal group O(d)."""

    d: int
    kind: ClassVar[str] = "orth"

    def __post_init__(self):
        if self.d < 1:
            raise ValidationError("dimension must be positive")

    @property
    def dim(self) -> int:
        return self.d


@dataclass(frozen=True)
class LeftOrthogonal:
    """O(k) acting on the left of (k, n) matrices (landmark rotations/reflections)."""

    k: int
    n: int
    kind: ClassVar[str] = "leftorth"

    def __post_init__(self):
        if self.k < 1 or self.n < 1:
            raise ValidationError("matrix shape must be positive")

    @property
    def shape(self) -> tuple:
        return (self.k, self.n)

    @property
    def dim(self) -> int:
        return self.k * self.n


@dataclass(frozen=True)
class ColumnPermutation:
    """S_n permuting the columns of (k, n) matrices (point-cloud relabeling)."""

    k: int
    n: int
    kind: ClassVar[str] = "colperm"

    def __post_init__(self):
        if self.k < 1 or self.n < 1:
            raise ValidationError("matrix shape must be positive")

    @property
    def shape(self) -> tuple:
        return (self.k, self.n)

    @property
    def dim(self) -> int:
        return self.k * self.n


@dataclass(frozen=True)
class PhaseCircle:
    """Global unit-modulus phase on a length-r complex vector."""

    r: int
    kind: ClassVar[str] = "phase"

    def __post_init__(self):
        if self.r < 1:
            raise ValidationError("dimension must be positive")

    @property
    def dim(self) -> int:
        # Real ambient dimension of C^r.
        return 2 * self.r


@dataclass(frozen=True)
class ShiftAndConjugate:
    """Cyclic shifts x unit phase x optional conjugation on complex signals.

    Realizes O(2) x C_n on planar closed curves encoded as complex vectors.
    """

    n: int
    kind: ClassVar[str] = "shiftconj"

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError("signal length must be positive")

    @property
    def dim(self) -> int:
        return 2 * self.n


@dataclass(frozen=True, eq=False)
class PatchPermutation:
    """Independent permutations within each patch of a fixed index partition."""

    patches: tuple
    kind: ClassVar[str] = "patchperm"

    def __post_init__(self):
        patches = tuple(tuple(int(i) for i in p) for p in self.patches)
        if not patches or any(len(p) == 0 for p in patches):
            raise ValidationError("patches must be nonempty")
        flat = sorted(i for p in patches for i in p)
        if flat != list(range(len(flat))):
            raise ValidationError("patches must tile the index set exactly once")
        object.__setattr__(self, "patches", patches)

    @property
    def dim(self) -> int:
        return sum(len(p) for p in self.patches)

    @classmethod
    def square(cls, side: int, grid: tuple) -> "PatchPermutation":
        """Partition of a (h, w) pixel grid (row-major) into side x side blocks."""
        h, w = grid
        if h % side or w % side:
            raise ValidationError("patch side must divide both grid dimensions")
        patches = []
        for bi in range(0, h, side):
            for bj in range(0, w, side):
                patches.append(tuple((bi + r) * w + (bj + c)
                                     for r in range(side) for c in range(side)))
        return cls(tuple(patches))


@dataclass(frozen=True)
class SlidingWindowShift:
    """Circular shifts of the T slices of a (c, w, T) windowed tensor."""

    c: int
    w: int
    t: int
    kind: ClassVar[str] = "window"

    def __post_init__(self):
        if self.c < 1 or self.w < 1 or self.t < 1:
            raise ValidationError("tensor shape must be positive")

    @property
    def shape(self) -> tuple:
        return (self.c, self.w, self.t)

    @property
    def dim(self) -> int:
        return self.c * self.w * self.t


GroupAction = (
    Enumerated | CyclicShift | FullPermutation | SignedPermutation | SignFlips
    | FullOrthogonal | LeftOrthogonal | ColumnPermutation | PhaseCircle
    | ShiftAndConjugate | PatchPermutation | SlidingWindowShift
)

_COMPLEX_KINDS = (PhaseCircle, ShiftAndConjugate)
_MATRIX_KINDS = (LeftOrthogonal, ColumnPermutation)


@dataclass
class FilterResult:
    """Max filter value together with the witnessing group element(s).

    ``witnesses`` holds per-kind encodings of every maximizer found within the
    tie tolerance; ``approximate`` marks grid/sampling lower bounds from the
    brute-force oracle on continuous groups.
    """

    value: float
    witnesses: list = field(default_factory=list)
    approximate: bool = False


def tie_tolerance(z, x) -> float:
    """Relative tie tolerance for witness collection under float64 roundoff."""
    return 1e-9 * (1.0 + float(np.linalg.norm(z)) * float(np.linalg.norm(x)))


# ---------------------------------------------------------------------------
# Input validation
# ---------------------------------------------------------------------------

def as_operand(group: GroupAction, x) -> np.ndarray:
    """Coerce ``x`` to the array layout the group acts on, validating shape."""
    if isinstance(group, _COMPLEX_KINDS):
        arr = np.asarray(x, dtype=complex)
        want = group.r if isinstance(group, PhaseCircle) else group.n
        if arr.shape != (want,):
            raise DimensionMismatch(f"expected complex vector of length {want}, got {arr.shape}")
    elif isinstance(group, _MATRIX_KINDS):
        arr = np.asarray(x, dtype=float)
        if arr.shape != group.shape:
            raise DimensionMismatch(f"expected matrix of shape {group.shape}, got {arr.shape}")
    elif isinstance(group, SlidingWindowShift):
        arr = np.asarray(x, dtype=float)
        if arr.shape != group.shape:
            raise DimensionMismatch(f"expected tensor of shape {group.shape}, got {arr.shape}")
    else:
        arr = np.asarray(x, dtype=float)
        if arr.shape != (group.dim,):
            raise DimensionMismatch(f"expected vector of length {group.dim}, got {arr.shape}")
    if not np.all(np.isfinite(arr.view(float) if arr.dtype == complex else arr)):
        raise ValidationError("operand contains NaN or infinity")
    return arr


def inner(x: np.ndarray, y: np.ndarray) -> float:
    """Real inner product: Euclidean/Frobenius, or Re(x^* y) on complex arrays."""
    if np.iscomplexobj(x) or np.iscomplexobj(y):
        return float(np.real(np.vdot(x, y)))
    return float(np.vdot(x, y))


def norm(x) -> float:
    return float(np.linalg.norm(np.asarray(x)))


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------

def max_filter(group: GroupAction, z, x) -> FilterResult:
    """Evaluate ``max_{g in G} <z, g x>`` by the kind's specialized algorithm.

    ``z`` is the template, ``x`` the input; both must live in the group's
    ambient space.  Witnesses are populated where the specialization yields
    them (all shipped kinds do).
    """
    from . import groups

    z = as_operand(group, z)
    x = as_operand(group, x)
    if isinstance(group, Enumerated):
        return _mf_enumerated(group, z, x)
    if isinstance(group, CyclicShift):
        return groups.mf_cyclic(z, x)
    if isinstance(group, FullPermutation):
        return groups.mf_sort_permutation(z, x)
    if isinstance(group, SignedPermutation):
        return groups.mf_signed_permutation(z, x)
    if isinstance(group, SignFlips):
        return groups.mf_sign_flips(z, x)
    if isinstance(group, FullOrthogonal):
        return groups.mf_orthogonal(z, x)
    if isinstance(group, LeftOrthogonal):
        return groups.mf_left_orthogonal(z, x)
    if isinstance(group, ColumnPermutation):
        return groups.mf_column_permutation(z, x)
    if isinstance(group, PhaseCircle):
        return groups.mf_phase(z, x)
    if isinstance(group, ShiftAndConjugate):
        return groups.mf_shift_conjugate(z, x)
    if isinstance(group, PatchPermutation):
        return groups.mf_patch_permutation(z, x, group.patches)
    if isinstance(group, SlidingWindowShift):
        return groups.mf_sliding_window(z, x)
    raise ValidationError(f"unsupported group action: {group!r}")


def _mf_enumerated(group: Enumerated, z, x) -> FilterResult:
    vals = np.array([float(z @ (g @ x)) for g in group.matrices])
    best = float(vals.max())
    tol = tie_tolerance(z, x)
    witnesses = [int(i) for i in np.flatnonzero(vals >= best - tol)]
    return FilterResult(value=best, witnesses=witnesses)


def quotient_distance(group: GroupAction, x, y) -> float:
    """Metric on orbits: sqrt(|x|^2 - 2 max_filter(x, y) + |y|^2), clamped at 0.

    The clamp absorbs roundoff when the orbits coincide.
    """
    x = as_operand(group, x)
    y = as_operand(group, y)
    mf = max_filter(group, x, y).value
    sq = norm(x) ** 2 - 2.0 * mf + norm(y) ** 2
    return math.sqrt(max(0.0, sq))


def filter_bank_apply(group: GroupAction, bank: Sequence, x) -> np.ndarray:
    """Feature vector with entry i = max_filter(group, bank[i], x).value."""
    if len(bank) == 0:
        raise ValidationError("filter bank is empty")
    vecs = []
    for t in bank:
        kind = getattr(t, "group_kind", None)
        if kind is not None and kind != group.kind:
            raise ValidationError(f"template bound to group kind {kind!r}, not {group.kind!r}")
        vecs.append(getattr(t, "vector", t))
    if isinstance(group, Enumerated):
        # One matrix product per group element instead of a loop over templates.
        x = as_operand(group, x)
        z = np.stack([as_operand(group, v) for v in vecs])
        return np.max(np.stack([z @ (g @ x) for g in group.matrices]), axis=0)
    return np.array([max_filter(group, v, x).value for v in vecs])


# ---------------------------------------------------------------------------
# Witness application / element sampling
# ---------------------------------------------------------------------------

def apply_witness(group: GroupAction, witness, x) -> np.ndarray:
    """Materialize ``g x`` for a per-kind witness encoding ``g``."""
    x = as_operand(group, x)
    if isinstance(group, Enumerated):
        return group.matrices[int(witness)] @ x
    if isinstance(group, CyclicShift):
        return np.roll(x, int(witness))
    if isinstance(group, (FullPermutation, PatchPermutation)):
        return x[np.asarray(witness, dtype=int)]
    if isinstance(group, SignedPermutation):
        perm, signs = witness
        return np.asarray(signs, dtype=float) * x[np.asarray(perm, dtype=int)]
    if isinstance(group, SignFlips):
        return np.asarray(witness, dtype=float) * x
    if isinstance(group, FullOrthogonal):
        return np.asarray(witness, dtype=float) @ x
    if isinstance(group, LeftOrthogonal):
        return np.asarray(witness, dtype=float) @ x
    if isinstance(group, ColumnPermutation):
        return x[:, np.asarray(witness, dtype=int)]
    if isinstance(group, PhaseCircle):
        return complex(witness) * x
    if isinstance(group, ShiftAndConjugate):
        shift, conj, phase = witness
        y = np.conj(x) if conj else x
        return complex(phase) * np.roll(y, int(shift))
    if isinstance(group, SlidingWindowShift):
        return np.roll(x, int(witness), axis=2)
    raise ValidationError(f"unsupported group action: {group!r}")


def random_element(group: GroupAction, rng: np.random.Generator):
    """Draw a random group element in witness encoding (Haar for continuous kinds)."""
    if isinstance(group, Enumerated):
        return int(rng.integers(group.order))
    if isinstance(group, CyclicShift):
        return int(rng.integers(group.n))
    if isinstance(group, FullPermutation):
        return rng.permutation(group.d)
    if isinstance(group, SignedPermutation):
        return (rng.permutation(group.d), rng.choice([-1.0, 1.0], size=group.d))
    if isinstance(group, SignFlips):
        return rng.choice([-1.0, 1.0], size=group.d)
    if isinstance(group, FullOrthogonal):
        return _haar_orthogonal(group.d, rng)
    if isinstance(group, LeftOrthogonal):
        return _haar_orthogonal(group.k, rng)
    if isinstance(group, ColumnPermutation):
        return rng.permutation(group.n)
    if isinstance(group, PhaseCircle):
        theta = rng.uniform(0.0, 2.0 * math.pi)
        return complex(math.cos(theta), math.sin(theta))
    if isinstance(group, ShiftAndConjugate):
        theta = rng.uniform(0.0, 2.0 * math.pi)
        return (int(rng.integers(group.n)), bool(rng.integers(2)),
                complex(math.cos(theta), math.sin(theta)))
    if isinstance(group, PatchPermutation):
        perm = np.arange(group.dim)
        for p in group.patches:
            idx = np.asarray(p)
            perm[idx] = idx[rng.permutation(len(p))]
        return perm
    if isinstance(group, SlidingWindowShift):
        return int(rng.integers(group.t))
    raise ValidationError(f"unsupported group action: {group!r}")


def _haar_orthogonal(d: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.standard_normal((d, d))
    q, r = np.linalg.qr(a)
    return q * np.sign(np.diag(r))


def group_order(group: GroupAction) -> Optional[int]:
    """Number of elements for finite kinds; None for continuous groups."""
    if isinstance(group, Enumerated):
        return group.order
    if isinstance(group, CyclicShift):
        return group.n
    if isinstance(group, FullPermutation):
        return math.factorial(group.d)
    if isinstance(group, SignedPermutation):
        return math.factorial(group.d) * 2 ** group.d
    if isinstance(group, SignFlips):
        return 2 ** group.d
    if isinstance(group, ColumnPermutation):
        return math.factorial(group.n)
    if isinstance(group, PatchPermutation):
        order = 1
        for p in group.patches:
            order *= math.factorial(len(p))
        return order
    if isinstance(group, SlidingWindowShift):
        return group.t
    return None


# ---------------------------------------------------------------------------
# Brute-force oracle
# ---------------------------------------------------------------------------

def brute_force_max_filter(group: GroupAction, z, x, *, resolution: int = 10_000,
                           cap: int = 2_000_000) -> FilterResult:
    """Exact max over all enumerated elements; grid/sampling lower bound for
    continuous kinds (flagged ``approximate``).  Test oracle only: slow on
    purpose and independent of the specialized paths.
    """
    z = as_operand(group, z)
    x = as_operand(group, x)
    tol = tie_tolerance(z, x)

    if isinstance(group, Enumerated):
        return _mf_enumerated(group, z, x)

    if isinstance(group, CyclicShift):
        vals = np.array([float(z @ np.roll(x, a)) for a in range(group.n)])
        return _pick(vals, tol, lambda i: int(i))

    if isinstance(group, FullPermutation):
        if group.d > 8:
            raise EnumerationCapExceeded("permutation enumeration capped at d <= 8")
        perms = np.array(list(itertools.permutations(range(group.d))))
        vals = x[perms] @ z
        return _pick(vals, tol, lambda i: perms[i].copy())

    if isinstance(group, SignedPermutation):
        if group.d > 6:
            raise EnumerationCapExceeded("signed permutation enumeration capped at d <= 6")
        perms = np.array(list(itertools.permutations(range(group.d))))
        signs = np.array(list(itertools.product([-1.0, 1.0], repeat=group.d)))
        vals = (x[perms] * z) @ signs.T            # (n_perm, n_sign)
        flat = vals.ravel()
        best = float(flat.max())
        idx = np.flatnonzero(flat >= best - tol)
        wits = [(perms[i // len(signs)].copy(), signs[i % len(signs)].copy()) for i in idx]
        return FilterResult(value=best, witnesses=wits)

    if isinstance(group, SignFlips):
        if group.d > 16:
            raise EnumerationCapExceeded("sign-flip enumeration capped at d <= 16")
        signs = np.array(list(itertools.product([-1.0, 1.0], repeat=group.d)))
        vals = signs @ (z * x)
        return _pick(vals, tol, lambda i: signs[i].copy())

    if isinstance(group, ColumnPermutation):
        if group.n > 8:
            raise EnumerationCapExceeded("column permutation enumeration capped at n <= 8")
        profit = z.T @ x                           # profit[j, i] = <z_col_j, x_col_i>
        perms = np.array(list(itertools.permutations(range(group.n))))
        vals = profit[np.arange(group.n), perms].sum(axis=1)
        return _pick(vals, tol, lambda i: perms[i].copy())

    if isinstance(group, PatchPermutation):
        if any(len(p) > 8 for p in group.patches):
            raise EnumerationCapExceeded("patch enumeration capped at 8 cells per patch")
        total = 1
        for p in group.patches:
            total *= math.factorial(len(p))
            if total > cap:
                raise EnumerationCapExceeded(f"patch enumeration exceeds cap {cap}")
        best_perm = np.arange(group.dim)
        value = 0.0
        # Patches are independent, so enumerate each patch separately.
        for p in group.patches:
            idx = np.asarray(p)
            sub_perms = np.array(list(itertools.permutations(range(len(p)))))
            vals = x[idx][sub_perms] @ z[idx]
            j = int(np.argmax(vals))
            value += float(vals[j])
            best_perm[idx] = idx[sub_perms[j]]
        return FilterResult(value=value, witnesses=[best_perm])

    if isinstance(group, SlidingWindowShift):
        vals = np.array([float(np.sum(z * np.roll(x, a, axis=2))) for a in range(group.t)])
        return _pick(vals, tol, lambda i: int(i))

    if isinstance(group, PhaseCircle):
        w = np.vdot(z, x)
        thetas = np.linspace(0.0, 2.0 * math.pi, resolution, endpoint=False)
        phases = np.exp(1j * thetas)
        vals = np.real(phases * w)
        i = int(np.argmax(vals))
        return FilterResult(value=float(vals[i]), witnesses=[complex(phases[i])],
                            approximate=True)

    if isinstance(group, ShiftAndConjugate):
        thetas = np.linspace(0.0, 2.0 * math.pi, resolution, endpoint=False)
        phases = np.exp(1j * thetas)
        best, wit = -np.inf, None
        for conj in (False, True):
            base = np.conj(x) if conj else x
            for a in range(group.n):
                w = np.vdot(z, np.roll(base, a))
                vals = np.real(phases * w)
                i = int(np.argmax(vals))
                if vals[i] > best:
                    best, wit = float(vals[i]), (a, conj, complex(phases[i]))
        return FilterResult(value=best, witnesses=[wit], approximate=True)

    if isinstance(group, FullOrthogonal):
        return _orthogonal_search(group.d, lambda q: float(z @ (q @ x)), resolution)

    if isinstance(group, LeftOrthogonal):
        return _orthogonal_search(group.k, lambda q: float(np.sum(z * (q @ x))), resolution)

    raise ValidationError(f"unsupported group action: {group!r}")


def _pick(vals: np.ndarray, tol: float, make_witness) -> FilterResult:
    best = float(vals.max())
    idx = np.flatnonzero(vals >= best - tol)
    return FilterResult(value=best, witnesses=[make_witness(int(i)) for i in idx])


def _orthogonal_search(d: int, score, resolution: int) -> FilterResult:
    """Dense O(2) grid for d = 2; random orthogonal sampling for d >= 3.

    Either way the result is a lower bound on the true maximum.
    """
    best, wit = -np.inf, None
    if d == 1:
        for q in (np.array([[1.0]]), np.array([[-1.0]])):
            v = score(q)
            if v > best:
                best, wit = v, q
        return FilterResult(value=best, witnesses=[wit])
    if d == 2:
        # score is linear in the matrix, so each O(2) branch traces a pure
        # sinusoid over the angle grid; four base evaluations suffice.
        thetas = np.linspace(0.0, 2.0 * math.pi, resolution, endpoint=False)
        cos, sin = np.cos(thetas), np.sin(thetas)
        eye = np.array([[1.0, 0.0], [0.0, 1.0]])
        rot90 = np.array([[0.0, -1.0], [1.0, 0.0]])
        flip = np.array([[1.0, 0.0], [0.0, -1.0]])
        swap = np.array([[0.0, 1.0], [1.0, 0.0]])
        rot_vals = score(eye) * cos + score(rot90) * sin
        ref_vals = score(flip) * cos + score(swap) * sin
        i_rot = int(np.argmax(rot_vals))
        i_ref = int(np.argmax(ref_vals))
        if rot_vals[i_rot] >= ref_vals[i_ref]:
            best = float(rot_vals[i_rot])
            wit = cos[i_rot] * eye + sin[i_rot] * rot90
        else:
            best = float(ref_vals[i_ref])
            wit = cos[i_ref] * flip + sin[i_ref] * swap
        return FilterResult(value=best, witnesses=[wit], approximate=True)
    rng = np.random.default_rng(resolution)
    for _ in range(resolution):
        q = _haar_orthogonal(d, rng)
        for cand in (q, -q):
            v = score(cand)
            if v > best:
                best, wit = v, cand
    return FilterResult(value=best, witnesses=[wit], approximate=True)
