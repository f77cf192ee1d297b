"""End-to-end invariant-feature classification.

Ingestion of the supported file formats, the three worked featurizations
(planar shape signals, windowed time series, multiscale sorted-patch texture
features), PCA + pooled-covariance LDA, joint subgradient training of
templates with a linear hinge classifier, and a versioned JSON model format.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import calculus
from .core import (ColumnPermutation, CyclicShift, Enumerated, FullOrthogonal,
                   FullPermutation, GroupAction, LeftOrthogonal, NumericFailure,
                   PatchPermutation, PhaseCircle, ShiftAndConjugate, SignFlips,
                   SignedPermutation, SlidingWindowShift, ValidationError,
                   filter_bank_apply, max_filter)
from .templates import HermiteSpec, Template, hermite_template, unit_sphere_vectors

MODEL_FORMAT = "maxfilt-model/1"


@dataclass(eq=False)
class LabeledDataset:
    """Raw samples with string labels; features attach after extraction."""

    samples: list                      # list of (raw object, label)
    format: str = ""
    feature_matrix: Optional[np.ndarray] = None

    @property
    def labels(self) -> list:
        return [lab for _, lab in self.samples]

    @property
    def raws(self) -> list:
        return [raw for raw, _ in self.samples]


def parallel_map(fn, items, threads: int = 1) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# Ingestion
# ---------------------------------------------------------------------------

def ingest(path: str, format: str) -> LabeledDataset:
    """Parse a dataset file per the declared format, with shape validation."""
    if format == "csv":
        return _ingest_csv(path)
    if format == "pgm":
        return _ingest_pgm(path)
    if format == "polygon_json":
        return _ingest_polygons(path)
    if format == "ecg_csv":
        return _ingest_ecg(path)
    raise ValidationError(f"unknown format {format!r}")


def _ingest_csv(path: str) -> LabeledDataset:
    samples = []
    dim = None
    with open(path, "r", encoding="utf-8") as fh:
        rows = [line.rstrip("\n") for line in fh if line.strip()]
    if not rows:
        raise ValidationError("empty csv file")
    for line in rows[1:]:                       # header row skipped
        if line.count(",") >= 1 and line.lstrip().startswith("\"["):
            # JSON-vector variant: "json array", label
            closing = line.rindex("\"")
            vec = np.asarray(json.loads(line[1:closing]), dtype=float)
            label = line[closing + 1:].lstrip(",").strip()
        elif line.lstrip().startswith("["):
            closing = line.rindex("]")
            vec = np.asarray(json.loads(line[:closing + 1]), dtype=float)
            label = line[closing + 1:].lstrip(",").strip()
        else:
            cells = line.split(",")
            try:
                vec = np.asarray([float(c) for c in cells[:-1]])
            except ValueError as exc:
                raise ValidationError(f"malformed csv row: {line!r}") from exc
            label = cells[-1].strip()
        if not label:
            raise ValidationError("csv row missing label")
        if dim is None:
            dim = len(vec)
        elif len(vec) != dim:
            raise ValidationError("inconsistent vector lengths in csv")
        samples.append((vec, label))
    return LabeledDataset(samples=samples, format="csv")


def parse_pgm(path: str) -> np.ndarray:
    """Binary P5, 8-bit, square power-of-two side; values scaled to [0, 1]."""
    with open(path, "rb") as fh:
        data = fh.read()
    tokens = []
    i = 0
    while len(tokens) < 4:
        if i >= len(data):
            raise ValidationError("truncated pgm header")
        if data[i:i + 1] == b"#":
            while i < len(data) and data[i:i + 1] != b"\n":
                i += 1
        elif data[i:i + 1].isspace():
            i += 1
        else:
            j = i
            while j < len(data) and not data[j:j + 1].isspace():
                j += 1
            tokens.append(data[i:j])
            i = j
    if tokens[0] != b"P5":
        raise ValidationError("not a binary P5 pgm")
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval > 255:
        raise ValidationError("only 8-bit pgm supported")
    if width != height or width & (width - 1):
        raise ValidationError("pgm must be square with power-of-two side")
    i += 1                                       # single whitespace after maxval
    pixels = np.frombuffer(data[i:i + width * height], dtype=np.uint8)
    if len(pixels) != width * height:
        raise ValidationError("pgm pixel payload truncated")
    return pixels.reshape(height, width).astype(float) / maxval


def write_pgm(path: str, image: np.ndarray) -> None:
    img = np.asarray(image, dtype=float)
    pixels = np.clip(np.round(img * 255.0), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode())
        fh.write(pixels.tobytes())


def _read_manifest(path: str) -> list:
    with open(path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    base = os.path.dirname(os.path.abspath(path))
    entries = manifest["samples"] if isinstance(manifest, dict) else manifest
    out = []
    for entry in entries:
        p = entry["path"]
        if not os.path.isabs(p):
            p = os.path.join(base, p)
        out.append((p, str(entry["label"])))
    return out


def _ingest_pgm(path: str) -> LabeledDataset:
    if path.endswith(".pgm"):
        label = os.path.splitext(os.path.basename(path))[0].split("-")[0]
        return LabeledDataset(samples=[(parse_pgm(path), label)], format="pgm")
    samples = [(parse_pgm(p), lab) for p, lab in _read_manifest(path)]
    if len({img.shape for img, _ in samples}) > 1:
        raise ValidationError("pgm images must share a common shape")
    return LabeledDataset(samples=samples, format="pgm")


def _ingest_polygons(path: str) -> LabeledDataset:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = [data]
    samples = []
    for entry in data:
        verts = np.asarray(entry["vertices"], dtype=float)
        if verts.ndim != 2 or verts.shape[1] != 2 or verts.shape[0] < 3:
            raise ValidationError("polygon needs at least 3 planar vertices")
        samples.append((verts, str(entry.get("label", ""))))
    return LabeledDataset(samples=samples, format="polygon_json")


def _ingest_ecg(path: str) -> LabeledDataset:
    samples = []
    shape = None
    for p, label in _read_manifest(path):
        mat = np.loadtxt(p, delimiter=",", ndmin=2)
        if shape is None:
            shape = mat.shape
        elif mat.shape != shape:
            raise ValidationError("ecg sample files must share a common shape")
        samples.append((mat, label))
    return LabeledDataset(samples=samples, format="ecg_csv")


# ---------------------------------------------------------------------------
# Featurizations
# ---------------------------------------------------------------------------

def district_embed(polygon: np.ndarray, n_samples: int) -> np.ndarray:
    """Arc-length resampling of a closed polygon to a complex signal:
    n equally spaced boundary points, centroid at 0, unit perimeter."""
    verts = np.asarray(polygon, dtype=float)
    if verts.ndim != 2 or verts.shape[1] != 2 or verts.shape[0] < 3:
        raise ValidationError("polygon needs at least 3 planar vertices")
    closed = np.vstack([verts, verts[:1]])
    seg = np.diff(closed, axis=0)
    seg_len = np.linalg.norm(seg, axis=1)
    perimeter = float(seg_len.sum())
    if perimeter <= 0:
        raise ValidationError("degenerate polygon (zero perimeter)")
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    targets = np.arange(n_samples) * perimeter / n_samples
    idx = np.searchsorted(cum, targets, side="right") - 1
    idx = np.clip(idx, 0, len(seg_len) - 1)
    frac = (targets - cum[idx]) / np.where(seg_len[idx] > 0, seg_len[idx], 1.0)
    pts = closed[idx] + frac[:, None] * seg[idx]
    pts = pts - pts.mean(axis=0)
    rolled = np.roll(pts, -1, axis=0)
    sampled_perimeter = float(np.linalg.norm(rolled - pts, axis=1).sum())
    if sampled_perimeter <= 0:
        raise ValidationError("degenerate polygon after resampling")
    pts /= sampled_perimeter
    return pts[:, 0] + 1j * pts[:, 1]


def ecg_lift(x: np.ndarray, w: int) -> np.ndarray:
    """Lift a (c, t) matrix to the (c, w, t - w + 1) tensor of sliding windows,
    each window de-meaned per channel (discards trend)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise ValidationError("expected a channels x time matrix")
    c, t = x.shape
    if not 1 <= w <= t:
        raise ValidationError("need t >= w >= 1")
    windows = np.lib.stride_tricks.sliding_window_view(x, w, axis=1)  # (c, T, w)
    tensor = windows.transpose(0, 2, 1).astype(float).copy()
    tensor -= tensor.mean(axis=1, keepdims=True)
    return tensor


def texture_features(image: np.ndarray, levels: Sequence[int], degrees: Sequence[int],
                     hermite: bool = True, rng_seed: int = 0) -> np.ndarray:
    """Multiscale sorted-patch features: for each patch scale 2^l and each
    degree, sort the pixels of every 2^l x 2^l patch, take the inner product
    with the discretized eigenfunction of that degree, and sum over patches.

    With ``hermite=False`` a literal random Gaussian template (same template
    tiled into every patch, sorted once) replaces each eigenfunction; that
    variant is the exact patch-permutation max filter for A/B comparison.
    """
    img = np.asarray(image, dtype=float)
    if img.ndim != 2 or img.shape[0] != img.shape[1]:
        raise ValidationError("image must be square")
    side = img.shape[0]
    if side & (side - 1):
        raise ValidationError("image side must be a power of two")
    levels = list(levels)
    degrees = list(degrees)
    if not levels or not degrees:
        raise ValidationError("levels and degrees must be nonempty")
    if side < 2 ** max(levels):
        raise ValidationError("image smaller than the largest patch scale")
    rng = np.random.default_rng(rng_seed)
    feats = []
    for lev in levels:
        s = 2 ** lev
        patches = (img.reshape(side // s, s, side // s, s)
                   .swapaxes(1, 2).reshape(-1, s * s))
        patches = np.sort(patches, axis=1)
        for deg in degrees:
            if hermite:
                v = hermite_template(HermiteSpec(degree=deg, length=s * s)).vector
            else:
                v = np.sort(rng.standard_normal(s * s))
            feats.append(float((patches @ v).sum()))
    return np.asarray(feats)


# ---------------------------------------------------------------------------
# PCA / LDA
# ---------------------------------------------------------------------------

def pca_fit(features: np.ndarray, k: int) -> tuple:
    """Mean and top-k orthonormal principal directions of the sample
    covariance, with the deterministic sign convention that each component's
    largest-magnitude coordinate is positive."""
    x = np.asarray(features, dtype=float)
    n, f = x.shape
    if k > min(n - 1, f) or k < 1:
        raise ValidationError(f"need 1 <= k <= min(N - 1, F) = {min(n - 1, f)}")
    mean = x.mean(axis=0)
    _, _, vt = np.linalg.svd(x - mean, full_matrices=False)
    basis = vt[:k].T
    for j in range(k):
        lead = np.argmax(np.abs(basis[:, j]))
        if basis[lead, j] < 0:
            basis[:, j] = -basis[:, j]
    return mean, basis


def pca_transform(features: np.ndarray, mean: np.ndarray, basis: np.ndarray) -> np.ndarray:
    return (np.atleast_2d(features) - mean) @ basis


def lda_fit(features: np.ndarray, labels: Sequence[str], reg_scale: float = 1e-6) -> dict:
    """Pooled-covariance linear discriminant with ridge regularization
    lambda = reg_scale * trace / F.  With one sample per class the pooled
    covariance is empty and the model falls back to nearest class mean."""
    x = np.asarray(features, dtype=float)
    labels = [str(l) for l in labels]
    classes = sorted(set(labels))
    if len(classes) < 2:
        raise ValidationError("need at least two classes")
    n, f = x.shape
    means = np.stack([x[[l == c for l in labels]].mean(axis=0) for c in classes])
    counts = np.array([sum(l == c for l in labels) for c in classes])
    if np.any(counts < 1):
        raise ValidationError("every class needs at least one sample")
    nearest_mean = bool(n <= len(classes))
    if nearest_mean:
        precision = np.eye(f)
        log_priors = np.zeros(len(classes))
    else:
        scatter = np.zeros((f, f))
        for c, mu in zip(classes, means):
            xc = x[[l == c for l in labels]] - mu
            scatter += xc.T @ xc
        cov = scatter / (n - len(classes))
        lam = reg_scale * np.trace(cov) / f
        cov = cov + lam * np.eye(f)
        try:
            precision = np.linalg.inv(cov)
        except np.linalg.LinAlgError as exc:
            raise NumericFailure(f"singular pooled covariance: {exc}") from exc
        log_priors = np.log(counts / n)
    return {"type": "lda", "classes": classes, "means": means,
            "precision": precision, "log_priors": log_priors,
            "nearest_mean": nearest_mean}


def lda_predict(model: dict, features: np.ndarray) -> list:
    x = np.atleast_2d(np.asarray(features, dtype=float))
    means = np.asarray(model["means"], dtype=float)
    prec = np.asarray(model["precision"], dtype=float)
    log_priors = np.asarray(model["log_priors"], dtype=float)
    pm = means @ prec                                   # (C, F)
    scores = x @ pm.T - 0.5 * np.sum(pm * means, axis=1) + log_priors
    picks = np.argmax(scores, axis=1)                   # ties: first = smallest label
    classes = model["classes"]
    return [classes[i] for i in picks]


# ---------------------------------------------------------------------------
# Joint template + hinge classifier training
# ---------------------------------------------------------------------------

@dataclass
class TrainConfig:
    epochs: int = 150
    learning_rate: float = 0.5
    ridge: float = 1e-3
    rng_seed: int = 0
    threads: int = 1
    freeze_templates: bool = False   # optimize only the convex (w, b) slice


def _init_templates(group: GroupAction, n_templates: int, rng: np.random.Generator) -> list:
    if isinstance(group, SlidingWindowShift):
        out = []
        for _ in range(n_templates):
            z = np.zeros(group.shape)
            slab = rng.standard_normal((group.c, group.w))
            z[:, :, 0] = slab / np.linalg.norm(slab)
            out.append(z)
        return out
    return [unit_sphere_vectors(1, group.dim, rng)[0] for _ in range(n_templates)]


def _hinge_loss(feats: np.ndarray, y: np.ndarray, w: np.ndarray, b: float,
                ridge: float) -> float:
    margins = y * (feats @ w + b)
    return float(np.mean(np.maximum(0.0, 1.0 - margins)) + ridge * float(w @ w))


def train_svm_templates(dataset: LabeledDataset, group: GroupAction, n_templates: int,
                        config: Optional[TrainConfig] = None) -> "PipelineModel":
    """Jointly optimize max-filter templates and a linear hinge classifier by
    projected subgradient descent (step eta_0 / sqrt(t), full batch).

    Templates for the sliding-window group stay supported on their initial
    slice.  The returned model holds the averaged iterates; the loss history
    of the running iterate and the initial/final losses of the averaged one
    are recorded in the config snapshot.
    """
    config = config or TrainConfig()
    labels = dataset.labels
    classes = sorted(set(labels))
    if len(classes) != 2:
        raise ValidationError("hinge training requires exactly two classes")
    y = np.array([1.0 if l == classes[1] else -1.0 for l in labels])
    raws = dataset.raws
    rng = np.random.default_rng(config.rng_seed)
    templates = _init_templates(group, n_templates, rng)
    # Alternating nonzero weights break the cold start: template subgradients
    # are proportional to w, so an all-zero init would freeze the templates.
    w = np.array([(-1.0) ** i for i in range(n_templates)]) / n_templates
    b = 0.0

    def extract(zs):
        cols = []
        subs = []
        for z in zs:
            pairs = parallel_map(
                lambda x: (max_filter(group, z, x).value,
                           calculus.subgradient(group, z, x, "first")),
                raws, threads=config.threads)
            cols.append([p[0] for p in pairs])
            subs.append([p[1] for p in pairs])
        return np.array(cols).T, subs              # (N, K), per-template images

    feats, _ = extract(templates)
    initial_loss = _hinge_loss(feats, y, w, b, config.ridge)
    w_sum = np.zeros_like(w)
    b_sum = 0.0
    z_sum = [np.zeros_like(z) for z in templates]
    history = []
    n = len(raws)
    for t in range(1, config.epochs + 1):
        feats, subs = extract(templates)
        loss = _hinge_loss(feats, y, w, b, config.ridge)
        if not math.isfinite(loss):
            raise NumericFailure("training diverged (non-finite loss)")
        history.append(loss)
        margins = y * (feats @ w + b)
        active = margins < 1.0
        gw = 2.0 * config.ridge * w - (feats * (active * y)[:, None]).mean(axis=0)
        gb = -float(np.mean(active * y))
        eta = config.learning_rate / math.sqrt(t)
        if not config.freeze_templates:
            for i in range(n_templates):
                gz = np.zeros_like(templates[i])
                for s in range(n):
                    if active[s]:
                        gz -= y[s] * w[i] * subs[i][s]
                gz /= n
                templates[i] = templates[i] - eta * gz
                if isinstance(group, SlidingWindowShift):
                    keep = templates[i][:, :, 0].copy()
                    templates[i][:] = 0.0
                    templates[i][:, :, 0] = keep
        w = w - eta * gw
        b = b - eta * gb
        w_sum += w
        b_sum += b
        for i in range(n_templates):
            z_sum[i] += templates[i]

    w_avg = w_sum / config.epochs
    b_avg = b_sum / config.epochs
    z_avg = [zs / config.epochs for zs in z_sum]
    feats, _ = extract(z_avg)
    final_loss = _hinge_loss(feats, y, w_avg, b_avg, config.ridge)
    tmpl = [Template(vector=z, group_kind=group.kind, label=f"trained-{i}")
            for i, z in enumerate(z_avg)]
    return PipelineModel(
        templates=tmpl, pca_mean=None, pca_basis=None,
        classifier={"type": "svm", "weights": w_avg, "bias": b_avg,
                    "labels": classes},
        group=group,
        config={"featurizer": "filter_bank", "epochs": config.epochs,
                "learning_rate": config.learning_rate, "ridge": config.ridge,
                "rng_seed": config.rng_seed, "initial_loss": initial_loss,
                "final_loss": final_loss, "loss_history": history})


def train_one_vs_rest_templates(dataset: LabeledDataset, group: GroupAction,
                                n_templates: int,
                                config: Optional[TrainConfig] = None) -> list:
    """Minimal multiclass extension: one binary model per class against the
    rest.  Returns (class, model) pairs; predict with
    :func:`predict_one_vs_rest`."""
    classes = sorted(set(dataset.labels))
    if len(classes) < 2:
        raise ValidationError("need at least two classes")
    out = []
    for cls in classes:
        relabeled = LabeledDataset(
            samples=[(x, "pos" if lab == cls else "neg") for x, lab in dataset.samples],
            format=dataset.format)
        out.append((cls, train_svm_templates(relabeled, group, n_templates, config)))
    return out


def predict_one_vs_rest(models: list, raw) -> str:
    best_cls, best_score = None, -math.inf
    for cls, model in models:
        feats = model_features(model, raw)
        score = float(np.asarray(model.classifier["weights"]) @ feats
                      + model.classifier["bias"])
        if score > best_score:
            best_cls, best_score = cls, score
    return best_cls


def make_planted_window_dataset(n_per_class: int, c: int, w: int, t: int,
                                noise: float, rng_seed: int,
                                motif_seed: Optional[int] = None) -> LabeledDataset:
    """Synthetic two-motif dataset for the sliding-window group: each sample
    is Gaussian noise with one of two fixed unit motifs planted in a random
    slice.  Pass the same ``motif_seed`` to draw train/test splits around the
    same pair of motifs."""
    rng = np.random.default_rng(rng_seed)
    motif_rng = np.random.default_rng(rng_seed if motif_seed is None else motif_seed)
    motifs = []
    for _ in range(2):
        m = motif_rng.standard_normal((c, w))
        motifs.append(m / np.linalg.norm(m))
    samples = []
    for cls, (name, motif) in enumerate(zip(("neg", "pos"), motifs)):
        for _ in range(n_per_class):
            x = noise * rng.standard_normal((c, w, t))
            x[:, :, int(rng.integers(t))] += motif
            samples.append((x, name))
    order = rng.permutation(len(samples))
    return LabeledDataset(samples=[samples[i] for i in order], format="planted")


# ---------------------------------------------------------------------------
# Model container and serialization
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class PipelineModel:
    """Immutable-once-fit bundle: templates, optional PCA, classifier, config."""

    templates: list
    pca_mean: Optional[np.ndarray]
    pca_basis: Optional[np.ndarray]
    classifier: dict
    group: Optional[GroupAction]
    config: dict


def group_to_jsonable(group: Optional[GroupAction]) -> Optional[dict]:
    if group is None:
        return None
    if isinstance(group, Enumerated):
        return {"kind": group.kind, "matrices": [m.tolist() for m in group.matrices]}
    if isinstance(group, CyclicShift):
        return {"kind": group.kind, "n": group.n}
    if isinstance(group, (FullPermutation, SignedPermutation, SignFlips, FullOrthogonal)):
        return {"kind": group.kind, "d": group.d}
    if isinstance(group, (LeftOrthogonal, ColumnPermutation)):
        return {"kind": group.kind, "k": group.k, "n": group.n}
    if isinstance(group, PhaseCircle):
        return {"kind": group.kind, "r": group.r}
    if isinstance(group, ShiftAndConjugate):
        return {"kind": group.kind, "n": group.n}
    if isinstance(group, PatchPermutation):
        return {"kind": group.kind, "patches": [list(p) for p in group.patches]}
    if isinstance(group, SlidingWindowShift):
        return {"kind": group.kind, "c": group.c, "w": group.w, "t": group.t}
    raise ValidationError(f"unsupported group action: {group!r}")


def group_from_jsonable(data: Optional[dict]) -> Optional[GroupAction]:
    if data is None:
        return None
    kind = data["kind"]
    if kind == "enumerated":
        return Enumerated(tuple(np.asarray(m) for m in data["matrices"]))
    if kind == "cyclic":
        return CyclicShift(data["n"])
    if kind == "perm":
        return FullPermutation(data["d"])
    if kind == "signedperm":
        return SignedPermutation(data["d"])
    if kind == "signflips":
        return SignFlips(data["d"])
    if kind == "orth":
        return FullOrthogonal(data["d"])
    if kind == "leftorth":
        return LeftOrthogonal(data["k"], data["n"])
    if kind == "colperm":
        return ColumnPermutation(data["k"], data["n"])
    if kind == "phase":
        return PhaseCircle(data["r"])
    if kind == "shiftconj":
        return ShiftAndConjugate(data["n"])
    if kind == "patchperm":
        return PatchPermutation(tuple(tuple(p) for p in data["patches"]))
    if kind == "window":
        return SlidingWindowShift(data["c"], data["w"], data["t"])
    raise ValidationError(f"unknown group kind {kind!r}")


def _array_to_jsonable(arr):
    if arr is None:
        return None
    arr = np.asarray(arr)
    if np.iscomplexobj(arr):
        return {"complex": True, "re": arr.real.tolist(), "im": arr.imag.tolist()}
    return arr.tolist()


def _array_from_jsonable(data):
    if data is None:
        return None
    if isinstance(data, dict) and data.get("complex"):
        return np.asarray(data["re"]) + 1j * np.asarray(data["im"])
    return np.asarray(data, dtype=float)


def _template_to_jsonable(t: Template) -> dict:
    d = t.to_dict()
    vec = np.asarray(t.vector)
    if vec.ndim > 1:
        d["vector"] = _array_to_jsonable(vec)
        d["shape"] = list(vec.shape)
    return d


def _template_from_jsonable(d: dict) -> Template:
    if "shape" in d:
        vec = _array_from_jsonable(d["vector"])
        return Template(vector=vec, group_kind=d.get("group_kind"),
                        support=tuple(d["support"]) if d.get("support") else None,
                        label=d.get("label", ""))
    return Template.from_dict(d)


def save_model(model: PipelineModel, path: str) -> None:
    doc = {
        "format": MODEL_FORMAT,
        "group": group_to_jsonable(model.group),
        "templates": [_template_to_jsonable(t) for t in model.templates],
        "pca": None if model.pca_mean is None else {
            "mean": _array_to_jsonable(model.pca_mean),
            "basis": _array_to_jsonable(model.pca_basis)},
        "classifier": {k: _array_to_jsonable(v) if isinstance(v, np.ndarray) else v
                       for k, v in model.classifier.items()},
        "config": model.config,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path: str) -> PipelineModel:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != MODEL_FORMAT:
        raise ValidationError(f"unsupported model format {doc.get('format')!r}")
    classifier = dict(doc["classifier"])
    for key in ("weights", "means", "precision", "log_priors"):
        if key in classifier:
            classifier[key] = _array_from_jsonable(classifier[key])
    pca = doc.get("pca")
    basis = None if pca is None else _array_from_jsonable(pca["basis"])
    if basis is not None:
        gram = basis.T @ basis
        if np.max(np.abs(gram - np.eye(basis.shape[1]))) > 1e-9:
            raise ValidationError("model PCA basis columns are not orthonormal")
    return PipelineModel(
        templates=[_template_from_jsonable(t) for t in doc["templates"]],
        pca_mean=None if pca is None else _array_from_jsonable(pca["mean"]),
        pca_basis=basis,
        classifier=classifier,
        group=group_from_jsonable(doc.get("group")),
        config=doc.get("config", {}),
    )


# ---------------------------------------------------------------------------
# High-level fit / predict
# ---------------------------------------------------------------------------

def fit_texture_model(images: Sequence[np.ndarray], labels: Sequence[str],
                      levels: Sequence[int], degrees: Sequence[int],
                      pca_k: int = 25, hermite: bool = True,
                      rng_seed: int = 0, threads: int = 1) -> PipelineModel:
    """Texture pipeline: multiscale sorted-patch features, PCA (capped at the
    feasible rank), then pooled-covariance LDA."""
    feats = np.stack(parallel_map(
        lambda img: texture_features(img, levels, degrees, hermite=hermite,
                                     rng_seed=rng_seed),
        list(images), threads=threads))
    n, f = feats.shape
    k_eff = min(pca_k, n - 1, f)
    mean, basis = pca_fit(feats, k_eff)
    projected = pca_transform(feats, mean, basis)
    lda = lda_fit(projected, labels)
    return PipelineModel(
        templates=[], pca_mean=mean, pca_basis=basis, classifier=lda, group=None,
        config={"featurizer": "texture", "levels": list(levels),
                "degrees": list(degrees), "hermite": hermite,
                "rng_seed": rng_seed, "pca_k_requested": pca_k, "pca_k": k_eff})


def model_features(model: PipelineModel, raw) -> np.ndarray:
    kind = model.config.get("featurizer", "filter_bank")
    if kind == "texture":
        feats = texture_features(raw, model.config["levels"], model.config["degrees"],
                                 hermite=model.config.get("hermite", True),
                                 rng_seed=model.config.get("rng_seed", 0))
    elif kind == "filter_bank":
        if model.group is None:
            raise ValidationError("model lacks a group binding")
        feats = filter_bank_apply(model.group, model.templates, raw)
    else:
        raise ValidationError(f"unknown featurizer {kind!r}")
    if model.pca_mean is not None:
        feats = pca_transform(feats, model.pca_mean, model.pca_basis)[0]
    return feats


def model_predict(model: PipelineModel, raw) -> str:
    feats = model_features(model, raw)
    clf = model.classifier
    if clf["type"] == "svm":
        score = float(np.asarray(clf["weights"]) @ feats + clf["bias"])
        return clf["labels"][1] if score >= 0 else clf["labels"][0]
    if clf["type"] == "lda":
        return lda_predict(clf, feats)[0]
    raise ValidationError(f"unknown classifier type {clf['type']!r}")
