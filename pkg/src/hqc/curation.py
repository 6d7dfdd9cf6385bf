"""Corpus analysis and curation.

A corpus is analyzed into ImageRecord rows (one JSON line each), then
curated in three stages:

  1. hard filters   - resolution, on-disk size, high-frequency ratio
  2. semantic quotas - per sub-category targets over a fixed taxonomy
  3. frequency quotas - within each semantic bucket, per-bin targets shaped
     by a Gaussian over the high-frequency ratio

Every selection step is deterministic under a fixed seed: candidates are
ordered by record id before any random draw.
"""

from __future__ import annotations

import hashlib
import math
import os
from dataclasses import dataclass, fields, replace

import numpy as np

from .freq import high_freq_ratio
from .image import ImageFormatError, load_image, resize_bicubic, to_luma
from .metrics import bpp

# --------- taxonomy ---------

TAXONOMY = {
    "outdoor": ("animals", "people", "nature", "transportation", "architecture", "others"),
    "indoor": ("indoor scenes", "furniture", "food", "indoor object", "others"),
    "artificial": ("comic", "poster", "map", "text scene", "others"),
}

TEXT_SCENE = ("artificial", "text scene")


def taxonomy_buckets():
    """All (broad, sub) pairs, canonical order."""
    return [(b, s) for b, subs in TAXONOMY.items() for s in subs]


def usable_categories():
    """The 13 sub-categories that take benchmark quotas ("others" do not)."""
    return [(b, s) for b, s in taxonomy_buckets() if s != "others"]


def validate_category(broad, sub):
    if broad is None and sub is None:
        return
    if broad not in TAXONOMY:
        raise ValueError(f"unknown broad class {broad!r}, expected one of {sorted(TAXONOMY)}")
    if sub not in TAXONOMY[broad]:
        raise ValueError(f"sub-category {sub!r} does not belong to {broad!r}")


# reference statistics of the published HQ-50K corpus, for side-by-side
# reporting only (never asserted against)
REFERENCE_CORPUS = {
    "name": "HQ-50K",
    "count": 50000,
    "mean_pixels": 2509509,
    "mean_bpp": 12.86,
    "mean_hf_ratio": 0.014270,
    "diversity": 1.143,
}


# --------- records and policy ---------

_RECORD_FIELDS = ("id", "path", "width", "height", "encoded_bytes", "bpp",
                  "hf_ratio", "broad_class", "sub_category", "selected")


@dataclass
class ImageRecord:
    id: str
    path: str
    width: int = 0
    height: int = 0
    encoded_bytes: int = 0
    bpp: float = 0.0
    hf_ratio: float = 0.0
    broad_class: str | None = None
    sub_category: str | None = None
    selected: bool = False
    error: str | None = None    # set when the image could not be analyzed

    def to_row(self) -> dict:
        row = {name: getattr(self, name) for name in _RECORD_FIELDS}
        if self.error is not None:
            row["error"] = self.error
        return row

    @classmethod
    def from_row(cls, row: dict) -> "ImageRecord":
        known = {f.name for f in fields(cls)}
        unknown = set(row) - known
        if unknown:
            raise ValueError(f"unknown record fields: {sorted(unknown)}")
        return cls(**row)


@dataclass
class CurationPolicy:
    min_side: int = 1024            # reject if min(W, H) falls below
    min_bytes: int = 512000         # reject if the encoded file is smaller
    min_hf_ratio: float = 0.005     # reject flat/low-texture images
    target_count: int | None = None  # balanced selection size (None: keep all)
    freq_bins: int = 20
    freq_mean: float = 0.014        # Gaussian shaping the hf_ratio histogram
    freq_std: float = 0.006
    semantic_mode: str = "uniform"  # or "proportional"
    analysis_max_side: int | None = None  # downscale luma before spectra
    seed: int = 0

    def __post_init__(self):
        if self.min_side < 1 or self.min_bytes < 0 or self.min_hf_ratio < 0:
            raise ValueError("filter thresholds must be nonnegative (min_side >= 1)")
        if self.target_count is not None and self.target_count < 0:
            raise ValueError("target_count must be nonnegative")
        if self.freq_bins < 1:
            raise ValueError("freq_bins must be >= 1")
        if self.freq_std <= 0:
            raise ValueError("freq_std must be positive")
        if self.semantic_mode not in ("uniform", "proportional"):
            raise ValueError(f"semantic_mode must be uniform|proportional, got {self.semantic_mode!r}")
        if self.analysis_max_side is not None and self.analysis_max_side < 8:
            raise ValueError("analysis_max_side must be >= 8")

    @classmethod
    def from_dict(cls, d: dict) -> "CurationPolicy":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown policy keys: {sorted(unknown)}")
        return cls(**d)


# --------- labels ---------

class ManifestLabels:
    """Label provider backed by a JSONL manifest of {id, broad_class, sub_category}."""

    def __init__(self, rows):
        self._by_id = {}
        for row in rows:
            broad, sub = row.get("broad_class"), row.get("sub_category")
            validate_category(broad, sub)
            self._by_id[row["id"]] = (broad, sub)

    def __call__(self, record_id, path=None):
        return self._by_id.get(record_id, (None, None))


class FixedLabels:
    """Assigns one category to everything (tests and single-class corpora)."""

    def __init__(self, broad, sub):
        validate_category(broad, sub)
        self._pair = (broad, sub)

    def __call__(self, record_id, path=None):
        return self._pair


# --------- analysis ---------

def analyze_record(path, labels=None, analysis_max_side=None) -> ImageRecord:
    """Measure one image file into a record; failures yield an error record."""
    path = os.fspath(path)
    rid = os.path.splitext(os.path.basename(path))[0]
    broad, sub = labels(rid, path) if labels is not None else (None, None)
    validate_category(broad, sub)
    try:
        img = load_image(path)
        plane = to_luma(img)
        if analysis_max_side and max(img.width, img.height) > analysis_max_side:
            s = analysis_max_side / max(img.width, img.height)
            plane = resize_bicubic(plane, max(1, round(img.width * s)),
                                   max(1, round(img.height * s)), antialias=True)
        hf = high_freq_ratio(plane)
    except (ImageFormatError, ValueError, OSError) as e:
        size = os.path.getsize(path) if os.path.exists(path) else 0
        return ImageRecord(id=rid, path=path, encoded_bytes=size,
                           broad_class=broad, sub_category=sub, error=str(e))
    return ImageRecord(
        id=rid, path=path, width=img.width, height=img.height,
        encoded_bytes=img.encoded_bytes,
        bpp=bpp(img.width, img.height, img.encoded_bytes),
        hf_ratio=hf, broad_class=broad, sub_category=sub,
    )


def apply_hard_filters(records, policy: CurationPolicy):
    """Split records into (kept, rejections); each rejection carries the
    first failing criterion: invalid -> resolution -> compression -> texture."""
    kept = []
    rejections = []
    for r in records:
        if r.error is not None:
            rejections.append((r, "invalid"))
        elif min(r.width, r.height) < policy.min_side:
            rejections.append((r, "resolution"))
        elif r.encoded_bytes < policy.min_bytes:
            rejections.append((r, "compression"))
        elif r.hf_ratio < policy.min_hf_ratio:
            rejections.append((r, "texture"))
        else:
            kept.append(r)
    return kept, rejections


# --------- quota arithmetic ---------

def _apportion(weights, total):
    """Largest-remainder integer apportionment of `total` by weight."""
    w = np.asarray(weights, np.float64)
    if total == 0:
        return np.zeros(len(w), int)
    raw = w / w.sum() * total
    out = np.floor(raw).astype(int)
    short = int(total - out.sum())
    if short:
        order = np.argsort(-(raw - out), kind="stable")
        out[order[:short]] += 1
    return out


def _fill_quotas(mass, caps, total):
    """Integer quotas <= caps summing to `total`, proportional to `mass`;
    overflow from full buckets is redistributed by spare capacity."""
    caps = np.asarray(caps, int)
    if total > caps.sum():
        raise ValueError(f"target {total} exceeds pool size {int(caps.sum())}")
    mass = np.asarray(mass, np.float64)
    counts = np.minimum(_apportion(mass, total), caps)
    while counts.sum() < total:
        spare = caps - counts
        open_ = spare > 0
        add = _apportion(spare[open_].astype(np.float64), total - counts.sum())
        counts[open_] += np.minimum(add, spare[open_])
    return counts


def _gaussian_mass(edges, mean, std):
    def cdf(x):
        return 0.5 * (1.0 + math.erf((x - mean) / (std * math.sqrt(2.0))))

    return np.array([cdf(edges[i + 1]) - cdf(edges[i]) for i in range(len(edges) - 1)])


def _draw(members, take, rng):
    """Seeded draw of `take` records, id-ordered before permutation."""
    members = sorted(members, key=lambda r: r.id)
    if take >= len(members):
        return list(members)
    picks = rng.permutation(len(members))[:take]
    return [members[i] for i in sorted(picks)]


def _bucket_seed(seed, label):
    h = hashlib.blake2b(f"{seed}|{label}".encode(), digest_size=8)
    return int.from_bytes(h.digest(), "big")


# --------- frequency balancing ---------

def balance_frequency(records, policy: CurationPolicy, target=None, seed=None):
    """Select `target` records whose hf_ratio histogram follows the policy
    Gaussian. Returns (selected, report)."""
    records = list(records)
    target = policy.target_count if target is None else target
    if target is None:
        raise ValueError("balance_frequency needs a target count")
    if target > len(records):
        raise ValueError(f"target {target} exceeds pool size {len(records)}")
    seed = policy.seed if seed is None else seed
    if not records or target == 0:
        return [], {"bins": [], "quota": [], "taken": []}

    hf = np.array([r.hf_ratio for r in records])
    lo, hi = float(hf.min()), float(hf.max())
    nbins = 1 if hi == lo else policy.freq_bins
    edges = np.linspace(lo, hi, nbins + 1)
    which = np.clip(((hf - lo) / (hi - lo) * nbins).astype(int) if hi > lo else np.zeros(len(hf), int),
                    0, nbins - 1)
    caps = np.bincount(which, minlength=nbins)
    mass = _gaussian_mass(edges, policy.freq_mean, policy.freq_std) if nbins > 1 else np.ones(1)
    quota = _fill_quotas(mass, caps, target)

    rng = np.random.default_rng(seed)
    selected = []
    taken = []
    for b in range(nbins):
        members = [records[i] for i in np.flatnonzero(which == b)]
        got = _draw(members, int(quota[b]), rng)
        taken.append(len(got))
        selected.extend(got)
    selected.sort(key=lambda r: r.id)
    report = {"bins": [float(e) for e in edges], "quota": [int(q) for q in quota], "taken": taken}
    return selected, report


# --------- semantic balancing ---------

def _bucket_key(r):
    if r.broad_class is None:
        return ("unlabeled", "unlabeled")
    return (r.broad_class, r.sub_category)


def _semantic_buckets(records):
    buckets = {k: [] for k in taxonomy_buckets()}
    for r in records:
        buckets.setdefault(_bucket_key(r), []).append(r)
    return buckets


def _semantic_quota(buckets, policy, target):
    keys = list(buckets)
    caps = np.array([len(buckets[k]) for k in keys])
    if policy.semantic_mode == "uniform":
        mass = (caps > 0).astype(np.float64)    # equal share per occupied bucket
    else:
        mass = caps.astype(np.float64)
    if mass.sum() == 0:
        mass = np.ones(len(keys))
    return keys, _fill_quotas(mass, caps, target)


def balance_semantics(records, policy: CurationPolicy, target=None, seed=None):
    """Select `target` records with per-category quotas (uniform or
    proportional). Returns (selected, report); the report includes the
    entropy of the selection and of an unconstrained id-ordered top-N."""
    records = list(records)
    target = policy.target_count if target is None else target
    if target is None:
        raise ValueError("balance_semantics needs a target count")
    if target > len(records):
        raise ValueError(f"target {target} exceeds pool size {len(records)}")
    seed = policy.seed if seed is None else seed

    buckets = _semantic_buckets(records)
    keys, quota = _semantic_quota(buckets, policy, target)
    rng = np.random.default_rng(seed)
    selected = []
    per_bucket = {}
    for k, q in zip(keys, quota):
        got = _draw(buckets[k], int(q), rng)
        if q or len(buckets[k]):
            per_bucket["/".join(k)] = {"pool": len(buckets[k]), "quota": int(q), "taken": len(got)}
        selected.extend(got)
    selected.sort(key=lambda r: r.id)

    top_n = sorted(records, key=lambda r: r.id)[:target]
    report = {
        "buckets": per_bucket,
        "entropy": diversity_entropy(selected),
        "entropy_top_n": diversity_entropy(top_n),
    }
    return selected, report


# --------- full pipeline ---------

def curate(records, policy: CurationPolicy):
    """Hard filters, then semantic quotas, then frequency quotas inside each
    semantic bucket. Returns (selected, report)."""
    kept, rejections = apply_hard_filters(records, policy)
    reasons = {}
    for _, why in rejections:
        reasons[why] = reasons.get(why, 0) + 1

    if policy.target_count is None:
        selected = sorted(kept, key=lambda r: r.id)
    else:
        buckets = _semantic_buckets(kept)
        keys, quota = _semantic_quota(buckets, policy, policy.target_count)
        selected = []
        for k, q in zip(keys, quota):
            if q == 0:
                continue
            sub, _ = balance_frequency(buckets[k], policy, target=int(q),
                                       seed=_bucket_seed(policy.seed, "/".join(k)))
            selected.extend(sub)
        selected.sort(key=lambda r: r.id)

    selected = [replace(r, selected=True) for r in selected]
    total = len(records)
    report = {
        "input": total,
        "kept_after_filters": len(kept),
        "selected": len(selected),
        "rejections": dict(sorted(reasons.items())),
        "acceptance_rate": len(selected) / total if total else 0.0,
        "diversity": diversity_entropy(selected),
    }
    return selected, report


# --------- reporting statistics ---------

def diversity_entropy(records, granularity: str = "sub", base: float | None = None) -> float:
    """Shannon entropy of the category distribution (natural log by default).

    granularity "sub" counts (broad, sub) pairs, "broad" counts broad classes.
    Unlabeled records are ignored; an empty or unlabeled pool scores 0.
    """
    if granularity not in ("sub", "broad"):
        raise ValueError(f"granularity must be sub|broad, got {granularity!r}")
    counts = {}
    for r in records:
        if r.broad_class is None:
            continue
        key = r.broad_class if granularity == "broad" else (r.broad_class, r.sub_category)
        counts[key] = counts.get(key, 0) + 1
    total = sum(counts.values())
    if total == 0:
        return 0.0
    h = -sum((c / total) * math.log(c / total) for c in counts.values())
    if base is not None:
        h /= math.log(base)
    return h


def freq_band_split(records, threshold: float):
    """Partition by hf_ratio >= threshold. Returns (low, high, report)."""
    low = [r for r in records if r.hf_ratio < threshold]
    high = [r for r in records if r.hf_ratio >= threshold]

    def mean_hf(rs):
        return float(np.mean([r.hf_ratio for r in rs])) if rs else 0.0

    report = {
        "threshold": threshold,
        "low": {"count": len(low), "mean_hf_ratio": mean_hf(low)},
        "high": {"count": len(high), "mean_hf_ratio": mean_hf(high)},
    }
    return low, high, report


def split_benchmark(records, per_category: int = 100, text_scene: int = 50):
    """Split into (train, test): a fixed test quota from every usable
    sub-category (text scene takes the smaller quota), id order, no overlap.
    Raises if any usable category cannot fill its quota."""
    buckets = _semantic_buckets(records)
    test = []
    test_ids = set()
    for key in usable_categories():
        need = text_scene if key == TEXT_SCENE else per_category
        members = sorted(buckets.get(key, []), key=lambda r: r.id)
        if len(members) < need:
            raise ValueError(
                f"sub-category {key[1]!r} ({key[0]}) has {len(members)} images, "
                f"needs {need} for the benchmark")
        chosen = members[:need]
        test.extend(chosen)
        test_ids.update(r.id for r in chosen)
    train = [r for r in records if r.id not in test_ids]
    test.sort(key=lambda r: r.id)
    train.sort(key=lambda r: r.id)
    return train, test


def corpus_summary(records, analysis_mode: str = "native") -> dict:
    """The analyze-time corpus statistics row."""
    ok = [r for r in records if r.error is None]
    return {
        "count": len(ok),
        "invalid": len(records) - len(ok),
        "mean_pixels": float(np.mean([r.width * r.height for r in ok])) if ok else 0.0,
        "mean_bpp": float(np.mean([r.bpp for r in ok])) if ok else 0.0,
        "mean_hf_ratio": float(np.mean([r.hf_ratio for r in ok])) if ok else 0.0,
        "diversity": diversity_entropy(ok),
        "analysis_mode": analysis_mode,
    }


def format_summary(summary: dict) -> str:
    """Side-by-side table: this corpus vs the published reference corpus."""
    ref = REFERENCE_CORPUS
    rows = [
        ("images", f"{summary['count']}", f"{ref['count']}"),
        ("mean pixels", f"{summary['mean_pixels']:.0f}", f"{ref['mean_pixels']}"),
        ("mean bpp", f"{summary['mean_bpp']:.4f}", f"{ref['mean_bpp']:.2f}"),
        ("mean hf ratio", f"{summary['mean_hf_ratio']:.6f}", f"{ref['mean_hf_ratio']:.6f}"),
        ("diversity", f"{summary['diversity']:.4f}", f"{ref['diversity']:.3f}"),
    ]
    w0 = max(len(r[0]) for r in rows)
    w1 = max(len("this corpus"), max(len(r[1]) for r in rows))
    w2 = max(len(ref["name"]), max(len(r[2]) for r in rows))
    out = [f"{'':{w0}}  {'this corpus':>{w1}}  {ref['name']:>{w2}}"]
    for name, a, b in rows:
        out.append(f"{name:{w0}}  {a:>{w1}}  {b:>{w2}}")
    if summary.get("invalid"):
        out.append(f"({summary['invalid']} invalid record(s) excluded)")
    out.append(f"analysis mode: {summary['analysis_mode']}")
    return "\n".join(out)
