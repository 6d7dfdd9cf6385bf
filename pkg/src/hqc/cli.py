"""Command line front end.

Subcommands mirror the pipeline stages: analyze a directory into records,
curate records into a selection, degrade a selection into training pairs,
eval restored outputs, plus the benchmark/frequency splits and the routing
kernel demo. Every command is also callable in-process via its cmd_*
function, which is how the test suite drives them.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from . import curation, manifest, metrics, moe
from .degrade import DegradationSpec, RainParams, make_pair, pair_seed
from .image import load_image, save_image

log = logging.getLogger("hqc")

_IMAGE_EXTS = (".png", ".jpg", ".jpeg")


def _setup_logging():
    level = os.environ.get("HQC_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


# --------- shared helpers ---------

def _scan_images(root):
    """Image files under root (recursive), sorted; duplicate stems are an error."""
    hits = []
    for dirpath, _, names in os.walk(root):
        for n in sorted(names):
            if n.lower().endswith(_IMAGE_EXTS):
                hits.append(os.path.join(dirpath, n))
    hits.sort()
    seen = {}
    for p in hits:
        stem = os.path.splitext(os.path.basename(p))[0]
        if stem in seen:
            raise SystemExit(f"duplicate image id {stem!r}: {seen[stem]} and {p}")
        seen[stem] = p
    return hits


def _read_records(path):
    return [curation.ImageRecord.from_row(r) for r in manifest.read_jsonl(path)]


def _write_records(path, records):
    return manifest.write_jsonl(path, (r.to_row() for r in records))


def _pool_map(fn, jobs, workers):
    """Order-preserving map, inline when workers <= 1."""
    if workers <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (workers * 4) or 1)))


def _load_labels(path):
    if path is None:
        return {}
    rows = manifest.read_jsonl(path)
    out = {}
    for ln, row in enumerate(rows, 1):
        if not isinstance(row, dict) or "id" not in row:
            raise ValueError(f"{path}: row {ln}: labels rows need an 'id' field")
        curation.validate_category(row.get("broad_class"), row.get("sub_category"))
        out[row["id"]] = (row.get("broad_class"), row.get("sub_category"))
    return out


# --------- analyze ---------

def _analyze_worker(job):
    path, pair, max_side = job
    labels = None if pair is None else (lambda rid, p=None: pair)
    return curation.analyze_record(path, labels, max_side)


def cmd_analyze(args) -> int:
    paths = _scan_images(args.directory)
    if not paths:
        raise SystemExit(f"no images under {args.directory}")
    labels = _load_labels(args.labels)
    jobs = []
    for p in paths:
        stem = os.path.splitext(os.path.basename(p))[0]
        jobs.append((p, labels.get(stem), args.max_side))
    log.info("analyzing %d images with %d worker(s)", len(jobs), args.workers)
    records = _pool_map(_analyze_worker, jobs, args.workers)
    records.sort(key=lambda r: r.id)
    _write_records(args.out, records)

    summary = curation.corpus_summary(
        records, analysis_mode=f"max_side={args.max_side}" if args.max_side else "native")
    with open(args.out + ".summary.json", "w", encoding="utf-8") as f:
        json.dump({"summary": manifest.jsonable(summary),
                   "reference": curation.REFERENCE_CORPUS}, f, indent=2)
    print(curation.format_summary(summary))
    print(f"wrote {len(records)} records to {args.out}")
    return 0


# --------- curate ---------

def cmd_curate(args) -> int:
    records = _read_records(args.records)
    if args.policy:
        with open(args.policy, encoding="utf-8") as f:
            policy = curation.CurationPolicy.from_dict(json.load(f))
    else:
        policy = curation.CurationPolicy()
    if args.seed is not None:
        policy = replace(policy, seed=args.seed)
    if args.target is not None:
        policy = replace(policy, target_count=args.target)

    selected, report = curation.curate(records, policy)
    _write_records(args.out, selected)
    with open(args.out + ".report.json", "w", encoding="utf-8") as f:
        json.dump(manifest.jsonable(report), f, indent=2)
    print(f"kept {report['kept_after_filters']}/{report['input']} after filters, "
          f"selected {report['selected']}")
    for reason, n in report["rejections"].items():
        print(f"  rejected {n}: {reason}")
    print(f"acceptance rate {report['acceptance_rate']:.3f}, "
          f"diversity {report['diversity']:.4f}")
    return 0


# --------- degrade ---------

def parse_spec(text, seed=0) -> DegradationSpec:
    """Parse "sr:2", "denoise:25", "dejpeg:40", "derain" or
    "derain:d=0.05,a=75,l=21,i=0.8"."""
    task, _, rest = text.partition(":")
    if task in ("sr", "denoise", "dejpeg"):
        if not rest:
            raise ValueError(f"{task} needs a level, e.g. {task}:2")
        return DegradationSpec(task=task, level=int(rest), seed=seed)
    if task == "derain":
        if not rest:
            return DegradationSpec(task="derain", level=RainParams(), seed=seed)
        kw = {}
        names = {"d": "density", "a": "angle", "l": "streak_length", "i": "intensity"}
        for part in rest.split(","):
            key, _, val = part.partition("=")
            if key not in names:
                raise ValueError(f"unknown rain parameter {key!r} in {text!r}")
            kw[names[key]] = int(val) if key == "l" else float(val)
        return DegradationSpec(task="derain", level=RainParams(**kw), seed=seed)
    raise ValueError(f"unknown task {task!r} in spec {text!r}")


def _degrade_worker(job):
    path, rid, spec, out_root, global_seed = job
    img = load_image(path)
    label = spec.level_label()
    s = replace(spec, seed=pair_seed(global_seed, spec.task, label, rid))
    lq, hq = make_pair(img, s)
    base = os.path.join(out_root, spec.task, label)
    lq_path = os.path.join(base, "lq", f"{rid}.png")
    hq_path = os.path.join(base, "hq", f"{rid}.png")
    save_image(lq, lq_path)
    save_image(hq, hq_path)
    return {"id": rid, "task": spec.task, "level": label,
            "lq": os.path.relpath(lq_path, out_root),
            "hq": os.path.relpath(hq_path, out_root),
            "seed": s.seed}


def cmd_degrade(args) -> int:
    records = [r for r in _read_records(args.records) if r.error is None]
    if not records:
        raise SystemExit("no usable records")
    specs = [parse_spec(s) for s in args.spec]
    if not specs:
        raise SystemExit("at least one --spec is required")
    for spec in specs:
        base = os.path.join(args.out, spec.task, spec.level_label())
        os.makedirs(os.path.join(base, "lq"), exist_ok=True)
        os.makedirs(os.path.join(base, "hq"), exist_ok=True)
    jobs = [(r.path, r.id, spec, args.out, args.seed)
            for spec in specs for r in sorted(records, key=lambda r: r.id)]
    log.info("synthesizing %d pairs with %d worker(s)", len(jobs), args.workers)
    rows = _pool_map(_degrade_worker, jobs, args.workers)
    rows.sort(key=lambda r: (r["task"], r["level"], r["id"]))
    n = manifest.write_jsonl(os.path.join(args.out, "pairs.jsonl"), rows)
    print(f"wrote {n} pairs under {args.out}")
    return 0


# --------- eval ---------

def _stem_map(root):
    out = {}
    for dirpath, _, names in os.walk(root):
        for nm in names:
            if nm.lower().endswith(".png"):
                stem = os.path.splitext(nm)[0]
                if stem in out:
                    raise SystemExit(f"duplicate stem {stem!r} under {root}")
                out[stem] = os.path.join(dirpath, nm)
    return out


def _fmt(x):
    return "inf" if math.isinf(x) else f"{x:.4f}"


def cmd_eval(args) -> int:
    restored = _stem_map(args.restored)
    reference = _stem_map(args.reference)
    missing = sorted(set(restored) - set(reference))
    if missing:
        raise SystemExit(f"no reference for: {', '.join(missing[:5])}")
    if not restored:
        raise SystemExit(f"no restored images under {args.restored}")

    by_id = {}
    if args.manifest:
        by_id = {r.id: r for r in _read_records(args.manifest)}
    if args.group_by == "freq_band" and args.threshold is None:
        raise SystemExit("--group-by freq_band requires --threshold")
    if args.group_by and not args.manifest:
        raise SystemExit("--group-by requires --manifest")

    rows = []
    for stem in sorted(restored):
        a = load_image(restored[stem])
        b = load_image(reference[stem])
        if a.data.shape != b.data.shape:
            raise SystemExit(f"shape mismatch for {stem!r}: "
                             f"{a.data.shape} vs {b.data.shape}")
        row = {"id": stem,
               "psnr": metrics.psnr(a, b),
               "psnr_y": metrics.psnr_y(a, b),
               "ssim": metrics.ssim(a, b, shave=args.shave)}
        if args.group_by:
            rec = by_id.get(stem)
            if rec is None:
                raise SystemExit(f"record {stem!r} not in manifest")
            if args.group_by == "category":
                row["group"] = (f"{rec.broad_class}/{rec.sub_category}"
                                if rec.broad_class else "unlabeled")
            else:
                row["group"] = "high" if rec.hf_ratio >= args.threshold else "low"
        rows.append(row)

    manifest.write_jsonl(args.out, rows)

    width = max(len(r["id"]) for r in rows)
    width = max(width, len("mean"))
    if args.group_by:
        width = max(width, max(len(f"[{r['group']}]") for r in rows))
    print(f"{'id':{width}}  {'psnr':>9}  {'psnr_y':>9}  {'ssim':>7}"
          + ("  group" if args.group_by else ""))
    for r in rows:
        line = (f"{r['id']:{width}}  {_fmt(r['psnr']):>9}  "
                f"{_fmt(r['psnr_y']):>9}  {_fmt(r['ssim']):>7}")
        if args.group_by:
            line += f"  {r['group']}"
        print(line)

    def mean_line(name, sub):
        ps = float(np.mean([r["psnr"] for r in sub]))
        py = float(np.mean([r["psnr_y"] for r in sub]))
        ss = float(np.mean([r["ssim"] for r in sub]))
        print(f"{name:{width}}  {_fmt(ps):>9}  {_fmt(py):>9}  {_fmt(ss):>7}")

    mean_line("mean", rows)
    if args.group_by:
        for g in sorted({r["group"] for r in rows}):
            mean_line(f"[{g}]", [r for r in rows if r["group"] == g])
    return 0


# --------- splits ---------

def cmd_split_bench(args) -> int:
    records = [r for r in _read_records(args.records) if r.error is None]
    train, test = curation.split_benchmark(records, per_category=args.per_category,
                                           text_scene=args.text_scene)
    _write_records(args.out_train, train)
    _write_records(args.out_test, test)
    print(f"train {len(train)}, test {len(test)}")
    return 0


def cmd_freq_split(args) -> int:
    records = [r for r in _read_records(args.records) if r.error is None]
    low, high, report = curation.freq_band_split(records, args.threshold)
    _write_records(args.out_low, low)
    _write_records(args.out_high, high)
    print(f"low {report['low']['count']} (mean hf {report['low']['mean_hf_ratio']:.6f}), "
          f"high {report['high']['count']} (mean hf {report['high']['mean_hf_ratio']:.6f})")
    return 0


# --------- routing kernel ---------

def cmd_moe(args) -> int:
    cfg = moe.ModelConfig(depth=args.depth, channels=args.channels,
                          n_tasks=args.tasks, n_experts=args.experts,
                          top_k=args.top_k, patch=args.patch,
                          expansion=args.expansion, mixer=args.mixer,
                          pattern=args.pattern, renormalize=args.renormalize,
                          seed=args.seed)
    model = moe.build_model(cfg)
    rng = np.random.default_rng(args.input_seed)
    x = rng.normal(0.0, 1.0, (args.height, args.width, cfg.channels))

    tasks = range(cfg.n_tasks) if args.task is None else [args.task]
    hist = np.zeros((cfg.n_tasks, cfg.n_experts), np.int64)
    for t in tasks:
        out, h = moe.model_forward(model, x, t)
        hist += h
        digest = hashlib.sha256(np.ascontiguousarray(out).tobytes()).hexdigest()
        print(f"task {t}: out sha256 {digest[:16]} sum {out.sum():+.6e}")

    if args.hist:
        with open(args.hist, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow(["task"] + [f"expert{e}" for e in range(cfg.n_experts)])
            for t in range(cfg.n_tasks):
                w.writerow([t] + hist[t].tolist())
        print(f"wrote routing histogram to {args.hist}")

    if args.save:
        moe.save_params(model, args.save)
        print(f"wrote parameters to {args.save}")

    if args.grad_check:
        worst = 0.0
        for i in range(args.grad_instances):
            r = np.random.default_rng(1000 + i)
            c, e, p = 3, 4, 3
            layer = moe.SMoE(
                [moe.Expert(w1=r.normal(0, 0.5, (c, 2 * c)), b1=r.normal(0, 0.1, 2 * c),
                            w2=r.normal(0, 0.5, (2 * c, c)), b2=r.normal(0, 0.1, c))
                 for _ in range(e)],
                moe.Gating(r.normal(0, 0.7, (e, c)), top_k=1 + i % 2),
                patch=p)
            feats = r.normal(0.0, 1.0, (p, 2 * p, c))
            loss = moe.make_weighted_loss(r.normal(0.0, 1.0, feats.shape))
            worst = max(worst, moe.smoe_grad_check(layer, feats, loss))
        print(f"grad check: worst relative error {worst:.3e} "
              f"over {args.grad_instances} instances")
        if worst >= 1e-4:
            print("grad check FAILED")
            return 1
    return 0


# --------- argument wiring ---------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hqc",
                                 description="corpus curation and degradation toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="measure a directory of images into records")
    p.add_argument("directory")
    p.add_argument("--out", required=True, help="records JSONL path")
    p.add_argument("--labels", help="JSONL of {id, broad_class, sub_category}")
    p.add_argument("--max-side", type=int, default=None,
                   help="downscale longest side before spectral analysis")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("curate", help="filter and balance analyzed records")
    p.add_argument("--records", required=True)
    p.add_argument("--out", required=True, help="selected records JSONL path")
    p.add_argument("--policy", help="policy JSON file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--target", type=int, default=None)
    p.set_defaults(fn=cmd_curate)

    p = sub.add_parser("degrade", help="synthesize degradation pairs")
    p.add_argument("--records", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--spec", action="append", default=[],
                   help="task:level, e.g. sr:2 denoise:25 dejpeg:40 derain")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(fn=cmd_degrade)

    p = sub.add_parser("eval", help="score restored images against references")
    p.add_argument("--restored", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--out", required=True, help="results JSONL path")
    p.add_argument("--group-by", choices=("category", "freq_band"), default=None)
    p.add_argument("--threshold", type=float, default=None,
                   help="hf_ratio cut for --group-by freq_band")
    p.add_argument("--manifest", help="records JSONL for group lookups")
    p.add_argument("--shave", type=int, default=0,
                   help="trim this border before SSIM")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("split-bench", help="carve the fixed benchmark split")
    p.add_argument("--records", required=True)
    p.add_argument("--out-train", required=True)
    p.add_argument("--out-test", required=True)
    p.add_argument("--per-category", type=int, default=100)
    p.add_argument("--text-scene", type=int, default=50)
    p.set_defaults(fn=cmd_split_bench)

    p = sub.add_parser("freq-split", help="partition records by hf_ratio")
    p.add_argument("--records", required=True)
    p.add_argument("--threshold", type=float, required=True)
    p.add_argument("--out-low", required=True)
    p.add_argument("--out-high", required=True)
    p.set_defaults(fn=cmd_freq_split)

    p = sub.add_parser("moe", help="run the routing kernel demo")
    p.add_argument("--depth", type=int, default=4)
    p.add_argument("--channels", type=int, default=16)
    p.add_argument("--tasks", type=int, default=4)
    p.add_argument("--experts", type=int, default=16)
    p.add_argument("--top-k", type=int, default=1)
    p.add_argument("--patch", type=int, default=7)
    p.add_argument("--expansion", type=int, default=2)
    p.add_argument("--mixer", choices=("identity", "window_attn"), default="identity")
    p.add_argument("--pattern", default="HS")
    p.add_argument("--renormalize", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--input-seed", type=int, default=1)
    p.add_argument("--height", type=int, default=14)
    p.add_argument("--width", type=int, default=14)
    p.add_argument("--task", type=int, default=None,
                   help="single task id (default: run all)")
    p.add_argument("--hist", help="write routing histogram CSV here")
    p.add_argument("--save", help="write model parameters JSON here")
    p.add_argument("--grad-check", action="store_true")
    p.add_argument("--grad-instances", type=int, default=20)
    p.set_defaults(fn=cmd_moe)

    return ap


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
