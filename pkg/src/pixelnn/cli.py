"""Command-line front door: build a database, synthesize candidate grids,
evaluate them, or serve the HTTP API.

Built databases come from a directory of paired images: `<name>.target.png`
plus either `<name>.regressed.png` (a precomputed Stage-1 output) or
`<name>.input.png` (a small image upsampled bicubically), with optional
whitespace-separated labels in `<name>.tags`.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

from .database import build_database, load_database, save_database, subset
from .descriptor import DescriptorConfig, compute_field
from .image import bicubic_resample, load_png, save_png
from .metrics import evaluate_candidates, normal_map_from_tensor_file
from .synthesis import generate_candidates, save_correspondence, select, stage1

_CANDIDATE_RE = re.compile(r"^cand_K(\d+)_T(\d+)\.png$")


def _int_list(raw: str) -> list[int]:
    try:
        return [int(tok) for tok in raw.split(",") if tok.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated ints, got {raw!r}") from exc


def _collect_pairs(input_dir: Path):
    """Gather (regressed, target, name, tags) tuples from a training directory."""
    targets = sorted(input_dir.glob("*.target.png"))
    if not targets:
        raise SystemExit(f"no *.target.png files in {input_dir}")
    pairs = []
    unpaired = []
    for target_path in targets:
        name = target_path.name[: -len(".target.png")]
        target = load_png(target_path)
        regressed_path = input_dir / f"{name}.regressed.png"
        input_path = input_dir / f"{name}.input.png"
        if regressed_path.exists():
            regressed = stage1(regressed_path, "external", (target.width, target.height))
        elif input_path.exists():
            regressed = bicubic_resample(load_png(input_path), target.width, target.height)
        else:
            unpaired.append(name)
            continue
        tags_path = input_dir / f"{name}.tags"
        tags = tags_path.read_text().split() if tags_path.exists() else []
        pairs.append((regressed, target, name, tags))
    if unpaired:
        raise SystemExit(
            "targets lacking any regressed/input companion: " + ", ".join(unpaired)
        )
    return pairs


def cmd_build(args) -> int:
    weights = None
    if args.weights:
        weights = tuple(float(w) for w in args.weights.split(","))
    cfg = DescriptorConfig(
        levels=args.levels,
        patch_radius=args.patch_radius,
        level_weights=weights,
        normalize_per_level=not args.no_normalize,
    )
    pairs = _collect_pairs(Path(args.input_dir))
    db = build_database(pairs, cfg)
    save_database(db, args.out)
    w, h = db.image_size
    print(f"built {args.out}: {db.count} exemplars, {w}x{h}, descriptor dim {db.descriptor_dim}")
    return 0


def _apply_selector(db, args):
    if args.ids is None and args.tags is None:
        return db
    tags = args.tags.split(",") if args.tags else None
    return subset(db, ids=args.ids, tags=tags)


def cmd_synthesize(args) -> int:
    db = _apply_selector(load_database(args.db), args)
    if db.descriptor_config is None:
        raise SystemExit("database uses external descriptors; synthesize via the API")
    f_x = stage1(args.input, args.stage1, db.image_size)
    field = compute_field(f_x, db.descriptor_config)
    candidates = generate_candidates(f_x, field, db, args.k_list, args.t_list)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    gt = load_png(args.gt) if args.gt else None
    entries = []
    for cand in candidates:
        stem = f"cand_K{cand.config.k_global}_T{cand.config.window}"
        save_png(cand.image, out_dir / f"{stem}.png")
        save_correspondence(cand.correspondence, out_dir / f"{stem}.pxnc")
        entry = {
            "k": cand.config.k_global,
            "t": cand.config.window,
            "image": f"{stem}.png",
            "correspondence": f"{stem}.pxnc",
            "clamped_pixel_count": cand.clamped_pixel_count,
        }
        entries.append(entry)
    manifest = {
        "request": {
            "db": str(args.db),
            "input": str(args.input),
            "stage1": args.stage1,
            "k_list": args.k_list,
            "t_list": args.t_list,
            "ids": args.ids,
            "tags": args.tags,
            "seed": args.seed,
            "select": args.select,
        },
        "candidates": entries,
    }
    if gt is not None:
        report = evaluate_candidates(candidates, gt, seed=args.seed)
        for entry, row in zip(entries, report.rows):
            entry["psnr"] = row.psnr
    if args.select != "all":
        policy = "oracle-psnr" if args.select == "oracle" else "random"
        if policy == "oracle-psnr" and gt is None:
            raise SystemExit("--select oracle requires --gt")
        chosen = select(candidates, ground_truth=gt, policy=policy, seed=args.seed)
        manifest["selected"] = {
            "k": chosen.config.k_global,
            "t": chosen.config.window,
            "image": f"cand_K{chosen.config.k_global}_T{chosen.config.window}.png",
        }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"wrote {len(candidates)} candidates to {out_dir}")
    return 0


def cmd_eval(args) -> int:
    cand_dir = Path(args.candidates_dir)
    entries = []
    for path in sorted(cand_dir.glob("cand_K*_T*.png")):
        m = _CANDIDATE_RE.match(path.name)
        if m:
            entries.append((int(m.group(1)), int(m.group(2)), load_png(path)))
    if not entries:
        raise SystemExit(f"no cand_K*_T*.png files in {cand_dir}")
    entries.sort(key=lambda e: (e[0], e[1]))
    gt = load_png(args.gt)
    gt_normals = normal_map_from_tensor_file(args.normals) if args.normals else None
    gt_edges = load_png(args.edges) if args.edges else None
    report = evaluate_candidates(
        entries, gt, gt_normals=gt_normals, gt_edges=gt_edges, seed=args.seed
    )
    sys.stdout.write(report.to_table())
    if args.out:
        Path(args.out).write_text(report.to_json_lines())
        print(f"report written to {args.out}")
    return 0


def cmd_serve(args) -> int:
    from .service import serve

    db = load_database(args.db)
    print(f"serving {args.db} ({db.count} exemplars) on {args.host}:{args.port}")
    serve(db, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pixelnn",
        description="Compositional nearest-neighbor image synthesis engine",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="build an exemplar database from paired images")
    p.add_argument("--input-dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--levels", type=int, default=5)
    p.add_argument("--patch-radius", type=int, default=1)
    p.add_argument("--weights", help="comma-separated per-level weights")
    p.add_argument("--no-normalize", action="store_true")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("synthesize", help="generate a candidate grid for one input")
    p.add_argument("--db", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--stage1", choices=["bicubic", "external"], default="bicubic")
    p.add_argument("--k-list", type=_int_list, default=list(range(1, 11)))
    p.add_argument("--t-list", type=_int_list, default=[1, 3, 5, 10, 96])
    p.add_argument("--select", choices=["all", "oracle", "random"], default="all")
    p.add_argument("--ids", type=_int_list)
    p.add_argument("--tags", help="comma-separated tag selector")
    p.add_argument("--gt", help="ground-truth PNG for stats / oracle selection")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("eval", help="evaluate a candidate directory against ground truth")
    p.add_argument("--candidates-dir", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--normals", help="PXNT tensor file with ground-truth normals")
    p.add_argument("--edges", help="binary edge-map PNG")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the JSON-lines report here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="serve the JSON-over-HTTP API")
    p.add_argument("--db", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8400)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
