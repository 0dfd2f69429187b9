"""Command-line surface: sample / score / qagen / coldstart.

Every command is deterministic given its inputs, config, and seed, and
re-runs produce byte-identical outputs. Human-readable summaries go to
stdout; errors are machine-readable JSON on stderr with a nonzero exit
code (2 for input/IO/schema problems, 3 for prediction/ground-truth id
mismatches).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, fields

import numpy as np

from . import coldstart as cs
from . import coverage, geom, qagen, rewards
from .errors import (
    InputError,
    ManifestMismatchError,
    SchemaError,
    VoxcoverError,
)
from .fileio import (
    SCHEMA_VERSION,
    check_schema_version,
    dump_json,
    dump_jsonl,
    load_json,
    load_jsonl,
    read_pfm,
    to_jsonable,
    write_ply_points,
)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INPUT = 2
EXIT_MISMATCH = 3

_SELECTED_COLOR = (60, 200, 60)
_UNSELECTED_COLOR = (150, 150, 150)


@dataclass(frozen=True)
class RunConfig:
    """Effective run configuration; flag > config file > default."""

    n_m: int = coverage.DEFAULT_N_M
    n_k: int = coverage.DEFAULT_N_K
    lam: float = geom.DEFAULT_LAMBDA
    conf_floor: float = geom.DEFAULT_CONF_FLOOR
    percentile: float = geom.DEFAULT_PERCENTILE
    stride: int = geom.DEFAULT_STRIDE
    seed: int = 0
    thresholds: tuple = rewards.DEFAULT_THRESHOLDS
    lambda1: float = 1.0
    lambda2: float = 1.0
    mra_convention: str = "paper"
    edit_cost: str = "unit"

    def __post_init__(self):
        if self.n_k < 1 or self.n_m < 1 or self.stride < 1:
            raise InputError("n_m, n_k, and stride must be positive")
        if self.n_k > self.n_m:
            raise InputError(f"n_k={self.n_k} must not exceed n_m={self.n_m}")
        object.__setattr__(self, "thresholds", tuple(float(t) for t in self.thresholds))

    def reward_config(self) -> rewards.RewardConfig:
        return rewards.RewardConfig(
            lambda1=self.lambda1,
            lambda2=self.lambda2,
            thresholds=self.thresholds,
            mra_convention=self.mra_convention,
            edit_cost=self.edit_cost,
        )

    def as_dict(self) -> dict:
        out = {}
        for f in fields(self):
            key = "lambda" if f.name == "lam" else f.name
            out[key] = to_jsonable(getattr(self, f.name))
        return out


_CONFIG_KEYS = {("lambda" if f.name == "lam" else f.name): f.name for f in fields(RunConfig)}


def build_config(config_path=None, overrides=None) -> RunConfig:
    values = {}
    if config_path:
        doc = load_json(config_path)
        if not isinstance(doc, dict):
            raise SchemaError(f"{config_path}: config must be a JSON object")
        check_schema_version(doc, config_path)
        for key, val in doc.items():
            if key == "schema_version":
                continue
            if key not in _CONFIG_KEYS:
                raise SchemaError(f"{config_path}: unknown config key {key!r}")
            values[_CONFIG_KEYS[key]] = val
    for key, val in (overrides or {}).items():
        if val is not None:
            values[key] = val
    return RunConfig(**values)


# --------------------------------------------------------------------------
# Manifest and record parsing
# --------------------------------------------------------------------------

def load_manifest(path) -> list:
    """Parse a frame manifest into CameraFrame objects.

    Depth/confidence paths are resolved relative to the manifest location.
    """
    doc = load_json(path)
    if not isinstance(doc, dict) or "frames" not in doc:
        raise SchemaError(f"{path}: manifest must be an object with a 'frames' list")
    check_schema_version(doc, path)
    base = os.path.dirname(os.path.abspath(path))
    frames = []
    last_id = None
    for i, rec in enumerate(doc["frames"]):
        for key in ("frame_id", "depth_path", "confidence_path", "intrinsics", "extrinsics"):
            if key not in rec:
                raise SchemaError(f"{path}: frame {i} missing {key!r}")
        fid = int(rec["frame_id"])
        if last_id is not None and fid <= last_id:
            raise SchemaError(f"{path}: frame ids must be unique and ascending at index {i}")
        last_id = fid
        fx, fy, cx, cy = (float(v) for v in rec["intrinsics"])
        ext = np.asarray([float(v) for v in rec["extrinsics"]], dtype=np.float64)
        if ext.size != 16:
            raise SchemaError(f"{path}: frame {fid}: extrinsics must have 16 values")
        depth_path = os.path.join(base, rec["depth_path"])
        conf_path = os.path.join(base, rec["confidence_path"])
        for p in (depth_path, conf_path):
            if not os.path.exists(p):
                raise InputError(f"missing raster file: {p}")
        frames.append(
            geom.CameraFrame(
                frame_id=fid,
                depth=read_pfm(depth_path),
                confidence=read_pfm(conf_path),
                intrinsics=geom.CameraIntrinsics(fx=fx, fy=fy, cx=cx, cy=cy),
                pose=geom.CameraPose(matrix=ext.reshape(4, 4)),
            )
        )
    if not frames:
        raise SchemaError(f"{path}: manifest has no frames")
    return frames


def parse_qa_record(rec, source) -> qagen.QAPair:
    check_schema_version(rec, source)
    for key in ("id", "scene_id", "task_type", "question", "answer", "answer_kind"):
        if key not in rec:
            raise SchemaError(f"{source}: QA record missing {key!r}")
    options = rec.get("options")
    return qagen.QAPair(
        id=str(rec["id"]),
        scene_id=str(rec["scene_id"]),
        task_type=str(rec["task_type"]),
        question=str(rec["question"]),
        answer=rec["answer"],
        answer_kind=rec["answer_kind"],
        options=tuple(options) if options else None,
        meta=rec.get("meta", {}),
    )


def qa_record(pair: qagen.QAPair) -> dict:
    rec = {
        "schema_version": SCHEMA_VERSION,
        "id": pair.id,
        "scene_id": pair.scene_id,
        "task_type": pair.task_type,
        "question": pair.question,
        "answer": pair.answer,
        "answer_kind": pair.answer_kind.value,
        "meta": pair.meta,
    }
    if pair.options is not None:
        rec["options"] = list(pair.options)
    return rec


def load_scene_metadata(path) -> qagen.SceneMetadata:
    doc = load_json(path)
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: scene metadata must be a JSON object")
    check_schema_version(doc, path)
    for key in ("scene_id", "objects"):
        if key not in doc:
            raise SchemaError(f"{path}: scene metadata missing {key!r}")
    objects = []
    for i, rec in enumerate(doc["objects"]):
        for key in ("instance_id", "category", "obb"):
            if key not in rec:
                raise SchemaError(f"{path}: object {i} missing {key!r}")
        obb = rec["obb"]
        for key in ("center", "rotation", "extent"):
            if key not in obb:
                raise SchemaError(f"{path}: object {i} obb missing {key!r}")
        objects.append(
            qagen.SceneObject(
                instance_id=int(rec["instance_id"]),
                category=str(rec["category"]),
                obb=qagen.OrientedBox(
                    center=obb["center"],
                    rotation=np.asarray(obb["rotation"], dtype=np.float64).reshape(3, 3),
                    extent=obb["extent"],
                ),
            )
        )
    visibility = {
        str(cat): [(float(t), float(c)) for t, c in series]
        for cat, series in doc.get("visibility", {}).items()
    }
    return qagen.SceneMetadata(
        scene_id=str(doc["scene_id"]),
        objects=tuple(objects),
        room_points=doc.get("room_points"),
        room_area=doc.get("room_area"),
        visibility=visibility,
    )


def load_predictions(path):
    preds = []
    for i, rec in enumerate(load_jsonl(path)):
        check_schema_version(rec, f"{path}:{i + 1}")
        if "id" not in rec or "pred" not in rec:
            raise SchemaError(f"{path}: prediction record {i} needs 'id' and 'pred'")
        preds.append((str(rec["id"]), str(rec.get("raw_output", "")), rec["pred"]))
    return preds


def load_reward_records(path):
    records = []
    for i, rec in enumerate(load_jsonl(path)):
        check_schema_version(rec, f"{path}:{i + 1}")
        for key in ("item_id", "task_type", "candidates"):
            if key not in rec:
                raise SchemaError(f"{path}: reward record {i} missing {key!r}")
        cands = [(c["trace_ref"], float(c["reward"])) for c in rec["candidates"]]
        records.append(
            cs.RewardRecord(
                item_id=str(rec["item_id"]),
                task_type=str(rec["task_type"]),
                candidates=tuple(cands),
            )
        )
    return records


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------

def cmd_sample(args) -> int:
    config = build_config(
        args.config,
        {
            "n_m": args.nm,
            "n_k": args.nk,
            "lam": getattr(args, "lambda"),
            "conf_floor": args.conf_floor,
            "percentile": args.percentile,
            "stride": args.stride,
            "seed": args.seed,
        },
    )
    frames = load_manifest(args.manifest)
    n_m = min(config.n_m, len(frames))
    if n_m < len(frames):
        keep = coverage.uniform_subsample(len(frames), n_m)
        frames = [frames[i] for i in keep]
    if config.n_k > len(frames):
        raise InputError(f"n_k={config.n_k} exceeds the {len(frames)} candidate frames")

    scene = coverage.voxelize_frames(
        frames,
        lam=config.lam,
        conf_floor=config.conf_floor,
        percentile=config.percentile,
        stride=config.stride,
    )
    result = coverage.greedy_select(
        coverage.CoverageInstance(frame_sets=scene.frame_sets, k=config.n_k)
    )
    payload = {
        "schema_version": SCHEMA_VERSION,
        "selected_ids": list(result.selected_ids),
        "selected_sorted": sorted(result.selected_ids),
        "per_step_gain": list(result.per_step_gain),
        "covered_voxels": result.covered_count,
        "total_voxels": scene.total_voxels,
        "early_stop": result.early_stop,
        "delta": scene.delta,
        "candidate_frame_ids": [f.frame_id for f in frames],
        "config": config.as_dict(),
    }
    dump_json(args.out, payload)
    if args.export_ply:
        selected = set(result.selected_ids)
        pts, cols = [], []
        for ps in scene.filtered_points:
            color = _SELECTED_COLOR if ps.frame_id in selected else _UNSELECTED_COLOR
            pts.append(ps.points)
            cols.append(np.tile(color, (len(ps), 1)))
        write_ply_points(
            args.export_ply,
            np.concatenate(pts) if pts else np.empty((0, 3)),
            np.concatenate(cols) if cols else np.empty((0, 3)),
        )
    print(
        f"selected {len(result.selected_ids)}/{config.n_k} frames covering "
        f"{result.covered_count}/{scene.total_voxels} voxels (delta={scene.delta:.6g})"
    )
    return EXIT_OK


def cmd_score(args) -> int:
    config = build_config(
        args.config,
        {"mra_convention": args.mra_convention, "edit_cost": args.edit_cost},
    )
    preds = load_predictions(args.pred)
    gt = [parse_qa_record(rec, args.gt) for rec in load_jsonl(args.gt)]
    if not gt:
        raise SchemaError(f"{args.gt}: no ground-truth records")
    report = rewards.score_benchmark(preds, gt, config.reward_config())
    payload = {
        "schema_version": SCHEMA_VERSION,
        "overall": report.overall,
        "per_task": {
            task: {
                "mean": s.mean,
                "count": s.count,
                "em1": s.em1_mean,
                "em_refined": s.em_refined_mean,
            }
            for task, s in report.per_task.items()
        },
        "items": [
            {
                "id": it.id,
                "task_type": it.task_type,
                "answer_kind": it.answer_kind.value,
                "score": it.score,
                "em1": it.em1,
                "em_refined": it.em_refined,
                "parse_failed": it.parse_failed,
            }
            for it in report.items
        ],
        "config": config.as_dict(),
    }
    dump_json(args.out, payload)
    for task, s in report.per_task.items():
        extra = ""
        if s.em1_mean is not None:
            extra = f"  em1={s.em1_mean:.4f}  em_r1={s.em_refined_mean:.4f}"
        print(f"{task:<20} n={s.count:<5d} mean={s.mean:.4f}{extra}")
    print(f"{'overall':<20} {'':<7} mean={report.overall:.4f}")
    return EXIT_OK


def cmd_qagen(args) -> int:
    meta = load_scene_metadata(args.scene_meta)
    if args.tasks == "all":
        tasks = qagen.TASK_TYPES
    else:
        tasks = tuple(t for t in args.tasks.split(",") if t)
    pairs = qagen.generate_all(meta, tasks=tasks, rng_seed=args.seed, limits=args.limit)
    dump_jsonl(args.out, [qa_record(p) for p in pairs])
    print(f"wrote {len(pairs)} QA pairs for scene {meta.scene_id} to {args.out}")
    return EXIT_OK


def cmd_coldstart(args) -> int:
    records = load_reward_records(args.records)
    if not records:
        raise SchemaError(f"{args.records}: no reward records")
    result = cs.filter_records(records, q=args.q)
    task_types = {rec.item_id: rec.task_type for rec in records}
    payload = {
        "schema_version": SCHEMA_VERSION,
        "thresholds": result.thresholds,
        "retained_per_type": result.retained_per_type,
        "total_per_type": result.total_per_type,
        "kept_count": len(result.kept),
        "config": {"q": args.q},
    }
    dump_json(args.out, payload)
    kept_out = args.kept_out or args.out + ".kept.jsonl"
    dump_jsonl(
        kept_out,
        [
            {
                "schema_version": SCHEMA_VERSION,
                "item_id": item_id,
                "trace_ref": ref,
                "reward": reward,
                "task_type": task_types[item_id],
            }
            for item_id, ref, reward in result.kept
        ],
    )
    print(f"kept {len(result.kept)}/{len(records)} items; thresholds: {result.thresholds}")
    return EXIT_OK


# --------------------------------------------------------------------------
# Entry point
# --------------------------------------------------------------------------

_ERROR_CODES = [
    (ManifestMismatchError, "id-mismatch", EXIT_MISMATCH),
    (SchemaError, "schema-error", EXIT_INPUT),
    (InputError, "input-error", EXIT_INPUT),
    (VoxcoverError, "data-error", EXIT_INPUT),
    (OSError, "io-error", EXIT_INPUT),
    (json.JSONDecodeError, "schema-error", EXIT_INPUT),
    (ValueError, "input-error", EXIT_INPUT),
]


def _emit_error(exc) -> int:
    for cls, code, exit_code in _ERROR_CODES:
        if isinstance(exc, cls):
            payload = {"schema_version": SCHEMA_VERSION, "error": code, "message": str(exc)}
            if isinstance(exc, ManifestMismatchError):
                payload["missing_ids"] = exc.missing
                payload["unknown_ids"] = exc.unknown
                payload["duplicate_ids"] = exc.duplicates
            print(json.dumps(payload, sort_keys=True), file=sys.stderr)
            return exit_code
    payload = {
        "schema_version": SCHEMA_VERSION,
        "error": "internal-error",
        "message": f"{type(exc).__name__}: {exc}",
    }
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    return EXIT_INTERNAL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="voxcover",
        description="Space-aware frame sampling, QA reward scoring, QA generation, "
        "and cold-start filtering.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="select spatially informative frames from a manifest")
    p.add_argument("--manifest", required=True, help="frame manifest JSON")
    p.add_argument("--out", required=True, help="selection report JSON path")
    p.add_argument("--config", help="config file JSON")
    p.add_argument("--nm", type=int, default=None, help="candidate pool size N_m")
    p.add_argument("--nk", type=int, default=None, help="frames to select N_k")
    p.add_argument("--lambda", type=float, default=None, dest="lambda",
                   help="voxel-size divisor")
    p.add_argument("--conf-floor", type=float, default=None)
    p.add_argument("--percentile", type=float, default=None)
    p.add_argument("--stride", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--export-ply", default=None, help="optional ASCII PLY inspection export")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("score", help="score a prediction file against ground truth")
    p.add_argument("pred", help="predictions JSONL (id, raw_output, pred)")
    p.add_argument("gt", help="ground-truth QA JSONL")
    p.add_argument("--out", required=True, help="score report JSON path")
    p.add_argument("--config", help="config file JSON")
    p.add_argument("--mra-convention", choices=["paper", "complement"], default=None)
    p.add_argument("--edit-cost", choices=["unit", "indel"], default=None)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("qagen", help="generate QA pairs from scene metadata")
    p.add_argument("scene_meta", help="scene metadata JSON")
    p.add_argument("--out", required=True, help="QA pairs JSONL path")
    p.add_argument("--tasks", default="all", help="comma-separated task types, or 'all'")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--limit", type=int, default=2, help="max pairs per task type")
    p.set_defaults(func=cmd_qagen)

    p = sub.add_parser("coldstart", help="filter reward records into a cold-start set")
    p.add_argument("records", help="reward records JSONL")
    p.add_argument("--out", required=True, help="filter result JSON path")
    p.add_argument("--kept-out", default=None, help="kept items JSONL (default: <out>.kept.jsonl)")
    p.add_argument("--q", type=float, default=0.5, help="per-type quantile")
    p.set_defaults(func=cmd_coldstart)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - all errors become stderr JSON
        return _emit_error(exc)


if __name__ == "__main__":
    sys.exit(main())
