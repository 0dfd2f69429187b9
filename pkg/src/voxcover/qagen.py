"""Spatial question-answer generation from scene metadata.

Seven task types are generated from object-level oriented bounding boxes,
room floor points, and per-category visibility series: object counting,
object size, room size, absolute distance, appearance order, relative
distance, and relative direction. Generation is deterministic: each
(scene, task) pair derives its own PRNG stream from the run seed, so the
output of one task never depends on which other tasks run.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateGeometryError, DegenerateRoomError, InputError
from .rewards import AnswerKind
from .util import stable_seed

TASK_OBJECT_COUNT = "object_count"
TASK_OBJECT_SIZE = "object_size"
TASK_ROOM_SIZE = "room_size"
TASK_ABS_DISTANCE = "abs_distance"
TASK_APPEARANCE_ORDER = "appearance_order"
TASK_REL_DISTANCE = "rel_distance"
TASK_REL_DIRECTION = "rel_direction"

TASK_TYPES = (
    TASK_OBJECT_COUNT,
    TASK_OBJECT_SIZE,
    TASK_ROOM_SIZE,
    TASK_ABS_DISTANCE,
    TASK_APPEARANCE_ORDER,
    TASK_REL_DISTANCE,
    TASK_REL_DIRECTION,
)

Q_OBJECT_COUNT = "How many {category}(s) are in this room?"
Q_OBJECT_SIZE = (
    "What is the length of the longest dimension (length, width, or height) "
    "of the {category}, measured in centimeters?"
)
Q_ROOM_SIZE = "What is the size of this room (in square meters)?"
Q_ABS_DISTANCE = (
    "Measuring from the closest point of each object, what is the direct "
    "distance between the {a} and the {b} (in meters)?"
)
Q_APPEARANCE_ORDER = (
    "What will be the first-time appearance order of the following "
    "categories in the video: {a}, {b}, {c}, {d}"
)
Q_REL_DISTANCE = "Which of these objects ({a}, {b}, {c}, {d}) is closest to the {anchor}?"
Q_REL_DIRECTION = {
    "easy": (
        "If I am standing by the {position} and facing the {facing}, "
        "is the {query} to the left or the right?"
    ),
    "medium": (
        "If I am standing by the {position} and facing the {facing}, "
        "is the {query} to the left, the right, or the back?"
    ),
    "hard": (
        "If I am standing by the {position} and facing the {facing}, "
        "is the {query} to the front-left, front-right, back-left, "
        "or back-right?"
    ),
}

DIRECTION_OPTIONS = {
    "easy": ("left", "right", "back", "front"),
    "medium": ("left", "right", "back", "front"),
    "hard": ("front-left", "front-right", "back-left", "back-right"),
}

_DIFFICULTIES = ("easy", "medium", "hard")
_BOUNDARIES = {
    "easy": (0.0, 180.0),
    "medium": (0.0, 135.0, -135.0),
    "hard": (0.0, 90.0, -90.0, 180.0),
}
_BOUNDARY_TOL = 1e-6


@dataclass(frozen=True)
class GenConfig:
    """Knobs shared by the generators; values are recorded in pair meta."""

    pixel_threshold: float = 307.2  # 0.1% of a 640x480 frame
    samples_per_box: int = 1000
    rel_dist_separation: float = 0.15
    room_cell: float = 0.05
    excluded_categories: frozenset = frozenset({"wall", "floor", "ceiling", "otherstructure"})

    def __post_init__(self):
        if self.pixel_threshold <= 0:
            raise InputError("pixel_threshold must be positive")
        if not 0.15 <= self.rel_dist_separation <= 0.30:
            raise InputError("rel_dist_separation must lie in [0.15, 0.30]")


@dataclass(frozen=True)
class OrientedBox:
    """Oriented bounding box: center, 3x3 rotation, full side lengths."""

    center: np.ndarray
    rotation: np.ndarray
    extent: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.center, dtype=np.float64).reshape(3)
        r = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        e = np.asarray(self.extent, dtype=np.float64).reshape(3)
        if not np.allclose(r @ r.T, np.eye(3), atol=1e-6):
            raise InputError("OBB rotation is not orthonormal within 1e-6")
        if (e <= 0).any():
            raise InputError(f"OBB extents must be positive, got {e}")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "extent", e)


@dataclass(frozen=True)
class SceneObject:
    instance_id: int
    category: str
    obb: OrientedBox

    def __post_init__(self):
        if not self.category:
            raise InputError("object category must be nonempty")


@dataclass(frozen=True)
class SceneMetadata:
    """Scene-level inputs: objects with OBBs, floor points or a precomputed
    room area, and per-category visibility series [(timestamp, pixels)]."""

    scene_id: str
    objects: tuple
    room_points: np.ndarray | None = None
    room_area: float | None = None
    visibility: dict = field(default_factory=dict)

    def __post_init__(self):
        objs = tuple(self.objects)
        ids = [o.instance_id for o in objs]
        if len(set(ids)) != len(ids):
            raise InputError("instance ids must be unique")
        for cat, series in self.visibility.items():
            ts = [t for t, _ in series]
            if any(b <= a for a, b in zip(ts, ts[1:])):
                raise InputError(f"visibility timestamps for {cat!r} must strictly increase")
        object.__setattr__(self, "objects", objs)
        if self.room_points is not None:
            pts = np.asarray(self.room_points, dtype=np.float64).reshape(-1, 2)
            object.__setattr__(self, "room_points", pts)


@dataclass(frozen=True)
class QAPair:
    """One generated question with its ground-truth answer."""

    id: str
    scene_id: str
    task_type: str
    question: str
    answer: object
    answer_kind: AnswerKind
    options: tuple | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        kind = AnswerKind(self.answer_kind)
        object.__setattr__(self, "answer_kind", kind)
        if kind is AnswerKind.MULTIPLE_CHOICE:
            opts = tuple(self.options or ())
            if len(opts) != 4 or len(set(opts)) != 4:
                raise InputError(f"{self.id}: multiple choice needs exactly 4 distinct options")
            if self.answer not in opts:
                raise InputError(f"{self.id}: answer {self.answer!r} missing from options")
            object.__setattr__(self, "options", opts)
        elif kind is AnswerKind.NUMERICAL:
            val = float(self.answer)
            if not np.isfinite(val) or val <= 0:
                raise InputError(f"{self.id}: numerical answer must be a finite positive real")


# --------------------------------------------------------------------------
# Geometric predicates
# --------------------------------------------------------------------------

def obb_longest_dim_cm(obb: OrientedBox) -> float:
    """Longest box side, converted from meters to centimeters."""
    return 100.0 * float(obb.extent.max())


def room_area_m2(room_points, cell: float = 0.05) -> float:
    """Occupancy-grid floor area: occupied cells times cell area.

    Approximates the floor polygon area for densely sampled floor points.
    """
    if cell <= 0:
        raise InputError(f"cell must be positive, got {cell}")
    pts = np.asarray(room_points, dtype=np.float64).reshape(-1, 2)
    if len(pts) < 3:
        raise DegenerateRoomError(f"need at least 3 floor points, got {len(pts)}")
    cells = np.unique(np.floor(pts / cell).astype(np.int64), axis=0)
    return float(len(cells)) * cell * cell


def sample_obb_points(obb: OrientedBox, n: int, rng) -> np.ndarray:
    """n points uniform in the box: center + R (u * extent/2), u ~ U[-1,1]^3."""
    u = rng.uniform(-1.0, 1.0, size=(n, 3))
    return obb.center + (u * (obb.extent / 2.0)) @ obb.rotation.T


def min_obb_distance(
    a: OrientedBox,
    b: OrientedBox,
    samples_per_box: int = 1000,
    rng_seed: int = 0,
) -> float:
    """Minimum distance between uniform interior samples of two boxes.

    A Monte Carlo stand-in for the closest-point distance; the estimate
    never undershoots the true minimum and converges as samples grow.
    """
    if samples_per_box < 100:
        raise InputError(f"samples_per_box must be >= 100, got {samples_per_box}")
    rng = np.random.default_rng(rng_seed)
    pa = sample_obb_points(a, samples_per_box, rng)
    pb = sample_obb_points(b, samples_per_box, rng)
    dist, _ = cKDTree(pb).query(pa, k=1)
    return float(dist.min())


def first_appearance(visibility, pixel_threshold: float):
    """First timestamp per category whose visible pixel count exceeds the
    threshold; categories that never exceed it are omitted."""
    if pixel_threshold <= 0:
        raise InputError(f"pixel_threshold must be positive, got {pixel_threshold}")
    out = {}
    for cat, series in visibility.items():
        for t, count in series:
            if count > pixel_threshold:
                out[cat] = t
                break
    return out


def rel_direction_angle(position, facing, query) -> float:
    """Signed horizontal angle, in degrees in (-180, 180], from the
    position->facing vector to the position->query vector. Positive means
    left (counterclockwise from above)."""
    p = np.asarray(position, dtype=np.float64)
    f = np.asarray(facing, dtype=np.float64)
    q = np.asarray(query, dtype=np.float64)
    v1 = f - p
    v2 = q - p
    if np.linalg.norm(v1) < 1e-12 or np.linalg.norm(v2) < 1e-12:
        raise DegenerateGeometryError("facing/query coincides with position")
    cross = v1[0] * v2[1] - v1[1] * v2[0]
    dot = v1[0] * v2[0] + v1[1] * v2[1]
    theta = float(np.degrees(np.arctan2(cross, dot)))
    return 180.0 if theta == -180.0 else theta


def _wrap_angle(theta: float) -> float:
    t = (theta + 180.0) % 360.0 - 180.0
    return 180.0 if t == -180.0 else t


def discretize_direction(theta: float, difficulty: str):
    """Directional class for an angle, or None when the angle sits within
    1e-6 deg of a bin boundary (the sample is rejected).

    easy: left/right; medium: adds back for |theta| >= 135; hard: the four
    front/back-left/right quadrants.
    """
    if difficulty not in _DIFFICULTIES:
        raise InputError(f"unknown difficulty {difficulty!r}")
    t = _wrap_angle(theta)
    for b in _BOUNDARIES[difficulty]:
        d = abs(t - b) % 360.0
        if min(d, 360.0 - d) < _BOUNDARY_TOL:
            return None
    if difficulty == "easy":
        return "left" if t > 0 else "right"
    if difficulty == "medium":
        if abs(t) >= 135.0:
            return "back"
        return "left" if t > 0 else "right"
    if t > 90.0:
        return "back-left"
    if t > 0.0:
        return "front-left"
    if t > -90.0:
        return "front-right"
    return "back-right"


# --------------------------------------------------------------------------
# Generators
# --------------------------------------------------------------------------

def _rng_for(rng_seed: int, scene_id: str, task_type: str):
    return np.random.default_rng(stable_seed(rng_seed, scene_id, task_type))


def eligible_objects(meta: SceneMetadata, config: GenConfig):
    return [o for o in meta.objects if o.category not in config.excluded_categories]


def _unique_category_objects(meta: SceneMetadata, config: GenConfig):
    objs = eligible_objects(meta, config)
    counts = Counter(o.category for o in objs)
    return {o.category: o for o in objs if counts[o.category] == 1}


def _sample(rng, pool, size):
    """Deterministic sample without replacement preserving rng stream order."""
    idx = rng.choice(len(pool), size=size, replace=False)
    return [pool[int(i)] for i in idx]


def _pair_id(meta: SceneMetadata, task_type: str, counter: int) -> str:
    return f"{meta.scene_id}_{task_type}_{counter}"


def gen_object_count(meta: SceneMetadata, rng_seed: int, limit: int = 2,
                     config: GenConfig = GenConfig()):
    """Count questions for categories that appear at least twice."""
    counts = Counter(o.category for o in eligible_objects(meta, config))
    pool = sorted(c for c, n in counts.items() if n >= 2)
    if not pool:
        return []
    rng = _rng_for(rng_seed, meta.scene_id, TASK_OBJECT_COUNT)
    pairs = []
    for i, cat in enumerate(_sample(rng, pool, min(limit, len(pool)))):
        pairs.append(
            QAPair(
                id=_pair_id(meta, TASK_OBJECT_COUNT, i),
                scene_id=meta.scene_id,
                task_type=TASK_OBJECT_COUNT,
                question=Q_OBJECT_COUNT.format(category=cat),
                answer=int(counts[cat]),
                answer_kind=AnswerKind.NUMERICAL,
                meta={"category": cat, "rng_seed": rng_seed},
            )
        )
    return pairs


def gen_object_size(meta: SceneMetadata, rng_seed: int, limit: int = 2,
                    config: GenConfig = GenConfig()):
    """Longest-dimension questions for categories unique in the scene."""
    unique = _unique_category_objects(meta, config)
    pool = sorted(unique)
    if not pool:
        return []
    rng = _rng_for(rng_seed, meta.scene_id, TASK_OBJECT_SIZE)
    pairs = []
    for i, cat in enumerate(_sample(rng, pool, min(limit, len(pool)))):
        obj = unique[cat]
        pairs.append(
            QAPair(
                id=_pair_id(meta, TASK_OBJECT_SIZE, i),
                scene_id=meta.scene_id,
                task_type=TASK_OBJECT_SIZE,
                question=Q_OBJECT_SIZE.format(category=cat),
                answer=obb_longest_dim_cm(obj.obb),
                answer_kind=AnswerKind.NUMERICAL,
                meta={"category": cat, "instance_id": obj.instance_id, "rng_seed": rng_seed},
            )
        )
    return pairs


def gen_room_size(meta: SceneMetadata, rng_seed: int, limit: int = 1,
                  config: GenConfig = GenConfig()):
    """One room-area question, from the precomputed area or floor points."""
    if limit < 1:
        return []
    if meta.room_area is not None:
        area = float(meta.room_area)
        source = "precomputed"
    elif meta.room_points is not None and len(meta.room_points) >= 3:
        area = room_area_m2(meta.room_points, cell=config.room_cell)
        source = "occupancy_grid"
    else:
        return []
    return [
        QAPair(
            id=_pair_id(meta, TASK_ROOM_SIZE, 0),
            scene_id=meta.scene_id,
            task_type=TASK_ROOM_SIZE,
            question=Q_ROOM_SIZE,
            answer=area,
            answer_kind=AnswerKind.NUMERICAL,
            meta={"source": source, "cell": config.room_cell, "rng_seed": rng_seed},
        )
    ]


def gen_abs_distance(meta: SceneMetadata, rng_seed: int, limit: int = 2,
                     config: GenConfig = GenConfig()):
    """Closest-point distance questions between pairs of unique categories."""
    unique = _unique_category_objects(meta, config)
    cats = sorted(unique)
    if len(cats) < 2:
        return []
    rng = _rng_for(rng_seed, meta.scene_id, TASK_ABS_DISTANCE)
    all_pairs = list(itertools.combinations(cats, 2))
    chosen = _sample(rng, all_pairs, min(limit, len(all_pairs)))
    pairs = []
    for cat_a, cat_b in chosen:
        seed = stable_seed(rng_seed, meta.scene_id, TASK_ABS_DISTANCE, cat_a, cat_b)
        dist = min_obb_distance(
            unique[cat_a].obb, unique[cat_b].obb,
            samples_per_box=config.samples_per_box, rng_seed=seed,
        )
        if dist <= 0:
            continue  # overlapping boxes: no positive ground truth
        pairs.append(
            QAPair(
                id=_pair_id(meta, TASK_ABS_DISTANCE, len(pairs)),
                scene_id=meta.scene_id,
                task_type=TASK_ABS_DISTANCE,
                question=Q_ABS_DISTANCE.format(a=cat_a, b=cat_b),
                answer=dist,
                answer_kind=AnswerKind.NUMERICAL,
                meta={
                    "category_a": cat_a,
                    "category_b": cat_b,
                    "samples_per_box": config.samples_per_box,
                    "distance_seed": seed,
                    "rng_seed": rng_seed,
                },
            )
        )
    return pairs


def gen_appearance_order(meta: SceneMetadata, rng_seed: int, limit: int = 2,
                         config: GenConfig = GenConfig()):
    """Order-of-first-appearance questions over four sampled categories.

    Categories sharing a first-appearance timestamp are dropped from the
    pool; the correct option is the timestamp-sorted order and the three
    distractors are distinct other permutations.
    """
    fa = first_appearance(meta.visibility, config.pixel_threshold)
    fa = {c: t for c, t in fa.items() if c not in config.excluded_categories}
    by_time = Counter(fa.values())
    pool = sorted(c for c, t in fa.items() if by_time[t] == 1)
    if len(pool) < 4:
        return []
    rng = _rng_for(rng_seed, meta.scene_id, TASK_APPEARANCE_ORDER)
    pairs = []
    for i in range(limit):
        cats = _sample(rng, pool, 4)
        shown = [cats[int(j)] for j in rng.permutation(4)]
        correct = tuple(sorted(shown, key=lambda c: fa[c]))
        perms = [p for p in itertools.permutations(shown) if p != correct]
        perms.sort()
        distractors = _sample(rng, perms, 3)
        options = [", ".join(correct)] + [", ".join(p) for p in distractors]
        options = [options[int(j)] for j in rng.permutation(4)]
        pairs.append(
            QAPair(
                id=_pair_id(meta, TASK_APPEARANCE_ORDER, i),
                scene_id=meta.scene_id,
                task_type=TASK_APPEARANCE_ORDER,
                question=Q_APPEARANCE_ORDER.format(a=shown[0], b=shown[1], c=shown[2], d=shown[3]),
                answer=", ".join(correct),
                answer_kind=AnswerKind.MULTIPLE_CHOICE,
                options=tuple(options),
                meta={
                    "categories": list(shown),
                    "timestamps": {c: fa[c] for c in shown},
                    "pixel_threshold": config.pixel_threshold,
                    "rng_seed": rng_seed,
                },
            )
        )
    return pairs


def gen_rel_distance(meta: SceneMetadata, rng_seed: int, limit: int = 2,
                     config: GenConfig = GenConfig(), max_attempts: int = 20):
    """Closest-object questions: four options around a unique anchor, with
    every pair of option distances separated by at least the configured
    threshold. Candidate sets violating the separation are resampled."""
    unique = _unique_category_objects(meta, config)
    cats = sorted(unique)
    if len(cats) < 5:
        return []
    rng = _rng_for(rng_seed, meta.scene_id, TASK_REL_DISTANCE)
    pairs = []
    for i in range(limit):
        made = None
        for _ in range(max_attempts):
            anchor = _sample(rng, cats, 1)[0]
            others = [c for c in cats if c != anchor]
            options = _sample(rng, others, 4)
            dists = {}
            for cat in options:
                seed = stable_seed(rng_seed, meta.scene_id, TASK_REL_DISTANCE, anchor, cat)
                dists[cat] = min_obb_distance(
                    unique[anchor].obb, unique[cat].obb,
                    samples_per_box=config.samples_per_box, rng_seed=seed,
                )
            vals = sorted(dists.values())
            gaps_ok = all(b - a >= config.rel_dist_separation for a, b in zip(vals, vals[1:]))
            if not gaps_ok:
                continue
            made = (anchor, options, dists)
            break
        if made is None:
            continue
        anchor, options, dists = made
        answer = min(options, key=lambda c: (dists[c], c))
        pairs.append(
            QAPair(
                id=_pair_id(meta, TASK_REL_DISTANCE, len(pairs)),
                scene_id=meta.scene_id,
                task_type=TASK_REL_DISTANCE,
                question=Q_REL_DISTANCE.format(
                    a=options[0], b=options[1], c=options[2], d=options[3], anchor=anchor
                ),
                answer=answer,
                answer_kind=AnswerKind.MULTIPLE_CHOICE,
                options=tuple(options),
                meta={
                    "anchor": anchor,
                    "distances": {c: dists[c] for c in options},
                    "separation": config.rel_dist_separation,
                    "samples_per_box": config.samples_per_box,
                    "rng_seed": rng_seed,
                },
            )
        )
    return pairs


def gen_rel_direction(meta: SceneMetadata, rng_seed: int, limit: int = 2,
                      config: GenConfig = GenConfig(), max_attempts: int = 20):
    """Directional questions for (position, facing, query) triples of unique
    categories; angles on a bin boundary are rejected and resampled."""
    unique = _unique_category_objects(meta, config)
    cats = sorted(unique)
    if len(cats) < 3:
        return []
    rng = _rng_for(rng_seed, meta.scene_id, TASK_REL_DIRECTION)
    pairs = []
    for i in range(limit):
        made = None
        for _ in range(max_attempts):
            difficulty = _DIFFICULTIES[int(rng.integers(0, 3))]
            pos_cat, face_cat, query_cat = _sample(rng, cats, 3)
            centers = {c: unique[c].obb.center[:2] for c in (pos_cat, face_cat, query_cat)}
            try:
                theta = rel_direction_angle(
                    centers[pos_cat], centers[face_cat], centers[query_cat]
                )
            except DegenerateGeometryError:
                continue
            label = discretize_direction(theta, difficulty)
            if label is None:
                continue
            made = (difficulty, pos_cat, face_cat, query_cat, theta, label)
            break
        if made is None:
            continue
        difficulty, pos_cat, face_cat, query_cat, theta, label = made
        options = list(DIRECTION_OPTIONS[difficulty])
        options = [options[int(j)] for j in rng.permutation(4)]
        pairs.append(
            QAPair(
                id=_pair_id(meta, TASK_REL_DIRECTION, len(pairs)),
                scene_id=meta.scene_id,
                task_type=TASK_REL_DIRECTION,
                question=Q_REL_DIRECTION[difficulty].format(
                    position=pos_cat, facing=face_cat, query=query_cat
                ),
                answer=label,
                answer_kind=AnswerKind.MULTIPLE_CHOICE,
                options=tuple(options),
                meta={
                    "difficulty": difficulty,
                    "position": pos_cat,
                    "facing": face_cat,
                    "query": query_cat,
                    "angle_deg": theta,
                    "rng_seed": rng_seed,
                },
            )
        )
    return pairs


_GENERATORS = {
    TASK_OBJECT_COUNT: gen_object_count,
    TASK_OBJECT_SIZE: gen_object_size,
    TASK_ROOM_SIZE: gen_room_size,
    TASK_ABS_DISTANCE: gen_abs_distance,
    TASK_APPEARANCE_ORDER: gen_appearance_order,
    TASK_REL_DISTANCE: gen_rel_distance,
    TASK_REL_DIRECTION: gen_rel_direction,
}


def generate_all(meta: SceneMetadata, tasks=TASK_TYPES, rng_seed: int = 0,
                 limits=2, config: GenConfig = GenConfig()):
    """Run the requested generators in canonical task order.

    ``limits`` is either one int for every task or a {task_type: int} map.
    Output is deterministic given (meta, tasks, rng_seed, limits, config).
    """
    for t in tasks:
        if t not in _GENERATORS:
            raise InputError(f"unknown task type {t!r}")
    out = []
    for task in TASK_TYPES:
        if task not in tasks:
            continue
        limit = limits.get(task, 2) if isinstance(limits, dict) else int(limits)
        out.extend(_GENERATORS[task](meta, rng_seed, limit=limit, config=config))
    return out
