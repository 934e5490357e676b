"""Workspace topology: target, occupied, robot, local-energy, and free-motion
domains, plus the scenario file format shared by the generator, simulator,
and CLI.

Coordinates live in a table-fixed frame with the origin at the lower-left
table corner; the table occupies [0, w] x [0, h]. All lengths are meters,
forces newtons.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

from .geometry import Disc, GeometryError, Point2, distance

FIXED = "fixed"
MOVABLE = "movable"

GRAVITY = 9.81


class WorldError(ValueError):
    """Raised when a world or scenario violates its invariants."""


@dataclass(frozen=True)
class TargetDomain:
    """Closed disc |x - g| <= r_g the robot must enter."""

    g: Point2
    r_g: float

    def __post_init__(self):
        if not self.r_g > 0.0:
            raise WorldError(f"target radius must be > 0, got {self.r_g}")


@dataclass(frozen=True)
class OperableVector:
    """Contact-interface constants of one object: spring K, damping D, offset C."""

    K: float
    D: float
    C: float

    def as_tuple(self):
        return (self.K, self.D, self.C)


@dataclass
class ObjectBody:
    """One cylindrical object, projected to its footprint disc.

    ``class_truth`` and ``theta_truth`` are simulator-side ground truth;
    planners only ever see sensor frames.
    """

    id: int
    x: float
    y: float
    radius: float
    class_truth: str
    theta_truth: OperableVector
    mass: float
    friction_coeff: float = 0.5
    topple_threshold: float = math.inf
    z_height: float = 0.2
    vx: float = 0.0
    vy: float = 0.0
    toppled: bool = False

    def __post_init__(self):
        if self.class_truth not in (FIXED, MOVABLE):
            raise WorldError(f"unknown object class {self.class_truth!r}")
        if self.radius <= 0 or self.mass <= 0:
            raise WorldError("object radius and mass must be positive")
        if self.friction_coeff < 0:
            raise WorldError("friction coefficient must be >= 0")
        if not self.topple_threshold > 0:
            raise WorldError("topple threshold must be > 0")

    @property
    def movable(self) -> bool:
        return self.class_truth == MOVABLE and not self.toppled

    @property
    def disc(self) -> Disc:
        return Disc(Point2(self.x, self.y), self.radius)

    @property
    def breakaway_force(self) -> float:
        return self.friction_coeff * self.mass * GRAVITY


@dataclass
class RobotBody:
    """The planar point robot: a disc footprint with mass."""

    x: float
    y: float
    radius: float
    mass: float
    height: float = 0.3
    vx: float = 0.0
    vy: float = 0.0

    def __post_init__(self):
        if self.radius <= 0 or self.mass <= 0:
            raise WorldError("robot radius and mass must be positive")

    @property
    def position(self) -> Point2:
        return Point2(self.x, self.y)


@dataclass
class WorldState:
    """Single source of truth for one trial.

    ``targets`` is the ordered mission sequence (1..3 entries); ``target``
    exposes the first entry for single-target use.
    """

    table_w: float
    table_h: float
    robot: RobotBody
    objects: list[ObjectBody]
    targets: list[TargetDomain]
    r_p: float
    seed: int = 0

    def __post_init__(self):
        if self.table_w <= 0 or self.table_h <= 0:
            raise WorldError("table dimensions must be positive")
        if not self.targets:
            raise WorldError("world needs at least one target")
        if not self.r_p > self.robot.radius:
            raise WorldError("proximity radius r_p must exceed the robot radius")
        self.objects = sorted(self.objects, key=lambda o: o.id)
        ids = [o.id for o in self.objects]
        if len(set(ids)) != len(ids):
            raise WorldError("object ids must be unique")
        for o in self.objects:
            if not self.contains(o.x, o.y):
                raise WorldError(f"object {o.id} center outside table")
        if not self.contains(self.robot.x, self.robot.y):
            raise WorldError("robot start outside table")
        if not free_motion_query(self, self.robot.position):
            raise WorldError("robot start is not collision-free")

    @property
    def target(self) -> TargetDomain:
        return self.targets[0]

    def contains(self, x: float, y: float) -> bool:
        return 0.0 <= x <= self.table_w and 0.0 <= y <= self.table_h

    def copy(self) -> "WorldState":
        w = WorldState.__new__(WorldState)
        w.table_w = self.table_w
        w.table_h = self.table_h
        w.robot = replace(self.robot)
        w.objects = [replace(o) for o in self.objects]
        w.targets = list(self.targets)
        w.r_p = self.r_p
        w.seed = self.seed
        return w


def local_energy_domain(robot: RobotBody, r_p: float) -> Disc:
    """The proximity-sensing disc centered on the robot."""
    if not r_p > 0:
        raise WorldError(f"r_p must be > 0, got {r_p}")
    return Disc(Point2(robot.x, robot.y), r_p)


def objects_in_domain(world: WorldState, d: Disc) -> list[ObjectBody]:
    """Objects whose disc intersects d (strict inequality), ascending id."""
    out = []
    for o in world.objects:
        if distance((o.x, o.y), d.center) < d.radius + o.radius:
            out.append(o)
    return out


def in_target(p, t: TargetDomain) -> bool:
    """Closed-set membership |p - g| <= r_g."""
    return distance(p, t.g) <= t.r_g


def free_motion_query(world: WorldState, p) -> bool:
    """True iff a robot body centered at p overlaps no object and stays on the table.

    Uses configuration-space inflation: each object disc grows by the robot
    radius, and the table shrinks by it.
    """
    if isinstance(p, Point2):
        px, py = p.x, p.y
    else:
        px, py = float(p[0]), float(p[1])
    if not world.contains(px, py):
        raise WorldError(f"query point ({px}, {py}) outside table")
    r = world.robot.radius
    if px < r or py < r or px > world.table_w - r or py > world.table_h - r:
        return False
    for o in world.objects:
        dx = px - o.x
        dy = py - o.y
        rr = o.radius + r
        if dx * dx + dy * dy < rr * rr:
            return False
    return True


# --- scenario file format -------------------------------------------------

def world_to_dict(world: WorldState) -> dict:
    d = {
        "table": {"w": world.table_w, "h": world.table_h},
        "robot": {
            "x": world.robot.x,
            "y": world.robot.y,
            "r": world.robot.radius,
            "mass": world.robot.mass,
        },
        "r_p": world.r_p,
        "target": {
            "x": world.target.g.x,
            "y": world.target.g.y,
            "r_g": world.target.r_g,
        },
        "objects": [
            {
                "id": o.id,
                "x": o.x,
                "y": o.y,
                "radius": o.radius,
                "class": o.class_truth,
                "K": o.theta_truth.K,
                "D": o.theta_truth.D,
                "C": o.theta_truth.C,
                "mass": o.mass,
                "friction": o.friction_coeff,
                "topple_threshold": o.topple_threshold,
            }
            for o in world.objects
        ],
        "seed": world.seed,
    }
    if len(world.targets) > 1:
        d["targets"] = [
            {"x": t.g.x, "y": t.g.y, "r_g": t.r_g} for t in world.targets
        ]
    return d


def _target_from_dict(t: dict) -> TargetDomain:
    return TargetDomain(Point2(float(t["x"]), float(t["y"])), float(t["r_g"]))


def world_from_dict(data: dict) -> WorldState:
    try:
        table = data["table"]
        rb = data["robot"]
        robot = RobotBody(
            x=float(rb["x"]),
            y=float(rb["y"]),
            radius=float(rb["r"]),
            mass=float(rb["mass"]),
        )
        if "targets" in data:
            targets = [_target_from_dict(t) for t in data["targets"]]
        else:
            targets = [_target_from_dict(data["target"])]
        objects = []
        for entry in data["objects"]:
            topple = entry.get("topple_threshold", math.inf)
            if topple is None or topple == "inf":
                topple = math.inf
            objects.append(
                ObjectBody(
                    id=int(entry["id"]),
                    x=float(entry["x"]),
                    y=float(entry["y"]),
                    radius=float(entry["radius"]),
                    class_truth=str(entry["class"]),
                    theta_truth=OperableVector(
                        float(entry["K"]), float(entry["D"]), float(entry["C"])
                    ),
                    mass=float(entry["mass"]),
                    friction_coeff=float(entry.get("friction", 0.5)),
                    topple_threshold=float(topple),
                )
            )
        return WorldState(
            table_w=float(table["w"]),
            table_h=float(table["h"]),
            robot=robot,
            objects=objects,
            targets=targets,
            r_p=float(data["r_p"]),
            seed=int(data.get("seed", 0)),
        )
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, WorldError):
            raise
        raise WorldError(f"malformed scenario: {e}") from e


def _json_default(o):
    raise TypeError(f"not JSON serializable: {o!r}")


def _format_floats(obj):
    """Round-trip floats through 9 significant digits for byte-stable files."""
    if isinstance(obj, float):
        if math.isinf(obj):
            return "inf"
        return float(f"{obj:.9g}")
    if isinstance(obj, dict):
        return {k: _format_floats(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_format_floats(v) for v in obj]
    return obj


def save_scenario(world: WorldState, path) -> None:
    data = _format_floats(world_to_dict(world))
    with open(path, "w") as f:
        json.dump(data, f, indent=2, sort_keys=True, default=_json_default)
        f.write("\n")


def load_scenario(path) -> WorldState:
    try:
        with open(path) as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise WorldError(f"scenario parse error at line {e.lineno}: {e.msg}") from e
    return world_from_dict(data)
