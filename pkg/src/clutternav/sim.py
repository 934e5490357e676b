"""Deterministic fixed-step planar simulator.

The robot is a point-mass disc driven by planner commands; objects respond
through a spring-damper-offset contact law with Coulomb sliding friction and
an optional topple latch. A low-level actuation layer realizes each planner
tick's (conservative force, viscous gain) command at substep rate, which keeps
the large near-contact damping gains stable, and enforces the actuator's
force saturation and soft speed cap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .world import (
    GRAVITY,
    ObjectBody,
    RobotBody,
    TargetDomain,
    WorldState,
    in_target,
    objects_in_domain,
    local_energy_domain,
)

FAILURE_NONE = "none"
FAILURE_FORCE = "force"
FAILURE_TIMEOUT = "timeout"
FAILURE_NO_PATH = "no_path"
FAILURE_PLANNER_FAULT = "planner_fault"

TRAJECTORY_HEADER = (
    "t,x,y,vx,vy,Fx_cmd,Fy_cmd,Fcontact,intent_mode,imagined_x,imagined_y"
)


class SimError(ValueError):
    pass


class NoPathError(RuntimeError):
    """Raised by planners that cannot produce a path in their known world."""


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.002
    planner_period: float = 0.02
    actuation_noise_std: float = 0.0
    max_force: float = 6.0
    proximity_enabled: bool = True
    force_enabled: bool = True
    v_max: float = 0.07            # plant-side soft speed cap, m/s
    vel_limit_gain: float = 400.0  # braking gain beyond v_max, N*s/m
    wall_stiffness: float = 8000.0
    wall_damping: float = 50.0
    seed: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise SimError("dt must be > 0")
        ratio = self.planner_period / self.dt
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise SimError("planner_period must be an integer multiple of dt")

    @property
    def steps_per_tick(self) -> int:
        return int(round(self.planner_period / self.dt))


@dataclass(frozen=True)
class ContactEvent:
    object_id: int
    normal: tuple[float, float]        # unit vector, object -> robot
    penetration: float
    force: tuple[float, float]         # on the robot
    rel_velocity: tuple[float, float]  # robot velocity relative to the object


@dataclass(frozen=True)
class ProximityHit:
    object_id: int
    clearance: float                  # surface-to-surface, < r_p
    bearing: tuple[float, float]      # unit vector robot -> object


@dataclass(frozen=True)
class VisibleObject:
    object_id: int
    x: float
    y: float
    radius: float


@dataclass(frozen=True)
class SensorFrame:
    t: float
    robot_x: float
    robot_y: float
    robot_vx: float
    robot_vy: float
    proximity: tuple[ProximityHit, ...]
    visible: tuple[VisibleObject, ...]
    contacts: tuple[ContactEvent, ...]


@dataclass(frozen=True)
class PlannerCommand:
    """One planner tick's output for the actuation layer."""

    force: tuple[float, float]     # conservative part, held over the tick
    damping: float = 0.0           # viscous gain realized at substep rate
    intent_mode: str = "approach"
    imagined: tuple[float, float] | None = None


@dataclass(frozen=True)
class Mission:
    """Task knowledge handed to a planner at episode start (never ground truth)."""

    targets: tuple[TargetDomain, ...]
    table_w: float
    table_h: float
    robot_radius: float
    robot_mass: float
    r_p: float
    seed: int


@dataclass(frozen=True)
class EpisodeLimits:
    max_time: float = 60.0
    force_fail: float = 10.0
    # robot displacement below stall_dist over stall_time ends the trial
    # early as a timeout; far below v_safe so regulated crawling never trips.
    stall_time: float | None = 5.0
    stall_dist: float = 0.0002


@dataclass
class TrialResult:
    success: bool
    failure_cause: str
    path_cost: float
    peak_force: float
    duration: float
    trajectory: list = field(default_factory=list)
    targets_reached: int = 0

    def __post_init__(self):
        if self.success and self.failure_cause != FAILURE_NONE:
            raise SimError("successful trials carry failure_cause 'none'")


def contact_response(obj: ObjectBody, penetration: float, rel_v_normal: float) -> float:
    """Normal force magnitude K*pen + D*max(rate, 0) + C while penetrating.

    rel_v_normal is the compression rate (positive while closing). No
    adhesion: the result is clamped at zero.
    """
    if penetration < 0:
        raise SimError(f"penetration must be >= 0, got {penetration}")
    if penetration == 0.0:
        return 0.0
    th = obj.theta_truth
    f = th.K * penetration + th.D * max(rel_v_normal, 0.0) + th.C
    return max(f, 0.0)


def object_update(obj: ObjectBody, applied: tuple[float, float], dt: float) -> ObjectBody:
    """Quasi-static sliding under Coulomb friction.

    Fixed or toppled objects never move. A resting movable object stays put
    below its breakaway force; otherwise the net of applied force and kinetic
    friction integrates semi-implicitly, with friction never reversing the
    motion direction within a step.
    """
    if not dt > 0:
        raise SimError("dt must be > 0")
    if not obj.movable:
        return obj
    fx, fy = applied
    mu_mg = obj.breakaway_force
    speed = math.sqrt(obj.vx * obj.vx + obj.vy * obj.vy)
    if speed < 1e-12:
        mag = math.sqrt(fx * fx + fy * fy)
        if mag <= mu_mg:
            if obj.vx != 0.0 or obj.vy != 0.0:
                return replace(obj, vx=0.0, vy=0.0)
            return obj
        scale = (mag - mu_mg) / (mag * obj.mass)
        vx = fx * scale * dt
        vy = fy * scale * dt
    else:
        fr = mu_mg / speed
        ax = (fx - fr * obj.vx) / obj.mass
        ay = (fy - fr * obj.vy) / obj.mass
        vx = obj.vx + ax * dt
        vy = obj.vy + ay * dt
        if vx * obj.vx + vy * obj.vy <= 0.0:
            return replace(obj, vx=0.0, vy=0.0)
    return replace(obj, x=obj.x + vx * dt, y=obj.y + vy * dt, vx=vx, vy=vy)


def robot_step(
    robot: RobotBody,
    command_force: tuple[float, float],
    contact_forces: tuple[float, float],
    cfg: SimConfig,
    noise: tuple[float, float] = (0.0, 0.0),
) -> RobotBody:
    """Semi-implicit Euler step: saturate the command, integrate velocity,
    then position with the new velocity."""
    fx, fy = float(command_force[0]), float(command_force[1])
    if not (math.isfinite(fx) and math.isfinite(fy)):
        raise SimError("non-finite command force")
    mag = math.sqrt(fx * fx + fy * fy)
    if mag > cfg.max_force:
        s = cfg.max_force / mag
        fx *= s
        fy *= s
    fx += contact_forces[0] + noise[0]
    fy += contact_forces[1] + noise[1]
    vx = robot.vx + fx * cfg.dt / robot.mass
    vy = robot.vy + fy * cfg.dt / robot.mass
    return replace(
        robot,
        x=robot.x + vx * cfg.dt,
        y=robot.y + vy * cfg.dt,
        vx=vx,
        vy=vy,
    )


def _robot_object_contacts(world: WorldState, candidates=None):
    """(object, penetration, normal object->robot, compression rate, force)
    for every object disc overlapping the robot, ascending id."""
    robot = world.robot
    out = []
    objs = world.objects if candidates is None else candidates
    for o in objs:
        dx = robot.x - o.x
        dy = robot.y - o.y
        rr = robot.radius + o.radius
        d2 = dx * dx + dy * dy
        if d2 >= rr * rr:
            continue
        d = math.sqrt(d2)
        if d > 1e-12:
            nx, ny = dx / d, dy / d
        else:
            nx, ny = 1.0, 0.0
        pen = rr - d
        rvx = robot.vx - o.vx
        rvy = robot.vy - o.vy
        comp = -(rvx * nx + rvy * ny)
        f = contact_response(o, pen, comp)
        out.append((o, pen, (nx, ny), comp, f))
    return out


def _wall_force(world: WorldState, cfg: SimConfig) -> tuple[float, float, float]:
    """Penalty force from the four table walls on the robot; returns
    (fx, fy, max single-wall magnitude)."""
    r = world.robot
    k = cfg.wall_stiffness
    dmp = cfg.wall_damping
    fx = fy = peak = 0.0
    pen = r.radius - r.x
    if pen > 0:
        f = k * pen + dmp * max(-r.vx, 0.0)
        fx += f
        peak = max(peak, f)
    pen = r.x - (world.table_w - r.radius)
    if pen > 0:
        f = k * pen + dmp * max(r.vx, 0.0)
        fx -= f
        peak = max(peak, f)
    pen = r.radius - r.y
    if pen > 0:
        f = k * pen + dmp * max(-r.vy, 0.0)
        fy += f
        peak = max(peak, f)
    pen = r.y - (world.table_h - r.radius)
    if pen > 0:
        f = k * pen + dmp * max(r.vy, 0.0)
        fy -= f
        peak = max(peak, f)
    return fx, fy, peak


def sense(world: WorldState, cfg: SimConfig, t: float = 0.0) -> SensorFrame:
    """Assemble one sensor frame; ablation flags empty the matching channels."""
    robot = world.robot
    proximity = []
    visible = []
    if cfg.proximity_enabled:
        domain = local_energy_domain(robot, world.r_p)
        for o in objects_in_domain(world, domain):
            dx = o.x - robot.x
            dy = o.y - robot.y
            d = math.sqrt(dx * dx + dy * dy)
            clearance = d - robot.radius - o.radius
            if d > 1e-12:
                bearing = (dx / d, dy / d)
            else:
                bearing = (1.0, 0.0)
            proximity.append(ProximityHit(o.id, clearance, bearing))
            visible.append(VisibleObject(o.id, o.x, o.y, o.radius))
    contacts = []
    if cfg.force_enabled:
        for o, pen, n, comp, f in _robot_object_contacts(world):
            contacts.append(ContactEvent(
                object_id=o.id,
                normal=n,
                penetration=pen,
                force=(f * n[0], f * n[1]),
                rel_velocity=(robot.vx - o.vx, robot.vy - o.vy),
            ))
    return SensorFrame(
        t=t,
        robot_x=robot.x,
        robot_y=robot.y,
        robot_vx=robot.vx,
        robot_vy=robot.vy,
        proximity=tuple(proximity),
        visible=tuple(visible),
        contacts=tuple(contacts),
    )


def _candidate_indices(world: WorldState, reach: float):
    """Indices of objects close enough to interact with the robot this tick."""
    r = world.robot
    out = []
    for i, o in enumerate(world.objects):
        dx = o.x - r.x
        dy = o.y - r.y
        lim = reach + o.radius
        if dx * dx + dy * dy < lim * lim:
            out.append(i)
    return out


def run_episode(world: WorldState, planner, cfg: SimConfig, limits: EpisodeLimits,
                record_trajectory: bool = True) -> TrialResult:
    """Step the simulation, invoking the planner every planner_period.

    Terminates on mission completion (success), a contact force above
    limits.force_fail, a planner fault (non-finite command), a planner
    no-path signal, the stall cutoff, or limits.max_time.
    """
    world = world.copy()
    robot = world.robot
    rng = np.random.default_rng(cfg.seed)
    noisy = cfg.actuation_noise_std > 0.0

    mission = Mission(
        targets=tuple(world.targets),
        table_w=world.table_w,
        table_h=world.table_h,
        robot_radius=robot.radius,
        robot_mass=robot.mass,
        r_p=world.r_p,
        seed=world.seed,
    )
    planner.reset(mission)

    goal_idx = 0
    n_targets = len(world.targets)
    while goal_idx < n_targets and in_target((robot.x, robot.y), world.targets[goal_idx]):
        goal_idx += 1
    trajectory: list = []
    if goal_idx >= n_targets:
        return TrialResult(True, FAILURE_NONE, 0.0, 0.0, 0.0, trajectory, n_targets)

    dt = cfg.dt
    steps_per_tick = cfg.steps_per_tick
    max_steps = int(math.ceil(limits.max_time / dt))
    stall_steps = None
    if limits.stall_time is not None:
        stall_steps = int(round(limits.stall_time / dt))
        stall_anchor = (robot.x, robot.y)
        stall_count = 0

    path_cost = 0.0
    peak_force = 0.0
    cmd = PlannerCommand(force=(0.0, 0.0))
    candidates = world.objects
    objects_by_index = {o.id: i for i, o in enumerate(world.objects)}
    coasting_ids: set[int] = set()
    failure = None
    t = 0.0
    step = 0

    while step < max_steps:
        if step % steps_per_tick == 0:
            world.robot = robot
            frame = sense(world, cfg, t)
            try:
                cmd = planner.tick(frame, t, goal_idx)
            except NoPathError:
                failure = FAILURE_NO_PATH
                break
            fx, fy = cmd.force
            if not (math.isfinite(fx) and math.isfinite(fy) and math.isfinite(cmd.damping)):
                failure = FAILURE_PLANNER_FAULT
                break
            # candidate set refreshed each tick with one-tick motion margin
            candidates = _candidate_objects(world, robot.radius + world.r_p + cfg.v_max * cfg.planner_period * 2.0)
            if record_trajectory:
                fc = 0.0
                for c in frame.contacts:
                    fc = max(fc, math.sqrt(c.force[0] ** 2 + c.force[1] ** 2))
                ix, iy = cmd.imagined if cmd.imagined is not None else (float("nan"), float("nan"))
                inst_fx = fx - cmd.damping * robot.vx
                inst_fy = fy - cmd.damping * robot.vy
                trajectory.append((t, robot.x, robot.y, robot.vx, robot.vy,
                                   inst_fx, inst_fy, fc, cmd.intent_mode, ix, iy))

        # --- contacts -----------------------------------------------------
        world.robot = robot
        contacts = _robot_object_contacts(world, candidates)
        cfx = cfy = 0.0
        step_peak = 0.0
        applied: dict[int, tuple[float, float]] = {}
        movers = []
        mover_ids = set()
        for o, pen, (nx, ny), comp, f in contacts:
            cfx += f * nx
            cfy += f * ny
            step_peak = max(step_peak, f)
            if o.movable:
                ax_, ay_ = applied.get(o.id, (0.0, 0.0))
                applied[o.id] = (ax_ - f * nx, ay_ - f * ny)
                movers.append(o)
                mover_ids.add(o.id)
        for o in candidates:
            if o.movable and (o.vx != 0.0 or o.vy != 0.0) and o.id not in mover_ids:
                movers.append(o)
                mover_ids.add(o.id)
        if movers:
            seen = set()
            for a in movers:
                for b in world.objects:
                    if b.id == a.id:
                        continue
                    key = (a.id, b.id) if a.id < b.id else (b.id, a.id)
                    if key in seen:
                        continue
                    dx = a.x - b.x
                    dy = a.y - b.y
                    rr = a.radius + b.radius
                    d2 = dx * dx + dy * dy
                    if d2 >= rr * rr:
                        continue
                    seen.add(key)
                    d = math.sqrt(d2) if d2 > 1e-24 else 1e-12
                    nx, ny = dx / d, dy / d
                    pen = rr - d
                    closing = -((a.vx - b.vx) * nx + (a.vy - b.vy) * ny)
                    ka, kb = a.theta_truth.K, b.theta_truth.K
                    k_pair = ka * kb / (ka + kb) if ka + kb > 0 else 0.0
                    d_pair = min(a.theta_truth.D, b.theta_truth.D)
                    f = max(k_pair * pen + d_pair * max(closing, 0.0), 0.0)
                    ax_, ay_ = applied.get(a.id, (0.0, 0.0))
                    applied[a.id] = (ax_ + f * nx, ay_ + f * ny)
                    bx_, by_ = applied.get(b.id, (0.0, 0.0))
                    applied[b.id] = (bx_ - f * nx, by_ - f * ny)

        wfx, wfy, wall_peak = _wall_force(world, cfg)
        cfx += wfx
        cfy += wfy
        step_peak = max(step_peak, wall_peak)
        peak_force = max(peak_force, step_peak)
        if step_peak > limits.force_fail:
            failure = FAILURE_FORCE
            break

        # --- actuation layer ---------------------------------------------
        fx = cmd.force[0] - cmd.damping * robot.vx
        fy = cmd.force[1] - cmd.damping * robot.vy
        speed = math.sqrt(robot.vx * robot.vx + robot.vy * robot.vy)
        if speed > cfg.v_max:
            over = cfg.vel_limit_gain * (speed - cfg.v_max) / speed
            fx -= over * robot.vx
            fy -= over * robot.vy
        if noisy:
            noise = (rng.normal(0.0, cfg.actuation_noise_std),
                     rng.normal(0.0, cfg.actuation_noise_std))
        else:
            noise = (0.0, 0.0)
        px, py = robot.x, robot.y
        robot = robot_step(robot, (fx, fy), (cfx, cfy), cfg, noise)
        path_cost += math.sqrt((robot.x - px) ** 2 + (robot.y - py) ** 2)

        # --- object responses ----------------------------------------------
        update_ids = set(applied)
        update_ids.update(coasting_ids)
        if update_ids:
            coasting_ids = set()
            for oid in sorted(update_ids):
                i = objects_by_index[oid]
                o = world.objects[i]
                force = applied.get(oid, (0.0, 0.0))
                if o.movable:
                    mag = math.sqrt(force[0] ** 2 + force[1] ** 2)
                    if mag > o.topple_threshold:
                        world.objects[i] = replace(o, toppled=True, vx=0.0, vy=0.0)
                        continue
                o = object_update(o, force, dt)
                world.objects[i] = o
                if o.vx != 0.0 or o.vy != 0.0:
                    coasting_ids.add(oid)

        step += 1
        t = step * dt

        if in_target((robot.x, robot.y), world.targets[goal_idx]):
            goal_idx += 1
            if goal_idx >= n_targets:
                world.robot = robot
                return TrialResult(True, FAILURE_NONE, path_cost, peak_force, t,
                                   trajectory, goal_idx)

        if stall_steps is not None:
            stall_count += 1
            if stall_count >= stall_steps:
                dx = robot.x - stall_anchor[0]
                dy = robot.y - stall_anchor[1]
                if dx * dx + dy * dy < limits.stall_dist ** 2:
                    failure = FAILURE_TIMEOUT
                    break
                stall_anchor = (robot.x, robot.y)
                stall_count = 0

    world.robot = robot
    if failure is None:
        failure = FAILURE_TIMEOUT
    return TrialResult(False, failure, path_cost, peak_force, t, trajectory, goal_idx)
