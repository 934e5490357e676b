"""Unified energy-field representation of the local environment.

One landscape composes, inside the robot's local sensing disc:

* an attractive well at the imagined state,
* free-space viscosity (plus nothing else in open space),
* a dedicated viscous shell around every still-unknown object, sized by
  critical damping so the approach speed converges to ``v_safe`` at contact,
* a windowed repulsive hill on every confirmed-inoperable object, anchored
  at the directed-Hausdorff maximizer to steer clear of saddle points,
* a mild traversal-cost hill on every confirmed-operable object.

Potentials are analytic and the conservative force is their exact negative
gradient; viscous terms contribute force only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .estimator import INOPERABLE, OPERABLE, UNKNOWN, PerceptionSample
from .geometry import Disc, Point2, directed_hausdorff, sample_boundary
from .world import OperableVector

ATTRACTIVE = "attractive"
REPULSIVE = "repulsive"
DEDICATED_VISCOUS = "dedicated_viscous"
OPERATIONAL = "operational"
FREE_VISCOUS = "free_viscous"


class EnergyError(ValueError):
    pass


@dataclass(frozen=True)
class FieldConfig:
    """Gains of the composed landscape.

    Defaults put free-space cruise in the 0.01-0.07 m/s band with a 1 mm/s
    contact speed. ``viscous_range`` bounds each damping shell's support and
    ``viscous_shape`` controls how fast the shell stiffens as clearance
    closes (the spec'd critical-damping total holds exactly near contact).
    """

    k_p: float = 25.0          # attractive stiffness, N/m
    k_0: float = 50.0          # repulsive stiffness, N/m
    D_o: float = 5.0           # free-space viscosity, N*s/m
    v_safe: float = 0.001      # contact approach speed, m/s
    v_max: float = 0.07        # free-space speed cap, m/s
    viscous_range: float = 0.05    # damping shell support (clearance), m
    viscous_shape: float = 0.002   # shell shaping reference clearance, m
    k_op: float = 12.0         # ceiling gain of operational cost hills, N/m
    op_cost_ref: float = 2.0   # cost scale mapping theta*psi to hill gain
    boundary_samples: int = 64  # object outline discretization for Eq.-style sets

    def __post_init__(self):
        if min(self.k_p, self.k_0, self.D_o, self.v_safe, self.v_max) <= 0:
            raise EnergyError("field gains must be positive")
        if not self.v_safe < self.v_max:
            raise EnergyError("v_safe must be below v_max")


@dataclass(frozen=True)
class FieldTerm:
    kind: str
    anchor: tuple[float, float] | None
    gain: float
    source_object: int | None = None
    support: float = 0.0     # window radius for hills / clearance range for shells
    r_eff: float = 0.0       # combined robot+object radius for clearance terms

    def __post_init__(self):
        if self.gain < 0:
            raise EnergyError("term gain must be >= 0")
        if self.kind in (REPULSIVE, DEDICATED_VISCOUS) and self.source_object is None:
            raise EnergyError(f"{self.kind} term needs a source object")


@dataclass(frozen=True)
class EnergyLandscape:
    terms: tuple[FieldTerm, ...]
    config: FieldConfig
    valid_within: Disc


@dataclass(frozen=True)
class ViewObject:
    """Planner-side percept of one object (no ground truth inside)."""

    id: int
    x: float
    y: float
    radius: float
    classification: str = UNKNOWN
    theta: OperableVector | None = None
    op_cost: float = 0.0


@dataclass(frozen=True)
class WorldView:
    """Everything compose() needs: the robot, its goal, and its percepts."""

    robot_x: float
    robot_y: float
    robot_radius: float
    r_p: float
    goal_x: float
    goal_y: float
    goal_r: float
    objects: tuple[ViewObject, ...]


def attractive_term(g_star, k_p: float) -> FieldTerm:
    """Quadratic well: potential 0.5*k_p*d^2, force k_p*(g* - x)."""
    if not k_p > 0:
        raise EnergyError("k_p must be > 0")
    x, y = (g_star.x, g_star.y) if isinstance(g_star, Point2) else (float(g_star[0]), float(g_star[1]))
    return FieldTerm(kind=ATTRACTIVE, anchor=(x, y), gain=k_p)


def viscous_force(v, D: float) -> tuple[float, float]:
    """-D*v; dissipated power D*|v|^2 is never negative."""
    if D < 0:
        raise EnergyError("viscosity must be >= 0")
    return (-D * float(v[0]), -D * float(v[1]))


def operational_energy(theta: OperableVector, psi: PerceptionSample) -> float:
    """Inner product theta . psi used as the cost-to-move weight."""
    return theta.K * psi.dx + theta.D * psi.v + theta.C * psi.F


def critical_damping(k_p: float, gap: float, v_safe: float, D_base: float) -> float:
    """Total damping that lands the approach at v_safe when the remaining
    distance to the anchor equals the contact clearance.

    Under the overdamped closure v = k_p * remaining / D_total, setting
    remaining = gap and v = v_safe gives D_total = k_p * gap / v_safe. The
    return value is that total, never below the already-present D_base.
    """
    if not gap > 0:
        raise EnergyError(f"gap must be > 0, got {gap}")
    if not v_safe > 0:
        raise EnergyError(f"v_safe must be > 0, got {v_safe}")
    if D_base < 0:
        raise EnergyError("D_base must be >= 0")
    return max(k_p * gap / v_safe, D_base)


def repulsive_center(obj_samples, B_samples) -> Point2:
    """Hausdorff anchor: the object-sample point farthest from the
    robot-plus-goal set, so the hill's peak avoids the straight corridor."""
    _, point = directed_hausdorff(obj_samples, B_samples)
    return point


def repulsive_term(o_star, k_0: float, support: float, source_object: int | None = None) -> FieldTerm:
    """Windowed linear-elastic hill centered at o*.

    Force is k_0*(x - o*) scaled by a C1 window that is 1 out to half the
    support radius and falls smoothly to 0 at the support boundary, keeping
    the landscape bounded inside the local domain.
    """
    if not k_0 > 0:
        raise EnergyError("k_0 must be > 0")
    if not support > 0:
        raise EnergyError("support must be > 0")
    x, y = (o_star.x, o_star.y) if isinstance(o_star, Point2) else (float(o_star[0]), float(o_star[1]))
    return FieldTerm(kind=REPULSIVE, anchor=(x, y), gain=k_0,
                     source_object=source_object, support=support)


# --- windowed hill profile -------------------------------------------------
# W(d) = 1 for d <= a, smoothstep down to 0 at d = R (a = R/2).
# Potential P(d) = integral_d^R t*W(t) dt so that force = gain * d * W(d)
# outward is exactly -grad of gain * P(d).

def _hill_window(d: float, R: float) -> float:
    a = 0.5 * R
    if d <= a:
        return 1.0
    if d >= R:
        return 0.0
    u = (d - a) / (R - a)
    return 1.0 - (3.0 * u * u - 2.0 * u * u * u)


def _hill_ramp_integral(u: float, a: float, L: float) -> float:
    """integral_0^u t(s)*W(t(s)) * L ds with t = a + s*L on the falloff band."""
    u2 = u * u
    u3 = u2 * u
    u4 = u3 * u
    u5 = u4 * u
    return L * (a * (u - u3 + 0.5 * u4) + L * (0.5 * u2 - 0.75 * u4 + 0.4 * u5))


def _hill_potential(d: float, R: float) -> float:
    a = 0.5 * R
    L = R - a
    full_band = _hill_ramp_integral(1.0, a, L)
    if d >= R:
        return 0.0
    if d <= a:
        return 0.5 * (a * a - d * d) + full_band
    u = (d - a) / L
    return full_band - _hill_ramp_integral(u, a, L)


def _shell_window(clearance: float, rng: float, shape: float) -> float:
    """Damping shell activation: 1 at contact, smooth cubic cutoff at the
    support range, hyperbolically shaped in between so cruise survives until
    the final approach."""
    if clearance <= 0.0:
        return 1.0
    if clearance >= rng:
        return 0.0
    u = clearance / rng
    cut = 1.0 + u * u * (2.0 * u - 3.0)
    return cut / (1.0 + clearance / shape)


def compose(view: WorldView, imagined, cfg: FieldConfig) -> EnergyLandscape:
    """Build the landscape for one planning tick.

    The attractive well anchors at the imagined state. Every unknown object
    in the view gets a dedicated viscous shell (gain from critical damping
    at its current clearance), every inoperable object a repulsive hill at
    its Hausdorff anchor, every operable object a traversal-cost hill.
    """
    ix, iy = (imagined.x, imagined.y) if isinstance(imagined, Point2) else (float(imagined[0]), float(imagined[1]))
    terms = [
        FieldTerm(kind=ATTRACTIVE, anchor=(ix, iy), gain=cfg.k_p),
        FieldTerm(kind=FREE_VISCOUS, anchor=None, gain=cfg.D_o),
    ]
    B = None
    for obj in sorted(view.objects, key=lambda o: o.id):
        r_eff = obj.radius + view.robot_radius
        if obj.classification == UNKNOWN:
            center_gap = math.sqrt((obj.x - view.robot_x) ** 2 + (obj.y - view.robot_y) ** 2)
            gap = max(center_gap - r_eff, 1e-6)
            gain = critical_damping(cfg.k_p, gap, cfg.v_safe, cfg.D_o)
            terms.append(FieldTerm(
                kind=DEDICATED_VISCOUS, anchor=(obj.x, obj.y), gain=gain,
                source_object=obj.id, support=cfg.viscous_range, r_eff=r_eff,
            ))
        elif obj.classification == INOPERABLE:
            if B is None:
                B = _b_set(view, cfg)
            samples = _domain_samples(obj, view, cfg)
            o_star = repulsive_center(samples, B)
            terms.append(repulsive_term(o_star, cfg.k_0, support=view.r_p,
                                        source_object=obj.id))
        elif obj.classification == OPERABLE:
            gain = cfg.k_op * obj.op_cost / (obj.op_cost + cfg.op_cost_ref)
            if gain > 0:
                terms.append(FieldTerm(
                    kind=OPERATIONAL, anchor=(obj.x, obj.y), gain=gain,
                    source_object=obj.id, support=r_eff + cfg.viscous_range,
                ))
        else:
            raise EnergyError(f"unknown classification {obj.classification!r}")
    return EnergyLandscape(
        terms=tuple(terms),
        config=cfg,
        valid_within=Disc(Point2(view.robot_x, view.robot_y), view.r_p),
    )


def _b_set(view: WorldView, cfg: FieldConfig):
    pts = [(view.robot_x, view.robot_y), (view.goal_x, view.goal_y)]
    goal_disc = Disc(Point2(view.goal_x, view.goal_y), view.goal_r)
    pts.extend(map(tuple, sample_boundary(goal_disc, 16)))
    return pts


def _domain_samples(obj: ViewObject, view: WorldView, cfg: FieldConfig):
    pts = sample_boundary(Disc(Point2(obj.x, obj.y), obj.radius), cfg.boundary_samples)
    dx = pts[:, 0] - view.robot_x
    dy = pts[:, 1] - view.robot_y
    inside = (dx * dx + dy * dy) <= view.r_p * view.r_p
    if inside.any():
        return pts[inside]
    return pts


def evaluate(landscape: EnergyLandscape, x, v) -> tuple[float, tuple[float, float]]:
    """Potential and total force of the landscape at state (x, v).

    The force is the exact negative gradient of the summed conservative
    potentials plus the viscous contributions; viscous terms never touch
    the potential. Querying outside the local domain is an error.
    """
    px, py = (x.x, x.y) if isinstance(x, Point2) else (float(x[0]), float(x[1]))
    vx, vy = float(v[0]), float(v[1])
    cfg = landscape.config
    c = landscape.valid_within.center
    if (px - c.x) ** 2 + (py - c.y) ** 2 > landscape.valid_within.radius ** 2 * (1 + 1e-9):
        raise EnergyError("query point outside the local energy domain")

    U = 0.0
    fx = 0.0
    fy = 0.0
    damping = 0.0
    for term in landscape.terms:
        if term.kind == ATTRACTIVE:
            ax, ay = term.anchor
            ex = ax - px
            ey = ay - py
            U += 0.5 * term.gain * (ex * ex + ey * ey)
            fx += term.gain * ex
            fy += term.gain * ey
        elif term.kind == FREE_VISCOUS:
            damping += term.gain
        elif term.kind == DEDICATED_VISCOUS:
            ax, ay = term.anchor
            clearance = math.sqrt((px - ax) ** 2 + (py - ay) ** 2) - term.r_eff
            w = _shell_window(clearance, term.support, cfg.viscous_shape)
            damping += w * max(term.gain - cfg.D_o, 0.0)
        elif term.kind in (REPULSIVE, OPERATIONAL):
            ax, ay = term.anchor
            dx = px - ax
            dy = py - ay
            d = math.sqrt(dx * dx + dy * dy)
            U += term.gain * _hill_potential(d, term.support)
            if d > 0.0:
                w = _hill_window(d, term.support)
                fx += term.gain * w * dx
                fy += term.gain * w * dy
        else:
            raise EnergyError(f"unknown term kind {term.kind!r}")
    fx -= damping * vx
    fy -= damping * vy
    return U, (fx, fy)


def total_damping(landscape: EnergyLandscape, x) -> float:
    """Viscous coefficient of the landscape at a position (velocity-linear part)."""
    px, py = (x.x, x.y) if isinstance(x, Point2) else (float(x[0]), float(x[1]))
    cfg = landscape.config
    damping = 0.0
    for term in landscape.terms:
        if term.kind == FREE_VISCOUS:
            damping += term.gain
        elif term.kind == DEDICATED_VISCOUS:
            ax, ay = term.anchor
            clearance = math.sqrt((px - ax) ** 2 + (py - ay) ** 2) - term.r_eff
            damping += _shell_window(clearance, term.support, cfg.viscous_shape) * max(term.gain - cfg.D_o, 0.0)
    return damping


def conservative_force(landscape: EnergyLandscape, x) -> tuple[float, float]:
    """Force with the viscous parts switched off (query at zero velocity)."""
    _, f = evaluate(landscape, x, (0.0, 0.0))
    return f


def sample_grid(landscape: EnergyLandscape, n: int = 60):
    """Grid sampling of (potential, force) over the local domain's bounding
    square, for CSV dumps and heat/quiver rendering. Points outside the
    domain yield NaNs."""
    import numpy as np

    c = landscape.valid_within.center
    R = landscape.valid_within.radius
    xs = np.linspace(c.x - R, c.x + R, n)
    ys = np.linspace(c.y - R, c.y + R, n)
    U = np.full((n, n), np.nan)
    FX = np.full((n, n), np.nan)
    FY = np.full((n, n), np.nan)
    for j, y in enumerate(ys):
        for i, x in enumerate(xs):
            if (x - c.x) ** 2 + (y - c.y) ** 2 <= R * R:
                u, (fx, fy) = evaluate(landscape, (x, y), (0.0, 0.0))
                U[j, i] = u
                FX[j, i] = fx
                FY[j, i] = fy
    return xs, ys, U, FX, FY
