"""Differential-drive kinematics in pose and velocity space.

Poses move along exact circular arcs under constant (v, w). The admissible
velocity set is the kinematic triangle ``v/v_max + |w|/w_max <= 1`` with
``v >= 0``; the dynamic window is a rhombus around the current velocity whose
vertices are projected back onto that triangle.
"""

import math

import numpy as np

from dqndovs.core.errors import ZeroDistance
from dqndovs.core.models import (
    ArcKind,
    DynamicWindow,
    GoalArc,
    KinodynamicLimits,
    Pose,
    Velocity,
)

STRAIGHT_W = 1e-6
STRAIGHT_Y = 1e-6
ADMISSIBLE_TOL = 1e-12


def wrap_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    wrapped = math.remainder(theta, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


def propagate_unicycle(pose: Pose, cmd: Velocity, dt: float) -> Pose:
    """Move a pose along the constant-(v, w) arc for dt seconds."""
    v, w = cmd.v, cmd.w
    if abs(w) >= STRAIGHT_W:
        theta_new = pose.theta + w * dt
        r = v / w
        x = pose.x + r * (math.sin(theta_new) - math.sin(pose.theta))
        y = pose.y - r * (math.cos(theta_new) - math.cos(pose.theta))
        return Pose(x, y, wrap_angle(theta_new))
    x = pose.x + v * dt * math.cos(pose.theta)
    y = pose.y + v * dt * math.sin(pose.theta)
    return Pose(x, y, wrap_angle(pose.theta + w * dt))


def arc_positions(
    x: float,
    y: float,
    theta: float,
    v: np.ndarray | float,
    w: np.ndarray | float,
    times: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized arc positions.

    ``v`` and ``w`` broadcast against each other (one entry per trajectory);
    the result has shape ``broadcast(v, w).shape + times.shape``.
    """
    v = np.asarray(v, dtype=np.float64)[..., None]
    w = np.asarray(w, dtype=np.float64)[..., None]
    t = np.asarray(times, dtype=np.float64)
    turning = np.abs(w) >= STRAIGHT_W
    safe_w = np.where(turning, w, 1.0)
    heading = theta + w * t
    r = v / safe_w
    arc_x = x + r * (np.sin(heading) - math.sin(theta))
    arc_y = y - r * (np.cos(heading) - math.cos(theta))
    line_x = x + v * t * math.cos(theta)
    line_y = y + v * t * math.sin(theta)
    return np.where(turning, arc_x, line_x), np.where(turning, arc_y, line_y)


def admissible(vel: Velocity, lim: KinodynamicLimits) -> bool:
    """Whether a velocity lies inside the kinematic triangle."""
    if vel.v < 0.0 or vel.v > lim.v_max or abs(vel.w) > lim.w_max:
        return False
    return vel.v / lim.v_max + abs(vel.w) / lim.w_max <= 1.0 + ADMISSIBLE_TOL


def within_envelope(cur: Velocity, cmd: Velocity, lim: KinodynamicLimits, tol: float = 1e-9) -> bool:
    """Whether cmd is reachable from cur within one control period."""
    return (
        abs(cmd.v - cur.v) <= lim.a_v_max * lim.dt + tol
        and abs(cmd.w - cur.w) <= lim.a_w_max * lim.dt + tol
    )


def _project(center: Velocity, vertex: Velocity, lim: KinodynamicLimits) -> Velocity:
    """Clamp a vertex to the velocity box, then pull it toward the center
    until the triangle coupling holds."""
    v = min(max(vertex.v, 0.0), lim.v_max)
    w = min(max(vertex.w, -lim.w_max), lim.w_max)
    dv, dw = v - center.v, w - center.w
    scale = 1.0
    # The coupling is the max of two linear forms; each caps the step length.
    slack_base = 1.0 - center.v / lim.v_max
    for sign in (1.0, -1.0):
        slope = dv / lim.v_max + sign * dw / lim.w_max
        if slope > 0.0:
            slack = slack_base - sign * center.w / lim.w_max
            scale = min(scale, max(slack, 0.0) / slope)
    if scale >= 1.0:
        return Velocity(v, w)
    return Velocity(center.v + scale * dv, center.w + scale * dw)


def dynamic_window(cur: Velocity, lim: KinodynamicLimits) -> DynamicWindow:
    """Build the clipped rhombus of velocities reachable from ``cur``."""
    dv = lim.a_v_max * lim.dt
    dw = lim.a_w_max * lim.dt
    return DynamicWindow(
        center=cur,
        v_plus=_project(cur, Velocity(cur.v + dv, cur.w), lim),
        v_minus=_project(cur, Velocity(cur.v - dv, cur.w), lim),
        w_plus=_project(cur, Velocity(cur.v, cur.w + dw), lim),
        w_minus=_project(cur, Velocity(cur.v, cur.w - dw), lim),
    )


def goal_arc(goal_in_robot_frame: tuple[float, float]) -> GoalArc:
    """Circle through the origin, tangent to the heading, reaching the goal.

    Raises:
        ZeroDistance: If the goal is at the robot position.
    """
    xg, yg = float(goal_in_robot_frame[0]), float(goal_in_robot_frame[1])
    if math.hypot(xg, yg) <= 1e-9:
        raise ZeroDistance("goal coincides with the robot position")
    if abs(yg) < STRAIGHT_Y:
        return GoalArc(ArcKind.straight, math.inf, (xg, yg))
    radius = (xg * xg + yg * yg) / (2.0 * yg)
    kind = ArcKind.arc_left if radius > 0 else ArcKind.arc_right
    return GoalArc(kind, radius, (xg, yg))


def _line_value(arc: GoalArc, vel: Velocity) -> float:
    """Signed offset of a velocity from the goal line."""
    if arc.kind is ArcKind.straight:
        return vel.w
    return vel.v - arc.radius * vel.w


def goal_line_window_intersection(
    dw: DynamicWindow, arc: GoalArc
) -> tuple[Velocity, Velocity] | None:
    """Intersect the goal line with the window polygon.

    Returns the (min-v, max-v) intersection points, the same point twice on
    tangency, or None when the line misses the window.
    """
    verts = dw.vertices
    points: list[Velocity] = []
    for k in range(4):
        a, b = verts[k], verts[(k + 1) % 4]
        ga, gb = _line_value(arc, a), _line_value(arc, b)
        if ga == 0.0:
            points.append(a)
        if gb == 0.0:
            points.append(b)
        if (ga < 0.0 < gb) or (gb < 0.0 < ga):
            t = ga / (ga - gb)
            points.append(Velocity(a.v + t * (b.v - a.v), a.w + t * (b.w - a.w)))
    if not points:
        return None
    lo = min(points, key=lambda p: (p.v, p.w))
    hi = max(points, key=lambda p: (p.v, p.w))
    return lo, hi
