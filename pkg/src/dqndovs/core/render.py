"""Vector exports of logged episodes: trajectory plot and velocity profile.

Figures are built on ``matplotlib.figure.Figure`` directly, so no GUI
backend is involved, and saved with a fixed hash salt and no date stamp so
the same trace always gives the same bytes.
"""

import io
import logging
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib
import numpy as np
from matplotlib.figure import Figure
from matplotlib.patches import Circle, Rectangle

from dqndovs.core.episode import validate_trace
from dqndovs.core.models import KinodynamicLimits

logger = logging.getLogger("dqndovs.render")

SVG_DPI = 72
DEFAULT_SCALE = 60.0  # pixels per meter
ROBOT_COLOR = "tab:red"
OBSTACLE_COLOR = "tab:blue"
LABEL_MARGIN = 0.15  # meters


@dataclass
class TrajectoryLayout:
    """Geometry of a trace in world meters."""

    arena_size: float
    goal: tuple[float, float]
    robot_path: np.ndarray
    robot_radius: float
    obstacle_paths: list[np.ndarray] = field(default_factory=list)
    obstacle_radii: list[float] = field(default_factory=list)

    @property
    def robot_final(self) -> tuple[float, float]:
        return float(self.robot_path[-1, 0]), float(self.robot_path[-1, 1])

    @property
    def obstacle_finals(self) -> list[tuple[float, float]]:
        return [(float(p[-1, 0]), float(p[-1, 1])) for p in self.obstacle_paths]


def trajectory_layout(records: list[dict]) -> TrajectoryLayout:
    """Collect robot and obstacle paths from a trace.

    Raises:
        MalformedTrace: If the trace is not well formed.
    """
    validate_trace(records)
    world = records[0]["world"]
    steps = records[1:]
    robot = [world["robot"][:2]] + [r["robot"][:2] for r in steps]
    obstacles = world.get("obstacles", [])
    paths = []
    for k, obs in enumerate(obstacles):
        points = [obs["pose"][:2]] + [r["obstacles"][k][:2] for r in steps]
        paths.append(np.asarray(points, dtype=np.float64))
    return TrajectoryLayout(
        arena_size=float(world.get("arena_size", 8.0)),
        goal=(float(world["goal"][0]), float(world["goal"][1])),
        robot_path=np.asarray(robot, dtype=np.float64),
        robot_radius=float(world.get("robot_radius", 0.18)),
        obstacle_paths=paths,
        obstacle_radii=[float(o["radius"]) for o in obstacles],
    )


def path_length(points: np.ndarray) -> float:
    """Length of a polyline in meters."""
    if len(points) < 2:
        return 0.0
    return float(np.sum(np.hypot(*np.diff(points, axis=0).T)))


def trajectory_figure(layout: TrajectoryLayout, scale: float = DEFAULT_SCALE) -> Figure:
    """Arena outline, paths, goal, X markers at the final positions and the robot path length."""
    side = layout.arena_size * scale / SVG_DPI
    fig = Figure(figsize=(side, side), dpi=SVG_DPI)
    ax = fig.add_axes((0.0, 0.0, 1.0, 1.0))
    ax.set_xlim(0.0, layout.arena_size)
    ax.set_ylim(0.0, layout.arena_size)
    ax.set_aspect("equal")
    ax.set_axis_off()
    ax.add_patch(
        Rectangle((0.0, 0.0), layout.arena_size, layout.arena_size, fill=False, lw=2, ec="black", gid="arena")
    )

    for k, (path, radius) in enumerate(zip(layout.obstacle_paths, layout.obstacle_radii)):
        ax.add_patch(Circle(tuple(path[0]), radius, fill=False, ec=OBSTACLE_COLOR, ls="--"))
        ax.plot(path[:, 0], path[:, 1], color=OBSTACLE_COLOR, lw=1, gid=f"obstacle-{k}")
        ax.plot(*path[-1], marker="x", ms=8, color=OBSTACLE_COLOR, gid=f"obstacle-{k}-final")

    path = layout.robot_path
    ax.add_patch(Circle(tuple(path[0]), layout.robot_radius, fill=False, ec=ROBOT_COLOR))
    length = path_length(path)
    if length > 0.0:
        ax.plot(path[:, 0], path[:, 1], color=ROBOT_COLOR, lw=2, gid="robot")
    ax.plot(*layout.robot_final, marker="x", ms=10, mew=2, color=ROBOT_COLOR, gid="robot-final")
    ax.plot(*layout.goal, marker="*", ms=12, color="gold", mec="black", gid="goal")
    ax.text(
        LABEL_MARGIN,
        layout.arena_size - LABEL_MARGIN,
        f"path {length:.2f} m",
        ha="left",
        va="top",
        fontsize=10,
        gid="path-length",
    )
    return fig


def velocity_profile_figure(records: list[dict], lim: KinodynamicLimits) -> Figure:
    """Commanded v and w over time against the velocity bounds."""
    validate_trace(records)
    dt = float(records[0].get("dt", lim.dt))
    commands = np.asarray([r["command"] for r in records[1:]], dtype=np.float64).reshape(-1, 2)
    t = dt * np.arange(1, len(commands) + 1)

    fig = Figure(figsize=(8, 5), dpi=SVG_DPI)
    ax_v, ax_w = fig.subplots(2, 1, sharex=True)
    ax_v.step(t, commands[:, 0], where="post", color=ROBOT_COLOR)
    ax_v.axhline(lim.v_max, color="gray", ls=":")
    ax_v.set_ylabel("v [m/s]")
    ax_w.step(t, commands[:, 1], where="post", color=OBSTACLE_COLOR)
    for bound in (lim.w_max, -lim.w_max):
        ax_w.axhline(bound, color="gray", ls=":")
    ax_w.set_ylabel("w [rad/s]")
    ax_w.set_xlabel("t [s]")
    return fig


def envelope_violations(records: list[dict], lim: KinodynamicLimits, tol: float = 1e-9) -> list[int]:
    """Steps whose command exceeds the one-period acceleration bounds."""
    validate_trace(records)
    prev = records[0]["world"].get("velocity", [0.0, 0.0])
    bad = []
    for rec in records[1:]:
        v, w = rec["command"]
        if abs(v - prev[0]) > lim.a_v_max * lim.dt + tol or abs(w - prev[1]) > lim.a_w_max * lim.dt + tol:
            bad.append(int(rec["step"]))
        prev = (v, w)
    return bad


def figure_to_svg(fig: Figure) -> bytes:
    buf = io.BytesIO()
    with matplotlib.rc_context({"svg.hashsalt": "dqndovs", "svg.fonttype": "none"}):
        fig.savefig(buf, format="svg", metadata={"Date": None})
    return buf.getvalue()


def export_trajectory_svg(records: list[dict], path: Path | str, scale: float = DEFAULT_SCALE) -> Path:
    """Write the trajectory plot of a trace."""
    svg = figure_to_svg(trajectory_figure(trajectory_layout(records), scale))
    path = Path(path)
    path.write_bytes(svg)
    logger.debug("Wrote %s", path)
    return path


def export_velocity_profile_svg(records: list[dict], lim: KinodynamicLimits, path: Path | str) -> Path:
    svg = figure_to_svg(velocity_profile_figure(records, lim))
    path = Path(path)
    path.write_bytes(svg)
    return path
