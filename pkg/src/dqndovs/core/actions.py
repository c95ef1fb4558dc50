"""Discrete action set relative to the dynamic window and the goal line.

Slot semantics are fixed for the network:

    0  window vertex +v        4  keep current velocity
    1  window vertex -v        5  goal line / window, max-v point
    2  window vertex +w        6  goal line / window, min-v point
    3  window vertex -w        7  on the goal line at the current v

Slots 0-4 are always selectable. Slots 5-6 need the goal line to cross the
window; slot 7 additionally needs the current linear velocity to fall inside
the crossing segment. Coinciding commands are kept in both slots.
"""

import numpy as np

from dqndovs.core.errors import InvalidAction
from dqndovs.core.kinematics import goal_line_window_intersection
from dqndovs.core.models import (
    NUM_ACTIONS,
    ActionTable,
    ArcKind,
    DynamicWindow,
    GoalArc,
    Velocity,
)

SLOT_NAMES = (
    "vertex+v",
    "vertex-v",
    "vertex+w",
    "vertex-w",
    "keep",
    "goal-max-v",
    "goal-min-v",
    "goal-heading",
)
ALWAYS_VALID = 5
SLOT7_TOL = 1e-12


def enumerate_actions(dw: DynamicWindow, arc: GoalArc) -> ActionTable:
    """Fill the 8 slots and their validity mask."""
    cur = dw.center
    commands: list[Velocity] = [dw.v_plus, dw.v_minus, dw.w_plus, dw.w_minus, cur]
    mask = np.zeros(NUM_ACTIONS, dtype=bool)
    mask[:ALWAYS_VALID] = True

    crossing = goal_line_window_intersection(dw, arc)
    if crossing is None:
        commands.extend([cur, cur, cur])
        return ActionTable(tuple(commands), mask)

    lo, hi = crossing
    commands.extend([hi, lo])
    mask[5] = mask[6] = True

    if lo.v - SLOT7_TOL <= cur.v <= hi.v + SLOT7_TOL:
        w = 0.0 if arc.kind is ArcKind.straight else cur.v / arc.radius
        commands.append(Velocity(cur.v, w))
        mask[7] = True
    else:
        commands.append(cur)
    return ActionTable(tuple(commands), mask)


def action_to_command(slot: int, table: ActionTable) -> Velocity:
    """Command stored in a selectable slot.

    Raises:
        InvalidAction: If the slot is masked out.
    """
    if not 0 <= slot < NUM_ACTIONS or not table.mask[slot]:
        raise InvalidAction(f"action {slot} is not selectable")
    return table.commands[slot]
