"""ASCII rendering of grid states for replay playback."""

from __future__ import annotations

from .env import GridState

_ANSI_COLORS = ("\x1b[31m", "\x1b[32m", "\x1b[34m")  # block colors 0, 1, 2
_ANSI_GOAL = "\x1b[7m"  # inverse video for the current goal color
_ANSI_RESET = "\x1b[0m"


def render_frame(state: GridState, color: bool = False) -> str:
    """One frame: a header line, then the grid. Blocks render as their color
    digit, agents as L/F; with `color` on, goal-color digits are highlighted."""
    cfg = state.config
    width = cfg.width
    grid = [["."] * width for _ in range(cfg.height)]
    for block_color, cells in enumerate(state.block_cells):
        digit = str(block_color)
        if color:
            style = _ANSI_COLORS[block_color]
            if block_color == state.goal_color:
                style += _ANSI_GOAL
            digit = f"{style}{block_color}{_ANSI_RESET}"
        for f in cells:
            grid[f // width][f % width] = digit
    for i, (r, c) in enumerate(state.agent_positions):
        grid[r][c] = "L" if i < cfg.num_leaders else "F"
    header = f"t={state.timestep} goal={state.goal_color}"
    return "\n".join([header] + ["".join(row) for row in grid])
