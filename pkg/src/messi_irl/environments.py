"""Benchmark MDPs: noisy grid-world, a lane-changing highway and the pit.

Each builder returns an :class:`EnvironmentBundle` holding the normalized
MDP, the expert reward ``theta_star``, two alternative rewards, the
performance metric and the behaviour sources used to draw demonstrations.

Demonstrations for reward-defined behaviour are drawn from the soft policy
of ``expert_beta * theta``. Learned rewards live on a scale set by
``theta_max`` while the reference rewards have unit magnitude, so the
inverse temperature keeps the demonstrator close to optimal instead of
close to uniform.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .mdp import MdpModel, normalize_features
from .soft_dp import (
    SoftPolicy,
    backward_pass,
    expected_feature_count,
    forward_pass,
)

UP, DOWN, LEFT, RIGHT = 0, 1, 2, 3
GRID_MOVES = {UP: (-1, 0), DOWN: (1, 0), LEFT: (0, -1), RIGHT: (0, 1)}

GRID_DISCOUNT = 0.9
HIGHWAY_DISCOUNT = 0.9
PIT_DISCOUNT = 0.9

DEFAULT_HORIZONS = {"gridworld": 64, "highway": 100, "pit": 24}


@dataclass(frozen=True, eq=False)
class EnvironmentBundle:
    """An MDP together with its reference rewards and evaluation metric.

    ``sources`` maps ``"star"``, ``"one"`` and ``"two"`` to lists of
    ``(policy, weight)`` pairs: the behaviour behind P_{u*}, P_1 and P_2.
    ``expert_policy`` produces the expert demonstrations.
    """

    name: str
    mdp: MdpModel
    theta_star: np.ndarray
    theta_1: np.ndarray
    theta_2: np.ndarray
    metric: Callable[[np.ndarray], float]
    metric_name: str
    similarity: str
    similarity_params: dict
    horizon: int
    expert_policy: SoftPolicy
    sources: dict = field(default_factory=dict)
    expert_beta: float = 1.0
    info: dict = field(default_factory=dict)


def _soft(mdp, theta, beta):
    return backward_pass(mdp, beta * np.asarray(theta, dtype=float))


def _deterministic_policy(actions, n_actions) -> SoftPolicy:
    actions = np.asarray(actions)
    pi = np.zeros((actions.size, n_actions))
    pi[np.arange(actions.size), actions] = 1.0
    return SoftPolicy(pi, np.zeros(actions.size), np.zeros(0))


def grid_transition(side_rows: int, side_cols: int, success_prob: float) -> np.ndarray:
    """Four-action grid dynamics with wall clamping.

    The intended move happens with ``success_prob``; each of the other three
    moves takes an equal share of the remainder.
    """
    if not 0.0 <= success_prob <= 1.0:
        raise ValueError("success_prob must lie in [0, 1]")
    n = side_rows * side_cols
    P = np.zeros((n, 4, n))
    slip = (1.0 - success_prob) / 3.0
    for r in range(side_rows):
        for c in range(side_cols):
            s = r * side_cols + c
            for a in range(4):
                for b, (dr, dc) in GRID_MOVES.items():
                    r2 = min(max(r + dr, 0), side_rows - 1)
                    c2 = min(max(c + dc, 0), side_cols - 1)
                    P[s, a, r2 * side_cols + c2] += success_prob if a == b else slip
    return P


def _random_grid_reward(rng, d):
    theta = rng.uniform(-1.0, -0.1, size=d)
    pos = rng.choice(d, size=min(3, d), replace=False)
    theta[pos] = rng.uniform(0.5, 1.0, size=pos.size)
    return theta


def build_gridworld(
    side: int = 16,
    macro_side: int = 2,
    success_prob: float = 0.7,
    rng=None,
    discount: float = GRID_DISCOUNT,
    horizon: int = DEFAULT_HORIZONS["gridworld"],
    expert_beta: float = 50.0,
) -> EnvironmentBundle:
    """Square grid whose features are one-hot macro-cells of ``macro_side`` x ``macro_side``.

    The true reward is negative on every macro-cell except three random ones;
    the two alternative rewards are drawn the same way. Start states are
    uniform and the metric is the expected true reward ``theta_star . f``.
    """
    if side < 1 or macro_side < 1 or side % macro_side:
        raise ValueError(f"side {side} is not divisible by macro_side {macro_side}")
    rng = np.random.default_rng(rng)
    per_row = side // macro_side
    d = per_row * per_row
    n = side * side
    F = np.zeros((n, d))
    for r in range(side):
        for c in range(side):
            F[r * side + c, (r // macro_side) * per_row + c // macro_side] = 1.0
    mdp = normalize_features(
        MdpModel(grid_transition(side, side, success_prob), F, np.full(n, 1.0 / n), discount)
    )
    theta_star = _random_grid_reward(rng, d)
    theta_1 = _random_grid_reward(rng, d)
    theta_2 = _random_grid_reward(rng, d)
    expert = _soft(mdp, theta_star, expert_beta)
    ts = theta_star.copy()
    return EnvironmentBundle(
        name="gridworld",
        mdp=mdp,
        theta_star=theta_star,
        theta_1=theta_1,
        theta_2=theta_2,
        metric=lambda f: float(ts @ f),
        metric_name="true_reward",
        similarity="unsquared",
        similarity_params={"scale": 10.0},
        horizon=horizon,
        expert_policy=expert,
        sources={
            "star": [(expert, 1.0)],
            "one": [(_soft(mdp, theta_1, expert_beta), 1.0)],
            "two": [(_soft(mdp, theta_2, expert_beta), 1.0)],
        },
        expert_beta=expert_beta,
        info={"side": side, "macro_side": macro_side, "success_prob": success_prob},
    )


HIGHWAY_FEATURES = ("collision", "offroad", "left", "right")
HW_LEFT, HW_STAY, HW_RIGHT = 0, 1, 2


def highway_traffic(n_lanes: int, period: int, density: float, traffic_seed: int) -> np.ndarray:
    """Seeded periodic occupancy pattern, shape (period, n_lanes).

    Every phase keeps at least one lane free.
    """
    rng = np.random.default_rng(traffic_seed)
    occ = rng.random((period, n_lanes)) < density
    for k in range(period):
        if occ[k].all():
            occ[k, rng.integers(n_lanes)] = False
    return occ


def build_highway(
    n_lanes: int = 4,
    horizon: int = DEFAULT_HORIZONS["highway"],
    traffic_seed: int = 0,
    period: int = 25,
    density: float = 0.3,
    lateral_success: float = 0.9,
    discount: float = HIGHWAY_DISCOUNT,
    expert_beta: float = 50.0,
) -> EnvironmentBundle:
    """Lane-changing on a road with a periodic traffic pattern.

    A state is (traffic phase, lateral position); positions 0 and
    ``n_lanes + 1`` are the two shoulders (off-road). Actions move one
    position left or right, or stay; a lateral move succeeds with
    ``lateral_success`` and otherwise the car keeps its position. The move
    resolves first, then the traffic advances one phase. The collision
    feature fires when the car's lane is occupied in the current phase.
    """
    if n_lanes < 2:
        raise ValueError(f"highway needs at least 2 lanes, got {n_lanes}")
    if period < 1 or not 0.0 <= density < 1.0:
        raise ValueError("invalid traffic parameters")
    occ = highway_traffic(n_lanes, period, density, traffic_seed)
    n_pos = n_lanes + 2
    n = period * n_pos

    def sid(k, p):
        return k * n_pos + p

    P = np.zeros((n, 3, n))
    F = np.zeros((n, 4))
    for k in range(period):
        k2 = (k + 1) % period
        for p in range(n_pos):
            s = sid(k, p)
            on_road = 1 <= p <= n_lanes
            F[s, 0] = float(on_road and occ[k, p - 1])
            F[s, 1] = float(not on_road)
            F[s, 2] = float(1 <= p <= 2)
            F[s, 3] = float(n_lanes - 1 <= p <= n_lanes)
            for a, dp in ((HW_LEFT, -1), (HW_STAY, 0), (HW_RIGHT, 1)):
                target = min(max(p + dp, 0), n_pos - 1)
                if dp == 0:
                    P[s, a, sid(k2, p)] = 1.0
                else:
                    P[s, a, sid(k2, target)] += lateral_success
                    P[s, a, sid(k2, p)] += 1.0 - lateral_success
    d0 = np.zeros(n)
    free = [p for p in range(1, n_lanes + 1) if not occ[0, p - 1]]
    d0[[sid(0, p) for p in free]] = 1.0 / len(free)
    mdp = normalize_features(MdpModel(P, F, d0, discount))

    theta_star = np.array([-1.0, -1.0, 0.0, 0.0])
    theta_1 = np.array([-0.2, -0.2, 0.0, 0.0])
    theta_2 = np.array([0.0, -1.0, 0.0, 0.0])
    expert = _soft(mdp, theta_star, expert_beta)
    return EnvironmentBundle(
        name="highway",
        mdp=mdp,
        theta_star=theta_star,
        theta_1=theta_1,
        theta_2=theta_2,
        metric=lambda f: -float(f[0] + f[1]),
        metric_name="neg_collisions_offroad",
        similarity="rbf",
        similarity_params={"sigma": 5.0},
        horizon=horizon,
        expert_policy=expert,
        sources={
            "star": [(expert, 1.0)],
            "one": [(_soft(mdp, theta_1, expert_beta), 1.0)],
            "two": [(_soft(mdp, theta_2, expert_beta), 1.0)],
        },
        expert_beta=expert_beta,
        info={"n_lanes": n_lanes, "period": period, "traffic": occ, "n_positions": n_pos},
    )


# Rows from top (y = 6) to bottom (y = 1); columns x = 1..6.
# S start, G terminal, L left edge, R right edge, P pit.
PIT_LAYOUT = (
    "LLLLLG",
    "LPPPPR",
    "LPPPPR",
    "LPPPPR",
    "LPPPPR",
    "SRRRRR",
)
PIT_FEATURES = ("left_edge", "right_edge", "pit")
PIT_SIDE = 6


def pit_state(x: int, y: int, side: int = PIT_SIDE) -> int:
    """State index of the 1-based cell (x, y); (1, 1) is the bottom-left start."""
    return (y - 1) * side + (x - 1)


def pit_cell(s: int, side: int = PIT_SIDE) -> tuple[int, int]:
    return s % side + 1, s // side + 1


def _pit_transition(success_prob: float, side: int = PIT_SIDE) -> np.ndarray:
    # y grows upwards, so UP is +1 in y
    moves = {UP: (0, 1), DOWN: (0, -1), LEFT: (-1, 0), RIGHT: (1, 0)}
    n = side * side
    P = np.zeros((n, 4, n))
    slip = (1.0 - success_prob) / 3.0
    goal = pit_state(side, side, side)
    for s in range(n):
        if s == goal:
            P[s, :, s] = 1.0
            continue
        x, y = pit_cell(s, side)
        for a in range(4):
            for b, (dx, dy) in moves.items():
                x2 = min(max(x + dx, 1), side)
                y2 = min(max(y + dy, 1), side)
                P[s, a, pit_state(x2, y2, side)] += success_prob if a == b else slip
    return P


def _pit_route_actions(kind: str, side: int = PIT_SIDE) -> np.ndarray:
    acts = np.zeros(side * side, dtype=int)
    for s in range(acts.size):
        x, y = pit_cell(s, side)
        if kind == "ccw":
            # along the bottom row, then up the right column
            if x == side:
                a = UP
            elif y == 1:
                a = RIGHT
            else:
                a = DOWN if y - 1 <= side - x else RIGHT
        elif kind == "cw":
            # up the left column, then along the top row
            if y == side:
                a = RIGHT
            elif x == 1:
                a = UP
            else:
                a = LEFT if x - 1 <= side - y else UP
        elif kind == "cross":
            # staircase along the diagonal, through the pit
            a = RIGHT if x <= y else UP
            if x == side:
                a = UP
            elif y == side:
                a = RIGHT
        else:
            raise ValueError(f"unknown route {kind!r}")
        acts[s] = a
    return acts


def pit_route_policy(kind: str, side: int = PIT_SIDE) -> SoftPolicy:
    """Deterministic routing policy: ``"ccw"``, ``"cw"`` or ``"cross"``."""
    return _deterministic_policy(_pit_route_actions(kind, side), 4)


def _check_pit_layout(layout) -> int:
    side = len(layout)
    if side < 2 or any(len(row) != side for row in layout):
        raise ValueError("pit layout must be a square of at least 2 x 2 cells")
    if layout[-1][0] != "S" or layout[0][-1] != "G":
        raise ValueError("pit layout needs S at the bottom-left and G at the top-right")
    if set("".join(layout)) - set("SGLRP."):
        raise ValueError("pit layout cells must be one of S, G, L, R, P, .")
    return side


def build_pit(
    success_prob: float = 0.85,
    discount: float = PIT_DISCOUNT,
    horizon: int = DEFAULT_HORIZONS["pit"],
    layout: tuple = PIT_LAYOUT,
) -> EnvironmentBundle:
    """Square pit world, 6 x 6 by default. The expert walks around the pit counter-clockwise.

    P_{u*} is an even per-trajectory mix of the clockwise and counter-clockwise
    routes, P_1 the pit-crossing route, P_2 the uniform random policy
    (the soft policy of the zero reward ``theta_2``). ``layout`` lists rows
    from top to bottom; ``.`` marks a cell without features.
    """
    side = _check_pit_layout(layout)
    n = side * side
    F = np.zeros((n, 3))
    start = goal = None
    for row, line in enumerate(layout):
        y = side - row
        for col, ch in enumerate(line):
            s = pit_state(col + 1, y, side)
            if ch in "LRP":
                F[s, "LRP".index(ch)] = 1.0
            elif ch == "S":
                start = s
            elif ch == "G":
                goal = s
    d0 = np.zeros(n)
    d0[start] = 1.0
    mdp = normalize_features(
        MdpModel(_pit_transition(success_prob, side), F, d0, discount, terminal_states={goal})
    )
    ccw, cw, cross = (pit_route_policy(k, side) for k in ("ccw", "cw", "cross"))
    theta_star = np.array([0.0, 0.0, -1.0])
    theta_1 = np.array([-0.5, -0.5, 1.0])
    theta_2 = np.zeros(3)
    return EnvironmentBundle(
        name="pit",
        mdp=mdp,
        theta_star=theta_star,
        theta_1=theta_1,
        theta_2=theta_2,
        metric=lambda f: -float(f[2]),
        metric_name="neg_pit",
        similarity="turn_count",
        similarity_params={},
        horizon=horizon,
        expert_policy=ccw,
        sources={
            "star": [(ccw, 0.5), (cw, 0.5)],
            "one": [(cross, 1.0)],
            "two": [(backward_pass(mdp, theta_2), 1.0)],
        },
        info={"start": start, "goal": goal, "success_prob": success_prob, "side": side},
    )


BUILDERS = {"gridworld": build_gridworld, "highway": build_highway, "pit": build_pit}


def make_environment(name: str, **params) -> EnvironmentBundle:
    """Build an environment by its harness name."""
    try:
        builder = BUILDERS[name]
    except KeyError:
        raise ValueError(f"unknown environment {name!r}; choose from {sorted(BUILDERS)}") from None
    return builder(**params)


def evaluate_policy(bundle: EnvironmentBundle, theta, horizon: int | None = None) -> float:
    """Metric of the soft policy induced by ``theta`` on the bundle's MDP."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (bundle.mdp.n_features,):
        raise ValueError(
            f"theta has shape {theta.shape}, expected ({bundle.mdp.n_features},)"
        )
    policy = backward_pass(bundle.mdp, theta)
    rho = forward_pass(bundle.mdp, policy, bundle.horizon if horizon is None else horizon)
    return bundle.metric(expected_feature_count(bundle.mdp, rho))
