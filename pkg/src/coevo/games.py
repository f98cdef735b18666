"""Normal-form pairwise games and their payoff tensors.

A game between n agents is stored as one payoff matrix per ordered agent
pair: entry (x, y, i, j) is the payoff to agent x for playing action i
against agent y playing action j.  The co-player's payoff in the same
encounter is entry (y, x, j, i).  The built-in games share a single
matrix across all pairs, but storage stays pair-indexed so heterogeneous
variants need no API change.

Action indices are 0-based throughout the API; prose that refers to the
"first action" of a matrix means index 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "GameSpec",
    "PayoffTensor",
    "RpsParams",
    "agent_labels",
    "build_coordination_game",
    "build_matrix_game",
    "build_rps_game",
    "coordination_matrix",
    "payoff",
    "rps_matrix",
]


def coordination_matrix() -> np.ndarray:
    """Two-action coordination matrix: unit reward for joint first action."""
    return np.array([[1.0, 0.0], [0.0, 0.0]])


def rps_matrix(epsilon: float) -> np.ndarray:
    """Rock-paper-scissors matrix with self-play payoff ``epsilon`` on the diagonal."""
    return np.array(
        [
            [epsilon, -1.0, 1.0],
            [1.0, epsilon, -1.0],
            [-1.0, 1.0, epsilon],
        ]
    )


@dataclass(frozen=True)
class RpsParams:
    """Diagonal payoff of the rock-paper-scissors matrix, strictly inside (-1, 1)."""

    epsilon: float

    def __post_init__(self):
        if not (-1.0 < self.epsilon < 1.0):
            raise ValueError(f"epsilon must lie strictly in (-1, 1), got {self.epsilon}")


@dataclass(frozen=True)
class PayoffTensor:
    """Per-ordered-pair payoff entries, indexed (x, y, i, j).

    ``entries[x, y, i, j]`` is the payoff to agent x playing action i
    against agent y playing action j.  Diagonal blocks (x == y) are unused
    and kept at zero.
    """

    entries: np.ndarray

    def __post_init__(self):
        arr = np.array(self.entries, dtype=float)
        if arr.ndim != 4 or arr.shape[0] != arr.shape[1] or arr.shape[2] != arr.shape[3]:
            raise ValueError(f"payoff tensor must have shape (n, n, m, m), got {arr.shape}")
        n = arr.shape[0]
        if not np.all(np.isfinite(arr[~np.eye(n, dtype=bool)])):
            raise ValueError("payoff tensor has non-finite entries")
        arr[np.eye(n, dtype=bool)] = 0.0
        arr.flags.writeable = False
        object.__setattr__(self, "entries", arr)

    @property
    def num_agents(self) -> int:
        return self.entries.shape[0]

    @property
    def num_actions(self) -> int:
        return self.entries.shape[2]


@dataclass(frozen=True)
class GameSpec:
    """A fixed pairwise game: agent count, action count, payoff tensor."""

    name: str
    num_agents: int
    num_actions: int
    payoff: PayoffTensor

    def __post_init__(self):
        if self.num_agents < 2:
            raise ValueError(f"need at least 2 agents, got {self.num_agents}")
        if self.num_actions < 1:
            raise ValueError(f"need at least 1 action, got {self.num_actions}")
        if self.payoff.num_agents != self.num_agents or self.payoff.num_actions != self.num_actions:
            raise ValueError("payoff tensor shape does not match agent/action counts")


def build_matrix_game(num_agents: int, matrix, name: str = "matrix") -> GameSpec:
    """Build a game where every ordered pair plays the same payoff matrix.

    ``matrix[i][j]`` is the payoff to the row agent playing action i against
    the column agent playing action j.
    """
    mat = np.asarray(matrix, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"payoff matrix must be square, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise ValueError("payoff matrix has non-finite entries")
    if num_agents < 2:
        raise ValueError(f"need at least 2 agents, got {num_agents}")
    m = mat.shape[0]
    entries = np.tile(mat, (num_agents, num_agents, 1, 1))
    entries[np.eye(num_agents, dtype=bool)] = 0.0
    return GameSpec(name=name, num_agents=num_agents, num_actions=m, payoff=PayoffTensor(entries))


def build_coordination_game(num_agents: int) -> GameSpec:
    """Two-action coordination game: both agents earn 1 on joint action 0, else 0."""
    return build_matrix_game(num_agents, coordination_matrix(), name="coordination")


def build_rps_game(num_agents: int, params: RpsParams) -> GameSpec:
    """Rock-paper-scissors with diagonal payoff ``params.epsilon``."""
    return build_matrix_game(num_agents, rps_matrix(params.epsilon), name="rps")


def payoff(game: GameSpec, x: int, y: int, i: int, j: int) -> float:
    """Payoff to agent x playing action i against agent y playing action j."""
    n, m = game.num_agents, game.num_actions
    if not (0 <= x < n and 0 <= y < n):
        raise ValueError(f"agent index out of range: ({x}, {y}) for {n} agents")
    if x == y:
        raise ValueError(f"self-play payoff is undefined (agent {x})")
    if not (0 <= i < m and 0 <= j < m):
        raise ValueError(f"action index out of range: ({i}, {j}) for {m} actions")
    return float(game.payoff.entries[x, y, i, j])


def agent_labels(num_agents: int) -> list[str]:
    """Short agent names used in exports: x, y, z for three agents, a0.. otherwise."""
    if num_agents == 3:
        return ["x", "y", "z"]
    return [f"a{k}" for k in range(num_agents)]
