"""Discrete-time multi-agent Q-learning whose smooth limit is the replicator flow.

Each round every agent draws a (partner, action) pair from its softmax
policy and initiates one encounter; invited partners always take part.
Utilities are updated toward per-choice reward estimates,

    Q' = Q + alpha * (R - Q),

with R either the exact expectation over co-player strategies (``expected``
mode) or an empirical average over a batch of simulated encounters
(``sampled`` mode).  A reward only materializes for the initiator when the
partner's own draw also selected the initiator, which makes the sampled
estimates agree in expectation with the exact formula at any policy.

With update step alpha and inverse temperature beta, round k corresponds
to rescaled flow time tau = alpha * beta * k, which is the axis used when
comparing a learning run against an integrated trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import Trajectory, joint_columns, joint_pack
from .games import GameSpec
from .strategy import JointState, PolicyParams, QTable, boltzmann_policy

__all__ = [
    "DeviationReport",
    "Encounter",
    "LearningParams",
    "RewardEstimate",
    "compare_to_ode",
    "expected_reward",
    "q_update",
    "run_learning",
    "sample_round",
]


@dataclass(frozen=True)
class LearningParams:
    """Update step, exploration temperature, horizon, and reward mode.

    ``interactions_per_update`` is the number of simulated rounds averaged
    into each sampled reward estimate; it is ignored in expected mode.
    """

    alpha: float
    policy: PolicyParams
    rounds: int
    mode: str = "expected"
    interactions_per_update: int = 1
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.rounds < 1:
            raise ValueError(f"rounds must be >= 1, got {self.rounds}")
        if self.mode not in ("expected", "sampled"):
            raise ValueError(f"unknown learning mode {self.mode!r}")
        if self.interactions_per_update < 1:
            raise ValueError(
                f"interactions_per_update must be >= 1, got {self.interactions_per_update}"
            )


@dataclass(frozen=True)
class RewardEstimate:
    """Estimated reward of each (partner, action) choice, per agent.

    The diagonal (self-partnering) is unused and kept at zero, mirroring
    the Q-table layout.
    """

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        if arr.ndim != 3 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"reward estimate must have shape (n, n, m), got {arr.shape}")
        arr[np.eye(arr.shape[0], dtype=bool)] = 0.0
        if not np.all(np.isfinite(arr)):
            raise ValueError("reward estimate has non-finite entries")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)


@dataclass(frozen=True)
class Encounter:
    """One initiated game: who played whom, the actions, and both payoffs.

    ``reciprocated`` marks rounds in which the partner's own draw selected
    the initiator back.
    """

    initiator: int
    partner: int
    initiator_action: int
    responder_action: int
    initiator_payoff: float
    responder_payoff: float
    reciprocated: bool


@dataclass(frozen=True)
class DeviationReport:
    """Coordinate deviation between a learning run and an integrated trajectory."""

    max_deviation: float
    mean_deviation: float
    compared_points: int


def expected_reward(game: GameSpec, policies: JointState) -> RewardEstimate:
    """Exact expected reward R[x, y, i] = sum_j A[x, y, i, j] * p[y, x, j].

    ``p[y, x, j]`` is the co-player's joint probability of selecting the
    initiator with action j, so choices toward unengaged partners earn 0.
    """
    values = np.einsum("xyij,yxj->xyi", game.payoff.entries, policies.probs)
    return RewardEstimate(values)


def q_update(q: QTable, r: RewardEstimate, alpha: float) -> QTable:
    """One utility update Q' = Q + alpha * (R - Q); returns a new table."""
    if not (0.0 < alpha <= 1.0):
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    return QTable(q.values + alpha * (r.values - q.values))


def _draw_choices(policies: JointState, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Each agent's (partner, action) draw from its joint policy, in agent order."""
    n, m = policies.num_agents, policies.num_actions
    partners = np.empty(n, dtype=int)
    actions = np.empty(n, dtype=int)
    for x in range(n):
        flat = rng.choice(n * m, p=policies.probs[x].ravel())
        partners[x], actions[x] = divmod(int(flat), m)
    return partners, actions


def _response_action(
    policies: JointState, responder: int, initiator: int, rng: np.random.Generator
) -> int:
    """Action of an invited partner: its action law conditioned on this initiator.

    If the responder never selects the initiator itself, the conditional is
    undefined and its overall action marginal is used instead.
    """
    joint_row = policies.probs[responder, initiator]
    mass = joint_row.sum()
    if mass > 1e-15:
        return int(rng.choice(joint_row.size, p=joint_row / mass))
    marginal = policies.probs[responder].sum(axis=0)
    return int(rng.choice(marginal.size, p=marginal))


def sample_round(
    policies: JointState, game: GameSpec, rng: np.random.Generator
) -> list[Encounter]:
    """Simulate one round: every agent initiates one encounter.

    Each agent draws a (partner, action) pair from its joint policy; the
    invited partner takes part unconditionally, replying with its already
    drawn action when its own draw selected the initiator and with a fresh
    draw from its conditional action law otherwise.  Payoffs for both
    participants are recorded per encounter.
    """
    entries = game.payoff.entries
    partners, actions = _draw_choices(policies, rng)
    encounters = []
    for x in range(policies.num_agents):
        y = int(partners[x])
        i = int(actions[x])
        reciprocated = partners[y] == x
        j = int(actions[y]) if reciprocated else _response_action(policies, y, x, rng)
        encounters.append(
            Encounter(
                initiator=x,
                partner=y,
                initiator_action=i,
                responder_action=j,
                initiator_payoff=float(entries[x, y, i, j]),
                responder_payoff=float(entries[y, x, j, i]),
                reciprocated=bool(reciprocated),
            )
        )
    return encounters


def _sample_batch(
    policies: JointState, game: GameSpec, rounds: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Reciprocation-gated payoff sums and visit counts over a batch of rounds.

    Returns ``(sums, counts)`` indexed (initiator, partner, action): counts
    tally how often each choice was initiated, sums accumulate the realized
    payoff when the partner's own draw reciprocated and 0 otherwise.  The
    per-entry mean is an unbiased estimate of ``expected_reward``.
    """
    n, m = policies.num_agents, policies.num_actions
    entries = game.payoff.entries
    partners = np.empty((n, rounds), dtype=int)
    actions = np.empty((n, rounds), dtype=int)
    for x in range(n):
        flat = rng.choice(n * m, size=rounds, p=policies.probs[x].ravel())
        partners[x] = flat // m
        actions[x] = flat % m
    sums = np.zeros((n, n, m))
    counts = np.zeros((n, n, m), dtype=int)
    rounds_idx = np.arange(rounds)
    for x in range(n):
        y = partners[x]
        i = actions[x]
        reciprocated = partners[y, rounds_idx] == x
        payoff = np.where(reciprocated, entries[x, y, i, actions[y, rounds_idx]], 0.0)
        np.add.at(sums[x], (y, i), payoff)
        np.add.at(counts[x], (y, i), 1)
    return sums, counts


def run_learning(q0: QTable, game: GameSpec, params: LearningParams) -> Trajectory:
    """Iterate policy computation and utility updates, recording every policy.

    The trajectory holds the joint policy after every update (and the
    initial one), with times on the rescaled flow axis
    tau = alpha * beta * round and the raw round indices alongside.  In
    sampled mode, choices not initiated during a batch leave their Q entry
    unchanged, and the run is reproducible from its seed.
    """
    n, m = q0.num_agents, q0.num_actions
    if (n, m) != (game.num_agents, game.num_actions):
        raise ValueError("Q-table shape does not match the game")
    rng = np.random.default_rng(params.seed)
    q = q0
    policy = boltzmann_policy(q, params.policy)
    states = [joint_pack(policy)]
    for _ in range(params.rounds):
        if params.mode == "expected":
            estimate = expected_reward(game, policy).values
        else:
            sums, counts = _sample_batch(
                policy, game, params.interactions_per_update, rng
            )
            visited = counts > 0
            estimate = np.where(visited, sums / np.maximum(counts, 1), q.values)
        q = QTable(q.values + params.alpha * (estimate - q.values))
        policy = boltzmann_policy(q, params.policy)
        states.append(joint_pack(policy))
    tau_step = params.alpha * params.policy.beta
    rounds_axis = np.arange(params.rounds + 1)
    return Trajectory(
        times=tau_step * rounds_axis,
        states=np.vstack(states),
        columns=joint_columns(n, m),
        metadata={
            "game": game.name,
            "temperature": params.policy.temperature,
            "alpha": params.alpha,
            "mode": params.mode,
            "interactions_per_update": params.interactions_per_update,
            "seed": params.seed,
        },
        rounds=rounds_axis,
    )


def compare_to_ode(learn: Trajectory, ode: Trajectory) -> DeviationReport:
    """Deviation of a learning run from an integrated trajectory.

    The integrated trajectory is linearly interpolated at the learning
    run's rescaled times; only times inside the integrated range are
    compared, and having none is an error.
    """
    if learn.states.shape[1] != ode.states.shape[1]:
        raise ValueError(
            f"trajectories have different state dimensions: "
            f"{learn.states.shape[1]} vs {ode.states.shape[1]}"
        )
    pad = 1e-12
    mask = (learn.times >= ode.times[0] - pad) & (learn.times <= ode.times[-1] + pad)
    if not np.any(mask):
        raise ValueError("trajectories cover disjoint time ranges")
    sample_times = learn.times[mask]
    interpolated = np.column_stack(
        [np.interp(sample_times, ode.times, ode.states[:, k]) for k in range(ode.states.shape[1])]
    )
    deviations = np.abs(learn.states[mask] - interpolated)
    return DeviationReport(
        max_deviation=float(deviations.max()),
        mean_deviation=float(deviations.mean()),
        compared_points=int(mask.sum()),
    )
