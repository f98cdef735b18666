"""Replicator vector fields and ODE integration for co-evolving network games.

Four coupled systems are implemented, all derived from temperature-softmax
learning on pairwise games:

* the full replicator flow on joint (partner, action) strategies,
* the factored flow on separate link and action distributions,
* the reduced three-agent link flows for the coordination game and for
  rock-paper-scissors with actions pinned to their equilibrium profile.

Each right-hand side has the replicator structure

    d state / dt  =  state * (fitness - average fitness)  +  T * entropy pull

so probability simplices are invariant: per-agent derivative entries sum to
zero, and entries at 0 (or links at 0/1) stay put.  ``integrate`` advances
any of the fields with a fixed-step RK4 scheme or an adaptive RK45 scheme,
clamping and renormalizing after every accepted step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .games import GameSpec, agent_labels
from .strategy import P_MIN, FactoredState, JointState

__all__ = [
    "IntegratorConfig",
    "LinkState3",
    "NumericalError",
    "Trajectory",
    "clamp_unit_interval",
    "coordination_link_field",
    "factored_columns",
    "factored_field",
    "factored_pack",
    "factored_rhs",
    "factored_simplex_groups",
    "factored_unpack",
    "full_field",
    "full_replicator_rhs",
    "integrate",
    "joint_columns",
    "joint_pack",
    "joint_simplex_groups",
    "joint_unpack",
    "link_columns",
    "link_rhs_coordination",
    "link_rhs_rps",
    "make_simplex_projector",
    "rps_link_field",
    "xlogx",
]


class NumericalError(RuntimeError):
    """Raised when an evaluation or an integration step loses numerical validity."""


def xlogx(values: np.ndarray) -> np.ndarray:
    """Entrywise v * ln(v) with the limit value 0 at v <= P_MIN."""
    v = np.asarray(values, dtype=float)
    safe = np.maximum(v, P_MIN)
    return np.where(v > P_MIN, v * np.log(safe), 0.0)


def _boundary_log_weight(c: np.ndarray) -> np.ndarray:
    """Entrywise c * (1 - c) * ln((1 - c) / c), hard 0 outside (P_MIN, 1 - P_MIN).

    This is the entropy term of the reduced link equations; the naive
    expression is NaN at the interval ends while the limit is 0.
    """
    c = np.asarray(c, dtype=float)
    inside = (c > P_MIN) & (c < 1.0 - P_MIN)
    safe = np.where(inside, c, 0.5)
    return np.where(inside, safe * (1.0 - safe) * np.log((1.0 - safe) / safe), 0.0)


def _check_temperature(temperature: float) -> float:
    if not (temperature >= 0.0 and np.isfinite(temperature)):
        raise ValueError(f"temperature must be a finite real >= 0, got {temperature}")
    return float(temperature)


# ---------------------------------------------------------------------------
# Full joint system
# ---------------------------------------------------------------------------


def _full_rhs_raw(probs: np.ndarray, entries: np.ndarray, temperature: float) -> np.ndarray:
    # rewards[x, y, i] = sum_j A[x, y, i, j] * probs[y, x, j]
    rewards = np.einsum("xyij,yxj->xyi", entries, probs)
    average = np.einsum("xyi,xyi->x", probs, rewards)
    growth = rewards - average[:, None, None]
    if temperature > 0.0:
        plogp = xlogx(probs)
        entropy = plogp.sum(axis=(1, 2))
        return probs * (growth + temperature * entropy[:, None, None]) - temperature * plogp
    return probs * growth


def full_replicator_rhs(s: JointState, game: GameSpec, temperature: float) -> np.ndarray:
    """Time derivative of a joint state under the full replicator flow.

    For each entry, the growth rate is the expected reward of that
    (partner, action) choice against the co-players' current strategies,
    minus the agent's average reward, plus a temperature-weighted pull
    toward the uniform distribution.  Returns an array shaped like
    ``s.probs`` whose per-agent entries sum to zero.
    """
    temperature = _check_temperature(temperature)
    dp = _full_rhs_raw(s.probs, game.payoff.entries, temperature)
    if not np.all(np.isfinite(dp)):
        index = tuple(int(k) for k in np.argwhere(~np.isfinite(dp))[0])
        raise NumericalError(f"non-finite joint derivative at entry {index}")
    return dp


# ---------------------------------------------------------------------------
# Factored system
# ---------------------------------------------------------------------------


def _factored_rhs_raw(
    links: np.ndarray, actions: np.ndarray, entries: np.ndarray, temperature: float
) -> tuple[np.ndarray, np.ndarray]:
    # mean_reward[x, y, i]: reward of action i for x against y's mixed action
    mean_reward = np.einsum("xyij,yj->xyi", entries, actions)
    # pair_value[x, y]: expected reward of an (x, y) encounter under both mixes
    pair_value = np.einsum("xi,xyi->xy", actions, mean_reward)
    mutual = links * links.T
    action_fitness = np.einsum("xy,xyi->xi", mutual, mean_reward)
    link_fitness = links.T * pair_value
    average = (links * link_fitness).sum(axis=1)

    if temperature > 0.0:
        alog = xlogx(actions)
        clog = xlogx(links)
        d_actions = (
            actions * (action_fitness - average[:, None] + temperature * alog.sum(axis=1)[:, None])
            - temperature * alog
        )
        d_links = (
            links * (link_fitness - average[:, None] + temperature * clog.sum(axis=1)[:, None])
            - temperature * clog
        )
    else:
        d_actions = actions * (action_fitness - average[:, None])
        d_links = links * (link_fitness - average[:, None])
    return d_links, d_actions


def factored_rhs(
    f: FactoredState, game: GameSpec, temperature: float
) -> tuple[np.ndarray, np.ndarray]:
    """Time derivatives (d_links, d_actions) of a factored state.

    Links grow when the mutual-engagement value of a partner beats the
    agent's average; actions grow when their fitness across all engaged
    partners does.  Both derivative blocks sum to zero per agent.
    """
    temperature = _check_temperature(temperature)
    d_links, d_actions = _factored_rhs_raw(
        f.links, f.actions, game.payoff.entries, temperature
    )
    for name, arr in (("link", d_links), ("action", d_actions)):
        if not np.all(np.isfinite(arr)):
            index = tuple(int(k) for k in np.argwhere(~np.isfinite(arr))[0])
            raise NumericalError(f"non-finite {name} derivative at entry {index}")
    return d_links, d_actions


# ---------------------------------------------------------------------------
# Reduced three-agent link systems
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinkState3:
    """The three free link weights of the three-agent reduction.

    Stores c_xy, c_yz, c_zx; the reciprocal links are implicit complements
    (c_xz = 1 - c_xy, c_yx = 1 - c_yz, c_zy = 1 - c_zx).
    """

    c_xy: float
    c_yz: float
    c_zx: float

    def __post_init__(self):
        for name, v in (("c_xy", self.c_xy), ("c_yz", self.c_yz), ("c_zx", self.c_zx)):
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {v}")

    def as_array(self) -> np.ndarray:
        return np.array([self.c_xy, self.c_yz, self.c_zx])

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "LinkState3":
        a = np.asarray(values, dtype=float)
        if a.shape != (3,):
            raise ValueError(f"expected 3 link values, got shape {a.shape}")
        return cls(float(a[0]), float(a[1]), float(a[2]))


def _link_field(gain: float, temperature: float) -> Callable[[np.ndarray], np.ndarray]:
    # dc_k = c_k (1 - c_k) * gain * (1 - c_other1 - c_other2) + T * c_k (1 - c_k) ln((1 - c_k)/c_k)
    def fieldfn(vec: np.ndarray) -> np.ndarray:
        c = np.asarray(vec, dtype=float)
        others = c.sum() - c
        drive = c * (1.0 - c) * gain * (1.0 - others)
        if temperature > 0.0:
            return drive + temperature * _boundary_log_weight(c)
        return drive

    return fieldfn


def coordination_link_field(temperature: float) -> Callable[[np.ndarray], np.ndarray]:
    """Reduced link field for the coordination game with actions pinned to the rewarded one."""
    return _link_field(1.0, _check_temperature(temperature))


def rps_link_field(temperature: float, epsilon: float) -> Callable[[np.ndarray], np.ndarray]:
    """Reduced link field for rock-paper-scissors with uniform pinned actions."""
    if not (-1.0 < epsilon < 1.0):
        raise ValueError(f"epsilon must lie strictly in (-1, 1), got {epsilon}")
    return _link_field(epsilon / 3.0, _check_temperature(temperature))


def link_rhs_coordination(c: LinkState3, temperature: float) -> np.ndarray:
    """Derivative (dc_xy, dc_yz, dc_zx) of the coordination link system."""
    return coordination_link_field(temperature)(c.as_array())


def link_rhs_rps(c: LinkState3, temperature: float, epsilon: float) -> np.ndarray:
    """Derivative (dc_xy, dc_yz, dc_zx) of the rock-paper-scissors link system."""
    return rps_link_field(temperature, epsilon)(c.as_array())


def link_columns() -> list[str]:
    return ["c_xy", "c_yz", "c_zx"]


# ---------------------------------------------------------------------------
# Vector packing for the integrator
# ---------------------------------------------------------------------------


def _offdiag_mask(n: int) -> np.ndarray:
    return ~np.eye(n, dtype=bool)


def joint_pack(s: JointState) -> np.ndarray:
    """Flatten a joint state to the off-diagonal coordinate vector."""
    return s.probs[_offdiag_mask(s.num_agents)].ravel().copy()


def joint_unpack(vec: np.ndarray, num_agents: int, num_actions: int) -> JointState:
    probs = np.zeros((num_agents, num_agents, num_actions))
    probs[_offdiag_mask(num_agents)] = np.asarray(vec, dtype=float).reshape(
        num_agents * (num_agents - 1), num_actions
    )
    return JointState(probs)


def joint_columns(num_agents: int, num_actions: int) -> list[str]:
    labels = agent_labels(num_agents)
    return [
        f"p_{labels[x]}{labels[y]}_{i + 1}"
        for x in range(num_agents)
        for y in range(num_agents)
        if y != x
        for i in range(num_actions)
    ]


def joint_simplex_groups(num_agents: int, num_actions: int) -> list[np.ndarray]:
    width = (num_agents - 1) * num_actions
    return [np.arange(x * width, (x + 1) * width) for x in range(num_agents)]


def factored_pack(f: FactoredState) -> np.ndarray:
    """Flatten a factored state: off-diagonal links first, then action rows."""
    links = f.links[_offdiag_mask(f.num_agents)].ravel()
    return np.concatenate([links, f.actions.ravel()])


def factored_unpack(vec: np.ndarray, num_agents: int, num_actions: int) -> FactoredState:
    vec = np.asarray(vec, dtype=float)
    n_links = num_agents * (num_agents - 1)
    links = np.zeros((num_agents, num_agents))
    links[_offdiag_mask(num_agents)] = vec[:n_links]
    actions = vec[n_links:].reshape(num_agents, num_actions)
    return FactoredState(links, actions)


def factored_columns(num_agents: int, num_actions: int) -> list[str]:
    labels = agent_labels(num_agents)
    link_cols = [
        f"c_{labels[x]}{labels[y]}"
        for x in range(num_agents)
        for y in range(num_agents)
        if y != x
    ]
    action_cols = [
        f"p_{labels[x]}_{i + 1}" for x in range(num_agents) for i in range(num_actions)
    ]
    return link_cols + action_cols


def factored_simplex_groups(num_agents: int, num_actions: int) -> list[np.ndarray]:
    groups = [
        np.arange(x * (num_agents - 1), (x + 1) * (num_agents - 1))
        for x in range(num_agents)
    ]
    offset = num_agents * (num_agents - 1)
    groups += [
        np.arange(offset + x * num_actions, offset + (x + 1) * num_actions)
        for x in range(num_agents)
    ]
    return groups


def full_field(game: GameSpec, temperature: float) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized full-replicator field on packed joint coordinates."""
    temperature = _check_temperature(temperature)
    n, m = game.num_agents, game.num_actions
    entries = game.payoff.entries
    mask = _offdiag_mask(n)

    def fieldfn(vec: np.ndarray) -> np.ndarray:
        probs = np.zeros((n, n, m))
        probs[mask] = np.asarray(vec, dtype=float).reshape(n * (n - 1), m)
        return _full_rhs_raw(probs, entries, temperature)[mask].ravel()

    return fieldfn


def factored_field(game: GameSpec, temperature: float) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized factored field on packed link + action coordinates."""
    temperature = _check_temperature(temperature)
    n, m = game.num_agents, game.num_actions
    entries = game.payoff.entries
    mask = _offdiag_mask(n)
    n_links = n * (n - 1)

    def fieldfn(vec: np.ndarray) -> np.ndarray:
        vec = np.asarray(vec, dtype=float)
        links = np.zeros((n, n))
        links[mask] = vec[:n_links]
        actions = vec[n_links:].reshape(n, m)
        d_links, d_actions = _factored_rhs_raw(links, actions, entries, temperature)
        return np.concatenate([d_links[mask].ravel(), d_actions.ravel()])

    return fieldfn


# ---------------------------------------------------------------------------
# Projection after integrator steps
# ---------------------------------------------------------------------------


def make_simplex_projector(groups: Sequence[np.ndarray]) -> Callable[[np.ndarray], np.ndarray]:
    """Clamp coordinates to [P_MIN, 1] and renormalize each index group to sum 1."""

    def project(vec: np.ndarray) -> np.ndarray:
        v = np.clip(vec, P_MIN, 1.0)
        for idx in groups:
            v[idx] /= v[idx].sum()
        return v

    return project


def clamp_unit_interval(vec: np.ndarray) -> np.ndarray:
    """Clamp free link coordinates to [0, 1]; they carry no sum constraint."""
    return np.clip(vec, 0.0, 1.0)


# ---------------------------------------------------------------------------
# Integration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IntegratorConfig:
    """Time-stepping scheme and horizon.

    ``rk4-fixed`` uses step ``dt``; ``rk45-adaptive`` starts from
    ``dt_init`` and controls the local error against ``abs_tol`` and
    ``rel_tol``.  Every ``record_every``-th step is recorded, plus the
    initial and final states.
    """

    method: str = "rk4-fixed"
    dt: float = 0.01
    t_end: float = 500.0
    record_every: int = 1
    abs_tol: float = 1e-9
    rel_tol: float = 1e-9
    dt_init: float = 0.01

    def __post_init__(self):
        if self.method not in ("rk4-fixed", "rk45-adaptive"):
            raise ValueError(f"unknown integration method {self.method!r}")
        for name in ("dt", "t_end", "abs_tol", "rel_tol", "dt_init"):
            if not (getattr(self, name) > 0.0):
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.record_every < 1:
            raise ValueError(f"record_every must be >= 1, got {self.record_every}")


@dataclass(frozen=True)
class Trajectory:
    """Recorded states of one run: strictly increasing times, one state row each.

    ``times`` are in rescaled flow units; learning runs also carry the raw
    update index per record in ``rounds``.
    """

    times: np.ndarray
    states: np.ndarray
    columns: list[str]
    metadata: dict = field(default_factory=dict)
    rounds: np.ndarray | None = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        states = np.asarray(self.states, dtype=float)
        if times.ndim != 1 or states.ndim != 2 or len(times) != len(states):
            raise ValueError("times and states must be parallel (k,) and (k, dim) arrays")
        if np.any(np.diff(times) <= 0.0):
            raise ValueError("times must be strictly increasing")
        if len(self.columns) != states.shape[1]:
            raise ValueError("one column name per state coordinate is required")
        object.__setattr__(self, "times", _as_readonly(times))
        object.__setattr__(self, "states", _as_readonly(states))

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def _as_readonly(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


def _rk4_step(fieldfn, y: np.ndarray, dt: float) -> np.ndarray:
    k1 = fieldfn(y)
    k2 = fieldfn(y + 0.5 * dt * k1)
    k3 = fieldfn(y + 0.5 * dt * k2)
    k4 = fieldfn(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


# Dormand-Prince 5(4) tableau.
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)


def integrate(
    fieldfn: Callable[[np.ndarray], np.ndarray],
    state0: np.ndarray,
    config: IntegratorConfig,
    project: Callable[[np.ndarray], np.ndarray] | None = None,
    columns: list[str] | None = None,
    metadata: dict | None = None,
) -> Trajectory:
    """Advance an autonomous field from ``state0`` and record a trajectory.

    ``project`` is applied after every accepted step (clamping to the valid
    region and renormalizing simplices); recording keeps the initial state,
    every ``record_every``-th accepted step, and the final state.  The run
    is deterministic for fixed inputs.
    """
    y = np.array(state0, dtype=float)
    if columns is None:
        columns = [f"y{k}" for k in range(y.size)]
    times = [0.0]
    states = [y.copy()]

    def check_finite(vec: np.ndarray, t: float) -> None:
        if not np.all(np.isfinite(vec)):
            raise NumericalError(f"non-finite state at t={t:.6g}")

    if config.method == "rk4-fixed":
        steps = max(1, int(round(config.t_end / config.dt)))
        dt = config.t_end / steps
        for k in range(1, steps + 1):
            y = _rk4_step(fieldfn, y, dt)
            if project is not None:
                y = project(y)
            t = k * dt
            check_finite(y, t)
            if k % config.record_every == 0 or k == steps:
                times.append(t)
                states.append(y.copy())
    else:
        t = 0.0
        h = min(config.dt_init, config.t_end)
        accepted = 0
        k_stages = np.empty((7, y.size))
        while t < config.t_end - 1e-14 * max(1.0, config.t_end):
            h = min(h, config.t_end - t)
            if h < 1e-14 * max(1.0, abs(t)):
                raise NumericalError(f"adaptive step size underflow at t={t:.6g}")
            for stage in range(7):
                y_stage = y.copy()
                for idx, coeff in enumerate(_DP_A[stage]):
                    y_stage += h * coeff * k_stages[idx]
                k_stages[stage] = fieldfn(y_stage)
            y_new = y + h * (_DP_B5 @ k_stages)
            y_alt = y + h * (_DP_B4 @ k_stages)
            scale = config.abs_tol + config.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
            err = np.max(np.abs(y_new - y_alt) / scale) if y.size else 0.0
            if err <= 1.0:
                t += h
                y = project(y_new) if project is not None else y_new
                check_finite(y, t)
                accepted += 1
                if accepted % config.record_every == 0 or t >= config.t_end - 1e-14:
                    if t > times[-1]:
                        times.append(t)
                        states.append(y.copy())
            h *= float(np.clip(0.9 * (max(err, 1e-16)) ** -0.2, 0.2, 5.0))

    return Trajectory(
        times=np.array(times),
        states=np.vstack(states),
        columns=list(columns),
        metadata=dict(metadata or {}),
    )
