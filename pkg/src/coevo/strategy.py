"""Mixed-strategy state types and the Boltzmann policy map.

An agent's overall strategy is a probability distribution over joint
(partner, action) choices.  Two representations are used:

* ``JointState`` keeps the full per-agent distribution p[x, y, i].
* ``FactoredState`` splits it into a partner-choice distribution
  c[x, y] and a partner-independent action distribution p[x, i].

``factor_state`` projects a joint state onto the factored form and
reports how far the state is from being exactly factorizable;
``compose_state`` goes the other way.  ``boltzmann_policy`` maps a table
of relative utilities to a joint state via a temperature-controlled
softmax.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "P_MIN",
    "FactoredState",
    "JointState",
    "PolicyParams",
    "QTable",
    "boltzmann_policy",
    "compose_state",
    "factor_state",
    "validate_simplex",
]

# Floor used whenever a probability feeds a logarithm; entries at or below
# it are treated as exact zeros by the entropy terms.
P_MIN = 1e-12

_SUM_TOL = 1e-9


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class PolicyParams:
    """Exploration temperature of the softmax policy; beta = 1/temperature."""

    temperature: float

    def __post_init__(self):
        if not (self.temperature > 0.0 and np.isfinite(self.temperature)):
            raise ValueError(f"temperature must be a positive real, got {self.temperature}")

    @property
    def beta(self) -> float:
        return 1.0 / self.temperature


@dataclass(frozen=True)
class JointState:
    """Full mixed strategies: probs[x, y, i] = P(agent x picks partner y, action i).

    Per agent x the entries over all (y != x, i) sum to 1; the diagonal
    (y == x) is structurally zero.
    """

    probs: np.ndarray

    def __post_init__(self):
        arr = np.array(self.probs, dtype=float)
        if arr.ndim != 3 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"joint state must have shape (n, n, m), got {arr.shape}")
        n = arr.shape[0]
        if n < 2:
            raise ValueError("need at least 2 agents")
        diag = np.eye(n, dtype=bool)
        if np.any(np.abs(arr[diag]) > _SUM_TOL):
            raise ValueError("joint state has probability mass on the diagonal (self-partnering)")
        arr[diag] = 0.0
        if np.any(arr < -_SUM_TOL) or np.any(arr > 1.0 + _SUM_TOL):
            raise ValueError("joint state entries must lie in [0, 1]")
        sums = arr.sum(axis=(1, 2))
        bad = np.nonzero(np.abs(sums - 1.0) > _SUM_TOL)[0]
        if bad.size:
            raise ValueError(f"joint state of agent {bad[0]} sums to {sums[bad[0]]!r}, expected 1")
        object.__setattr__(self, "probs", _freeze(arr))

    @property
    def num_agents(self) -> int:
        return self.probs.shape[0]

    @property
    def num_actions(self) -> int:
        return self.probs.shape[2]

    @classmethod
    def uniform(cls, num_agents: int, num_actions: int) -> "JointState":
        p = np.full((num_agents, num_agents, num_actions), 1.0 / ((num_agents - 1) * num_actions))
        p[np.eye(num_agents, dtype=bool)] = 0.0
        return cls(p)


@dataclass(frozen=True)
class FactoredState:
    """Factored strategies: links[x, y] times actions[x, i].

    ``links[x, y]`` is the probability that agent x initiates a game with
    agent y (zero diagonal, rows sum to 1); ``actions[x, i]`` is the
    probability that x plays action i regardless of partner.
    """

    links: np.ndarray
    actions: np.ndarray

    def __post_init__(self):
        links = np.array(self.links, dtype=float)
        actions = np.array(self.actions, dtype=float)
        if links.ndim != 2 or links.shape[0] != links.shape[1]:
            raise ValueError(f"links must have shape (n, n), got {links.shape}")
        n = links.shape[0]
        if n < 2:
            raise ValueError("need at least 2 agents")
        if actions.ndim != 2 or actions.shape[0] != n:
            raise ValueError(f"actions must have shape ({n}, m), got {actions.shape}")
        diag = np.eye(n, dtype=bool)
        if np.any(np.abs(links[diag]) > _SUM_TOL):
            raise ValueError("links has probability mass on the diagonal (self-partnering)")
        links[diag] = 0.0
        for name, arr in (("links", links), ("actions", actions)):
            if np.any(arr < -_SUM_TOL) or np.any(arr > 1.0 + _SUM_TOL):
                raise ValueError(f"{name} entries must lie in [0, 1]")
            sums = arr.sum(axis=1)
            bad = np.nonzero(np.abs(sums - 1.0) > _SUM_TOL)[0]
            if bad.size:
                raise ValueError(f"{name} of agent {bad[0]} sums to {sums[bad[0]]!r}, expected 1")
        object.__setattr__(self, "links", _freeze(links))
        object.__setattr__(self, "actions", _freeze(actions))

    @property
    def num_agents(self) -> int:
        return self.links.shape[0]

    @property
    def num_actions(self) -> int:
        return self.actions.shape[1]

    @classmethod
    def uniform(cls, num_agents: int, num_actions: int) -> "FactoredState":
        links = np.full((num_agents, num_agents), 1.0 / (num_agents - 1))
        links[np.eye(num_agents, dtype=bool)] = 0.0
        actions = np.full((num_agents, num_actions), 1.0 / num_actions)
        return cls(links, actions)


@dataclass(frozen=True)
class QTable:
    """Relative utility of each (partner, action) choice, per agent.

    ``values[x, y, i]`` drives agent x's propensity to pick partner y with
    action i.  The diagonal (y == x) is unused and kept at zero.
    """

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        if arr.ndim != 3 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"Q-table must have shape (n, n, m), got {arr.shape}")
        n = arr.shape[0]
        diag = np.eye(n, dtype=bool)
        arr[diag] = 0.0
        if not np.all(np.isfinite(arr)):
            raise ValueError("Q-table has non-finite entries")
        object.__setattr__(self, "values", _freeze(arr))

    @property
    def num_agents(self) -> int:
        return self.values.shape[0]

    @property
    def num_actions(self) -> int:
        return self.values.shape[2]

    @classmethod
    def zeros(cls, num_agents: int, num_actions: int) -> "QTable":
        return cls(np.zeros((num_agents, num_agents, num_actions)))


def boltzmann_policy(q: QTable, params: PolicyParams) -> JointState:
    """Softmax over each agent's (partner, action) utilities.

    p[x, y, i] is proportional to exp(beta * Q[x, y, i]), normalized per
    agent over all valid (partner, action) pairs.  Each agent's maximum
    utility is subtracted before exponentiation so arbitrarily large beta
    stays finite.
    """
    if not np.all(np.isfinite(q.values)):
        raise ValueError("Q-table has non-finite entries")
    n, m = q.num_agents, q.num_actions
    valid = ~np.eye(n, dtype=bool)[:, :, None] & np.ones((n, n, m), dtype=bool)
    logits = params.beta * q.values
    shifted = logits - np.max(np.where(valid, logits, -np.inf), axis=(1, 2))[:, None, None]
    weights = np.where(valid, np.exp(shifted), 0.0)
    probs = weights / weights.sum(axis=(1, 2))[:, None, None]
    return JointState(probs)


def compose_state(f: FactoredState) -> JointState:
    """Joint state induced by a factored one: p[x, y, i] = links[x, y] * actions[x, i]."""
    probs = f.links[:, :, None] * f.actions[:, None, :]
    return JointState(probs)


def factor_state(s: JointState) -> tuple[FactoredState, float]:
    """Project a joint state onto the factored form.

    Returns the factored state with links c[x, y] = sum_i p[x, y, i] and
    actions p[x, i] = sum_y p[x, y, i], plus the residual
    max |p[x, y, i] - c[x, y] * p[x, i]|, which is 0 exactly when the
    joint state is factorizable.
    """
    links = s.probs.sum(axis=2)
    actions = s.probs.sum(axis=1)
    reconstructed = links[:, :, None] * actions[:, None, :]
    residual = float(np.max(np.abs(s.probs - reconstructed)))
    return FactoredState(links, actions), residual


def validate_simplex(state: JointState | FactoredState, tol: float) -> list[str]:
    """Check the per-agent normalization and range invariants.

    Returns one message per violation: a per-agent sum further than ``tol``
    from 1, or any entry outside [-tol, 1 + tol].  An empty list means the
    state is valid at this tolerance.
    """
    if not (tol > 0.0):
        raise ValueError(f"tolerance must be positive, got {tol}")
    violations: list[str] = []

    def check(name: str, arr: np.ndarray, sum_axes) -> None:
        sums = arr.sum(axis=sum_axes)
        for agent in np.nonzero(np.abs(sums - 1.0) > tol)[0]:
            violations.append(f"agent {agent}: {name} mass {sums[agent]!r} differs from 1 by more than {tol}")
        low = arr.min()
        high = arr.max()
        if low < -tol:
            violations.append(f"{name} entry {low!r} below -{tol}")
        if high > 1.0 + tol:
            violations.append(f"{name} entry {high!r} above 1 + {tol}")

    if isinstance(state, JointState):
        check("partner-action", state.probs, (1, 2))
    elif isinstance(state, FactoredState):
        check("link", state.links, 1)
        check("action", state.actions, 1)
    else:
        raise ValueError(f"cannot validate object of type {type(state).__name__}")
    return violations
