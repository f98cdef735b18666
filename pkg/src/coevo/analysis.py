"""Rest-point location, Jacobians, and stability thresholds for the link systems.

The three-agent link flows have a symmetric interior rest point whose
Jacobian is closed-form: a common diagonal entry -T and a common
off-diagonal coupling (-1/4 for the coordination game, -epsilon/12 for
rock-paper-scissors).  Its spectrum is therefore {diag + 2*off,
diag - off (twice)}, and the largest real eigenvalue crosses zero at a
critical temperature found here by bisection.  General rest points are
located by a damped Newton search over seed states with finite-difference
Jacobians.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dynamics import (
    IntegratorConfig,
    NumericalError,
    clamp_unit_interval,
    coordination_link_field,
    integrate,
    rps_link_field,
)

__all__ = [
    "CriticalTemperature",
    "RestPoint",
    "RestPointSearch",
    "STABLE",
    "UNSTABLE",
    "MARGINAL",
    "classify_stability",
    "coordination_jacobian_interior",
    "coordination_link_jacobian",
    "critical_temperature",
    "eigenvalues",
    "find_rest_points",
    "interior_link_state",
    "numeric_jacobian",
    "rps_jacobian_interior",
    "rps_link_jacobian",
    "verify_critical_temperature",
]

STABLE = "stable"
UNSTABLE = "unstable"
MARGINAL = "marginal"


@dataclass(frozen=True)
class RestPoint:
    """A located equilibrium with its local linearization.

    ``degenerate`` flags a numerically singular Jacobian, the signature of
    a continuum of rest points through this state.
    """

    state: np.ndarray
    residual: float
    jacobian: np.ndarray
    eigenvalues: np.ndarray
    classification: str
    degenerate: bool


@dataclass(frozen=True)
class RestPointSearch:
    """Deduplicated rest points plus seed diagnostics."""

    points: list[RestPoint]
    dropped_seeds: int
    total_seeds: int


@dataclass(frozen=True)
class CriticalTemperature:
    """Temperature at which the interior rest point changes stability."""

    value: float
    bracket: tuple[float, float]
    criterion: str = "max real eigenvalue sign change"


def interior_link_state() -> np.ndarray:
    """The symmetric interior rest point of both three-agent link systems."""
    return np.array([0.5, 0.5, 0.5])


def numeric_jacobian(
    fieldfn: Callable[[np.ndarray], np.ndarray], state: np.ndarray, h: float = 1e-6
) -> np.ndarray:
    """Central-difference Jacobian of ``fieldfn`` at an interior state.

    Every coordinate must be at least ``h`` away from 0 and 1 so both
    probe points stay inside the unit box.
    """
    if not (h > 0.0):
        raise ValueError(f"step h must be positive, got {h}")
    x = np.asarray(state, dtype=float)
    if np.any(x < h) or np.any(x > 1.0 - h):
        raise ValueError(f"state must be at least h={h} away from 0 and 1: {x}")
    return _central_jacobian(fieldfn, x, h)


def _central_jacobian(fieldfn, x: np.ndarray, h: float) -> np.ndarray:
    dim = x.size
    jac = np.empty((dim, dim))
    for b in range(dim):
        step = np.zeros(dim)
        step[b] = h
        jac[:, b] = (fieldfn(x + step) - fieldfn(x - step)) / (2.0 * h)
    return jac


def _boundary_safe_jacobian(fieldfn, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Finite-difference Jacobian that switches to one-sided stencils near 0/1."""
    dim = x.size
    jac = np.empty((dim, dim))
    f0 = None
    for b in range(dim):
        step = np.zeros(dim)
        step[b] = h
        lo_ok = x[b] >= h
        hi_ok = x[b] <= 1.0 - h
        if lo_ok and hi_ok:
            jac[:, b] = (fieldfn(x + step) - fieldfn(x - step)) / (2.0 * h)
        else:
            if f0 is None:
                f0 = fieldfn(x)
            probe = x + step if hi_ok else x - step
            sign = 1.0 if hi_ok else -1.0
            jac[:, b] = sign * (fieldfn(probe) - f0) / h
    return jac


def coordination_jacobian_interior(temperature: float) -> np.ndarray:
    """Linearization of the coordination link flow at the symmetric interior point."""
    if temperature < 0.0:
        raise ValueError(f"temperature must be >= 0, got {temperature}")
    jac = np.full((3, 3), -0.25)
    np.fill_diagonal(jac, -temperature)
    return jac


def rps_jacobian_interior(temperature: float, epsilon: float) -> np.ndarray:
    """Linearization of the rock-paper-scissors link flow at the interior point."""
    if temperature < 0.0:
        raise ValueError(f"temperature must be >= 0, got {temperature}")
    if not (-1.0 < epsilon < 1.0):
        raise ValueError(f"epsilon must lie strictly in (-1, 1), got {epsilon}")
    jac = np.full((3, 3), -epsilon / 12.0)
    np.fill_diagonal(jac, -temperature)
    return jac


def _general_link_jacobian(state: np.ndarray, temperature: float, gain: float) -> np.ndarray:
    # f_k = c_k (1 - c_k) * B_k,  B_k = gain * (1 - sum of the other two) + T ln((1-c_k)/c_k)
    # so df_k/dc_k = (1 - 2 c_k) B_k - T  and  df_k/dc_other = -gain * c_k (1 - c_k).
    c = np.asarray(state, dtype=float)
    if np.any(c <= 0.0) or np.any(c >= 1.0):
        raise ValueError(f"analytic link Jacobian requires an interior state, got {c}")
    others = c.sum() - c
    bracket = gain * (1.0 - others) + temperature * np.log((1.0 - c) / c)
    jac = np.tile((-gain * c * (1.0 - c))[:, None], (1, 3))
    np.fill_diagonal(jac, (1.0 - 2.0 * c) * bracket - temperature)
    return jac


def coordination_link_jacobian(state: np.ndarray, temperature: float) -> np.ndarray:
    """Analytic Jacobian of the coordination link flow at any interior state."""
    if temperature < 0.0:
        raise ValueError(f"temperature must be >= 0, got {temperature}")
    return _general_link_jacobian(state, temperature, 1.0)


def rps_link_jacobian(state: np.ndarray, temperature: float, epsilon: float) -> np.ndarray:
    """Analytic Jacobian of the rock-paper-scissors link flow at any interior state."""
    if temperature < 0.0:
        raise ValueError(f"temperature must be >= 0, got {temperature}")
    if not (-1.0 < epsilon < 1.0):
        raise ValueError(f"epsilon must lie strictly in (-1, 1), got {epsilon}")
    return _general_link_jacobian(state, temperature, epsilon / 3.0)


def eigenvalues(matrix: np.ndarray) -> np.ndarray:
    """Full complex spectrum of a square matrix.

    For the 3x3 constant-diagonal, constant-off-diagonal matrices produced
    by the interior linearizations the spectrum is closed-form,
    (a + 2b, a - b, a - b); that path is taken and cross-checked against
    the general solver.
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    try:
        general = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue iteration failed: {exc}") from exc
    if m.shape == (3, 3):
        diag = np.diag(m)
        off = m[~np.eye(3, dtype=bool)]
        if np.ptp(diag) < 1e-12 and np.ptp(off) < 1e-12:
            a, b = diag[0], off[0]
            closed = np.array([a + 2.0 * b, a - b, a - b], dtype=complex)
            if np.max(np.abs(np.sort_complex(closed) - np.sort_complex(general))) > 1e-9:
                raise NumericalError("closed-form spectrum disagrees with the general solver")
            return closed
    return general


def classify_stability(eigs: Sequence[complex], tol: float = 1e-8) -> str:
    """Stable if all real parts < -tol, unstable if any > tol, marginal otherwise."""
    if not (tol > 0.0):
        raise ValueError(f"tolerance must be positive, got {tol}")
    real = np.real(np.asarray(eigs, dtype=complex))
    if np.all(real < -tol):
        return STABLE
    if np.any(real > tol):
        return UNSTABLE
    return MARGINAL


def find_rest_points(
    fieldfn: Callable[[np.ndarray], np.ndarray],
    seeds: Sequence[np.ndarray],
    tol: float = 1e-10,
    h: float = 1e-6,
    max_iterations: int = 100,
    dedup_tol: float = 1e-6,
    det_tol: float = 1e-8,
) -> RestPointSearch:
    """Damped Newton search for rest points from a batch of seed states.

    Seeds may sit on the boundary of the unit box; iterates are clipped
    back into it and near-boundary coordinates use one-sided difference
    stencils.  Converged points closer than ``dedup_tol`` to an earlier
    find are dropped; seeds that fail to converge are only counted.
    """
    if not (tol > 0.0):
        raise ValueError(f"tolerance must be positive, got {tol}")
    points: list[RestPoint] = []
    dropped = 0
    for seed in seeds:
        y = clamp_unit_interval(np.array(seed, dtype=float))
        converged = False
        for _ in range(max_iterations):
            residual_vec = fieldfn(y)
            residual = float(np.max(np.abs(residual_vec)))
            if residual < tol:
                converged = True
                break
            jac = _boundary_safe_jacobian(fieldfn, y, h)
            step = np.linalg.lstsq(jac, -residual_vec, rcond=None)[0]
            if not np.all(np.isfinite(step)):
                break
            # Halve the step until the residual decreases (up to 20 times).
            scale = 1.0
            candidate = y
            for _ in range(20):
                trial = clamp_unit_interval(y + scale * step)
                if np.max(np.abs(fieldfn(trial))) < residual:
                    candidate = trial
                    break
                scale *= 0.5
            else:
                break
            y = candidate
        if not converged:
            dropped += 1
            continue
        if any(np.max(np.abs(y - p.state)) < dedup_tol for p in points):
            continue
        jac = _boundary_safe_jacobian(fieldfn, y, h)
        eigs = eigenvalues(jac)
        points.append(
            RestPoint(
                state=y,
                residual=float(np.max(np.abs(fieldfn(y)))),
                jacobian=jac,
                eigenvalues=eigs,
                classification=classify_stability(eigs),
                degenerate=bool(abs(np.linalg.det(jac)) < det_tol),
            )
        )
    return RestPointSearch(points=points, dropped_seeds=dropped, total_seeds=len(seeds))


def _interior_spectrum_peak(system: str, epsilon: float | None) -> Callable[[float], float]:
    if system == "coordination":
        jac_at = coordination_jacobian_interior
    elif system == "rps":
        if epsilon is None:
            raise ValueError("the rps system needs an epsilon value")
        jac_at = lambda T: rps_jacobian_interior(T, epsilon)  # noqa: E731
    else:
        raise ValueError(f"unknown link system {system!r}")
    return lambda T: float(np.max(np.real(eigenvalues(jac_at(T)))))


def critical_temperature(
    system: str,
    bracket: tuple[float, float] = (0.0, 1.0),
    tol: float = 1e-6,
    epsilon: float | None = None,
) -> CriticalTemperature:
    """Bisection for the temperature where the interior point changes stability.

    The bisected function is the largest real eigenvalue of the analytic
    interior Jacobian; its sign must differ at the two bracket ends.
    """
    if not (tol > 0.0):
        raise ValueError(f"tolerance must be positive, got {tol}")
    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise ValueError(f"bracket must satisfy lo < hi, got {bracket}")
    peak = _interior_spectrum_peak(system, epsilon)
    g_lo, g_hi = peak(lo), peak(hi)
    if g_lo == 0.0 or g_hi == 0.0:
        # A bracket end sitting exactly on the threshold still identifies it.
        value = lo if g_lo == 0.0 else hi
        return CriticalTemperature(value=value, bracket=(value - 0.5 * tol, value + 0.5 * tol))
    if np.sign(g_lo) == np.sign(g_hi):
        raise ValueError(
            f"no stability change in bracket {bracket}: peak eigenvalue signs are equal"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        g_mid = peak(mid)
        if g_mid == 0.0:
            return CriticalTemperature(value=mid, bracket=(mid - 0.5 * tol, mid + 0.5 * tol))
        if np.sign(g_mid) == np.sign(g_lo):
            lo, g_lo = mid, g_mid
        else:
            hi = mid
    return CriticalTemperature(value=0.5 * (lo + hi), bracket=(lo, hi))


def verify_critical_temperature(
    system: str,
    t_critical: float,
    offset: float = 0.05,
    epsilon: float | None = None,
    perturbation: float = 0.01,
    t_end: float = 300.0,
    dt: float = 0.01,
) -> dict:
    """Trajectory-based check of a stability threshold.

    Integrates the link flow from the interior point perturbed by
    ``perturbation`` along the first coordinate, at temperatures
    ``t_critical - offset`` and ``t_critical + offset``.  Below the
    threshold the flow should leave the interior; above it, return.
    """
    if system == "coordination":
        field_at = coordination_link_field
    elif system == "rps":
        if epsilon is None:
            raise ValueError("the rps system needs an epsilon value")
        field_at = lambda T: rps_link_field(T, epsilon)  # noqa: E731
    else:
        raise ValueError(f"unknown link system {system!r}")

    start = interior_link_state()
    start[0] += perturbation
    config = IntegratorConfig(method="rk4-fixed", dt=dt, t_end=t_end, record_every=10**9)
    report = {}
    for label, temperature in (
        ("below", t_critical - offset),
        ("above", t_critical + offset),
    ):
        trajectory = integrate(
            field_at(temperature), start, config, project=clamp_unit_interval
        )
        distance = float(np.max(np.abs(trajectory.final - interior_link_state())))
        report[label] = {"temperature": temperature, "final_distance": distance}
    report["below_diverges"] = report["below"]["final_distance"] > 10.0 * perturbation
    report["above_converges"] = report["above"]["final_distance"] < 0.1 * perturbation
    return report
