"""Command-line front end: configured runs, sweeps, analyses, and exports.

Subcommands:

* ``run``      integrate a configured system (or iterate Q-learning) and
               export the trajectory.
* ``sweep``    repeat a run over a temperature or epsilon grid and
               summarize the terminal states.
* ``analyze``  locate rest points of a reduced link system and, on
               request, its critical temperature.
* ``compare``  run Q-learning and the matching integrated flow from the
               same start and report their deviation.

Every command writes CSV/JSON files plus a manifest listing each emitted
file with a content digest.  Outputs are byte-reproducible for a fixed
config and seed; wall-clock timestamps appear only inside the manifest.

Exit codes: 0 success, 1 usage or config error, 2 numerical failure,
3 partial sweep failure.  Set COEVO_LOG=debug|info|warning for logging.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import dataclasses
import hashlib
import json
import logging
import os
import re
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import critical_temperature, find_rest_points, verify_critical_temperature
from .dynamics import (
    IntegratorConfig,
    NumericalError,
    Trajectory,
    clamp_unit_interval,
    coordination_link_field,
    factored_columns,
    factored_field,
    factored_pack,
    factored_simplex_groups,
    full_field,
    integrate,
    joint_columns,
    joint_pack,
    joint_simplex_groups,
    link_columns,
    make_simplex_projector,
    rps_link_field,
)
from .games import GameSpec, RpsParams, build_coordination_game, build_matrix_game, build_rps_game
from .learning import LearningParams, compare_to_ode, run_learning
from .strategy import FactoredState, JointState, PolicyParams, QTable, boltzmann_policy

__all__ = [
    "ConfigError",
    "RunConfig",
    "RunManifest",
    "cmd_analyze",
    "cmd_compare",
    "cmd_run",
    "cmd_sweep",
    "main",
    "parse_config",
    "parse_grid",
    "serialize_config",
]

log = logging.getLogger("coevo")


class ConfigError(ValueError):
    """Configuration or usage problem; maps to exit code 1."""


_TOP_KEYS = {
    "game",
    "epsilon",
    "num_agents",
    "system",
    "temperature",
    "T",
    "integrator",
    "learning",
    "initial_state",
    "output",
}
_INTEGRATOR_KEYS = {"method", "dt", "t_end", "record_every", "abs_tol", "rel_tol", "dt_init"}
_LEARNING_KEYS = {"alpha", "rounds", "mode", "interactions_per_update", "seed"}
_SYSTEMS = ("link-only", "factored", "full")


@dataclass(frozen=True)
class RunConfig:
    """Validated run description: game, system, temperature, and run options.

    ``game`` is "coordination", "rps", or an explicit square payoff matrix;
    ``initial_state`` is "uniform", "random(<seed>)", or an explicit
    coordinate vector in the exported column order.
    """

    game: str | tuple
    system: str
    temperature: float
    epsilon: float | None = None
    num_agents: int = 3
    integrator: IntegratorConfig = IntegratorConfig()
    learning: LearningParams | None = None
    initial_state: str | tuple = "uniform"
    output: str | None = None


def _expect(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON run configuration."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON (line {exc.lineno}, column {exc.colno}): {exc.msg}") from exc
    _expect(isinstance(raw, dict), "config must be a JSON object")
    for key in raw:
        _expect(key in _TOP_KEYS, f"unknown config key '{key}'")

    game = raw.get("game")
    _expect(game is not None, "missing required key 'game'")
    if isinstance(game, list):
        try:
            matrix = tuple(tuple(float(v) for v in row) for row in game)
        except (TypeError, ValueError) as exc:
            raise ConfigError("key 'game': explicit payoff matrix must be numeric rows") from exc
        _expect(
            len(matrix) >= 1 and all(len(row) == len(matrix) for row in matrix),
            "key 'game': explicit payoff matrix must be square",
        )
        game_value: str | tuple = matrix
    else:
        _expect(game in ("coordination", "rps"), f"key 'game': expected 'coordination', 'rps', or a matrix, got {game!r}")
        game_value = game

    epsilon = raw.get("epsilon")
    if game_value == "rps":
        _expect(epsilon is not None, "game 'rps' requires key 'epsilon'")
        _expect(isinstance(epsilon, (int, float)), "key 'epsilon' must be a number")
        _expect(-1.0 < float(epsilon) < 1.0, f"key 'epsilon' must lie strictly in (-1, 1), got {epsilon}")
        epsilon = float(epsilon)
    else:
        _expect(epsilon is None, "key 'epsilon' is only meaningful for the rps game")

    system = raw.get("system")
    _expect(system is not None, "missing required key 'system'")
    _expect(system in _SYSTEMS, f"key 'system': expected one of {_SYSTEMS}, got {system!r}")

    _expect(not ("temperature" in raw and "T" in raw), "give either 'temperature' or 'T', not both")
    temperature = raw.get("temperature", raw.get("T"))
    _expect(temperature is not None, "missing required key 'temperature'")
    _expect(isinstance(temperature, (int, float)), "key 'temperature' must be a number")
    temperature = float(temperature)
    _expect(temperature >= 0.0, f"key 'temperature' must be >= 0, got {temperature}")

    num_agents = raw.get("num_agents", 3)
    _expect(isinstance(num_agents, int) and num_agents >= 2, f"key 'num_agents' must be an integer >= 2, got {num_agents!r}")
    if system == "link-only":
        _expect(num_agents == 3, "the link-only system is the three-agent reduction; set num_agents = 3")
        _expect(game_value in ("coordination", "rps"), "the link-only system exists for the built-in games only")

    integrator_raw = raw.get("integrator", {})
    _expect(isinstance(integrator_raw, dict), "key 'integrator' must be an object")
    for key in integrator_raw:
        _expect(key in _INTEGRATOR_KEYS, f"unknown config key 'integrator.{key}'")
    try:
        integrator = IntegratorConfig(**integrator_raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"key 'integrator': {exc}") from exc

    learning = None
    if raw.get("learning") is not None:
        learning_raw = raw["learning"]
        _expect(isinstance(learning_raw, dict), "key 'learning' must be an object")
        for key in learning_raw:
            _expect(key in _LEARNING_KEYS, f"unknown config key 'learning.{key}'")
        _expect("alpha" in learning_raw, "missing required key 'learning.alpha'")
        _expect("rounds" in learning_raw, "missing required key 'learning.rounds'")
        _expect(system == "full", "learning runs evolve the full joint system; set system = 'full'")
        _expect(temperature > 0.0, "learning requires a positive temperature")
        try:
            learning = LearningParams(policy=PolicyParams(temperature), **learning_raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"key 'learning': {exc}") from exc

    initial_state = raw.get("initial_state", "uniform")
    if isinstance(initial_state, list):
        try:
            initial_state = tuple(float(v) for v in initial_state)
        except (TypeError, ValueError) as exc:
            raise ConfigError("key 'initial_state': explicit state must be a flat list of numbers") from exc
    else:
        _expect(
            initial_state == "uniform" or _parse_random_spec(initial_state) is not None,
            "key 'initial_state': expected 'uniform', 'random(<seed>)', or a list of numbers",
        )

    output = raw.get("output")
    _expect(output is None or isinstance(output, str), "key 'output' must be a path string")

    return RunConfig(
        game=game_value,
        system=system,
        temperature=temperature,
        epsilon=epsilon,
        num_agents=num_agents,
        integrator=integrator,
        learning=learning,
        initial_state=initial_state,
        output=output,
    )


def _parse_random_spec(value) -> int | None:
    if not isinstance(value, str):
        return None
    match = re.fullmatch(r"random\((\d+)\)", value)
    return int(match.group(1)) if match else None


def serialize_config(config: RunConfig) -> str:
    """Render a config back to canonical JSON; reparsing yields an equal config."""
    return _dump_json(_config_dict(config))


def _config_dict(config: RunConfig) -> dict:
    out: dict = {
        "game": [list(row) for row in config.game] if isinstance(config.game, tuple) else config.game,
        "system": config.system,
        "temperature": config.temperature,
        "num_agents": config.num_agents,
        "integrator": dataclasses.asdict(config.integrator),
        "initial_state": list(config.initial_state)
        if isinstance(config.initial_state, tuple)
        else config.initial_state,
    }
    if config.epsilon is not None:
        out["epsilon"] = config.epsilon
    if config.learning is not None:
        lp = config.learning
        out["learning"] = {
            "alpha": lp.alpha,
            "rounds": lp.rounds,
            "mode": lp.mode,
            "interactions_per_update": lp.interactions_per_update,
            "seed": lp.seed,
        }
    if config.output is not None:
        out["output"] = config.output
    return out


# ---------------------------------------------------------------------------
# Building runs from a config
# ---------------------------------------------------------------------------


def _make_game(config: RunConfig) -> GameSpec:
    if config.game == "coordination":
        return build_coordination_game(config.num_agents)
    if config.game == "rps":
        return build_rps_game(config.num_agents, RpsParams(config.epsilon))
    return build_matrix_game(config.num_agents, np.asarray(config.game, dtype=float))


def _make_field(config: RunConfig, game: GameSpec):
    if config.system == "link-only":
        if config.game == "coordination":
            return coordination_link_field(config.temperature)
        return rps_link_field(config.temperature, config.epsilon)
    if config.system == "factored":
        return factored_field(game, config.temperature)
    return full_field(game, config.temperature)


def _state_layout(config: RunConfig, game: GameSpec):
    """Columns, projector, and dimension of the configured state space."""
    n, m = game.num_agents, game.num_actions
    if config.system == "link-only":
        return link_columns(), clamp_unit_interval, 3
    if config.system == "factored":
        groups = factored_simplex_groups(n, m)
        return factored_columns(n, m), make_simplex_projector(groups), n * (n - 1) + n * m
    groups = joint_simplex_groups(n, m)
    return joint_columns(n, m), make_simplex_projector(groups), n * (n - 1) * m


def _initial_vector(config: RunConfig, game: GameSpec, seed_override: int | None) -> tuple[np.ndarray, int | None]:
    """Initial coordinate vector plus the seed used, if the start was random."""
    n, m = game.num_agents, game.num_actions
    _, _, dim = _state_layout(config, game)
    spec = config.initial_state
    if isinstance(spec, tuple):
        vec = np.asarray(spec, dtype=float)
        _expect(vec.size == dim, f"initial_state has {vec.size} values, the {config.system} system needs {dim}")
        try:
            _validate_initial(config, vec, n, m)
        except ValueError as exc:
            raise ConfigError(f"initial_state: {exc}") from exc
        return vec, None
    if spec == "uniform":
        if config.system == "link-only":
            return np.full(3, 0.5), None
        if config.system == "factored":
            return factored_pack(FactoredState.uniform(n, m)), None
        return joint_pack(JointState.uniform(n, m)), None
    seed = _parse_random_spec(spec)
    if seed_override is not None:
        seed = seed_override
    rng = np.random.default_rng(seed)
    if config.system == "link-only":
        return rng.uniform(0.0, 1.0, 3), seed
    if config.system == "factored":
        links = np.zeros((n, n))
        links[~np.eye(n, dtype=bool)] = np.concatenate([rng.dirichlet(np.ones(n - 1)) for _ in range(n)])
        actions = np.vstack([rng.dirichlet(np.ones(m)) for _ in range(n)])
        return factored_pack(FactoredState(links, actions)), seed
    probs = np.zeros((n, n, m))
    for x in range(n):
        row = rng.dirichlet(np.ones((n - 1) * m)).reshape(n - 1, m)
        probs[x][np.arange(n) != x] = row
    return joint_pack(JointState(probs)), seed


def _validate_initial(config: RunConfig, vec: np.ndarray, n: int, m: int) -> None:
    if config.system == "link-only":
        if np.any(vec < 0.0) or np.any(vec > 1.0):
            raise ValueError("link values must lie in [0, 1]")
    elif config.system == "factored":
        from .dynamics import factored_unpack

        factored_unpack(vec, n, m)
    else:
        from .dynamics import joint_unpack

        joint_unpack(vec, n, m)


def _initial_qtable(config: RunConfig, game: GameSpec, seed_override: int | None) -> tuple[QTable, int | None]:
    """Initial utilities for a learning run: zeros, seeded noise, or explicit values."""
    n, m = game.num_agents, game.num_actions
    spec = config.initial_state
    if isinstance(spec, tuple):
        vec = np.asarray(spec, dtype=float)
        _expect(vec.size == n * (n - 1) * m, f"initial_state has {vec.size} values, the Q-table needs {n * (n - 1) * m}")
        values = np.zeros((n, n, m))
        values[~np.eye(n, dtype=bool)] = vec.reshape(n * (n - 1), m)
        return QTable(values), None
    if spec == "uniform":
        return QTable.zeros(n, m), None
    seed = _parse_random_spec(spec)
    if seed_override is not None:
        seed = seed_override
    rng = np.random.default_rng(seed)
    return QTable(0.5 * rng.standard_normal((n, n, m))), seed


# ---------------------------------------------------------------------------
# Deterministic file output
# ---------------------------------------------------------------------------


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as handle:
        handle.write(text)


def _write_trajectory_csv(path: Path, trajectory: Trajectory) -> None:
    lines = ["t," + ",".join(trajectory.columns)]
    for t, row in zip(trajectory.times, trajectory.states):
        lines.append(",".join([_fmt(t)] + [_fmt(v) for v in row]))
    _write_text(path, "\n".join(lines) + "\n")


def _complex_pairs(values) -> list[dict]:
    return [{"re": float(np.real(v)), "im": float(np.imag(v))} for v in values]


@dataclass
class RunManifest:
    """Record of one command: config echo, seeds, wall times, emitted files."""

    command: str
    config: dict
    tool_version: str = __version__
    seeds: list = dataclasses.field(default_factory=list)
    started_at: str = ""
    finished_at: str = ""
    status: str = "ok"
    notes: list = dataclasses.field(default_factory=list)
    files: list = dataclasses.field(default_factory=list)

    def add_file(self, root: Path, path: Path) -> None:
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        self.files.append(
            {
                "path": str(path.relative_to(root)),
                "sha256": digest,
                "bytes": path.stat().st_size,
            }
        )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _finish_manifest(manifest: RunManifest, out_dir: Path) -> RunManifest:
    manifest.finished_at = _now()
    _write_text(out_dir / "manifest.json", _dump_json(manifest.to_dict()))
    return manifest


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _run_trajectory(config: RunConfig, game: GameSpec, seed_override: int | None) -> tuple[Trajectory, list]:
    """Integrate or learn per the config; returns the trajectory and seeds used."""
    seeds = []
    if config.learning is not None:
        params = config.learning
        if seed_override is not None:
            params = dataclasses.replace(params, seed=seed_override)
        q0, init_seed = _initial_qtable(config, game, seed_override)
        if init_seed is not None:
            seeds.append(init_seed)
        if params.mode == "sampled":
            seeds.append(params.seed)
        trajectory = run_learning(q0, game, params)
    else:
        columns, projector, _ = _state_layout(config, game)
        y0, init_seed = _initial_vector(config, game, seed_override)
        if init_seed is not None:
            seeds.append(init_seed)
        metadata = {
            "game": game.name,
            "temperature": config.temperature,
            "seed": init_seed,
            "system": config.system,
        }
        trajectory = integrate(
            _make_field(config, game), y0, config.integrator, projector, columns, metadata
        )
    return trajectory, seeds


def cmd_run(config: RunConfig, out_dir: Path, seed_override: int | None = None) -> RunManifest:
    """Run one configured trajectory and export trajectory.csv + metadata.json."""
    out_dir = Path(out_dir)
    manifest = RunManifest(command="run", config=_config_dict(config), started_at=_now())
    game = _make_game(config)
    try:
        trajectory, seeds = _run_trajectory(config, game, seed_override)
    except NumericalError as exc:
        manifest.status = "failed"
        manifest.notes.append(str(exc))
        _finish_manifest(manifest, out_dir)
        raise
    manifest.seeds = seeds
    _write_trajectory_csv(out_dir / "trajectory.csv", trajectory)
    metadata = {
        "config": _config_dict(config),
        "columns": trajectory.columns,
        "seeds": seeds,
        "tool_version": __version__,
        "records": int(len(trajectory.times)),
        "trajectory_metadata": dict(trajectory.metadata),
    }
    _write_text(out_dir / "metadata.json", _dump_json(metadata))
    manifest.add_file(out_dir, out_dir / "trajectory.csv")
    manifest.add_file(out_dir, out_dir / "metadata.json")
    log.info("run: %d records -> %s", len(trajectory.times), out_dir)
    return _finish_manifest(manifest, out_dir)


def parse_grid(spec: str) -> list[float]:
    """Parse 'start:stop:step' into an inclusive grid of values."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigError(f"grid must look like 'start:stop:step', got {spec!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"grid values must be numbers, got {spec!r}") from exc
    if step <= 0.0:
        raise ConfigError(f"grid step must be positive, got {step}")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1 if stop >= start else 0
    return [start + k * step for k in range(count)]


def _point_config(config: RunConfig, param: str, value: float) -> RunConfig:
    if param == "temperature":
        return dataclasses.replace(config, temperature=value)
    if param == "epsilon":
        _expect(config.game == "rps", "an epsilon sweep requires the rps game")
        _expect(-1.0 < value < 1.0, f"epsilon grid value {value} outside (-1, 1)")
        return dataclasses.replace(config, epsilon=value)
    raise ConfigError(f"unknown sweep parameter {param!r}; use 'temperature' or 'epsilon'")


def cmd_sweep(
    config: RunConfig,
    grid: list[float],
    param: str = "temperature",
    out_dir: Path = Path("sweep"),
    jobs: int = 1,
    seed_override: int | None = None,
) -> RunManifest:
    """Run one trajectory per grid value and summarize terminal states.

    Each grid point writes into its own subdirectory; summary.csv collects
    the parameter value, terminal state, terminal derivative size, and the
    classification of the rest point nearest to the terminal state.  A
    failing member is recorded in its row and the sweep continues.
    """
    out_dir = Path(out_dir)
    if not grid:
        raise ConfigError("sweep grid is empty")
    configs = [_point_config(config, param, value) for value in grid]
    manifest = RunManifest(command="sweep", config=_config_dict(config), started_at=_now())
    manifest.notes.append(f"sweep parameter: {param}")

    def run_point(index: int) -> tuple[Trajectory | None, str]:
        point_dir = out_dir / f"point_{index:03d}"
        point_config = configs[index]
        game = _make_game(point_config)
        try:
            trajectory, seeds = _run_trajectory(point_config, game, seed_override)
        except (NumericalError, ValueError) as exc:
            log.warning("sweep point %d (%s=%s) failed: %s", index, param, grid[index], exc)
            return None, str(exc)
        _write_trajectory_csv(point_dir / "trajectory.csv", trajectory)
        metadata = {
            "config": _config_dict(point_config),
            "columns": trajectory.columns,
            "seeds": seeds,
            "tool_version": __version__,
        }
        _write_text(point_dir / "metadata.json", _dump_json(metadata))
        return trajectory, ""

    with concurrent.futures.ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        results = list(pool.map(run_point, range(len(grid))))

    columns, _, dim = _state_layout(config, _make_game(configs[0]))
    header = [param, "status"] + [f"final_{c}" for c in columns] + ["max_abs_rhs", "nearest_rest_point"]
    rows = []
    failures = 0
    for value, point_config, (trajectory, error) in zip(grid, configs, results):
        if trajectory is None:
            failures += 1
            rows.append([_fmt(value), "failed"] + ["nan"] * dim + ["nan", "none"])
            continue
        terminal = trajectory.final
        fieldfn = _make_field(point_config, _make_game(point_config))
        residual = float(np.max(np.abs(fieldfn(terminal))))
        search = find_rest_points(fieldfn, [terminal], tol=1e-10)
        nearest = search.points[0].classification if search.points else "none"
        rows.append(
            [_fmt(value), "ok"] + [_fmt(v) for v in terminal] + [_fmt(residual), nearest]
        )
    summary = ",".join(header) + "\n" + "\n".join(",".join(row) for row in rows) + "\n"
    _write_text(out_dir / "summary.csv", summary)

    manifest.add_file(out_dir, out_dir / "summary.csv")
    for index in range(len(grid)):
        point_dir = out_dir / f"point_{index:03d}"
        for name in ("trajectory.csv", "metadata.json"):
            if (point_dir / name).exists():
                manifest.add_file(out_dir, point_dir / name)
    if failures:
        manifest.status = "partial-failure"
        manifest.notes.append(f"{failures} of {len(grid)} sweep points failed")
    return _finish_manifest(manifest, out_dir)


def cmd_analyze(
    config: RunConfig,
    out_dir: Path,
    critical_temp: bool = False,
    verify_threshold: bool = False,
) -> RunManifest:
    """Locate rest points of a link system; optionally find its critical temperature."""
    out_dir = Path(out_dir)
    _expect(config.system == "link-only", "analyze operates on the link-only system")
    manifest = RunManifest(command="analyze", config=_config_dict(config), started_at=_now())
    game = _make_game(config)
    fieldfn = _make_field(config, game)

    # 27-point seed grid: vertices, edge and face midpoints, and the center.
    axis = [0.0, 0.5, 1.0]
    seeds = [np.array([a, b, c]) for a in axis for b in axis for c in axis]
    search = find_rest_points(fieldfn, seeds, tol=1e-10)
    rest_points = {
        "system": config.game,
        "temperature": config.temperature,
        "epsilon": config.epsilon,
        "diagnostics": {
            "total_seeds": search.total_seeds,
            "dropped_seeds": search.dropped_seeds,
        },
        "rest_points": [
            {
                "state": {name: float(v) for name, v in zip(link_columns(), point.state)},
                "residual": point.residual,
                "eigenvalues": _complex_pairs(point.eigenvalues),
                "classification": point.classification,
                "degenerate": point.degenerate,
            }
            for point in search.points
        ],
    }
    _write_text(out_dir / "rest_points.json", _dump_json(rest_points))
    manifest.add_file(out_dir, out_dir / "rest_points.json")

    if critical_temp:
        result = critical_temperature(
            config.game, bracket=(0.0, 1.0), tol=1e-6, epsilon=config.epsilon
        )
        payload = {
            "system": config.game,
            "epsilon": config.epsilon,
            "value": result.value,
            "bracket": list(result.bracket),
            "criterion": result.criterion,
        }
        if verify_threshold:
            payload["trajectory_check"] = verify_critical_temperature(
                config.game, result.value, epsilon=config.epsilon
            )
        _write_text(out_dir / "critical_temperature.json", _dump_json(payload))
        manifest.add_file(out_dir, out_dir / "critical_temperature.json")
    return _finish_manifest(manifest, out_dir)


def cmd_compare(config: RunConfig, out_dir: Path, seed_override: int | None = None) -> RunManifest:
    """Run Q-learning and the matching integrated flow; export both plus the deviation."""
    out_dir = Path(out_dir)
    _expect(config.learning is not None, "compare requires a 'learning' block in the config")
    manifest = RunManifest(command="compare", config=_config_dict(config), started_at=_now())
    game = _make_game(config)

    learn_traj, seeds = _run_trajectory(config, game, seed_override)
    manifest.seeds = seeds

    q0, _ = _initial_qtable(config, game, seed_override)
    start = joint_pack(boltzmann_policy(q0, config.learning.policy))
    tau_end = config.learning.alpha * config.learning.policy.beta * config.learning.rounds
    ode_config = dataclasses.replace(config.integrator, t_end=tau_end)
    columns = joint_columns(game.num_agents, game.num_actions)
    projector = make_simplex_projector(joint_simplex_groups(game.num_agents, game.num_actions))
    ode_traj = integrate(
        full_field(game, config.temperature), start, ode_config, projector, columns
    )
    report = compare_to_ode(learn_traj, ode_traj)

    _write_trajectory_csv(out_dir / "learning.csv", learn_traj)
    _write_trajectory_csv(out_dir / "ode.csv", ode_traj)
    deviation = {
        "max_deviation": report.max_deviation,
        "mean_deviation": report.mean_deviation,
        "compared_points": report.compared_points,
        "alpha": config.learning.alpha,
        "temperature": config.temperature,
        "mode": config.learning.mode,
    }
    _write_text(out_dir / "deviation.json", _dump_json(deviation))
    for name in ("learning.csv", "ode.csv", "deviation.json"):
        manifest.add_file(out_dir, out_dir / name)
    return _finish_manifest(manifest, out_dir)


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: D102 - argparse hook
        raise ConfigError(message)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="coevo", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"coevo {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="path to a JSON run config")
        p.add_argument("--out", default=None, help="output directory (overrides config 'output')")
        p.add_argument("--seed", type=int, default=None, help="override random-start and learning seeds")

    p_run = sub.add_parser("run", help="integrate or learn one configured trajectory")
    common(p_run)

    p_sweep = sub.add_parser("sweep", help="repeat a run over a parameter grid")
    common(p_sweep)
    p_sweep.add_argument("--grid", required=True, help="grid as 'start:stop:step'")
    p_sweep.add_argument("--param", default="temperature", choices=("temperature", "epsilon"))
    p_sweep.add_argument("--jobs", type=int, default=1, help="concurrent sweep members")

    p_analyze = sub.add_parser("analyze", help="rest points and stability of a link system")
    common(p_analyze)
    p_analyze.add_argument("--critical-temp", action="store_true", help="also bisect the critical temperature")
    p_analyze.add_argument("--verify-threshold", action="store_true", help="cross-check the threshold with trajectories")

    p_compare = sub.add_parser("compare", help="learning run vs integrated flow")
    common(p_compare)
    return parser


def _configure_logging() -> None:
    level_name = os.environ.get("COEVO_LOG", "warning").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def main(argv: list[str] | None = None) -> int:
    """CLI driver; returns the process exit code."""
    _configure_logging()
    try:
        args = _build_parser().parse_args(argv)
        config = parse_config(Path(args.config).read_text())
        out = args.out or config.output
        _expect(out is not None, "no output directory: set config key 'output' or pass --out")
        out_dir = Path(out)
        if args.command == "run":
            cmd_run(config, out_dir, seed_override=args.seed)
        elif args.command == "sweep":
            manifest = cmd_sweep(
                config,
                parse_grid(args.grid),
                param=args.param,
                out_dir=out_dir,
                jobs=args.jobs,
                seed_override=args.seed,
            )
            if manifest.status == "partial-failure":
                print("warning: some sweep points failed; see manifest.json", file=sys.stderr)
                return 3
        elif args.command == "analyze":
            cmd_analyze(
                config,
                out_dir,
                critical_temp=args.critical_temp,
                verify_threshold=args.verify_threshold,
            )
        else:
            cmd_compare(config, out_dir, seed_override=args.seed)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    return 0


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
