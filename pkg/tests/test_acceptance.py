"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines as they execute.
"""

import json

import numpy as np
import pytest

from coevo.analysis import (
    coordination_jacobian_interior,
    coordination_link_jacobian,
    critical_temperature,
    find_rest_points,
    interior_link_state,
    numeric_jacobian,
    rps_jacobian_interior,
    rps_link_jacobian,
    verify_critical_temperature,
)
from coevo.cli import cmd_analyze, cmd_run, cmd_sweep, parse_config
from coevo.dynamics import (
    IntegratorConfig,
    clamp_unit_interval,
    coordination_link_field,
    factored_field,
    factored_pack,
    factored_simplex_groups,
    full_field,
    integrate,
    joint_columns,
    joint_pack,
    joint_simplex_groups,
    link_rhs_coordination,
    link_rhs_rps,
    LinkState3,
    make_simplex_projector,
    rps_link_field,
)
from coevo.games import RpsParams, build_coordination_game, build_rps_game
from coevo.learning import LearningParams, _sample_batch, compare_to_ode, expected_reward, run_learning
from coevo.strategy import FactoredState, JointState, PolicyParams, QTable, boltzmann_policy


def report(criterion: str, ok: bool, detail: str) -> None:
    print(f"{criterion} {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"{criterion}: {detail}"


def pinned_factored_state(link3, actions_row, n=3):
    u, v, w = link3
    links = np.array([[0.0, u, 1.0 - u], [1.0 - v, 0.0, v], [w, 1.0 - w, 0.0]])
    actions = np.tile(np.asarray(actions_row, dtype=float), (n, 1))
    return FactoredState(links, actions)


def random_joint_state(rng, n=3, m=2):
    probs = np.zeros((n, n, m))
    for x in range(n):
        probs[x][np.arange(n) != x] = rng.dirichlet(np.ones((n - 1) * m)).reshape(n - 1, m)
    return JointState(probs)


def test_a1_coordination_critical_temperature():
    result = critical_temperature("coordination", (0.0, 1.0), tol=1e-6)
    ok_value = abs(result.value - 0.25) <= 1e-3
    check = verify_critical_temperature(
        "coordination", 0.25, offset=0.05, perturbation=0.01, t_end=300.0
    )
    below = check["below"]["final_distance"]
    above = check["above"]["final_distance"]
    ok_traj = check["below_diverges"] and check["above_converges"] and above < 1e-3 and below > 0.3
    report(
        "A1",
        ok_value and ok_traj,
        f"T_c={result.value:.8f} (bracket width {result.bracket[1] - result.bracket[0]:.1e}); "
        f"perturbed run at T=0.2 ends {below:.3f} from interior, at T=0.3 ends {above:.2e} away",
    )


def test_a2_rps_critical_temperatures():
    positive = critical_temperature("rps", (0.0, 1.0), tol=1e-6, epsilon=0.6)
    negative = critical_temperature("rps", (0.0, 1.0), tol=1e-6, epsilon=-0.6)
    ok = abs(positive.value - 0.05) <= 1e-3 and abs(negative.value - 0.10) <= 1e-3
    report(
        "A2",
        ok,
        f"epsilon=0.6 -> T_c={positive.value:.8f} (want 0.05); "
        f"epsilon=-0.6 -> T_c={negative.value:.8f} (want 0.10)",
    )


def test_a3_jacobian_fidelity():
    # displayed interior matrices, entrywise
    worst_display = 0.0
    for temperature in (0.0, 0.1, 0.25, 0.8):
        jac = coordination_jacobian_interior(temperature)
        expected = np.full((3, 3), -0.25)
        np.fill_diagonal(expected, -temperature)
        worst_display = max(worst_display, float(np.max(np.abs(jac - expected))))
    for temperature, epsilon in ((0.1, 0.6), (0.3, -0.8), (0.0, 0.2)):
        jac = rps_jacobian_interior(temperature, epsilon)
        expected = np.full((3, 3), -epsilon / 12.0)
        np.fill_diagonal(expected, -temperature)
        worst_display = max(worst_display, float(np.max(np.abs(jac - expected))))

    # analytic vs finite-difference agreement at 100 random draws
    rng = np.random.default_rng(314)
    worst_fd = 0.0
    for _ in range(50):  # at the interior point, random temperatures/epsilons
        temperature = float(rng.uniform(0.0, 1.0))
        epsilon = float(rng.uniform(-0.9, 0.9))
        center = interior_link_state()
        fd = numeric_jacobian(coordination_link_field(temperature), center)
        worst_fd = max(worst_fd, float(np.max(np.abs(fd - coordination_jacobian_interior(temperature)))))
        fd = numeric_jacobian(rps_link_field(temperature, epsilon), center)
        worst_fd = max(worst_fd, float(np.max(np.abs(fd - rps_jacobian_interior(temperature, epsilon)))))
    for _ in range(50):  # at random interior states, against the general forms
        state = rng.uniform(0.05, 0.95, 3)
        temperature = float(rng.uniform(0.0, 1.0))
        epsilon = float(rng.uniform(-0.9, 0.9))
        fd = numeric_jacobian(coordination_link_field(temperature), state)
        worst_fd = max(worst_fd, float(np.max(np.abs(fd - coordination_link_jacobian(state, temperature)))))
        fd = numeric_jacobian(rps_link_field(temperature, epsilon), state)
        worst_fd = max(worst_fd, float(np.max(np.abs(fd - rps_link_jacobian(state, temperature, epsilon)))))

    ok = worst_display == 0.0 and worst_fd < 1e-5
    report(
        "A3",
        ok,
        f"displayed-matrix mismatch {worst_display:.1e}; "
        f"worst analytic-vs-FD deviation over 100 draws {worst_fd:.2e} (tol 1e-5)",
    )


def test_a4_simplex_conservation_along_long_trajectory():
    game = build_coordination_game(3)
    rng = np.random.default_rng(404)
    links = np.zeros((3, 3))
    links[~np.eye(3, dtype=bool)] = np.concatenate([rng.dirichlet(np.ones(2)) for _ in range(3)])
    actions = np.vstack([rng.dirichlet(np.ones(2)) for _ in range(3)])
    y0 = factored_pack(FactoredState(links, actions))
    groups = factored_simplex_groups(3, 2)
    trajectory = integrate(
        factored_field(game, 0.5),
        y0,
        IntegratorConfig(dt=0.01, t_end=1000.0, record_every=100),  # 10^5 steps
        project=make_simplex_projector(groups),
    )
    worst = 0.0
    for row in trajectory.states:
        for idx in groups:
            worst = max(worst, abs(float(row[idx].sum()) - 1.0))
    ok = worst < 1e-9
    report(
        "A4",
        ok,
        f"10^5 rk4 steps (dt=0.01): worst per-agent simplex drift {worst:.2e} (tol 1e-9) "
        f"over {len(trajectory.times)} checkpoints",
    )


def test_a5_specialization_oracle():
    rng = np.random.default_rng(505)
    coordination = build_coordination_game(3)
    rps = build_rps_game(3, RpsParams(-0.4))
    worst_coordination = 0.0
    worst_rps = 0.0
    for trial in range(1000):
        c3 = rng.uniform(0.0, 1.0, 3)
        temperature = 0.0 if trial % 4 == 0 else float(rng.uniform(0.0, 1.0))

        from coevo.dynamics import factored_rhs

        state = pinned_factored_state(c3, (1.0, 0.0))
        d_links, _ = factored_rhs(state, coordination, temperature)
        reduced = np.array([d_links[0, 1], d_links[1, 2], d_links[2, 0]])
        expected = link_rhs_coordination(LinkState3.from_array(c3), temperature)
        worst_coordination = max(worst_coordination, float(np.max(np.abs(reduced - expected))))

        state = pinned_factored_state(c3, (1 / 3, 1 / 3, 1 / 3))
        d_links, _ = factored_rhs(state, rps, temperature)
        reduced = np.array([d_links[0, 1], d_links[1, 2], d_links[2, 0]])
        expected = link_rhs_rps(LinkState3.from_array(c3), temperature, -0.4)
        worst_rps = max(worst_rps, float(np.max(np.abs(reduced - expected))))

    ok = worst_coordination < 1e-12 and worst_rps < 1e-12
    report(
        "A5",
        ok,
        f"factored-vs-reduced link derivatives over 1000 random states: "
        f"coordination {worst_coordination:.2e}, rps {worst_rps:.2e} (tol 1e-12)",
    )


def test_a6_figure_style_temperature_regimes():
    rng = np.random.default_rng(606)

    # below threshold: random interior starts settle onto boundary-pattern
    # rest points (one link saturated high, another low, up to relabeling)
    fieldfn = coordination_link_field(0.1)
    config = IntegratorConfig(dt=0.02, t_end=250.0, record_every=10**9)
    worst_rest_distance = 0.0
    worst_family_distance = 0.0
    for _ in range(6):
        y0 = rng.uniform(0.05, 0.95, 3)
        final = integrate(fieldfn, y0, config, project=clamp_unit_interval).final
        search = find_rest_points(fieldfn, [final], tol=1e-10)
        assert search.points, "terminal state did not polish to a rest point"
        rest = search.points[0]
        worst_rest_distance = max(worst_rest_distance, float(np.max(np.abs(final - rest.state))))
        assert rest.classification == "stable"
        # boundary pattern, not the interior point
        assert rest.state.max() > 0.95 and rest.state.min() < 0.05
        # distance to the exact zero-temperature families (info: offsets by
        # about exp(-1/(2T)) are intrinsic at positive temperature)
        c = rest.state
        families = [
            max(abs(c[0] - 1.0), c[1]), max(abs(c[1] - 1.0), c[2]), max(abs(c[2] - 1.0), c[0]),
            max(abs(c[0] - 1.0), c[2]), max(abs(c[1] - 1.0), c[0]), max(abs(c[2] - 1.0), c[1]),
        ]
        worst_family_distance = max(worst_family_distance, min(families))
    ok_low = worst_rest_distance < 1e-3

    # above threshold: the interior point attracts
    fieldfn = coordination_link_field(0.5)
    config = IntegratorConfig(dt=0.02, t_end=100.0, record_every=10**9)
    worst_interior = 0.0
    for _ in range(4):
        y0 = rng.uniform(0.05, 0.95, 3)
        final = integrate(fieldfn, y0, config, project=clamp_unit_interval).final
        worst_interior = max(worst_interior, float(np.max(np.abs(final - 0.5))))
    ok_high = worst_interior < 1e-4

    report(
        "A6",
        ok_low and ok_high,
        f"T=0.1: terminals within {worst_rest_distance:.2e} of boundary-pattern rest points "
        f"(tol 1e-3; offset from exact T=0 families {worst_family_distance:.4f}); "
        f"T=0.5: terminals within {worst_interior:.2e} of (0.5,0.5,0.5) (tol 1e-4)",
    )


def test_a7_learning_tracks_replicator_flow():
    game = build_coordination_game(3)
    temperature = 0.5
    rng = np.random.default_rng(707)
    q0 = QTable(0.5 * rng.standard_normal((3, 3, 2)))
    tau_end = 6.0
    start = joint_pack(boltzmann_policy(q0, PolicyParams(temperature)))
    ode = integrate(
        full_field(game, temperature),
        start,
        IntegratorConfig(dt=0.005, t_end=tau_end, record_every=10),
        project=make_simplex_projector(joint_simplex_groups(3, 2)),
        columns=joint_columns(3, 2),
    )
    deviations = {}
    for alpha in (0.02, 0.01):
        rounds = int(round(tau_end * temperature / alpha))
        params = LearningParams(alpha=alpha, policy=PolicyParams(temperature), rounds=rounds)
        deviations[alpha] = compare_to_ode(run_learning(q0, game, params), ode).max_deviation
    ratio = deviations[0.01] / deviations[0.02]
    ok_ratio = 0.3 <= ratio <= 0.7 and deviations[0.01] < deviations[0.02]

    # sampled mode: reciprocation-gated reward estimates are unbiased
    policies = random_joint_state(np.random.default_rng(708))
    exact = expected_reward(game, policies).values
    sums = np.zeros((3, 3, 2))
    counts = np.zeros((3, 3, 2), dtype=int)
    for seed in range(60):
        s, c = _sample_batch(policies, game, 400, np.random.default_rng(9000 + seed))
        sums += s
        counts += c
    mask = counts > 200
    mean = sums[mask] / counts[mask]
    variance = np.maximum(mean - mean**2, 1e-12)  # payoffs are Bernoulli here
    stderr = np.sqrt(variance / counts[mask])
    worst_sigmas = float(np.max(np.abs(mean - exact[mask]) / stderr))
    ok_unbiased = worst_sigmas < 4.0

    report(
        "A7",
        ok_ratio and ok_unbiased,
        f"max deviation alpha=0.02: {deviations[0.02]:.2e}, alpha=0.01: {deviations[0.01]:.2e}, "
        f"ratio {ratio:.3f} (want [0.3, 0.7]); sampled-reward worst offset {worst_sigmas:.2f} "
        f"standard errors (want < 4)",
    )


def test_a8_rps_boundary_rest_points():
    fieldfn = rps_link_field(0.0, -0.5)
    axis = [0.0, 0.5, 1.0]
    seeds = [np.array([a, b, c]) for a in axis for b in axis for c in axis]
    search = find_rest_points(fieldfn, seeds, tol=1e-10)
    ones = [p for p in search.points if np.max(np.abs(p.state - 1.0)) < 1e-10]
    zeros = [p for p in search.points if np.max(np.abs(p.state)) < 1e-10]
    ok_found = (
        len(ones) == 1
        and len(zeros) == 1
        and ones[0].residual < 1e-10
        and zeros[0].residual < 1e-10
    )

    config = IntegratorConfig(dt=0.02, t_end=200.0, record_every=10**9)
    rng = np.random.default_rng(808)
    worst = 0.0
    for _ in range(6):
        y0 = rng.uniform(0.05, 0.95, 3)
        final = integrate(fieldfn, y0, config, project=clamp_unit_interval).final
        distance = min(float(np.max(np.abs(final - 1.0))), float(np.max(np.abs(final))))
        worst = max(worst, distance)
    ok_converge = worst < 1e-3
    report(
        "A8",
        ok_found and ok_converge,
        f"directed triangles found with residuals {ones[0].residual:.1e} and {zeros[0].residual:.1e} "
        f"(tol 1e-10); worst trajectory distance to a triangle {worst:.2e} (tol 1e-3)",
    )


def test_a9_cli_determinism(tmp_path):
    run_payload = {
        "game": "coordination",
        "system": "link-only",
        "temperature": 0.2,
        "initial_state": "random(9)",
        "integrator": {"dt": 0.01, "t_end": 20.0, "record_every": 50},
    }
    config = parse_config(json.dumps(run_payload))
    cmd_run(config, tmp_path / "run_a")
    cmd_run(config, tmp_path / "run_b")
    same_run = all(
        (tmp_path / "run_a" / name).read_bytes() == (tmp_path / "run_b" / name).read_bytes()
        for name in ("trajectory.csv", "metadata.json")
    )
    manifests = []
    for sub in ("run_a", "run_b"):
        manifest = json.loads((tmp_path / sub / "manifest.json").read_text())
        manifest.pop("started_at")
        manifest.pop("finished_at")
        manifests.append(manifest)
    same_manifest = manifests[0] == manifests[1]

    analyze_payload = {"game": "rps", "epsilon": 0.6, "system": "link-only", "temperature": 0.2}
    config = parse_config(json.dumps(analyze_payload))
    cmd_analyze(config, tmp_path / "an_a", critical_temp=True)
    cmd_analyze(config, tmp_path / "an_b", critical_temp=True)
    same_analyze = all(
        (tmp_path / "an_a" / name).read_bytes() == (tmp_path / "an_b" / name).read_bytes()
        for name in ("rest_points.json", "critical_temperature.json")
    )

    sweep_config = parse_config(json.dumps(run_payload))
    cmd_sweep(sweep_config, [0.1, 0.5], out_dir=tmp_path / "sw_a", jobs=2)
    cmd_sweep(sweep_config, [0.1, 0.5], out_dir=tmp_path / "sw_b", jobs=2)
    same_sweep = (tmp_path / "sw_a" / "summary.csv").read_bytes() == (
        tmp_path / "sw_b" / "summary.csv"
    ).read_bytes()

    ok = same_run and same_manifest and same_analyze and same_sweep
    report(
        "A9",
        ok,
        f"byte-identical reruns: run files {same_run}, manifests (minus wall times) {same_manifest}, "
        f"analyze files {same_analyze}, sweep summary {same_sweep}",
    )
