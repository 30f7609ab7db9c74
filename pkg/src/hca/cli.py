"""Scenario runner: ``hca run <scenario.json>`` and ``hca suite``.

A scenario is one JSON document.  Integers travel as decimal strings so
no JSON parser can round them.  Every run writes ``report.json`` plus the
command's CSV series into the output directory and exits with

    0  all checks passed
    1  configuration error
    2  numerical failure (no convergence, overflow into the float layer)
    3  a check detected an invariant violation
"""

from __future__ import annotations

import argparse
import json
import random
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bandlimit import (mod_schrodinger_residual, reconstruct_many, residual_tail_bound,
                        wave_from_trajectory)
from .conservation import (admissible_unitary_check, check_theorem_a, enumerate_admissible_unitaries,
                           generate_commutant, leibniz_identity_check)
from .dynamics import (CaState, Lapse, Trajectory, evolve, evolve_backward, read_trajectory_csv,
                       satisfies_equations_of_motion, stationarity_report, variables, vary_action,
                       write_trajectory_csv)
from .ensemble import random_pair, random_spec
from .errors import (ConfigError, HcaError, NoConvergence, OutOfValidatedRange, PrecisionLoss,
                     StabilityViolated, UnstableSpectrum)
from .exact import build_hamiltonian, format_exact, int_vector, parse_exact, parse_int
from .spectral import convergence_order, eigensolve_hermitian, propagate_compare

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VIOLATION = 0, 1, 2, 3
NUMERIC_ERRORS = (NoConvergence, PrecisionLoss, UnstableSpectrum, StabilityViolated, OutOfValidatedRange)
COMMANDS = ("evolve", "conserve", "action-check", "reconstruct", "spectrum", "compare", "admissible")

GRID_TOL = 1e-12
EIGEN_TOL = 1e-10
DISPERSION_TOL = 1e-12
ORDER_WINDOW = (1.8, 2.2)


@dataclass
class RunReport:
    """Outcome of one run.

    ``verdicts`` maps check names to ``{"passed": bool | None, "value": ...}``;
    ``passed`` is ``None`` for purely informational entries.  Wall time is
    kept out of the JSON so that repeated runs produce identical files.
    """

    command: str
    scenario: dict
    verdicts: dict = field(default_factory=dict)
    artifacts: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    exit_code: int = EXIT_OK
    wall_time: float = 0.0

    def add(self, name: str, passed, value=None, **extra):
        if name in self.verdicts:
            raise ValueError(f"check {name!r} reported twice")
        self.verdicts[name] = {"passed": passed, "value": value, **extra}

    @property
    def failed(self) -> list[str]:
        return [k for k, v in self.verdicts.items() if v["passed"] is False]

    def to_json(self) -> dict:
        return {"command": self.command, "scenario": self.scenario, "verdicts": self.verdicts,
                "artifacts": self.artifacts, "notes": self.notes, "exit_code": self.exit_code}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"


# -- scenario parsing -------------------------------------------------------


def _need(cfg: dict, key: str):
    if key not in cfg:
        raise ConfigError(f"scenario field {key!r} is required for command {cfg.get('command')!r}")
    return cfg[key]


def _int(value, name: str) -> int:
    try:
        return parse_int(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}") from None


def _real(value, name: str) -> float:
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a real number, got {value!r}") from None
    if not np.isfinite(out):
        raise ConfigError(f"{name} must be finite")
    return out


def _complex_vector(values, name: str) -> np.ndarray:
    if not isinstance(values, list) or not values:
        raise ConfigError(f"{name} must be a nonempty list")
    out = []
    for v in values:
        if isinstance(v, list):
            if len(v) != 2:
                raise ConfigError(f"{name}: complex entries are [re, im] pairs")
            out.append(complex(_real(v[0], name), _real(v[1], name)))
        else:
            out.append(complex(_real(v, name), 0.0))
    return np.array(out)


def _hamiltonian(cfg: dict):
    ham = _need(cfg, "hamiltonian")
    if not isinstance(ham, dict) or "S" not in ham:
        raise ConfigError("hamiltonian needs an 'S' matrix")
    S = ham["S"]
    A = ham.get("A") or [["0"] * len(S) for _ in S]
    return build_hamiltonian(S, A)


def _lapse(cfg: dict) -> Lapse:
    c = _int(cfg.get("lapse", "2"), "lapse")
    if c == 0:
        raise ConfigError("lapse must be nonzero")
    return Lapse(c)


def _initial_pair(cfg: dict, dim: int) -> tuple[CaState, CaState]:
    init = _need(cfg, "initial")
    try:
        vecs = {k: int_vector(init[k]) for k in ("x0", "p0", "x1", "p1")}
    except KeyError as exc:
        raise ConfigError(f"initial is missing {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"initial: {exc}") from None
    if any(len(v) != dim for v in vecs.values()):
        raise ConfigError(f"initial vectors must have length {dim}")
    tau = [_int(init.get(f"tau{k}", "0"), f"tau{k}") for k in (0, 1)]
    pi = [parse_exact(str(init.get(f"pi{k}", "0"))) for k in (0, 1)]
    return (CaState(0, vecs["x0"], vecs["p0"], tau[0], pi[0]),
            CaState(1, vecs["x1"], vecs["p1"], tau[1], pi[1]))


def _trajectory(cfg: dict, base: Path) -> Trajectory:
    """Either a stored trajectory CSV or a fresh evolution of ``initial``."""
    spec, lapse = _hamiltonian(cfg), _lapse(cfg)
    if "trajectory" in cfg:
        path = Path(cfg["trajectory"])
        if not path.is_absolute():
            path = base / path
        try:
            return read_trajectory_csv(path, spec, lapse)
        except OSError as exc:
            raise ConfigError(f"cannot read trajectory: {exc}") from None
    steps = _int(_need(cfg, "steps"), "steps")
    if steps < 0:
        raise ConfigError("steps must be >= 0")
    return evolve(_initial_pair(cfg, spec.dim), spec, lapse, steps)


def _period(traj: Trajectory) -> int | None:
    """Smallest ``P`` with the first two slices recurring ``P`` steps later."""
    first, second = traj.states[0], traj.states[1]
    for k in range(1, len(traj) - 1):
        a, b = traj.states[k], traj.states[k + 1]
        if (a.x, a.p, b.x, b.p) == (first.x, first.p, second.x, second.p):
            return k
    return None


# -- commands ---------------------------------------------------------------


def _cmd_evolve(cfg, report, out, base):
    traj = _trajectory(cfg, base)
    path = out / "trajectory.csv"
    write_trajectory_csv(traj, path)
    report.artifacts.append(path.name)
    bad = satisfies_equations_of_motion(traj)
    report.add("equations_of_motion", not bad, len(bad), steps=bad)
    peak = max(abs(v) for s in traj.states for v in s.x + s.p)
    period = _period(traj)
    report.add("states", None, len(traj))
    report.add("max_abs_entry", None, str(peak))
    report.add("period", None, period)
    if period is not None:
        report.notes.append(f"bounded trajectory: the state recurs with period {period}")
    else:
        report.notes.append("no recurrence inside the window")


def _cmd_conserve(cfg, report, out, base):
    traj = _trajectory(cfg, base)
    bad = satisfies_equations_of_motion(traj)
    report.add("equations_of_motion", not bad, len(bad), steps=bad)
    degree = _int(cfg.get("degree", "2"), "degree")
    family = generate_commutant(traj.spec, degree)
    for label, g in family.labelled().items():
        res = check_theorem_a(traj, g, label)
        path = out / f"conserved_{label.replace('^', '')}.json"
        path.write_text(res.dumps() + "\n")
        report.artifacts.append(path.name)
        report.add(f"Q_{label}", res.conserved, format_exact(res.max_violation),
                   violating_steps=res.violating_steps)
        for n in res.violating_steps:
            report.notes.append(f"Q_{label} jumps between steps {n - 1} and {n}")


def _cmd_action_check(cfg, report, out, base):
    traj = _trajectory(cfg, base)
    rep_xp = stationarity_report(traj, "xp")
    rep_psi = stationarity_report(traj, "psi")
    for form, rep in (("xp", rep_xp), ("psi", rep_psi)):
        report.add(f"stationary_{form}", rep.stationary, len(rep.flagged),
                   flagged=[[n, v, format_exact(d)] for n, v, d in rep.flagged])
    same = rep_xp.flagged == rep_psi.flagged
    report.add("forms_agree", same, None)
    if rep_xp.sites:
        report.notes.append(f"action is not stationary at steps {sorted(rep_xp.sites)}")


def _cmd_reconstruct(cfg, report, out, base):
    traj = _trajectory(cfg, base)
    l = _real(cfg.get("l", 1.0), "l")
    margin = _int(cfg.get("margin", "64"), "margin")
    queries = _int(cfg.get("queries", "100"), "queries")
    wave = wave_from_trajectory(traj, l)
    h = traj.spec.to_complex()
    c = traj.lapse.default
    lo, hi = wave.n0 + margin, wave.n1 - margin
    if lo >= hi:
        raise ConfigError(f"window of {len(traj)} samples is too short for margin {margin}")
    path = out / "samples.csv"
    wave.write_csv(path)
    report.artifacts.append(path.name)

    inner = np.arange(lo, hi + 1)
    grid = reconstruct_many(wave, inner * l)
    grid_err = float(np.abs(grid - wave.samples[inner - wave.n0]).max())
    report.add("grid_fidelity", grid_err <= GRID_TOL, grid_err, tolerance=GRID_TOL)

    rng = np.random.default_rng(_int(cfg.get("seed", "0"), "seed"))
    ts = np.sort(rng.uniform(lo * l, hi * l, queries))
    residuals = [mod_schrodinger_residual(wave, h, t, c, margin) for t in ts]
    bounds = [residual_tail_bound(wave, h, t, c) for t in ts]
    if "tolerance" in cfg:
        tol = _real(cfg["tolerance"], "tolerance")
        within = max(residuals) <= tol
    else:
        tol = "tail-bound"
        within = all(r <= b for r, b in zip(residuals, bounds))
    report.add("residual", within, max(residuals), tolerance=tol, tail_bound=max(bounds))

    values = reconstruct_many(wave, ts)
    path = out / "reconstruction.csv"
    with open(path, "w") as fh:
        cols = [f"{part}_{a}" for a in range(wave.dim) for part in ("re", "im")]
        fh.write(",".join(["t", *cols, "residual", "tail_bound"]) + "\n")
        for t, v, r, b in zip(ts, values, residuals, bounds):
            row = [t, *[x for z in v for x in (z.real, z.imag)], r, b]
            fh.write(",".join(repr(float(x)) for x in row) + "\n")
    report.artifacts.append(path.name)


def _cmd_spectrum(cfg, report, out, base):
    spec, lapse = _hamiltonian(cfg), _lapse(cfg)
    l = _real(cfg.get("l", 1.0), "l")
    h = spec.to_complex()
    data = eigensolve_hermitian(h, l, lapse.default)
    path = out / "spectrum.json"
    path.write_text(data.dumps() + "\n")
    report.artifacts.append(path.name)
    scale = max(1.0, float(np.linalg.norm(h)))
    v = data.vectors
    resid = float(np.abs(h @ v - v * data.eps).max()) / scale
    ortho = float(np.abs(v.conj().T @ v - np.eye(spec.dim)).max())
    report.add("eigen_residual", resid <= EIGEN_TOL, resid, tolerance=EIGEN_TOL)
    report.add("orthonormality", ortho <= EIGEN_TOL, ortho, tolerance=EIGEN_TOL)
    s = data.stable
    disp = float(np.abs(np.sin(data.E[s] * l) - data.scaled[s]).max()) if s.any() else 0.0
    report.add("dispersion", disp <= DISPERSION_TOL, disp, tolerance=DISPERSION_TOL)
    report.add("stable_modes", None, int(s.sum()))
    if not s.all():
        report.notes.append(f"{int((~s).sum())} modes lie outside the band |c eps / 2| <= 1")
    if data.marginal.any():
        report.notes.append("band-edge modes present: the recurrence is not diagonalizable there")


def _cmd_compare(cfg, report, out, base):
    spec = _hamiltonian(cfg)
    h_phys = spec.to_complex() * _real(cfg.get("h_scale", 1.0), "h_scale")
    psi0 = _complex_vector(_need(cfg, "psi0"), "psi0")
    if psi0.size != spec.dim:
        raise ConfigError(f"psi0 must have length {spec.dim}")
    l = _real(_need(cfg, "l"), "l")
    T = _real(cfg.get("T", 10.0), "T")
    samples = _int(cfg.get("samples", "401"), "samples")
    result = propagate_compare(h_phys, psi0, l, T, samples)
    path = out / "propagation.csv"
    result.write_csv(path)
    report.artifacts.append(path.name)
    if "tolerance" in cfg:
        tol = _real(cfg["tolerance"], "tolerance")
        report.add("sup_error", result.sup_error <= tol, result.sup_error, tolerance=tol)
    else:
        report.add("sup_error", None, result.sup_error)
    if "l_list" in cfg:
        l_list = [_real(v, "l_list") for v in cfg["l_list"]]
        order = convergence_order(h_phys, psi0, l_list, T, samples)
        lo, hi = ORDER_WINDOW
        report.add("convergence_order", lo <= order <= hi, order, window=list(ORDER_WINDOW))


def _cmd_admissible(cfg, report, out, base):
    spec = _hamiltonian(cfg)
    found = enumerate_admissible_unitaries(spec)
    verdicts = [admissible_unitary_check(u, spec) for u in found]
    family = generate_commutant(spec, _int(cfg.get("degree", "2"), "degree"))
    path = out / "admissible.json"
    path.write_text(json.dumps({"unitaries": [u.to_literal() for u in found],
                                "commutant": list(family.labels)}, indent=2) + "\n")
    report.artifacts.append(path.name)
    report.add("enumerated_admissible", all(v.admissible for v in verdicts), len(found))
    report.add("conserved_family", bool(family.members), list(family.labels))


HANDLERS = {"evolve": _cmd_evolve, "conserve": _cmd_conserve, "action-check": _cmd_action_check,
            "reconstruct": _cmd_reconstruct, "spectrum": _cmd_spectrum, "compare": _cmd_compare,
            "admissible": _cmd_admissible}


def load_scenario(path) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read scenario: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"scenario is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("scenario must be a JSON object")
    if cfg.get("command") not in COMMANDS:
        raise ConfigError(f"command must be one of {', '.join(COMMANDS)}")
    return cfg


def run(scenario_path, output_dir=None, seed=None, log=sys.stderr) -> RunReport:
    """Execute one scenario; the exit code is stored on the returned report."""
    start = time.perf_counter()
    try:
        cfg = load_scenario(scenario_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=log)
        return RunReport("?", {}, exit_code=EXIT_CONFIG)
    if seed is not None:
        cfg["seed"] = str(seed)
    out = Path(output_dir or cfg.get("output_dir") or "hca_out")
    report = RunReport(cfg["command"], cfg)
    try:
        out.mkdir(parents=True, exist_ok=True)
        HANDLERS[cfg["command"]](cfg, report, out, Path(scenario_path).parent)
        report.exit_code = EXIT_VIOLATION if report.failed else EXIT_OK
        for name in report.failed:
            print(f"violation: {name} = {report.verdicts[name]['value']}", file=log)
    except NUMERIC_ERRORS as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=log)
        report.exit_code = EXIT_NUMERIC
        report.notes.append(f"{type(exc).__name__}: {exc}")
    except (HcaError, ValueError, TypeError, KeyError, OSError) as exc:
        print(f"config error: {type(exc).__name__}: {exc}", file=log)
        report.exit_code = EXIT_CONFIG
        report.notes.append(f"{type(exc).__name__}: {exc}")
    report.wall_time = time.perf_counter() - start
    if out.is_dir():
        (out / "report.json").write_text(report.dumps())
    return report


# -- randomized suite -------------------------------------------------------

SUITE_CHECKS = ("reversibility", "stationarity", "theorem_a", "leibniz", "action_equivalence")


def _tamper(traj: Trajectory, k: int) -> Trajectory:
    states = list(traj.states)
    s = states[k]
    states[k] = CaState(s.n, (s.x[0] + 1,) + s.x[1:], s.p, s.tau, s.pi)
    return Trajectory(traj.spec, traj.lapse, tuple(states))


def _suite_trial(rng: random.Random, dim: int, entry_bound: int, steps: int, degree: int) -> dict:
    spec = random_spec(rng, dim, entry_bound)
    pair = random_pair(rng, dim, entry_bound)
    lapse = Lapse(rng.choice((1, 2)))
    traj = evolve(pair, spec, lapse, steps)
    back = evolve_backward((traj.states[-2], traj.states[-1]), spec, lapse, steps)
    results = {"reversibility": back.states == traj.states,
               "stationarity": stationarity_report(traj, "xp").stationary}
    family = generate_commutant(spec, degree)
    results["theorem_a"] = all(check_theorem_a(traj, g, lab).conserved
                               for lab, g in family.labelled().items())
    o = [rng.randint(-entry_bound, entry_bound) for _ in range(16)]
    o2 = [rng.randint(-entry_bound, entry_bound) for _ in range(16)]
    xs = [s.x[0] for s in traj.states]
    ps = [s.p[0] for s in traj.states]
    results["leibniz"] = leibniz_identity_check(o, o2) and leibniz_identity_check(xs, ps)
    # a broken trajectory has nonzero variations; both action forms must see the same ones
    site = rng.randint(1, len(traj) - 2)
    bad = _tamper(traj, site)
    agree = True
    for k in range(1, len(bad) - 1):
        n = bad.states[k].n
        for var in variables(dim):
            if vary_action(bad, n, var, 1, "xp") != vary_action(bad, n, var, 1, "psi"):
                agree = False
    results["action_equivalence"] = agree and not stationarity_report(bad, "xp").stationary
    return results


def randomized_suite(seed: int, trials: int, dims, entry_bound: int, steps: int = 24,
                     degree: int = 2) -> RunReport:
    """Deterministic batch of exact checks over random specs and initial pairs."""
    dims = [int(d) for d in dims]
    if trials < 1 or not dims or entry_bound < 1 or steps < 2 or any(d < 1 for d in dims):
        raise ConfigError("need trials >= 1, nonempty positive dims, entry_bound >= 1, steps >= 2")
    scenario = {"seed": str(seed), "trials": trials, "dims": dims, "entry_bound": entry_bound,
                "steps": steps, "degree": degree}
    report = RunReport("suite", scenario)
    rng = random.Random(seed)
    failures = {name: [] for name in SUITE_CHECKS}
    for t in range(trials):
        dim = dims[t % len(dims)]
        try:
            results = _suite_trial(rng, dim, entry_bound, steps, degree)
        except HcaError as exc:
            results = dict.fromkeys(SUITE_CHECKS, False)
            report.notes.append(f"trial {t}: {type(exc).__name__}: {exc}")
        for name, ok in results.items():
            if not ok:
                failures[name].append(t)
    for name in SUITE_CHECKS:
        report.add(name, not failures[name], {"pass": trials - len(failures[name]),
                                              "fail": len(failures[name])},
                   failed_trials=failures[name])
    report.exit_code = EXIT_VIOLATION if report.failed else EXIT_OK
    return report


# -- entry point ------------------------------------------------------------


def _dims(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"dims must be a comma-separated list of integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hca", description="Integer Hamiltonian cellular automaton lab")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p_run = sub.add_parser("run", help="execute a scenario file")
    p_run.add_argument("scenario", help="path to the scenario JSON")
    p_run.add_argument("--output-dir", default=None, help="overrides the scenario's output_dir")
    p_run.add_argument("--seed", type=int, default=None, help="overrides the scenario's seed")

    p_suite = sub.add_parser("suite", help="randomized exact checks")
    p_suite.add_argument("--trials", type=int, default=100)
    p_suite.add_argument("--dims", type=_dims, default=[1, 2, 3, 4], help="e.g. 1,2,3,4")
    p_suite.add_argument("--seed", type=int, default=42)
    p_suite.add_argument("--entry-bound", type=int, default=3)
    p_suite.add_argument("--steps", type=int, default=24)
    p_suite.add_argument("--degree", type=int, default=2)
    p_suite.add_argument("--output-dir", default=None, help="also write report.json here")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.cmd == "run":
        report = run(args.scenario, args.output_dir, args.seed)
        print(report.dumps(), end="")
        print(f"wall time {report.wall_time:.3f}s", file=sys.stderr)
        return report.exit_code

    start = time.perf_counter()
    try:
        report = randomized_suite(args.seed, args.trials, args.dims, args.entry_bound,
                                  args.steps, args.degree)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report.wall_time = time.perf_counter() - start
    text = report.dumps()
    if args.output_dir:
        out = Path(args.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(text)
    print(text, end="")
    for name in report.failed:
        print(f"violation: {name} failed in trials {report.verdicts[name]['failed_trials']}",
              file=sys.stderr)
    print(f"wall time {report.wall_time:.3f}s", file=sys.stderr)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
