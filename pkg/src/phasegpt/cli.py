"""Batch command-line interface: run scenarios, verify property suites, print tables and curves."""
from __future__ import annotations

import argparse
import json
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import chaos, dynamics, spekkens, verify
from .grid import PhaseGrid, field_to_csv, from_function, read_field_csv
from .kernels import Kernel, KernelConfigError
from .states import StateSpec, build_state
from .transforms import Hamiltonian, associator

OUT_ENV = "PHASEGPT_OUT"
KINDS = ("evolution", "spekkens_classification", "associator")


class ConfigError(ValueError):
    """Scenario validation failure; the message starts with the field path."""


# -- scenario parsing ---------------------------------------------------------------

def _require(cfg: dict, key: str, path: str, types=None):
    if key not in cfg:
        raise ConfigError(f"{path}{key}: missing")
    val = cfg[key]
    if types is not None and (not isinstance(val, types) or isinstance(val, bool) and bool not in types):
        raise ConfigError(f"{path}{key}: expected {'/'.join(t.__name__ for t in types)}, got {val!r}")
    return val


def parse_grid(cfg, path: str = "grid") -> PhaseGrid:
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: expected an object")
    try:
        if "half_width" in cfg:
            n = _require(cfg, "n", path + ".", (int,))
            hw = _require(cfg, "half_width", path + ".", (int, float))
            return PhaseGrid.square(n, float(hw))
        keys = ("n_q", "n_p", "q_min", "q_max", "p_min", "p_max")
        vals = [_require(cfg, key, path + ".", (int,) if key.startswith("n_") else (int, float)) for key in keys]
        return PhaseGrid(*vals)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def parse_kernel(cfg) -> Kernel:
    try:
        return Kernel.from_config(cfg, "kernel")
    except KernelConfigError as exc:
        raise ConfigError(str(exc)) from None


def parse_state(cfg, path: str) -> StateSpec:
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: expected an object")
    try:
        return StateSpec.from_dict(cfg)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def parse_hamiltonian(cfg, grid: PhaseGrid, base: Path) -> Hamiltonian:
    path = "hamiltonian"
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: expected an object")
    kind = _require(cfg, "type", path + ".", (str,))
    if kind == "harmonic":
        return Hamiltonian.harmonic(grid, float(_require(cfg, "stiffness", path + ".", (int, float))))
    if kind == "kinetic":
        mass = float(cfg.get("mass", 1.0))
        potential = None
        if "cos_q" in cfg or "cos_p" in cfg:
            a, b = float(cfg.get("cos_q", 0.0)), float(cfg.get("cos_p", 0.0))
            potential = from_function(grid, lambda q, p: a * np.cos(q) + b * np.cos(p))
        return Hamiltonian.kinetic(grid, mass, potential)
    if kind == "field_csv":
        file = base / _require(cfg, "file", path + ".", (str,))
        if not file.exists():
            raise ConfigError(f"{path}.file: {file} does not exist")
        field = read_field_csv(file, "hamiltonian")
        if field.grid != grid:
            raise ConfigError(f"{path}.file: field grid does not match the scenario grid")
        return Hamiltonian(grid, periodic=field)
    raise ConfigError(f"{path}.type: unknown Hamiltonian type {kind!r}")


def parse_run(cfg) -> dynamics.EvolutionRun:
    path = "run."
    if not isinstance(cfg, dict):
        raise ConfigError("run: expected an object")
    steps = _require(cfg, "steps", path, (int,))
    if steps < 1:
        raise ConfigError("run.steps: must be >= 1")
    if "dt" in cfg:
        dt = float(_require(cfg, "dt", path, (int, float)))
    else:
        dt = float(_require(cfg, "t_final", path, (int, float))) / steps
    if not dt > 0:
        raise ConfigError("run.dt: must be positive")
    stride = cfg.get("stride", steps)
    if not isinstance(stride, int) or stride < 1:
        raise ConfigError("run.stride: must be a positive integer")
    monitors = tuple(cfg.get("monitors", ["norm"]))
    for i, m in enumerate(monitors):
        if m not in ("norm", "inner", "energy", "state_volume"):
            raise ConfigError(f"run.monitors[{i}]: unknown monitor {m!r}")
    return dynamics.EvolutionRun(dt, steps, stride, monitors, cfl=float(cfg.get("cfl", 0.5)))


def load_scenario(ref: str) -> tuple[dict, Path]:
    """Read a scenario file, or a bundled scenario by name."""
    path = Path(ref)
    if path.exists():
        return json.loads(path.read_text()), path.parent
    bundled = resources.files("phasegpt") / "scenarios" / f"{ref}.json"
    if bundled.is_file():
        return json.loads(bundled.read_text()), Path(".")
    raise ConfigError(f"scenario {ref!r}: no such file or bundled scenario")


def bundled_scenarios() -> list:
    return sorted(p.name[:-5] for p in (resources.files("phasegpt") / "scenarios").iterdir()
                  if p.name.endswith(".json"))


# -- running ------------------------------------------------------------------------

class Outputs:
    """Collects output files and their checksums; writes eagerly so aborts keep partial results."""

    def __init__(self, root: Path):
        self.root = root
        self.root.mkdir(parents=True, exist_ok=True)
        self.checksums = {}

    def write(self, name: str, text: str) -> None:
        target = self.root / name
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text)
        self.checksums[name] = dynamics.sha256_text(text)

    def manifest(self, data: dict) -> None:
        data = dict(data, checksums=dict(sorted(self.checksums.items())))
        (self.root / "manifest.json").write_text(dynamics.manifest_json(data))


def run_scenario(cfg: dict, base: Path, out_dir: Path, seed: int = 0) -> int:
    if not isinstance(cfg, dict):
        raise ConfigError("scenario: expected a JSON object")
    name = _require(cfg, "name", "", (str,))
    kind = cfg.get("kind", "evolution")
    if kind not in KINDS:
        raise ConfigError(f"kind: unknown scenario kind {kind!r}")
    out = Outputs(out_dir / name)
    record = {"name": name, "kind": kind, "config": cfg, "seed": seed}
    if kind == "spekkens_classification":
        rows = spekkens.classification_table()
        out.write("table.tsv", spekkens.table_text(rows))
        out.write("table.json", json.dumps(rows, indent=2) + "\n")
        record.update(rows=len(rows), completed=True)
        out.manifest(record)
        return 0
    grid = parse_grid(_require(cfg, "grid", ""))
    if kind == "associator":
        return _run_associator(cfg, grid, out, record)
    kernel = parse_kernel(_require(cfg, "kernel", ""))
    V_p = float(_require(cfg, "V_p", "", (int, float)))
    if not V_p > 0:
        raise ConfigError("V_p: must be positive")
    initial = _require(cfg, "initial", "")
    specs = [parse_state(initial, "initial")] if isinstance(initial, dict) else \
        [parse_state(s, f"initial[{i}]") for i, s in enumerate(initial)]
    H = parse_hamiltonian(_require(cfg, "hamiltonian", ""), grid, base)
    run = parse_run(_require(cfg, "run", ""))
    try:
        states = [build_state(s, grid) for s in specs]
    except ValueError as exc:
        raise ConfigError(f"initial: {exc}") from None
    gen = dynamics.hamiltonian_generator(H, kernel, V_p)
    energy = H.sample() if "energy" in run.monitors else None
    try:
        traj = dynamics.evolve(states, gen, run, energy_field=energy)
    except ValueError as exc:
        raise ConfigError(f"run.dt: {exc}") from None
    for ti, (t, snap) in enumerate(zip(traj.times, traj.snapshots)):
        for si, f in enumerate(snap):
            out.write(f"trajectory/state{si}_{ti:05d}.csv", field_to_csv(f))
    for m, rows in traj.monitors.items():
        for col in range(len(rows[0])):
            out.write(f"monitor_{m}_{col}.csv", dynamics.monitor_csv(traj.times, [r[col] for r in rows]))
    record.update(completed=traj.completed, failure=traj.failure, times=len(traj.times),
                  t_final=traj.times[-1])
    oracle = cfg.get("oracle")
    if oracle == "rotation" and traj.completed:
        if not (H.qq == H.pp and H.qp == 0 and H.periodic is None):
            raise ConfigError("oracle: rotation oracle needs a harmonic Hamiltonian")
        angle = dynamics.harmonic_flow_angle(H.qq, traj.times[-1])
        record["rotation_residual"] = max(
            float(np.abs(f.values - dynamics.rotate_field(f0, angle).values).max())
            for f, f0 in zip(traj.final, states))
    elif oracle is not None and oracle != "rotation":
        raise ConfigError(f"oracle: unknown oracle {oracle!r}")
    if "inner" in traj.monitors:
        inner = np.array(traj.monitors["inner"])
        record["inner_drift"] = float(np.abs(inner - inner[0]).max())
    if "state_volume" in traj.monitors:
        vol = np.array(traj.monitors["state_volume"])
        record["state_volume_drift"] = float(np.abs(vol / vol[0] - 1).max())
    out.manifest(record)
    return 0 if traj.completed else 3


def _run_associator(cfg, grid, out, record) -> int:
    kernels = _require(cfg, "kernels", "", (list,))
    centers = _require(cfg, "centers", "", (list,))
    if len(centers) != 3:
        raise ConfigError("centers: need exactly three Gaussian centres")
    width = float(cfg.get("width", 1.0))
    fs = [from_function(grid, lambda q, p, c=c: np.exp(-((q - c[0]) ** 2 + (p - c[1]) ** 2) / width))
          for c in centers]
    values = []
    for i, kc in enumerate(kernels):
        try:
            K = Kernel.from_config(kc, f"kernels[{i}]")
        except KernelConfigError as exc:
            raise ConfigError(str(exc)) from None
        values.append({"kernel": K.to_config(), "associator": associator(*fs, K)})
    out.write("associator.json", json.dumps(values, indent=2, sort_keys=True) + "\n")
    record.update(results=values, completed=True)
    out.manifest(record)
    return 0


# -- command line -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV} or ./out)")
    common.add_argument("--threads", type=int, default=1, help="worker threads for 'verify all'")
    common.add_argument("--seed", type=int, default=0, help="reserved; recorded in manifests")

    parser = argparse.ArgumentParser(prog="phasegpt", description=__doc__, parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="run a scenario file or bundled scenario")
    p.add_argument("scenario")

    p = sub.add_parser("verify", parents=[common], help="run a property suite")
    p.add_argument("suite", choices=verify.SUITES + ("all",))

    p = sub.add_parser("spekkens", parents=[common], help="toy-model tables")
    p.add_argument("what", choices=["table"])

    p = sub.add_parser("chaos", parents=[common], help="overlap curves")
    p.add_argument("what", choices=["curve"])
    p.add_argument("spec", help="state as JSON, e.g. '{\"variant\": \"sho_eigen\", \"n\": 1}', or a JSON file")
    p.add_argument("--grid-n", type=int, default=128)
    p.add_argument("--half-width", type=float, default=8.0)
    p.add_argument("--dx-max", type=float, default=4.0)
    p.add_argument("--points", type=int, default=81)

    sub.add_parser("scenarios", parents=[common], help="list bundled scenarios")
    return parser


def _out_dir(args) -> Path:
    return Path(args.out or os.environ.get(OUT_ENV) or "out")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("config error: --threads: must be >= 1", file=sys.stderr)
        return 2
    try:
        if args.command == "run":
            cfg, base = load_scenario(args.scenario)
            return run_scenario(cfg, base, _out_dir(args), args.seed)
        if args.command == "verify":
            report = verify.run_suite(args.suite, args.threads)
            print(json.dumps(report, indent=2, sort_keys=True))
            return 0 if verify.all_passed(report) else 1
        if args.command == "spekkens":
            sys.stdout.write(spekkens.table_text())
            return 0
        if args.command == "chaos":
            text = Path(args.spec).read_text() if Path(args.spec).exists() else args.spec
            try:
                spec = parse_state(json.loads(text), "spec")
            except json.JSONDecodeError as exc:
                raise ConfigError(f"spec: not valid JSON ({exc})") from None
            grid = PhaseGrid.square(args.grid_n, args.half_width)
            dxs = np.linspace(0.0, args.dx_max, args.points)
            sys.stdout.write(chaos.curve_csv(chaos.overlap_curve(spec, dxs, grid)))
            return 0
        if args.command == "scenarios":
            print("\n".join(bundled_scenarios()))
            return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
