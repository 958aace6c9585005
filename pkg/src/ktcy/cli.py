"""Command-line front end: solve, verify, and sweep with JSON reports.

Exit codes: 0 success, 1 invalid input, 2 continuation stalled (partial
report written), 3 verification failure.
"""

from __future__ import annotations

import argparse
import datetime
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import canonical_connection as conn
from .continuity_solver import SolverConfig, continuity_solve, uniqueness_probe
from .cy_reduction import (
    assemble_omega_tilde,
    key_identity_gap,
    reduced_metric,
    residual as cy_residual,
    trace_u,
)
from .errors import ContinuationStalled, KtcyError
from .frame_calculus import j_two_form
from .torus_grid import (
    Grid,
    TorusField,
    integrate,
    load_ktcy,
    resample,
    save_csv,
    save_ktcy,
)

PRESETS = ("zero", "oneD", "checker", "skew")
_DEFAULT_A = 0.5
_DEFAULT_B = 0.3
_DEFAULT_N = 64
_DECAY_FLOOR = 1e-10  # sup gaps at or below this are round-off, not truncation

_CONFIG_FLOATS = ("a", "b", "newton_tol", "armijo_c", "admissibility_delta",
                  "t_step_initial", "t_step_min")
_CONFIG_INTS = ("n", "seed", "max_newton_iters")
_SOLVER_KEYS = ("newton_tol", "max_newton_iters", "armijo_c",
                "admissibility_delta", "t_step_initial", "t_step_min")


class CliError(KtcyError):
    """Invalid input; maps to exit code 1."""


@dataclass
class ProblemSpec:
    density: dict
    grid_n: int = _DEFAULT_N
    seed: int = 0
    overrides: dict = field(default_factory=dict)

    def echo(self) -> dict:
        return {
            "density": self.density,
            "grid_n": self.grid_n,
            "seed": self.seed,
            "overrides": dict(self.overrides),
        }

    def solver_config(self, n: int | None = None) -> SolverConfig:
        try:
            return SolverConfig(
                grid_n=n if n is not None else self.grid_n,
                seed=self.seed,
                **self.overrides,
            )
        except ValueError as exc:
            raise CliError(str(exc)) from exc


def build_density_field(spec: ProblemSpec, n: int,
                        allow_resample: bool = False) -> TorusField:
    grid = Grid(n)
    kind = spec.density["kind"]
    if kind == "preset":
        name = spec.density["name"]
        a = spec.density.get("a", _DEFAULT_A)
        b = spec.density.get("b", _DEFAULT_B)
        x, y = grid.coords()
        if name == "zero":
            values = np.zeros((n, n))
        elif name == "oneD":
            values = a * np.cos(2 * np.pi * x)
        elif name == "checker":
            values = a * np.cos(2 * np.pi * x) * np.cos(2 * np.pi * y)
        elif name == "skew":
            values = a * np.cos(2 * np.pi * (x + y)) + b * np.sin(2 * np.pi * y)
        else:
            raise CliError(f"unknown preset {name!r}, expected one of {PRESETS}")
        return TorusField(grid, values)
    if kind == "fourier":
        x, y = grid.coords()
        values = np.zeros((n, n))
        for k, l, ca, sa in spec.density["modes"]:
            if max(abs(k), abs(l)) >= n // 2:
                raise CliError(
                    f"fourier mode ({k},{l}) is not representable at n={n}"
                )
            phase = 2 * np.pi * (k * x + l * y)
            values += ca * np.cos(phase) + sa * np.sin(phase)
        return TorusField(grid, values)
    if kind == "field":
        try:
            f = load_ktcy(spec.density["path"])
        except (OSError, ValueError) as exc:
            raise CliError(str(exc)) from exc
        if f.grid.n != n:
            if not allow_resample:
                raise CliError(
                    f"field dump has n={f.grid.n}, expected n={n}"
                )
            f = resample(f, n)
        return f
    raise CliError(f"unknown density kind {kind!r}")


def _parse_fourier_text(text: str, where: str) -> list:
    modes = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(",")
        if len(parts) != 4:
            raise CliError(f"{where}: fourier entry {chunk!r} needs k,l,cos_amp,sin_amp")
        try:
            k, l = int(parts[0]), int(parts[1])
            ca, sa = float(parts[2]), float(parts[3])
        except ValueError as exc:
            raise CliError(f"{where}: bad fourier entry {chunk!r}: {exc}") from exc
        modes.append([k, l, ca, sa])
    return modes


def _validate_fourier(modes, where: str) -> list:
    clean = []
    for entry in modes:
        if len(entry) != 4:
            raise CliError(f"{where}: fourier entry {entry!r} needs 4 components")
        k, l, ca, sa = entry
        if int(k) != k or int(l) != l:
            raise CliError(f"{where}: wavenumbers must be integers in {entry!r}")
        if int(k) == 0 and int(l) == 0:
            raise CliError(
                f"{where}: fourier mode (0,0) is not allowed; constants belong to c"
            )
        clean.append([int(k), int(l), float(ca), float(sa)])
    if not clean:
        raise CliError(f"{where}: empty fourier mode list")
    return clean


def load_config(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(str(exc)) from exc
    raw: dict = {}
    if text.lstrip().startswith("{"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise CliError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise CliError(f"{path}: top-level JSON value must be an object")
    else:
        for lineno, line in enumerate(text.splitlines(), start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise CliError(f"{path}:{lineno}: expected key=value, got {stripped!r}")
            key, _, value = stripped.partition("=")
            raw[key.strip()] = value.strip()

    known = {"preset", "fourier", "field", *_CONFIG_FLOATS, *_CONFIG_INTS}
    cfg: dict = {}
    for key, value in raw.items():
        if key not in known:
            raise CliError(f"{path}: unknown config field {key!r}")
        if key in _CONFIG_FLOATS:
            try:
                cfg[key] = float(value)
            except (TypeError, ValueError) as exc:
                raise CliError(f"{path}: field {key!r}: {exc}") from exc
        elif key in _CONFIG_INTS:
            try:
                cfg[key] = int(value)
            except (TypeError, ValueError) as exc:
                raise CliError(f"{path}: field {key!r}: {exc}") from exc
        elif key == "fourier":
            if isinstance(value, str):
                cfg[key] = _parse_fourier_text(value, f"{path}: field 'fourier'")
            elif isinstance(value, list):
                cfg[key] = value
            else:
                raise CliError(f"{path}: field 'fourier' must be a list or string")
        else:
            cfg[key] = value
    return cfg


def build_problem(args) -> ProblemSpec:
    cfg = load_config(args.config) if args.config else {}
    preset = args.preset or cfg.get("preset")
    fourier = cfg.get("fourier")
    field_path = cfg.get("field")
    given = [x for x in (preset, fourier, field_path) if x is not None]
    if len(given) > 1:
        raise CliError("give exactly one of preset, fourier, field")
    if not given:
        preset = "zero"

    if fourier is not None:
        density = {"kind": "fourier", "modes": _validate_fourier(fourier, "config")}
    elif field_path is not None:
        density = {"kind": "field", "path": str(field_path)}
    else:
        if preset not in PRESETS:
            raise CliError(f"unknown preset {preset!r}, expected one of {PRESETS}")
        density = {"kind": "preset", "name": preset}
        if "a" in cfg:
            density["a"] = cfg["a"]
        if "b" in cfg:
            density["b"] = cfg["b"]

    n = args.n if args.n is not None else cfg.get("n", _DEFAULT_N)
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    overrides = {k: cfg[k] for k in _SOLVER_KEYS if k in cfg}
    spec = ProblemSpec(density=density, grid_n=int(n), seed=int(seed),
                       overrides=overrides)
    spec.solver_config()  # validate now so bad values exit 1, not mid-run
    return spec


def _timestamp() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _state_record(state) -> dict:
    keep = ("residual_sup", "residual_l2", "min_nu", "min_A", "sup_u",
            "lemma22_margin", "key_identity_sup", "alpha", "beta", "newton_iters")
    rec = {"t": state.t, "c_t": state.c_t}
    rec.update({k: state.diagnostics[k] for k in keep})
    return rec


def _write_report(report: dict, out_dir: Path, name: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _dump_fields(states, F: TorusField, out_dir: Path, fmt: str) -> None:
    from .cy_reduction import DensityData

    for state in states:
        d = DensityData(TorusField(F.grid, state.t * F.values), state.c_t)
        m = reduced_metric(state.phi)
        fields = {
            "phi": state.phi.phi,
            "u": trace_u(state.phi),
            "nu": m.nu,
            "residual": cy_residual(state.phi, d),
        }
        tag = f"t{state.t:.6f}"
        for name, fld in fields.items():
            if fmt in ("ktcy", "both"):
                save_ktcy(fld, out_dir / f"{name}_{tag}.ktcy")
            if fmt in ("csv", "both"):
                save_csv(fld, out_dir / f"{name}_{tag}.csv")


def run_solve(spec: ProblemSpec, out_dir, dump_fields: str | None = None) -> int:
    out_dir = Path(out_dir)
    cfg = spec.solver_config()
    F = build_density_field(spec, spec.grid_n)
    start = time.perf_counter()
    status = "converged"
    detail = ""
    try:
        states = continuity_solve(F, cfg)
        code = 0
    except ContinuationStalled as exc:
        states = exc.states
        status = "stalled"
        detail = str(exc)
        code = 2
    elapsed = time.perf_counter() - start

    report = {
        "timestamp": _timestamp(),
        "spec_echo": spec.echo(),
        "grid_n": spec.grid_n,
        "status": status,
        "status_detail": detail,
        "path": [_state_record(s) for s in states],
        "final": {},
        "timings": {"total_seconds": elapsed},
    }
    if states:
        last = states[-1]
        report["final"] = {
            k: last.diagnostics[k]
            for k in ("residual_sup", "residual_l2", "sup_u", "min_nu",
                      "lemma22_margin", "alpha", "beta")
        }
        report["final"]["c_t"] = last.c_t
    path = _write_report(report, out_dir, "report.json")
    if dump_fields and states:
        out_dir.mkdir(parents=True, exist_ok=True)
        _dump_fields(states, F, out_dir, dump_fields)
    for s in states:
        print(f"[solve] t={s.t:.6f} newton_iters={s.diagnostics['newton_iters']} "
              f"residual_sup={s.diagnostics['residual_sup']:.3e} "
              f"sup_u={s.diagnostics['sup_u']:.12f}")
    print(f"[solve] status={status} report={path}")
    return code


def _connection_checks() -> list[dict]:
    checks = []

    def exact(name: str, ok: bool):
        checks.append({"check": name, "passed": bool(ok),
                       "measured": 0.0 if ok else 1.0, "tolerance": 0.0})

    forms = conn.canonical_connection_forms().theta
    s = conn.I_OVER_2SQRT2
    exact("theta^1_1 = 0", forms[0][0].is_zero())
    exact("theta^1_2 = -(i/(2 sqrt2)) theta^2",
          (forms[0][1] - conn.THETA2.scaled(-s)).is_zero())
    exact("theta^2_1 = -(i/(2 sqrt2)) conj(theta^2)",
          (forms[1][0] - conn.THETA2_BAR.scaled(-s)).is_zero())
    exact("theta^2_2 = (i/(2 sqrt2))(theta^1 + conj(theta^1))",
          (forms[1][1] - (conn.THETA1 + conn.THETA1_BAR).scaled(s)).is_zero())

    t1, t2 = conn.torsion()
    exact("torsion Theta^1 = 0", t1.is_zero())
    exact("torsion Theta^2 = -(i/(2 sqrt2)) conj(theta^1)^conj(theta^2)",
          (t2 - conn.THETA1_BAR.wedge(conn.THETA2_BAR).scaled(-s)).is_zero())
    exact("torsion has no (1,1)-part",
          t1.part_11().is_zero() and t2.part_11().is_zero())

    psi = conn.curvature().psi
    eighth = conn.ExactScalar(a=conn.Fraction(1, 8))
    exact("Psi^1_1 = -(1/8) theta^2^conj(theta^2)",
          (psi[0][0] - conn.THETA2.wedge(conn.THETA2_BAR).scaled(-eighth)).is_zero())
    exact("Psi^1_1 + Psi^2_2 = 0", (psi[0][0] + psi[1][1]).is_zero())
    exact("curvature skew-Hermitian",
          all((psi[j][i] + psi[i][j].conjugate()).is_zero()
              for i in range(2) for j in range(2)))
    ric = conn.ricci_flat()
    exact("Ric(Omega, J) = 0",
          all(np.all(f.values == 0.0) for f in ric.coeffs()))
    return checks


def _solution_checks(spec: ProblemSpec, suites: set[str], starts: int) -> list[dict]:
    checks = []

    def add(name, measured, tol):
        checks.append({"check": name, "passed": bool(measured <= tol),
                       "measured": float(measured), "tolerance": float(tol)})

    cfg = spec.solver_config()
    F = build_density_field(spec, spec.grid_n)

    if suites & {"identities", "lemma22"}:
        states = continuity_solve(F, cfg)
        last = states[-1]
        p = last.phi

        if "identities" in suites:
            m = reduced_metric(p)
            add("integral of nu equals 1", abs(integrate(m.nu) - 1.0), 1e-10)
            add("integral of u equals 2", abs(integrate(trace_u(p)) - 2.0), 1e-12)
            from .cy_reduction import DensityData

            d = DensityData(F, last.c_t)
            add("residual has zero mean", abs(integrate(cy_residual(p, d))), 1e-10)
            add("interior identity sup gap",
                float(np.abs(key_identity_gap(p).values).max()), 1e-8)
            add("cohomology alpha equals 1",
                abs(last.diagnostics["alpha"] - 1.0), 1e-10)
            add("cohomology beta equals 0", abs(last.diagnostics["beta"]), 1e-10)
            wt = assemble_omega_tilde(p)
            jwt = j_two_form(wt)
            jdiff = max(
                float(np.abs(a.values - b.values).max())
                for a, b in zip(wt.coeffs(), jwt.coeffs())
            )
            add("omega~ is J-invariant", jdiff, 1e-14)

        if "lemma22" in suites:
            worst = min(s.diagnostics["lemma22_margin"] for s in states)
            checks.append({
                "check": "minimum-principle margin at every accepted t",
                "passed": bool(worst >= -1e-6),
                "measured": float(worst),
                "tolerance": -1e-6,
            })

    if "uniqueness" in suites:
        dist = uniqueness_probe(F, cfg, starts)
        add(f"uniqueness probe with {starts} starts", dist, 1e-8)

    return checks


def run_verify(spec: ProblemSpec, suite: str, out_dir, starts: int = 4) -> int:
    wanted = {"identities", "lemma22", "connection", "uniqueness"} \
        if suite == "all" else {suite}
    checks = []
    if "connection" in wanted:
        checks.extend(_connection_checks())
    checks.extend(_solution_checks(spec, wanted, starts))

    report = {
        "timestamp": _timestamp(),
        "spec_echo": spec.echo(),
        "suite": suite,
        "checks": checks,
        "all_passed": all(c["passed"] for c in checks),
    }
    path = _write_report(report, Path(out_dir), "verify_report.json")
    for c in checks:
        flag = "PASS" if c["passed"] else "FAIL"
        print(f"[verify] {flag} {c['check']} "
              f"(measured {c['measured']:.3e}, tolerance {c['tolerance']:.3e})")
    print(f"[verify] report={path}")
    if not report["all_passed"]:
        failing = [c["check"] for c in checks if not c["passed"]]
        print(f"[verify] failing: {failing}", file=sys.stderr)
        return 3
    return 0


def run_sweep(spec: ProblemSpec, resolutions: list[int], out_dir) -> int:
    if not resolutions:
        raise CliError("sweep needs at least one resolution")
    if any(n % 2 or n < 4 for n in resolutions):
        raise CliError("resolutions must be even and >= 4")
    if sorted(resolutions) != list(resolutions) or len(set(resolutions)) != len(resolutions):
        raise CliError("resolutions must be strictly increasing")

    rows = []
    had_error = False
    for n in resolutions:
        cfg = spec.solver_config(n)
        F = build_density_field(spec, n, allow_resample=True)
        try:
            last = continuity_solve(F, cfg)[-1]
            rows.append({
                "n": n,
                "sup_u": last.diagnostics["sup_u"],
                "residual_sup": last.diagnostics["residual_sup"],
                "key_identity_sup": last.diagnostics["key_identity_sup"],
            })
        except KtcyError as exc:
            had_error = True
            rows.append({"n": n, "error": str(exc)})

    gaps = [r["key_identity_sup"] for r in rows if "error" not in r]
    decay_ok = all(
        later < earlier or later <= _DECAY_FLOOR
        for earlier, later in zip(gaps, gaps[1:])
    )
    report = {
        "timestamp": _timestamp(),
        "spec_echo": spec.echo(),
        "resolutions": list(resolutions),
        "rows": rows,
        "decay_floor": _DECAY_FLOOR,
        "key_identity_decay_ok": decay_ok,
    }
    path = _write_report(report, Path(out_dir), "sweep_report.json")
    for r in rows:
        if "error" in r:
            print(f"[sweep] n={r['n']} error: {r['error']}")
        else:
            print(f"[sweep] n={r['n']} key_identity_sup={r['key_identity_sup']:.3e} "
                  f"sup_u={r['sup_u']:.12f}")
    print(f"[sweep] decay_ok={decay_ok} report={path}")
    if had_error:
        return 2
    if not decay_ok:
        return 3
    return 0


class _Parser(argparse.ArgumentParser):
    # spec reserves exit 2 for stalled continuation; bad flags are invalid input
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ktcy", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="problem config, key=value lines or JSON")
        p.add_argument("--n", type=int, help="grid resolution (even, >= 4)")
        p.add_argument("--preset", help=f"density preset, one of {PRESETS}")
        p.add_argument("--out-dir", default="ktcy_out", help="report directory")
        p.add_argument("--seed", type=int, help="seed for perturbation probes")

    p_solve = sub.add_parser("solve", parents=[], help="run the continuity solver")
    common(p_solve)
    p_solve.add_argument("--dump-fields", nargs="?", const="ktcy",
                         choices=("ktcy", "csv", "both"),
                         help="dump phi, u, nu, residual at each accepted t")

    p_verify = sub.add_parser("verify", help="run a verification suite")
    common(p_verify)
    p_verify.add_argument("--suite", default="all",
                          choices=("identities", "lemma22", "connection",
                                   "uniqueness", "all"))
    p_verify.add_argument("--starts", type=int, default=4,
                          help="starts for the uniqueness probe")

    p_sweep = sub.add_parser("sweep", help="solve across resolutions")
    common(p_sweep)
    p_sweep.add_argument("--resolutions", default="32,64,128",
                         help="comma-separated even grid sizes, increasing")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits; keep main() returning an int
        return int(exc.code or 0)
    try:
        spec = build_problem(args)
        if args.command == "solve":
            return run_solve(spec, args.out_dir, args.dump_fields)
        if args.command == "verify":
            return run_verify(spec, args.suite, args.out_dir, starts=args.starts)
        if args.command == "sweep":
            try:
                resolutions = [int(x) for x in args.resolutions.split(",") if x.strip()]
            except ValueError as exc:
                raise CliError(f"bad --resolutions: {exc}") from exc
            return run_sweep(spec, resolutions, args.out_dir)
        raise CliError(f"unknown command {args.command!r}")
    except CliError as exc:
        print(f"ktcy: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
