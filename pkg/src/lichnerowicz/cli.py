"""Command line front end.

    lichnerowicz <command> --config run.json [--set solver.tol_outer=1e-9]... [--seed n]

Commands: check, solve, nonexist, assemble, manufacture.  Exit codes: 0 success,
1 internal inconsistency, 2 assumption failure, 3 solver non-convergence,
4 configuration error.
"""
import argparse
import copy
import json
import logging
from pathlib import Path
import sys

from . import fieldio
from .analysis import check_assumptions
from .coefficients import (COEFFICIENT_NAMES, CoefficientSet, GeometricData, assemble_geometric,
                           load_coefficients, load_geometric, manufacture_h, save_coefficients)
from .errors import (ConfigurationError, DomainError, InternalInconsistencyError,
                     NonConvergenceError, PreconditionError)
from .expressions import constant, field_from_expression
from .grid import SymTensorField, VectorField, make_grid, sym_index_pairs
from .nonexistence import ne_conditions
from .solver import SolverConfig, outer_solve, write_trace_csv

log = logging.getLogger("lichnerowicz")

EXIT_OK, EXIT_INTERNAL, EXIT_ASSUMPTION, EXIT_NONCONVERGENCE, EXIT_CONFIG = 0, 1, 2, 3, 4
COMMANDS = ("check", "solve", "nonexist", "assemble", "manufacture")
MODES = ("direct", "geometric", "manufactured")


def apply_override(config: dict, assignment: str):
    """Apply one ``dotted.path=value`` override; values are parsed as json when possible."""
    if "=" not in assignment:
        raise ConfigurationError(f"override must look like key=value, got {assignment!r}")
    key, raw = assignment.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = config
    parts = key.strip().split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigurationError(f"cannot descend into {part!r} for override {key!r}")
    node[parts[-1]] = value


class RunConfig:
    """A parsed config document with paths resolved against its directory."""

    def __init__(self, doc: dict, base: Path):
        self.doc = doc
        self.base = base
        for section in ("grid", "coefficients"):
            if section not in doc:
                raise ConfigurationError(f"config lacks the {section!r} section")
        coeffs = doc["coefficients"]
        self.mode = coeffs.get("mode", "direct")
        if self.mode not in MODES:
            raise ConfigurationError(f"coefficient mode must be one of {MODES}, got {self.mode!r}")
        g = doc["grid"]
        try:
            d = int(g["d"])
            n = g["n"]
            L = [constant(v) for v in (g["L"] if isinstance(g["L"], list) else [g["L"]])]
        except KeyError as exc:
            raise ConfigurationError(f"grid section lacks {exc.args[0]!r}") from exc
        self.grid = make_grid(d, n, L)
        self.N = int(coeffs.get("N", 3))
        try:
            self.solver = SolverConfig(**doc.get("solver", {}))
        except TypeError as exc:
            raise ConfigurationError(f"bad solver section: {exc}") from exc
        except DomainError as exc:
            raise ConfigurationError(f"bad solver section: {exc}") from exc
        out = doc.get("output", {})
        self.out_dir = self.path(out.get("directory", "out"))
        self.emit_fields = bool(out.get("emit_fields", True))
        self.emit_trace = bool(out.get("emit_trace", True))

    @classmethod
    def load(cls, path, overrides=()):
        path = Path(path)
        doc = fieldio.read_json(path)
        doc = copy.deepcopy(doc)
        for item in overrides:
            apply_override(doc, item)
        return cls(doc, path.parent)

    def path(self, p):
        p = Path(p)
        return p if p.is_absolute() else self.base / p

    def field(self, entry, name):
        if isinstance(entry, dict):
            if "file" not in entry:
                raise ConfigurationError(f"field {name!r}: expected an expression or {{'file': ...}}")
            f = fieldio.load_field(self.path(entry["file"]))
            if f.grid != self.grid:
                raise ConfigurationError(f"field file for {name!r} does not match the grid")
            return f
        if entry is None:
            raise ConfigurationError(f"coefficient section lacks {name!r}")
        return field_from_expression(self.grid, entry)

    def geometric_data(self) -> GeometricData:
        c = self.doc["coefficients"]
        if "directory" in c:
            return load_geometric(self.path(c["directory"]))
        d = self.grid.d
        W = c.get("W", [0] * d)
        if len(W) != d:
            raise ConfigurationError(f"W needs {d} components")
        sigma = c.get("sigma", {})
        comps = {}
        for i, j in sym_index_pairs(d):
            comps[(i, j)] = self.field(sigma.get(f"{i}{j}", sigma.get(f"{j}{i}", 0)), f"sigma_{i}{j}")
        R = self.field(c["R"], "R") if "R" in c else None
        return GeometricData(self.field(c.get("tau"), "tau"), self.field(c.get("pi"), "pi"),
                             constant(c.get("nu", 0)),
                             VectorField(self.grid, tuple(self.field(w, "W") for w in W)),
                             SymTensorField(self.grid, comps), R)

    def u_star(self):
        return self.field(self.doc["coefficients"].get("u_star"), "u_star")

    def coefficients(self) -> CoefficientSet:
        c = self.doc["coefficients"]
        if self.mode == "geometric":
            return assemble_geometric(self.geometric_data(), self.N)
        if self.mode == "manufactured":
            parts = {k: self.field(c.get(k, 0), k) for k in ("a", "b", "csq", "dsq", "cd")}
            return manufacture_h(self.u_star(), N=self.N, **parts)
        if "directory" in c:
            return load_coefficients(self.path(c["directory"]))
        return CoefficientSet(self.N, **{k: self.field(c.get(k), k) for k in COEFFICIENT_NAMES},
                              tags=("direct",))


def _write_report(cfg, name, command, seed, body):
    doc = {"command": command, "mode": cfg.mode, "seed": seed, "report": body}
    path = cfg.out_dir / name
    fieldio.write_json(path, doc)
    return path


def cmd_check(cfg, seed):
    cs = cfg.coefficients()
    rep = check_assumptions(cs)
    _write_report(cfg, "assumptions.json", "check", seed, rep.to_dict())
    if not rep.all_pass:
        log.error("assumptions fail: %s", ", ".join(f.upper() for f in rep.failures()))
        return EXIT_ASSUMPTION
    return EXIT_OK


def cmd_solve(cfg, seed):
    cs = cfg.coefficients()
    try:
        rep = outer_solve(cs, cfg=cfg.solver)
    except PreconditionError as exc:
        _write_report(cfg, "assumptions.json", "solve", seed, check_assumptions(cs).to_dict())
        log.error("cannot solve: %s", exc)
        return EXIT_ASSUMPTION
    except NonConvergenceError as exc:
        log.error("inner solver failed: %s", exc)
        return EXIT_NONCONVERGENCE
    _write_report(cfg, "solve_report.json", "solve", seed, rep.to_dict())
    if cfg.emit_fields:
        fieldio.save_field(cfg.out_dir / "u", rep.u)
    if cfg.emit_trace:
        write_trace_csv(cfg.out_dir / "trace.csv", rep.trace)
    if not rep.converged:
        log.error("outer iteration did not converge (residual %.3e after %d iterations)",
                  rep.residual_inf, rep.outer_iters)
        return EXIT_NONCONVERGENCE
    return EXIT_OK


def cmd_nonexist(cfg, seed):
    rep = ne_conditions(cfg.coefficients())
    _write_report(cfg, "nonexistence.json", "nonexist", seed, rep.to_dict())
    if not rep.consistency:
        log.error("a satisfied NE condition was not confirmed by the pointwise oracle")
        return EXIT_INTERNAL
    return EXIT_OK


def cmd_assemble(cfg, seed):
    cs = cfg.coefficients()
    save_coefficients(cfg.out_dir / "coefficients", cs, mode=cfg.mode, extra_meta={"seed": seed})
    return EXIT_OK


def cmd_manufacture(cfg, seed):
    if cfg.mode != "manufactured":
        raise ConfigurationError("manufacture needs coefficients.mode = 'manufactured'")
    cs = cfg.coefficients()
    save_coefficients(cfg.out_dir / "coefficients", cs, mode="manufactured",
                      extra_meta={"seed": seed})
    fieldio.save_field(cfg.out_dir / "u_star", cfg.u_star())
    return EXIT_OK


HANDLERS = {"check": cmd_check, "solve": cmd_solve, "nonexist": cmd_nonexist,
            "assemble": cmd_assemble, "manufacture": cmd_manufacture}


def build_parser():
    parser = argparse.ArgumentParser(prog="lichnerowicz", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="path to the json run config")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="dotted-path override, repeatable")
    parser.add_argument("--seed", type=int, default=0, help="seed recorded in every report")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def run(command, config_path, overrides=(), seed=0):
    """Execute one command; returns the process exit code."""
    try:
        cfg = RunConfig.load(config_path, overrides)
        return HANDLERS[command](cfg, seed)
    except (ConfigurationError, DomainError) as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except InternalInconsistencyError as exc:
        log.error("internal inconsistency: %s", exc)
        return EXIT_INTERNAL


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    return run(args.command, args.config, args.overrides, args.seed)


if __name__ == "__main__":
    sys.exit(main())
