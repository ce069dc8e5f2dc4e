"""Scenario-file front end.

A scenario is a single JSON document (``"format": 1``) declaring named
outcome spaces, credal sets or penalty families, kernels, payoffs, and
scenario trees, plus one command referencing them by name.  ``run``
validates everything, dispatches, and emits a deterministic report
document; diagnostics go to standard error.  Exit codes: 0 success,
2 validation error, 3 operation error, 4 size-guard error.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from . import __version__
from .conditional import (
    CredalKernel,
    PenaltyKernel,
    check_penalty_additivity,
    check_tower,
    compose,
    conditional_convex,
    conditional_expectation,
)
from .credal import (
    CredalSet,
    conjugate_indicator,
    separate,
    sublinear_expectation,
)
from .demos import DEMO_SUMMARIES, DEMOS
from .errors import CredalkitError, SizeGuardError, ValidationError
from .fubini import check_fubini
from .penalty import PenaltyAtoms, convex_expectation
from .risk import (
    LossSpec,
    ScenarioTree,
    avar_dual_evaluate,
    avar_dual_set,
    compose_risk,
    compose_sublinear,
    oce,
)
from .serialize import parse, render
from .spaces import Kernel, OutcomeSpace, ProbVector, ProductSpace, RandomVariable

COMMANDS = (
    "eval",
    "eval-convex",
    "conditional",
    "compose",
    "check-tower",
    "check-penalty-additivity",
    "check-fubini",
    "conjugate",
    "separate",
    "oce",
    "avar-dual",
    "tree-risk",
    "tree-sublinear",
    "demo",
)


@dataclass
class Scenario:
    raw: dict
    spaces: dict = field(default_factory=dict)
    sets: dict = field(default_factory=dict)
    kernels: dict = field(default_factory=dict)
    variables: dict = field(default_factory=dict)
    trees: dict = field(default_factory=dict)
    command: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    canonicalization: list = field(default_factory=list)


def parse_scenario(text: str) -> Scenario:
    """Parse and fully validate a scenario document."""
    raw = parse(text)
    if not isinstance(raw, dict):
        raise ValidationError("scenario must be a map")
    if raw.get("format") != 1:
        raise ValidationError('scenario needs "format": 1')
    known = {"format", "spaces", "sets", "kernels", "variables", "trees", "command"}
    unknown = set(raw) - known
    if unknown:
        raise ValidationError(f"unknown scenario sections: {sorted(unknown)}")
    sc = Scenario(raw=raw)

    for name, labels in _section(raw, "spaces").items():
        if not isinstance(labels, list):
            raise ValidationError(f"spaces.{name}: expected a list of labels")
        sc.spaces[name] = OutcomeSpace(labels)

    for name, body in _section(raw, "sets").items():
        sc.sets[name] = _build_set(sc, name, body)

    for name, body in _section(raw, "kernels").items():
        sc.kernels[name] = _build_kernel(sc, name, body)

    for name, body in _section(raw, "variables").items():
        space = _resolve_space(sc, body.get("space"), f"variables.{name}.space")
        values = body.get("values")
        if not isinstance(values, list):
            raise ValidationError(f"variables.{name}: expected a list of values")
        sc.variables[name] = _wrap(
            f"variables.{name}", lambda: RandomVariable(space, values)
        )

    for name, body in _section(raw, "trees").items():
        sc.trees[name] = _build_tree(sc, name, body)

    command = raw.get("command")
    if not isinstance(command, dict) or "op" not in command:
        raise ValidationError('scenario needs a "command" map with an "op"')
    if command["op"] not in COMMANDS:
        raise ValidationError(f"unknown command op {command['op']!r}")
    sc.command = command
    _validate_references(sc)
    return sc


def _section(raw: dict, key: str) -> dict:
    body = raw.get(key, {})
    if not isinstance(body, dict):
        raise ValidationError(f'section "{key}" must be a map')
    return body


def _wrap(path: str, build):
    try:
        return build()
    except CredalkitError as exc:
        raise type(exc)(f"{path}: {exc}") from None


def _resolve_space(sc: Scenario, ref, path: str):
    if isinstance(ref, str):
        if ref not in sc.spaces:
            raise ValidationError(f"{path}: unknown space {ref!r}")
        return sc.spaces[ref]
    if isinstance(ref, list) and len(ref) == 2:
        return ProductSpace(
            _resolve_space(sc, ref[0], path), _resolve_space(sc, ref[1], path)
        )
    raise ValidationError(f"{path}: a space reference is a name or a pair of names")


def _build_set(sc: Scenario, name: str, body):
    if not isinstance(body, dict):
        raise ValidationError(f"sets.{name}: expected a map")
    space = _resolve_space(sc, body.get("space"), f"sets.{name}.space")
    if "vertices" in body:
        rows = body["vertices"]
        built = _wrap(f"sets.{name}", lambda: CredalSet.from_rows(space, rows))
        if built.n_vertices < len(rows):
            sc.canonicalization.append(
                f"sets.{name}: {len(rows) - built.n_vertices} redundant "
                f"generator(s) dropped"
            )
        return built
    if "atoms" in body:
        entries = body["atoms"]
        if not isinstance(entries, list) or not all(isinstance(e, dict) for e in entries):
            raise ValidationError(f"sets.{name}.atoms: expected a list of maps")
        atoms = [(entry.get("weights"), entry.get("cost", 0.0)) for entry in entries]
        built = _wrap(f"sets.{name}", lambda: PenaltyAtoms.from_rows(space, atoms))
        if built.normalization_shift > 0.0:
            sc.warnings.append(
                f"sets.{name}: costs shifted down by "
                f"{built.normalization_shift!r} so the smallest is zero"
            )
        return built
    raise ValidationError(f'sets.{name}: needs "vertices" (credal) or "atoms" (penalty)')


def _build_kernel(sc: Scenario, name: str, body):
    if not isinstance(body, dict):
        raise ValidationError(f"kernels.{name}: expected a map")
    u_space = _resolve_space(sc, body.get("u_space"), f"kernels.{name}.u_space")
    v_space = _resolve_space(sc, body.get("v_space"), f"kernels.{name}.v_space")
    if "credal" in body:
        per_u = body["credal"]
        if not isinstance(per_u, list) or len(per_u) != u_space.size:
            raise ValidationError(
                f"kernels.{name}.credal: need one vertex list per outcome"
            )
        table = []
        for i, rows in enumerate(per_u):
            built = _wrap(f"kernels.{name}.credal[{i}]",
                          lambda rows=rows: CredalSet.from_rows(v_space, rows))
            if built.n_vertices < len(rows):
                sc.canonicalization.append(
                    f"kernels.{name}.credal[{i}]: "
                    f"{len(rows) - built.n_vertices} redundant generator(s) dropped"
                )
            table.append(built)
        return CredalKernel(u_space, table)
    if "penalty" in body:
        per_u = body["penalty"]
        if not isinstance(per_u, list) or len(per_u) != u_space.size:
            raise ValidationError(
                f"kernels.{name}.penalty: need one atom list per outcome"
            )
        table = []
        for i, entries in enumerate(per_u):
            if not isinstance(entries, list) or not all(isinstance(e, dict) for e in entries):
                raise ValidationError(
                    f"kernels.{name}.penalty[{i}]: expected a list of maps"
                )
            atoms = [(e.get("weights"), e.get("cost", 0.0)) for e in entries]
            built = _wrap(f"kernels.{name}.penalty[{i}]",
                          lambda atoms=atoms: PenaltyAtoms.from_rows(v_space, atoms))
            if built.normalization_shift > 0.0:
                sc.warnings.append(
                    f"kernels.{name}.penalty[{i}]: costs shifted down by "
                    f"{built.normalization_shift!r}"
                )
            table.append(built)
        return PenaltyKernel(u_space, table)
    raise ValidationError(f'kernels.{name}: needs "credal" or "penalty" tables')


def _build_tree(sc: Scenario, name: str, body):
    if not isinstance(body, dict):
        raise ValidationError(f"trees.{name}: expected a map")
    step_ref = body.get("step_space")
    if not isinstance(step_ref, str):
        raise ValidationError(f"trees.{name}.step_space: expected a space name")
    step = _resolve_space(sc, step_ref, f"trees.{name}.step_space")
    horizon = body.get("horizon")
    if not isinstance(horizon, int):
        raise ValidationError(f"trees.{name}.horizon: expected an integer")
    levels = body.get("ambiguity")
    if not isinstance(levels, list):
        raise ValidationError(f"trees.{name}.ambiguity: expected a list of levels")
    ambiguity = []
    for t, level in enumerate(levels):
        if not isinstance(level, list):
            raise ValidationError(f"trees.{name}.ambiguity[{t}]: expected a list")
        ambiguity.append([
            _wrap(f"trees.{name}.ambiguity[{t}][{j}]",
                  lambda rows=rows: CredalSet.from_rows(step, rows))
            for j, rows in enumerate(level)
        ])
    return _wrap(f"trees.{name}", lambda: ScenarioTree(step, horizon, ambiguity))


_COMMAND_REFS = {
    "eval": {"set": "sets", "variable": "variables"},
    "eval-convex": {"set": "sets", "variable": "variables"},
    "conditional": {"kernel": "kernels", "variable": "variables"},
    "compose": {"set": "sets", "kernel": "kernels", "variable": "variables"},
    "check-tower": {"set": "sets", "kernel": "kernels"},
    "check-penalty-additivity": {"set": "sets", "outer": "sets", "kernel": "kernels"},
    "check-fubini": {"set_u": "sets", "set_v": "sets"},
    "conjugate": {"set": "sets"},
    "separate": {"set": "sets"},
    "oce": {"set": "sets", "variable": "variables"},
    "avar-dual": {"set": "sets", "variable": "variables"},
    "tree-risk": {"tree": "trees", "variable": "variables"},
    "tree-sublinear": {"tree": "trees", "variable": "variables"},
    "demo": {},
}


def _validate_references(sc: Scenario) -> None:
    op = sc.command["op"]
    for arg, section in _COMMAND_REFS[op].items():
        ref = sc.command.get(arg)
        if not isinstance(ref, str):
            raise ValidationError(f"command.{arg}: required object name missing")
        if ref not in getattr(sc, section):
            raise ValidationError(f"command.{arg}: unknown {section} name {ref!r}")
    if op == "demo":
        name = sc.command.get("name")
        if name not in DEMOS:
            raise ValidationError(f"command.name: unknown demo {name!r}")


def _measure_doc(P: ProbVector) -> list:
    return P.weights.tolist()


def _set_doc(S) -> Any:
    if isinstance(S, CredalSet):
        return {"kind": "credal", "n_vertices": S.n_vertices,
                "vertices": S.matrix.tolist()}
    return {
        "kind": "penalty",
        "n_atoms": S.n_atoms,
        "atoms": [
            {"weights": S.points[i].tolist(), "cost": float(S.costs[i])}
            for i in range(S.n_atoms)
        ],
    }


def _maybe_inf(x: float):
    return x if np.isfinite(x) else ("inf" if x > 0 else "-inf")


def _loss_from_command(command: dict) -> LossSpec:
    body = command.get("loss")
    if not isinstance(body, dict):
        raise ValidationError('command.loss: expected a map with "kind"')
    kind = body.get("kind")
    if kind == "avar":
        return LossSpec.avar(float(body.get("level", 0.0)))
    if kind == "piecewise-linear":
        return LossSpec.piecewise(body.get("breakpoints", []), body.get("slopes", []))
    raise ValidationError(f"command.loss.kind: unknown kind {kind!r}")


def _point_from_command(sc: Scenario, S, command: dict) -> ProbVector:
    weights = command.get("weights")
    if not isinstance(weights, list):
        raise ValidationError('command.weights: expected a list of probabilities')
    return _wrap("command.weights", lambda: ProbVector(S.space, weights))


def run(sc: Scenario, tol: float = 1e-9, seed: int = 0, threads: int = 1) -> dict:
    """Dispatch a validated scenario and assemble the report document."""
    if threads < 1:
        raise ValidationError("threads must be at least one")
    if seed < 0:
        raise ValidationError("seed must be nonnegative")
    warnings = list(sc.warnings)
    if threads > 1:
        warnings.append(
            "threads > 1 requested; operations are pure and run single-threaded"
        )
    outputs = _dispatch(sc, tol, seed)
    inputs_doc = {
        "digest": _digest(sc.raw),
        "objects": {
            "sets": {name: _set_doc(S) for name, S in sorted(sc.sets.items())},
            "spaces": {n: list(s.labels) for n, s in sorted(sc.spaces.items())},
        },
    }
    return {
        "format": 1,
        "tool": {"name": "credalkit", "version": __version__},
        "command": sc.command,
        "inputs": inputs_doc,
        "outputs": outputs,
        "diagnostics": {
            "warnings": warnings,
            "canonicalization": list(sc.canonicalization),
        },
        "tolerances": {"feasibility": tol},
        "seed": seed,
    }


def _digest(raw: dict) -> str:
    body = {k: raw[k] for k in raw if k != "command"}
    return "sha256:" + hashlib.sha256(render(body).encode()).hexdigest()[:16]


def _dispatch(sc: Scenario, tol: float, seed: int) -> dict:
    command = sc.command
    op = command["op"]

    if op == "eval":
        S = _expect(sc.sets[command["set"]], CredalSet, "command.set")
        X = sc.variables[command["variable"]]
        return {"value": sublinear_expectation(S, X)}

    if op == "eval-convex":
        A = _expect(sc.sets[command["set"]], PenaltyAtoms, "command.set")
        X = sc.variables[command["variable"]]
        return {"value": convex_expectation(A, X)}

    if op == "conditional":
        K = sc.kernels[command["kernel"]]
        X = sc.variables[command["variable"]]
        if isinstance(K, CredalKernel):
            out = conditional_expectation(K, X)
        else:
            out = conditional_convex(K, X)
        return {"values": out.values.tolist(), "space": list(K.u_space.labels)}

    if op == "compose":
        outer = sc.sets[command["set"]]
        K = sc.kernels[command["kernel"]]
        X = sc.variables[command["variable"]]
        return {"value": compose(outer, K, X)}

    if op == "check-tower":
        S = _expect(sc.sets[command["set"]], CredalSet, "command.set")
        K = _expect(sc.kernels[command["kernel"]], CredalKernel, "command.kernel")
        report = check_tower(S, K, tol)
        doc = {
            "rectangular": report.rectangular,
            "marginal_vertices": report.marginal.matrix.tolist(),
            "pasting_vertices": report.pasting.matrix.tolist(),
            "witness": None,
            "pasting_vertex_outside": None,
            "set_vertex_outside": None,
        }
        if report.witness is not None:
            w = report.witness
            doc["witness"] = {
                "payoff": w.payoff.values.tolist(),
                "lhs": w.lhs,
                "rhs": w.rhs,
                "gap": w.gap,
            }
        for key, entry in (
            ("pasting_vertex_outside", report.pasting_vertex_outside),
            ("set_vertex_outside", report.set_vertex_outside),
        ):
            if entry is not None:
                vertex, cert = entry
                doc[key] = {
                    "vertex": _measure_doc(vertex),
                    "witness": cert.witness.values.tolist(),
                    "margin": cert.margin,
                }
        return doc

    if op == "check-penalty-additivity":
        A = _expect(sc.sets[command["set"]], PenaltyAtoms, "command.set")
        AU = _expect(sc.sets[command["outer"]], PenaltyAtoms, "command.outer")
        K = _expect(sc.kernels[command["kernel"]], PenaltyKernel, "command.kernel")
        probes = None
        if "probes" in command:
            probes = []
            for i, entry in enumerate(command["probes"]):
                Q = _wrap(f"command.probes[{i}].q",
                          lambda e=entry: ProbVector(AU.space, e.get("q")))
                rows = entry.get("r")
                if not isinstance(rows, list) or len(rows) != K.u_space.size:
                    raise ValidationError(
                        f"command.probes[{i}].r: need one weight row per outcome"
                    )
                R = Kernel(K.u_space, [ProbVector(K.v_space, row) for row in rows])
                probes.append((Q, R))
        report = check_penalty_additivity(
            A, AU, K, probes=probes,
            n_random=int(command.get("random_probes", 20)), seed=seed, tol=tol,
        )
        return {
            "classification": report.classification,
            "consistent_with_sampled_values": report.consistent,
            "value_gap_above": report.value_gap_above,
            "value_gap_below": report.value_gap_below,
            "probes": [
                {
                    "q": _measure_doc(p.Q),
                    "r": [_measure_doc(p.R[i]) for i in range(K.u_space.size)],
                    "joint_penalty": _maybe_inf(p.joint_penalty),
                    "split_penalty": _maybe_inf(p.split_penalty),
                    "relation": p.relation,
                }
                for p in report.probes
            ],
        }

    if op == "check-fubini":
        SU = _expect(sc.sets[command["set_u"]], CredalSet, "command.set_u")
        SV = _expect(sc.sets[command["set_v"]], CredalSet, "command.set_v")
        report = check_fubini(SU, SV, tol)
        doc = {
            "interchangeable": report.interchangeable,
            "forward_vertices": report.forward_set.matrix.tolist(),
            "backward_vertices": report.backward_set.matrix.tolist(),
            "witness": None,
        }
        if report.witness is not None:
            payoff, lhs, rhs = report.witness
            doc["witness"] = {"payoff": payoff.values.tolist(), "lhs": lhs, "rhs": rhs}
        return doc

    if op == "conjugate":
        S = _expect(sc.sets[command["set"]], CredalSet, "command.set")
        P = _point_from_command(sc, S, command)
        return {"value": _maybe_inf(conjugate_indicator(S, P, tol))}

    if op == "separate":
        S = _expect(sc.sets[command["set"]], CredalSet, "command.set")
        P = _point_from_command(sc, S, command)
        cert = separate(S, P, tol)
        return {"witness": cert.witness.values.tolist(), "margin": cert.margin}

    if op == "oce":
        S = _expect(sc.sets[command["set"]], CredalSet, "command.set")
        X = sc.variables[command["variable"]]
        L = _loss_from_command(command)
        res = oce(S, X, L, tol)
        doc = {"value": res.value, "minimizer": res.minimizer}
        if L.boundary:
            doc["boundary_level"] = True
        return doc

    if op == "avar-dual":
        S = _expect(sc.sets[command["set"]], CredalSet, "command.set")
        X = sc.variables[command["variable"]]
        level = float(command.get("level", 0.0))
        doc = {"value": avar_dual_evaluate(S, level, X, tol)}
        if command.get("vertices", False):
            dual = avar_dual_set(S, level, tol)
            doc["dual_vertices"] = dual.matrix.tolist()
        return doc

    if op in ("tree-risk", "tree-sublinear"):
        tree = sc.trees[command["tree"]]
        X = sc.variables[command["variable"]]
        if op == "tree-risk":
            levels = compose_risk(tree, X, _loss_from_command(command), tol)
        else:
            levels = compose_sublinear(tree, X)
        return {
            "root_value": float(levels[0][0]),
            "levels": [lvl.tolist() for lvl in levels],
        }

    if op == "demo":
        fn = DEMOS[command["name"]]
        args = command.get("args", {})
        if not isinstance(args, dict):
            raise ValidationError("command.args: expected a map")
        try:
            report = fn(**args)
        except TypeError as exc:
            raise ValidationError(f"command.args: {exc}") from None
        return report.to_doc()

    raise AssertionError(f"unhandled op {op!r}")  # pragma: no cover


def _expect(obj, cls, path: str):
    if not isinstance(obj, cls):
        kind = "credal set" if cls is CredalSet else (
            "penalty family" if cls is PenaltyAtoms else cls.__name__
        )
        raise ValidationError(f"{path}: expected a {kind}")
    return obj


def _echo(message: str, *, error: bool = False) -> None:
    stream = sys.stderr
    use_color = stream.isatty() and not os.environ.get("NO_COLOR")
    if use_color:
        code = "31" if error else "32"
        message = f"\x1b[{code}m{message}\x1b[0m"
    print(message, file=stream)


def _emit(report: dict, out: Optional[str]) -> None:
    text = render(report)
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="credalkit",
        description="Worst-case and convex expectations on finite outcome spaces",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_run = sub.add_parser("run", help="run a scenario file")
    p_run.add_argument("scenario", help="path to the scenario document")
    p_run.add_argument("--out", default=None, help="write the report here")
    p_run.add_argument("--tol", type=float, default=1e-9)
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--threads", type=int, default=1)

    p_demo = sub.add_parser("demo", help="run a named demonstration")
    p_demo.add_argument("name")
    p_demo.add_argument("--out", default=None)
    p_demo.add_argument(
        "--param", action="append", default=[], metavar="KEY=VALUE",
        help="override a demo parameter (JSON-typed value)",
    )

    sub.add_parser("list-demos", help="list demonstration names")

    args = parser.parse_args(argv)
    try:
        if args.subcommand == "list-demos":
            for name in DEMOS:
                print(f"{name}  -  {DEMO_SUMMARIES[name]}")
            return 0
        if args.subcommand == "demo":
            if args.name not in DEMOS:
                raise ValidationError(f"unknown demo {args.name!r}")
            params = {}
            for pair in args.param:
                if "=" not in pair:
                    raise ValidationError(f"--param needs KEY=VALUE, got {pair!r}")
                key, _, value = pair.partition("=")
                try:
                    params[key] = parse(value)
                except ValidationError:
                    params[key] = value
            try:
                report_doc = DEMOS[args.name](**params).to_doc()
            except TypeError as exc:
                raise ValidationError(f"bad demo parameters: {exc}") from None
            doc = {
                "format": 1,
                "tool": {"name": "credalkit", "version": __version__},
                "command": {"op": "demo", "name": args.name, "args": params},
                "outputs": report_doc,
                "diagnostics": {"warnings": []},
            }
            _emit(doc, args.out)
            _echo(f"demo {args.name}: {'pass' if report_doc['passed'] else 'FAIL'}")
            return 0
        with open(args.scenario) as fh:
            text = fh.read()
        sc = parse_scenario(text)
        report = run(sc, tol=args.tol, seed=args.seed, threads=args.threads)
        _emit(report, args.out)
        _echo(f"ok: {sc.command['op']}")
        return 0
    except SizeGuardError as exc:
        _echo(f"size guard: {exc}", error=True)
        return 4
    except ValidationError as exc:
        _echo(f"validation error: {exc}", error=True)
        return 2
    except FileNotFoundError as exc:
        _echo(f"validation error: {exc}", error=True)
        return 2
    except CredalkitError as exc:
        _echo(f"operation error: {exc}", error=True)
        return 3


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
