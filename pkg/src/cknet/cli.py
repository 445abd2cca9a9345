"""Command dispatch: validate | observe | intervene | ck | rck | section | simulate.

Exit codes: 0 success, 1 domain/validation failure, 2 usage error. All output
is deterministic: JSON keys sorted, reals at 17 significant digits.
"""

from __future__ import annotations

import argparse
import json
import sys

from cknet import jsonio
from cknet.config import ConfigError, load_config
from cknet.measures import mixture_to_dict
from cknet.rck import PathQuery, rck_family, relative_measure
from cknet.scm import (
    apply_intervention,
    generate_ck,
    intervention_from_dict,
    intervention_map,
    intervention_to_dict,
    observational_measure,
)
from cknet.sheaf import (
    is_global_section,
    observational_cochain,
    search_section,
    validate_sheaf,
)
from cknet.simulate import run_simulate


def _emit(args, payload: dict) -> None:
    text = jsonio.dumps(payload)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _load(args):
    return load_config(
        args.config, allow_invalid=getattr(args, "allow_invalid", False), tol=args.tol
    )


def _affine_to_dict(m) -> dict:
    return {"matrix": m.matrix.tolist(), "offset": m.offset.tolist()}


def _parse_interventions(raw: str) -> list:
    doc = json.loads(raw)
    if isinstance(doc, dict):
        doc = [doc]
    return [intervention_from_dict(entry) for entry in doc]


def cmd_validate(args) -> int:
    try:
        sheaf, _ = load_config(args.config, allow_invalid=True, tol=args.tol)
    except ConfigError as exc:
        _emit(args, {"ok": False, "error": str(exc)})
        return 1
    report = validate_sheaf(sheaf, tol=args.tol)
    _emit(args, report.to_dict())
    return 0 if report.ok else 1


def cmd_observe(args) -> int:
    sheaf, _ = _load(args)
    payload = {
        "measures": {
            node: mixture_to_dict(observational_measure(scm))
            for node, scm in sheaf.node_stalks.items()
        }
    }
    _emit(args, payload)
    return 0


def cmd_intervene(args) -> int:
    sheaf, _ = _load(args)
    if args.node not in sheaf.node_stalks:
        raise ValueError(f"unknown node {args.node!r}")
    scm = sheaf.node_stalks[args.node]
    (iv,) = _parse_interventions(args.intervention)
    eta = intervention_map(scm, iv)
    measure = observational_measure(apply_intervention(scm, iv))
    _emit(
        args,
        {
            "node": args.node,
            "intervention": intervention_to_dict(iv),
            "measure": mixture_to_dict(measure),
            "map": _affine_to_dict(eta),
        },
    )
    return 0


def cmd_ck(args) -> int:
    sheaf, _ = _load(args)
    if args.node not in sheaf.node_stalks:
        raise ValueError(f"unknown node {args.node!r}")
    ivs = _parse_interventions(args.interventions) if args.interventions else []
    ck = generate_ck(sheaf.node_stalks[args.node], ivs)
    _emit(
        args,
        {
            "node": args.node,
            "interventions": [intervention_to_dict(iv) for iv in ck.interventions],
            "measures": [mixture_to_dict(m) for m in ck.measures],
            "morphisms": [_affine_to_dict(m) for m in ck.morphisms],
        },
    )
    return 0


def cmd_rck(args) -> int:
    sheaf, _ = _load(args)
    path = PathQuery(args.source, args.target, tuple(args.edges.split(",")))
    if args.interventions:
        ivs = _parse_interventions(args.interventions)
        ck = generate_ck(sheaf.node_stalks[args.source], ivs)
        family = rck_family(sheaf, path, ck)
        payload = {
            "path": {"source": path.source, "target": path.target, "edges": list(path.edges)},
            "family": [mixture_to_dict(m) for m in family],
        }
    else:
        chi = observational_measure(sheaf.node_stalks[args.source])
        payload = {
            "path": {"source": path.source, "target": path.target, "edges": list(path.edges)},
            "measure": mixture_to_dict(relative_measure(sheaf, path, chi)),
        }
    _emit(args, payload)
    return 0


def cmd_section(args) -> int:
    sheaf, scenarios = _load(args)
    if args.search:
        free = {}
        if args.scenario:
            if args.scenario not in scenarios:
                raise ValueError(f"unknown scenario {args.scenario!r}")
            free = scenarios[args.scenario].free
        seed = args.seed if args.seed is not None else 0
        result = search_section(sheaf, free, seed=seed, budget=args.budget)
        payload = {
            "energy": result.energy,
            "evaluations": result.evaluations,
            "coefficients": {
                node: [
                    {"child": c, "parent": p, "value": v}
                    for (c, p), v in sorted(coeffs.items())
                ]
                for node, coeffs in result.coefficients.items()
            },
            "cochain": {
                node: mixture_to_dict(m) for node, m in result.cochain.values.items()
            },
        }
        if args.trajectory:
            lines = ["eval,node,edge,disagreement,energy"]
            for ev, node, eid, dis, en in result.trajectory:
                lines.append(f"{ev},{node},{eid},{dis:.17g},{en:.17g}")
            with open(args.trajectory, "w") as fh:
                fh.write("\n".join(lines) + "\n")
        _emit(args, payload)
        return 0
    c0 = observational_cochain(sheaf)
    verdict, residuals = is_global_section(sheaf, c0, tol=args.tol)
    _emit(args, {"section": verdict, "residuals": residuals})
    return 0


def cmd_simulate(args) -> int:
    sheaf, scenarios = _load(args)
    if args.scenario not in scenarios:
        raise ValueError(f"unknown scenario {args.scenario!r}")
    scenario = scenarios[args.scenario]
    if args.seed is not None:
        scenario = type(scenario)(
            name=scenario.name,
            rounds=scenario.rounds,
            seed=args.seed,
            tol=scenario.tol,
            policy=scenario.policy,
            schedules=scenario.schedules,
            free=scenario.free,
        )
    result = run_simulate(sheaf, scenario)
    csv_text = result.csv()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(csv_text)
    else:
        sys.stdout.write(csv_text)
    summary = {
        "scenario": scenario.name,
        "rounds": scenario.rounds,
        "initial_energy": result.energies[0],
        "final_energy": result.final_energy,
    }
    if args.summary:
        with open(args.summary, "w") as fh:
            fh.write(jsonio.dumps(summary) + "\n")
    else:
        print(jsonio.dumps(summary), file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cknet", description="Causal knowledge transport on networks"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--tol", type=float, default=1e-6)
        p.add_argument("--out", default=None)
        p.add_argument("--format", choices=["json", "csv"], default="json")
        p.add_argument("--allow-invalid", action="store_true", dest="allow_invalid")

    p = sub.add_parser("validate", help="sheaf validation report")
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("observe", help="observational measures per node")
    common(p)
    p.set_defaults(func=cmd_observe)

    p = sub.add_parser("intervene", help="interventional measure + morphism")
    common(p)
    p.add_argument("--node", required=True)
    p.add_argument("--intervention", required=True, help="intervention JSON")
    p.set_defaults(func=cmd_intervene)

    p = sub.add_parser("ck", help="causal knowledge of one node")
    common(p)
    p.add_argument("--node", required=True)
    p.add_argument("--interventions", default=None, help="JSON list of interventions")
    p.set_defaults(func=cmd_ck)

    p = sub.add_parser("rck", help="relative measure / family along a path")
    common(p)
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--edges", required=True, help="comma-separated edge ids")
    p.add_argument("--interventions", default=None, help="JSON list of interventions")
    p.set_defaults(func=cmd_rck)

    p = sub.add_parser("section", help="global-section verdict or search")
    common(p)
    p.add_argument("--search", action="store_true")
    p.add_argument("--budget", type=int, default=10_000)
    p.add_argument("--scenario", default=None, help="scenario whose free coefficients to search")
    p.add_argument("--trajectory", default=None, help="CSV trajectory output path")
    p.set_defaults(func=cmd_section)

    p = sub.add_parser("simulate", help="multi-round intervention dynamics")
    common(p)
    p.add_argument("--scenario", required=True)
    p.add_argument("--summary", default=None, help="summary JSON output path")
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 2
    try:
        return args.func(args)
    except ConfigError as exc:
        payload = {"ok": False, "error": str(exc)}
        if exc.report is not None:
            payload["report"] = exc.report.to_dict()
        print(jsonio.dumps(payload), file=sys.stderr)
        return 1
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(jsonio.dumps({"ok": False, "error": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
