"""``recombchain`` command line: one problem document, six reports.

Exit status is 0 on success, 2 for invalid or inapplicable input, 3 when a
resource guard trips and 4 when an exact identity fails to hold.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Any

from . import __version__
from .chain import build_chain, check_chain, survival_profile
from .errors import InvalidInputError, InvariantViolation, ResourceLimitError
from .measures import check_closure_marginals, check_marginal_preservation
from .mc import SimConfig, compare_with_exact, simulate
from .problem import (ProblemSpec, load_problem, partition_json, rational, subset_json,
                      weighted_partitions)
from .qsd import analyze, eigenvector_check, geometric_limit_check, q_process, qsd_verify, ratio_limit
from .rho import check_coefficients, coefficient_table, dyadic_kernel, generating_family
from .subsets import MAX_ENUMERATION_SITES, format_partition
from .trees import decompose_and_check

EXIT_OK, EXIT_INVALID, EXIT_RESOURCE, EXIT_INVARIANT = 0, 2, 3, 4


def _header(command: str, spec: ProblemSpec) -> dict[str, Any]:
    return {"command": command, "version": __version__, "input_sha256": spec.digest}


def _enforce(*reports) -> list[dict[str, Any]]:
    for r in reports:
        r.raise_if_failed()
    return [{"check": r.name, "passed": r.passed, "checked": r.checked} for r in reports]


def _closure_order(table) -> list[int]:
    return sorted(table.closure_sets, key=lambda k: (k.bit_count(), subset_json(k)))


def _measure_json(mu) -> list[dict[str, str]]:
    return [rational(x) for x in mu.flat()]


def cmd_atoms(spec: ProblemSpec, args) -> dict[str, Any]:
    table = coefficient_table(spec.rho)
    rho = spec.rho
    return {
        **_header("atoms", spec),
        "sites": spec.site_set.n_sites,
        **({"site_labels": list(spec.site_set.site_labels)} if spec.site_set.site_labels else {}),
        "support": [{"subset": subset_json(j), **rational(w)} for j, w in rho.weights.items()],
        "identity": rho.is_identity,
        "symmetric": rho.is_symmetric,
        "generating_family": [subset_json(j) for j in sorted(generating_family(rho))],
        "closure": [subset_json(k) for k in _closure_order(table)],
        "atoms": partition_json(table.atom_partition),
    }


def cmd_coeffs(spec: ProblemSpec, args) -> dict[str, Any]:
    table = coefficient_table(spec.rho)
    checks = _enforce(check_coefficients(table))
    rows = []
    for k in _closure_order(table):
        rows.append({
            "block": subset_json(k),
            "atom": table.is_atom(k),
            "coefficients": [{"trace": subset_json(m), **rational(w)} for m, w in table.row(k).items()],
            "kernel": [{"outcome": [subset_json(b) for b in choice], **rational(w)}
                       for choice, w in dyadic_kernel(table, k).items()],
        })
    return {**_header("coeffs", spec), "blocks": rows, "checks": checks}


def cmd_evolve(spec: ProblemSpec, args) -> dict[str, Any]:
    if spec.mu is None:
        raise InvalidInputError("evolve needs 'alphabet' and 'mu' in the problem document", "missing-measure")
    n = spec.n if args.n is None else args.n
    report = decompose_and_check(spec.rho, spec.mu, n)
    table = coefficient_table(spec.rho)
    checks = _enforce(report, check_marginal_preservation(table, spec.mu),
                      check_closure_marginals(table, spec.mu))
    return {
        **_header("evolve", spec),
        "n": n,
        "q": weighted_partitions(report.data["q"]),
        "iterated": _measure_json(report.data["iterated"]),
        "decomposed": _measure_json(report.data["decomposed"]),
        "checks": checks,
    }


def _model(spec: ProblemSpec):
    return build_chain(spec.rho, max_states=spec.max_states)


def cmd_chain(spec: ProblemSpec, args) -> dict[str, Any]:
    model = _model(spec)
    checks = _enforce(check_chain(model))
    horizon = spec.horizon if args.horizon is None else args.horizon
    profile = survival_profile(model, horizon)
    return {
        **_header("chain", spec),
        "states": [partition_json(s) for s in model.states],
        "absorbing": model.absorbing_index,
        "transitions": [
            [{"to": j, **rational(w)} for j, w in row.items()] for row in model.transitions
        ],
        "survival": [{"n": k, **rational(p)} for k, p in enumerate(profile.survival)],
        "checks": checks,
    }


def cmd_qsd(spec: ProblemSpec, args) -> dict[str, Any]:
    model = _model(spec)
    analysis = analyze(model)
    horizon = spec.horizon if args.horizon is None else args.horizon
    q = q_process(model, analysis)
    rows_ok = eigenvector_check(model, analysis)
    for s, total in q.row_sums().items():
        rows_ok.expect(total == 1, f"Q row at {format_partition(s)} sums to {total}")
    qsd = qsd_verify(model, analysis, analysis.quasi_limit, analysis.eta)
    checks = _enforce(check_chain(model), rows_ok, qsd)
    geometric = geometric_limit_check(model, analysis, n=horizon)
    return {
        **_header("qsd", spec),
        "eta": rational(analysis.eta),
        "beta0": rational(analysis.beta0),
        "second_level": rational(analysis.beta),
        "e_sets": [subset_json(k) for k in analysis.e_sets],
        "e_states": [partition_json(s) for s in analysis.e_states],
        "limit_constant": rational(analysis.limit_constant),
        "hit_probability": rational(analysis.hit_probability),
        "phi": weighted_partitions(analysis.phi),
        "quasi_limit": weighted_partitions(analysis.quasi_limit),
        "ratio_limits": weighted_partitions(
            {s: ratio_limit(model, analysis, s) for s in analysis.phi}),
        "q_matrix": [{"from": partition_json(s), "row": weighted_partitions(row)}
                     for s, row in q.q_matrix.items()],
        "geometric": {
            "horizon": horizon,
            "dag_depth": geometric.depth,
            "deviation_at_horizon": f"{geometric.deviation[-1]:.6e}",
            "within_1e-9": geometric.report.passed,
        },
        "checks": checks,
    }


def cmd_simulate(spec: ProblemSpec, args) -> dict[str, Any]:
    settings = spec.simulation
    seed = args.seed if args.seed is not None else settings.get("seed", 0)
    trajectories = args.trajectories if args.trajectories is not None else settings.get("trajectories", 10_000)
    default_mode = "chain" if spec.site_set.n_sites <= MAX_ENUMERATION_SITES else "kernel"
    mode = args.mode or settings.get("mode", default_mode)
    horizon = spec.horizon if args.horizon is None else args.horizon
    for name, value in (("seed", seed), ("trajectories", trajectories)):
        if isinstance(value, bool) or not isinstance(value, int):
            raise InvalidInputError(f"simulate.{name} must be an integer", "bad-sim-config")
    cfg = SimConfig(seed, trajectories, horizon, mode)
    model = _model(spec) if mode == "chain" else None
    sim = simulate(spec.rho, cfg, model)
    out = {
        **_header("simulate", spec),
        "seed": seed,
        "trajectories": trajectories,
        "mode": mode,
        "horizon": horizon,
        "occupancy": [
            [{"partition": partition_json(s), "count": c} for s, c in counts.items()]
            for counts in sim.occupancy
        ],
        "survival": sim.survival,
        "absorption_times": [{"n": k, "count": c} for k, c in sim.absorption_times.items()],
        "censored": sim.censored,
    }
    if model is not None:
        band = compare_with_exact(sim, model)
        out["within_4_sigma"] = {"passed": band.passed, "cells": band.checked,
                                 "outside": len(band.failures)}
    return out


COMMANDS = {
    "atoms": cmd_atoms,
    "coeffs": cmd_coeffs,
    "evolve": cmd_evolve,
    "chain": cmd_chain,
    "qsd": cmd_qsd,
    "simulate": cmd_simulate,
}


def _human(value: Any, indent: int = 0) -> list[str]:
    pad = "  " * indent
    if isinstance(value, dict):
        if set(value) == {"exact", "decimal"}:
            return [f"{pad}{value['exact']}  (~{value['decimal']})"]
        lines = []
        for key, item in value.items():
            if isinstance(item, dict) and set(item) == {"exact", "decimal"}:
                lines.append(f"{pad}{key}: {item['exact']}  (~{item['decimal']})")
            elif isinstance(item, (dict, list)) and item and not _flat(item):
                lines.append(f"{pad}{key}:")
                lines.extend(_human(item, indent + 1))
            else:
                lines.append(f"{pad}{key}: {_inline(item)}")
        return lines
    if isinstance(value, list):
        lines = []
        for item in value:
            if isinstance(item, dict) and item and all(_flat([v]) for v in item.values()):
                labels = "  ".join(f"{k}={_inline(v)}" for k, v in item.items() if k not in ("exact", "decimal"))
                if "exact" in item:
                    labels += f"  {item['exact']}  (~{item['decimal']})"
                lines.append(f"{pad}- {labels.strip()}")
                continue
            sub = _human(item, indent + 1)
            lines.append(f"{pad}- {sub[0].strip()}")
            lines.extend(sub[1:])
        return lines
    return [f"{pad}{_inline(value)}"]


def _flat(value) -> bool:
    if isinstance(value, list):
        return all(isinstance(v, (int, str, bool)) or (isinstance(v, list) and _flat(v)) for v in value)
    return False


def _inline(value) -> str:
    if isinstance(value, list):
        return "[" + ", ".join(_inline(v) for v in value) + "]"
    if isinstance(value, bool):
        return "yes" if value else "no"
    return str(value)


def render(report: dict[str, Any], fmt: str) -> str:
    if fmt == "machine":
        return json.dumps(report, indent=2, ensure_ascii=False) + "\n"
    return "\n".join(_human(report)) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="recombchain", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("problem", help="path to the problem document (JSON)")
        p.add_argument("--out", help="write the report here instead of standard output")
        p.add_argument("--format", choices=("human", "machine"), default="machine")
        p.add_argument("--max-states", type=int, help="largest chain state space to enumerate")
        p.add_argument("--max-dense", type=int, help="largest dense measure table")
        p.add_argument("--horizon", type=int, help="steps for survival profiles and simulation")
        p.add_argument("-n", type=int, help="number of operator iterations (evolve)")
        p.add_argument("--seed", type=int)
        p.add_argument("--trajectories", type=int)
        p.add_argument("--mode", choices=("chain", "kernel"))
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = load_problem(args.problem, max_states=args.max_states, max_dense=args.max_dense)
        report = COMMANDS[args.command](spec, args)
    except OSError as err:
        print(f"error: cannot read {args.problem}: {err.strerror}", file=sys.stderr)
        return EXIT_INVALID
    except InvalidInputError as err:
        print(f"error [{err.code}]: {err}", file=sys.stderr)
        return EXIT_INVALID
    except ResourceLimitError as err:
        print(f"resource limit: {err}", file=sys.stderr)
        return EXIT_RESOURCE
    except InvariantViolation as err:
        print(f"invariant violated: {err}", file=sys.stderr)
        return EXIT_INVARIANT
    text = render(report, args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
