"""Command-line front end.

Exit codes: 0 success, 1 usage or parse error, 2 mathematical failure
(invalid object, norm bound violated), 3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .discrimination import ConvexStrategySet, DegenerateInstanceError, guessing_game, separator
from .fileio import (
    SCHEMA_VERSION,
    ProblemFileError,
    encode_matrix,
    load_problem,
    measuring_dict,
    parse_problem,
    strategy_dict,
    write_json,
)
from .linalg import NotHermitianError
from .norms import (
    NormBoundError,
    decompose_unit_ball,
    diamond_norm,
    dual_strategy_norm,
    max_output_probability,
    strategy_norm,
)
from .sdp import SolverError
from .strategies import (
    InvalidStrategyError,
    MeasuringStrategy,
    Role,
    StrategyRep,
    interaction_probability,
    operational_to_choi,
    operational_to_measuring,
    simulate_interaction,
    validate,
    validate_measuring,
)

EXIT_OK, EXIT_USAGE, EXIT_MATH, EXIT_SOLVER = 0, 1, 2, 3
LOG_ENV = "STRATNORM_LOG_LEVEL"

log = logging.getLogger("stratnorm.cli")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _header(command, paths) -> dict:
    return {"schema_version": SCHEMA_VERSION, "command": command,
            "input": [Path(p).name for p in paths]}


def _solver_opts(pf, args) -> dict:
    opts = pf.solver_options()
    if getattr(args, "tol", None) is not None:
        opts["tol_gap"] = args.tol
    return opts


def _require_kind(pf, *kinds):
    if pf.kind not in kinds:
        raise ProblemFileError(f"{pf.path}: expected kind {' or '.join(kinds)}, got {pf.kind!r}")


def _norm_payload(res) -> dict:
    cert = strategy_dict(res.certificate_op)
    cert["scale"] = res.certificate_p
    return {"value": res.value, "gap": res.gap, "primal_value": res.primal_value,
            "dual_value": res.dual_value, "status": res.status,
            "iterations": res.iterations, "residuals": dict(res.residuals),
            "operators": {"optimizer": measuring_dict(res.optimizer), "certificate": cert}}


def _witness_rows(w) -> list[str]:
    rows = [f"  {name:<12s} {value:.3e}" for name, value in sorted(w.residuals.items())]
    rows.append(f"  {'tolerance':<12s} {w.tol:.3e}  -> {'PASS' if w.ok else 'FAIL'}")
    return rows


# ---------------------------------------------------------------------------
# commands; each returns (exit code, result dict, text lines)


def _validate_object(pf):
    if pf.kind == "strategy":
        return {"object": validate(pf.operator("S"), pf.shape, pf.role)}
    if pf.kind == "measuring":
        return {"object": validate_measuring(pf.measuring())}
    if pf.kind == "set":
        return {f"vertex {k}": validate(pf.operator(k), pf.shape, pf.role) for k in pf.operators}
    if pf.kind == "operational":
        return {"object": validate(operational_to_choi(pf.operational()).op, pf.shape, pf.role)}
    raise ProblemFileError(f"{pf.path}: kind {pf.kind!r} has nothing to validate")


def cmd_validate(args, path):
    raw = _read_raw(path)
    if "command" in raw:
        objs = [(name, parse_problem(sub, f"{path}:{name}"))
                for name, sub in sorted(raw.get("operators", {}).items())
                if isinstance(sub, dict) and sub.get("kind") in ("strategy", "measuring")]
        if not objs:
            raise ProblemFileError(f"{path}: result file holds no validatable objects")
    else:
        objs = [("object", parse_problem(raw, path))]
    result = _header("validate", [path])
    text, ok_all, report = [], True, {}
    for name, pf in objs:
        for sub, w in _validate_object(pf).items():
            key = sub if name == "object" else (name if sub == "object" else f"{name}: {sub}")
            text.append(f"{key} ({pf.role.value}):")
            text.extend(_witness_rows(w))
            report[key] = {"residuals": dict(w.residuals), "tolerance": w.tol, "ok": w.ok}
            ok_all &= w.ok
    result.update(ok=ok_all, objects=report)
    return (EXIT_OK if ok_all else EXIT_MATH), result, text


def cmd_norm(args, path):
    pf = load_problem(path)
    _require_kind(pf, "hermitian")
    fn = dual_strategy_norm if args.dual else strategy_norm
    res = fn(pf.hermitian(), pf.shape, **_solver_opts(pf, args))
    result = _header("norm", [path])
    result.update(_norm_payload(res), dual=bool(args.dual))
    name = "dual strategy norm" if args.dual else "strategy norm"
    return EXIT_OK, result, [f"{name}: {res.value:.12g}", f"gap: {res.gap:.3e}"]


def cmd_diamond(args, path):
    pf = load_problem(path)
    _require_kind(pf, "choi")
    if pf.shape.r != 1:
        raise ProblemFileError(f"{path}: diamond norm needs a one-round shape")
    res = diamond_norm(pf.choi(), pf.shape.in_dims[0], pf.shape.out_dims[0],
                       **_solver_opts(pf, args))
    result = _header("diamond", [path])
    result.update(_norm_payload(res))
    return EXIT_OK, result, [f"diamond norm: {res.value:.12g}", f"gap: {res.gap:.3e}"]


def cmd_max_output(args, path):
    pf = load_problem(path)
    _require_kind(pf, "measuring")
    ms = pf.measuring()
    if args.outcome not in ms.labels:
        raise ProblemFileError(f"{path}: unknown outcome {args.outcome!r}; have {list(ms.labels)}")
    validate_measuring(ms).require()
    res = max_output_probability(ms, args.outcome, **_solver_opts(pf, args))
    payload = _norm_payload(res.norm)
    payload["operators"]["witness"] = strategy_dict(res.witness)
    result = _header("max-output", [path])
    result.update(payload, outcome=args.outcome)
    return EXIT_OK, result, [f"max probability of outcome {args.outcome}: {res.value:.12g}",
                             f"certificate scale p: {res.certificate_p:.12g}"]


def cmd_decompose(args, path):
    pf = load_problem(path)
    _require_kind(pf, "hermitian")
    x = pf.hermitian()
    res = strategy_norm(x, pf.shape, **_solver_opts(pf, args))
    ms = decompose_unit_ball(x, pf.shape, result=res)
    w = validate_measuring(ms)
    err = float(np.abs((ms["0"] - ms["1"]).matrix - x.matrix).max())
    result = _header("decompose", [path])
    result.update(value=res.value, gap=res.gap,
                  residuals={**w.residuals, "difference": err},
                  operators={"decomposition": measuring_dict(ms)}, ok=w.ok)
    code = EXIT_OK if w.ok else EXIT_MATH
    return code, result, [f"strategy norm: {res.value:.12g}",
                          f"decomposition residual: {err:.3e}",
                          f"ladder check: {'PASS' if w.ok else 'FAIL'}"]


def _as_set(pf) -> ConvexStrategySet:
    if pf.kind == "set":
        return ConvexStrategySet(pf.vertices())
    if pf.kind == "strategy":
        return ConvexStrategySet([pf.strategy()])
    if pf.kind == "operational":
        return ConvexStrategySet([operational_to_choi(pf.operational())])
    raise ProblemFileError(f"{pf.path}: expected kind set, strategy or operational")


def cmd_discriminate(args, path_a, path_b):
    a, b = _as_set(load_problem(path_a)), _as_set(load_problem(path_b))
    opts = {k: v for k, v in load_problem(path_a).solver_options().items()}
    if args.tol is not None:
        opts["tol_gap"] = args.tol
    res = separator(a, b, **opts)
    lam, mu = res.minimizing_weights
    r0, r1 = res.closest_pair
    p = guessing_game(res.separator, StrategyRep(r0, a.shape, a.role),
                      StrategyRep(r1, a.shape, a.role))
    h, alpha = res.hyperplane
    result = _header("discriminate", [path_a, path_b])
    result.update(value=res.distance, distance=res.distance, gap=res.gap, status=res.status,
                  weights={"a": lam, "b": mu}, margins=res.margins,
                  success_probability=p, guaranteed_success=res.success_probability,
                  residuals=dict(res.residuals), hyperplane_offset=alpha,
                  operators={"separator": measuring_dict(res.separator),
                             "hyperplane": encode_matrix(h)})
    text = [f"distance: {res.distance:.12g}",
            f"weights A: {np.array2string(lam, precision=6)}",
            f"weights B: {np.array2string(mu, precision=6)}",
            f"min margin: {res.margins.min():.12g}",
            f"success probability at closest pair: {p:.12g}"]
    return EXIT_OK, result, text


def _as_measuring(pf) -> MeasuringStrategy:
    if pf.kind == "measuring":
        return pf.measuring()
    if pf.kind == "strategy":
        return MeasuringStrategy.single(pf.strategy())
    if pf.kind == "operational":
        return operational_to_measuring(pf.operational())
    raise ProblemFileError(f"{pf.path}: expected kind measuring, strategy or operational")


def cmd_simulate(args, path_s, path_t):
    ps, pt = load_problem(path_s), load_problem(path_t)
    if ps.role is not Role.STRATEGY or pt.role is not Role.COSTRATEGY:
        raise ProblemFileError("simulate needs a strategy file and then a co-strategy file")
    s, t = _as_measuring(ps), _as_measuring(pt)
    for ms in (s, t):
        validate_measuring(ms).require()
    dist = interaction_probability(s, t)
    total = sum(dist.values())
    result = _header("simulate", [path_s, path_t])
    result.update(value=total, distribution={f"{a},{b}": v for (a, b), v in sorted(dist.items())},
                  residuals={"normalization": abs(total - 1.0)})
    text = [f"p({a},{b}) = {v:.12g}" for (a, b), v in sorted(dist.items())]
    text.append(f"total: {total:.12g}")
    if args.oracle:
        if ps.kind != "operational" or pt.kind != "operational":
            raise ProblemFileError("--oracle needs operational descriptions of both parties")
        sim = simulate_interaction(ps.operational(), pt.operational())
        dev = max(abs(sim[k] - dist[k]) for k in dist)
        result["oracle_distribution"] = {f"{a},{b}": v for (a, b), v in sorted(sim.items())}
        result["residuals"]["oracle_deviation"] = dev
        text.append(f"max deviation from operational simulation: {dev:.3e}")
    return EXIT_OK, result, text


# ---------------------------------------------------------------------------
# driver


def _read_raw(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise ProblemFileError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ProblemFileError(f"{path}: invalid JSON ({exc})") from None


def _run_one(job):
    """Run one command invocation, mapping exceptions to exit codes."""
    fn, args, paths = job
    try:
        return fn(args, *paths)
    except (ProblemFileError, UsageError) as exc:
        return EXIT_USAGE, None, [f"error: {exc}"]
    except (SolverError, DegenerateInstanceError) as exc:
        return EXIT_SOLVER, None, [f"solver failure: {exc}"]
    except NormBoundError as exc:
        return EXIT_MATH, None, [f"norm bound violated: strategy norm {exc.norm:.12g} > 1"]
    except (InvalidStrategyError, NotHermitianError, ValueError) as exc:
        return EXIT_MATH, None, [f"invalid input: {exc}"]


COMMANDS = {
    "validate": cmd_validate,
    "norm": cmd_norm,
    "diamond": cmd_diamond,
    "max-output": cmd_max_output,
    "decompose": cmd_decompose,
    "discriminate": cmd_discriminate,
    "simulate": cmd_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="stratnorm", description="Strategy norms, discrimination and validation "
                                              "for multi-round quantum interactions.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def multi(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("files", nargs="+")
        sp.add_argument("--out", help="result JSON path (a directory when several files are given)")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes over input files")
        return sp

    multi("validate", "check the ladder constraints of a (measuring) strategy or co-strategy")
    sp = multi("norm", "strategy norm of a Hermitian operator")
    sp.add_argument("--dual", action="store_true", help="compute the dual norm instead")
    sp.add_argument("--tol", type=float, help="relative duality-gap tolerance")
    sp = multi("diamond", "diamond norm of a one-round Choi matrix")
    sp.add_argument("--tol", type=float)
    sp = multi("max-output", "largest probability a counterpart can force for one outcome")
    sp.add_argument("--outcome", required=True)
    sp.add_argument("--tol", type=float)
    sp = multi("decompose", "write a unit-norm operator as a measuring-strategy difference")
    sp.add_argument("--tol", type=float)

    sp = sub.add_parser("discriminate", help="distance and separator between two strategy sets")
    sp.add_argument("file_a")
    sp.add_argument("file_b")
    sp.add_argument("--out")
    sp.add_argument("--tol", type=float)
    sp = sub.add_parser("simulate", help="outcome distribution of a strategy/co-strategy pair")
    sp.add_argument("strategy_file")
    sp.add_argument("costrategy_file")
    sp.add_argument("--oracle", action="store_true",
                    help="also run the round-by-round simulation and compare")
    sp.add_argument("--out")
    return p


def _configure_logging():
    level = os.environ.get(LOG_ENV)
    if level:
        logging.basicConfig(level=level.upper(), format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    fn = COMMANDS[args.command]
    if args.command == "discriminate":
        jobs = [(fn, args, (args.file_a, args.file_b))]
    elif args.command == "simulate":
        jobs = [(fn, args, (args.strategy_file, args.costrategy_file))]
    else:
        jobs = [(fn, args, (f,)) for f in args.files]
    n_jobs = getattr(args, "jobs", 1)
    if n_jobs < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    if n_jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as ex:
            outcomes = list(ex.map(_run_one, jobs))
    else:
        outcomes = [_run_one(j) for j in jobs]

    out = Path(args.out) if args.out else None
    many = len(jobs) > 1
    if out is not None and many:
        out.mkdir(parents=True, exist_ok=True)
    worst = EXIT_OK
    for (_, _, paths), (code, result, text) in zip(jobs, outcomes):
        if many:
            print(f"== {paths[0]}")
        stream = sys.stdout if code == EXIT_OK else sys.stderr
        for line in text:
            print(line, file=stream if result is None else sys.stdout)
        if out is not None and result is not None:
            result["exit_code"] = code
            write_json(out / f"{Path(paths[0]).stem}.json" if many else out, result)
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
