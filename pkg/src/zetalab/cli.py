"""
zetalab command line.

    zetalab slopes|zeta|special|bockstein|verify|surface|selftest --input FILE
            [--gauge NAME] [--surface NAME] [--weight R | --weights A..B]
            [--json] [--stable]

Exit codes: 0 ok/verified, 1 verification failed, 2 inconsistent input or
unknown name, 3 parse or schema error.
"""

import argparse
import hashlib
import json
import logging
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from pydantic import ValidationError

try:
    from .bockstein import characteristic_summary
    from .config import config
    from .isocrystal import IsocrystalCharPoly, slope_decomposition
    from .padic_core import ZetalabError
    from .schema import InputDocument, InputError, MatrixDocument, UnresolvedNameError
    from .worker import execute_case
    from .zeta import (
        Verdict,
        mu_route_b,
        ord_at,
        special_value,
        special_value_norm,
        zeta_from_gauge,
    )
except ImportError:
    from bockstein import characteristic_summary
    from config import config
    from isocrystal import IsocrystalCharPoly, slope_decomposition
    from padic_core import ZetalabError
    from schema import InputDocument, InputError, MatrixDocument, UnresolvedNameError
    from worker import execute_case
    from zeta import (
        Verdict,
        mu_route_b,
        ord_at,
        special_value,
        special_value_norm,
        zeta_from_gauge,
    )

__version__ = "0.1.0"

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INCONSISTENT = 2
EXIT_PARSE = 3

CORPUS_DIR = Path(__file__).parent / "corpus"

# bundled Bockstein inputs and their (plain, stable) characteristics
SELFTEST_BOCKSTEIN = {
    "bockstein_nilpotent.json": (None, 0),
    "bockstein_scalar_p.json": (-1, -1),
}
SELFTEST_LAW_GAUGES = ("unit", "elliptic_a1")

logger = logging.getLogger(__name__)


def setup_logging() -> logging.Logger:
    """Rotating main/error logs plus a separate operations log; never stdout."""
    log_dir = config.log_dir
    level = getattr(logging, config.log_level, logging.INFO)
    fmt = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    try:
        os.makedirs(log_dir, exist_ok=True)
    except OSError:
        logging.basicConfig(level=level, format=fmt, stream=sys.stderr)
        return logging.getLogger("operations")

    error_handler = RotatingFileHandler(
        os.path.join(log_dir, "errors.log"),
        maxBytes=config.log_max_bytes,
        backupCount=config.log_backup_count,
    )
    error_handler.setLevel(logging.ERROR)
    logging.basicConfig(
        level=level,
        format=fmt,
        handlers=[
            RotatingFileHandler(
                os.path.join(log_dir, "zetalab.log"),
                maxBytes=config.log_max_bytes,
                backupCount=config.log_backup_count,
            ),
            error_handler,
        ],
    )

    operations_logger = logging.getLogger("operations")
    if not operations_logger.handlers:
        operations_handler = RotatingFileHandler(
            os.path.join(log_dir, "operations.log"),
            maxBytes=config.log_max_bytes,
            backupCount=config.log_backup_count,
        )
        operations_handler.setFormatter(logging.Formatter("%(asctime)s - %(levelname)s - %(message)s"))
        operations_logger.addHandler(operations_handler)
        operations_logger.setLevel(logging.INFO)
    return operations_logger


# ---------------------------------------------------------------------------
# Inputs and reports
# ---------------------------------------------------------------------------


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def digest(obj: Any) -> str:
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


def _read_json(path: str) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except OSError as e:
        raise InputError(f"Failed to read {path}: {e}")
    except json.JSONDecodeError as e:
        raise InputError(f"Invalid JSON in {path}: {e}")


def load_input(path: str) -> InputDocument:
    try:
        return InputDocument.model_validate(_read_json(path))
    except ValidationError as e:
        raise InputError(f"Schema error in {path}: {e}")


def load_matrix(path: str) -> MatrixDocument:
    try:
        return MatrixDocument.model_validate(_read_json(path))
    except ValidationError as e:
        raise InputError(f"Schema error in {path}: {e}")


def parse_weights(text: str) -> Tuple[int, int]:
    match = re.fullmatch(r"\s*(-?\d+)\s*\.\.\s*(-?\d+)\s*", text)
    if not match:
        raise InputError(f"weights must look like A..B, got '{text}'")
    low, high = int(match.group(1)), int(match.group(2))
    if low > high:
        raise InputError(f"empty weight range {low}..{high}")
    return low, high


def envelope(command: str, input_digest: str, results: Any) -> dict:
    return {
        "tool": "zetalab",
        "version": __version__,
        "schema_version": config.report_schema_version,
        "command": command,
        "input_digest": input_digest,
        "results": results,
    }


def run_cases(cases: Sequence[Tuple[tuple, str, dict]]) -> List[Tuple[tuple, dict]]:
    """Run (key, kind, payload) cases, in a process pool when configured; sorted by key."""
    workers = config.max_workers
    if workers <= 1 or len(cases) <= 1:
        outcomes = [(key, execute_case(kind, payload)) for key, kind, payload in cases]
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = [(key, executor.submit(execute_case, kind, payload)) for key, kind, payload in cases]
            outcomes = [(key, future.result()) for key, future in futures]
    return sorted(outcomes, key=lambda item: item[0])


def verdict_exit_code(verdicts: Sequence[str]) -> int:
    if any(v == Verdict.INCONSISTENT.value for v in verdicts):
        return EXIT_INCONSISTENT
    if any(v == Verdict.FAILED.value for v in verdicts):
        return EXIT_FAILED
    return EXIT_OK


def _table(headers: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    cells = [[str(h) for h in headers]] + [[("-" if c is None else str(c)) for c in row] for row in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(headers))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _weights_for(args, spec) -> List[int]:
    if args.weight is not None:
        return [args.weight]
    if args.weights is not None:
        low, high = parse_weights(args.weights)
    else:
        low, high = spec.weight_range(config.hodge_margin)
    return list(range(low, high + 1))


def _gauge_names(args, document: InputDocument) -> List[str]:
    if args.gauge:
        return [args.gauge]
    if not document.gauges:
        raise UnresolvedNameError("the input defines no gauges")
    return sorted(document.gauges)


# ---------------------------------------------------------------------------
# Commands; each returns (exit code, results, input digest, text)
# ---------------------------------------------------------------------------


def cmd_slopes(args) -> Tuple[int, Any, str, str]:
    document = load_input(args.input)
    results = {}
    lines = []
    for name in _gauge_names(args, document):
        spec = document.gauge(name)
        z = zeta_from_gauge(spec)
        degrees = []
        rows = []
        for j, P in z.factors:
            data = slope_decomposition(IsocrystalCharPoly(spec.ctx, P))
            degrees.append({"degree": j, "slopes": [d.to_dict() for d in data]})
            rows.extend((j, str(d.slope), d.multiplicity) for d in data)
        results[name] = degrees
        lines.append(f"gauge {name}\n" + _table(["degree", "slope", "multiplicity"], rows))
    return EXIT_OK, results, digest(document.model_dump(mode="json")), "\n\n".join(lines)


def cmd_zeta(args) -> Tuple[int, Any, str, str]:
    document = load_input(args.input)
    results = {}
    lines = []
    for name in _gauge_names(args, document):
        spec = document.gauge(name)
        z = zeta_from_gauge(spec)
        entry: Dict[str, Any] = {"factors": z.to_dict()}
        text = [f"gauge {name}"] + [f"  P_{j}(t) = {P}" for j, P in z.factors]
        if args.weight is not None or args.weights is not None:
            entry["orders"] = {str(r): ord_at(z, r) for r in _weights_for(args, spec)}
            text.extend(f"  rho at r={r}: {rho}" for r, rho in entry["orders"].items())
        results[name] = entry
        lines.append("\n".join(text))
    return EXIT_OK, results, digest(document.model_dump(mode="json")), "\n\n".join(lines)


def cmd_special(args) -> Tuple[int, Any, str, str]:
    document = load_input(args.input)
    results = {}
    rows = []
    for name in _gauge_names(args, document):
        spec = document.gauge(name)
        z = zeta_from_gauge(spec)
        per_weight = {}
        for r in _weights_for(args, spec):
            route_b = mu_route_b(z, r)
            a = special_value_norm(z, r)
            per_weight[str(r)] = {
                "rho": ord_at(z, r),
                "lhs_exponent": a,
                "lhs_norm": f"p^{a}",
                "limit": str(special_value(z, r)),
                "mu_exponent": route_b.exponent,
                "mu_syn": f"p^{route_b.exponent}",
                "degrees": [d.to_dict() for d in route_b.degrees],
                "issues": list(route_b.issues),
            }
            rows.append((name, r, ord_at(z, r), f"p^{a}", f"p^{route_b.exponent}", str(special_value(z, r))))
        results[name] = per_weight
    text = _table(["gauge", "r", "rho", "|lim|_p", "mu_syn", "limit"], rows)
    return EXIT_OK, results, digest(document.model_dump(mode="json")), text


def _verify_cases(document: InputDocument, names: Sequence[str], args) -> List[Tuple[tuple, str, dict]]:
    dump = document.model_dump(mode="json")
    cases = []
    for name in names:
        spec = document.gauge(name)
        for r in _weights_for(args, spec):
            cases.append(((name, r), "verify", {"document": dump, "gauge": name, "weight": r}))
    return cases


def _collect_verdicts(outcomes: Sequence[Tuple[tuple, dict]]) -> Tuple[Dict[str, Any], List[str], list]:
    results: Dict[str, Any] = {}
    verdicts: List[str] = []
    rows = []
    for (name, r), outcome in outcomes:
        if outcome["success"]:
            report = outcome["result"]
            verdict = report["verdict"]
            rows.append((name, r, report["rho"], report["lhs_exponent"], report["mu_exponent"], report["chi"], verdict))
        else:
            report = {"error": outcome["error"], "error_type": outcome["error_type"]}
            verdict = Verdict.INCONSISTENT.value
            rows.append((name, r, None, None, None, None, f"error: {outcome['error_type']}"))
        verdicts.append(verdict)
        results.setdefault(name, {})[str(r)] = report
    return results, verdicts, rows


def cmd_verify(args) -> Tuple[int, Any, str, str]:
    document = load_input(args.input)
    names = _gauge_names(args, document)
    outcomes = run_cases(_verify_cases(document, names, args))
    results, verdicts, rows = _collect_verdicts(outcomes)
    text = _table(["gauge", "r", "rho", "a", "b", "chi", "verdict"], rows)
    return verdict_exit_code(verdicts), results, digest(document.model_dump(mode="json")), text


def _bockstein_result(document: MatrixDocument, stable: bool) -> dict:
    result = characteristic_summary(document.to_endo_module())
    if not stable:
        result.pop("stable")
    return result


def cmd_bockstein(args) -> Tuple[int, Any, str, str]:
    document = load_matrix(args.input)
    result = _bockstein_result(document, args.stable)
    plain = "undefined" if result["plain"] is None else result["plain"]
    text = [f"kernel: {result['kernel']}", f"cokernel: {result['cokernel']}", f"chi: {plain}"]
    if args.stable:
        text.append(f"stable chi: {result['stable']} (k = {result['stabilization_index']})")
    return EXIT_OK, result, digest(document.model_dump(mode="json")), "\n".join(text)


def cmd_surface(args) -> Tuple[int, Any, str, str]:
    document = load_input(args.input)
    if args.surface:
        names = [args.surface]
    elif document.surfaces:
        names = sorted(document.surfaces)
    else:
        raise UnresolvedNameError("the input defines no surfaces")
    dump = document.model_dump(mode="json")
    cases = []
    for name in names:
        surface = document.surface(name)
        document.gauge(surface.gauge)
        cases.append(((name,), "surface", {"document": dump, "surface": name}))
    results = {}
    code = EXIT_OK
    rows = []
    for (name,), outcome in run_cases(cases):
        if not outcome["success"]:
            results[name] = {"error": outcome["error"], "error_type": outcome["error_type"]}
            code = EXIT_INCONSISTENT
            rows.append((name, None, None, None, None, f"error: {outcome['error_type']}"))
            continue
        report = outcome["result"]
        results[name] = report
        if not report["agrees"] or not report["gram_size_ok"]:
            code = max(code, EXIT_FAILED)
        rows.append(
            (name, report["rho"], report["beta_norm"], report["brauer_value"], report["parity"], report["verdict"])
        )
    text = _table(["surface", "rho", "beta", "[Br]", "parity", "verdict"], rows)
    return code, results, digest(dump), text


def _corpus_document(name: str) -> InputDocument:
    return load_input(str(CORPUS_DIR / name))


def cmd_selftest(args) -> Tuple[int, Any, str, str]:
    """Bundled corpus: every gauge verified, inconsistent inputs flagged, laws, surfaces, Bockstein values."""
    low, high = parse_weights(args.weights) if args.weights else config.weights
    weights = list(range(low, high + 1))
    documents = {
        "gauges.json": _corpus_document("gauges.json"),
        "gauges_f25.json": _corpus_document("gauges_f25.json"),
        "inconsistent.json": _corpus_document("inconsistent.json"),
    }
    matrices = {name: load_matrix(str(CORPUS_DIR / name)) for name in SELFTEST_BOCKSTEIN}

    cases = []
    for file_name in ("gauges.json", "gauges_f25.json", "inconsistent.json"):
        document = documents[file_name]
        dump = document.model_dump(mode="json")
        case_weights = [1] if file_name == "inconsistent.json" else weights
        for gauge_name in sorted(document.gauges):
            for r in case_weights:
                payload = {"document": dump, "gauge": gauge_name, "weight": r}
                cases.append(((file_name, "verify", gauge_name, r), "verify", payload))
    main_dump = documents["gauges.json"].model_dump(mode="json")
    for gauge_name in SELFTEST_LAW_GAUGES:
        for i in range(-2, 3):
            for r in weights:
                payload = {"document": main_dump, "gauge": gauge_name, "weight": r, "twist": i, "shift": 1}
                cases.append((("gauges.json", "laws", f"{gauge_name}{{{i}}}", r), "laws", payload))
    for surface_name in sorted(documents["gauges.json"].surfaces):
        payload = {"document": main_dump, "surface": surface_name}
        cases.append((("gauges.json", "surface", surface_name, 0), "surface", payload))

    failures = []
    results: Dict[str, Any] = {}
    for (file_name, kind, name, r), outcome in run_cases(cases):
        label = f"{file_name}:{kind}:{name}:{r}"
        if not outcome["success"]:
            failures.append(f"{label}: {outcome['error_type']}: {outcome['error']}")
            continue
        result = outcome["result"]
        if kind == "verify":
            expected = Verdict.INCONSISTENT.value if file_name == "inconsistent.json" else Verdict.VERIFIED.value
            ok = result["verdict"] == expected
            summary = {
                "verdict": result["verdict"],
                "a": result["lhs_exponent"],
                "b": result["mu_exponent"],
                "chi": result["chi"],
            }
        elif kind == "laws":
            ok = all(c["holds"] for c in result["checks"])
            summary = {"holds": ok}
        else:
            ok = result["verdict"] == "consistent" and result["parity"] == "even"
            summary = {"beta": result["beta"], "brauer_value": result["brauer_value"], "parity": result["parity"]}
        if not ok:
            failures.append(f"{label}: unexpected result {summary}")
        results.setdefault(file_name, {}).setdefault(kind, {}).setdefault(name, {})[str(r)] = summary

    for name, (plain, stable) in SELFTEST_BOCKSTEIN.items():
        got = _bockstein_result(matrices[name], stable=True)
        results.setdefault(name, {})["bockstein"] = {"plain": got["plain"], "stable": got["stable"]}
        if got["plain"] != plain or got["stable"] != stable:
            failures.append(f"{name}: expected ({plain}, {stable}), got ({got['plain']}, {got['stable']})")

    results["failures"] = failures
    input_digest = digest(
        {
            **{name: doc.model_dump(mode="json") for name, doc in documents.items()},
            **{name: doc.model_dump(mode="json") for name, doc in matrices.items()},
        }
    )
    text = f"selftest: {len(cases) + len(matrices)} cases, {len(failures)} failures"
    if failures:
        text += "\n" + "\n".join(f"  {f}" for f in failures)
    return (EXIT_FAILED if failures else EXIT_OK), results, input_digest, text


COMMANDS = {
    "slopes": cmd_slopes,
    "zeta": cmd_zeta,
    "special": cmd_special,
    "bockstein": cmd_bockstein,
    "verify": cmd_verify,
    "surface": cmd_surface,
    "selftest": cmd_selftest,
}


class _Parser(argparse.ArgumentParser):
    """Usage errors are input errors (exit 3), not argparse's exit 2."""

    def error(self, message):
        raise InputError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit a canonical JSON report")
    weights = common.add_mutually_exclusive_group()
    weights.add_argument("--weight", type=int, help="a single weight r")
    weights.add_argument("--weights", help="inclusive weight range A..B")

    parser = _Parser(prog="zetalab", description="p-adic special values of F-gauges")
    parser.add_argument("--version", action="version", version=f"zetalab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("slopes", "zeta", "special", "verify", "surface"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--input", required=True, help="input document (zetalab/input-v1)")
        p.add_argument("--gauge", help="gauge name; all gauges when omitted")
        if name == "surface":
            p.add_argument("--surface", help="surface name; all surfaces when omitted")
    p = sub.add_parser("bockstein", parents=[common])
    p.add_argument("--input", required=True, help="matrix document (zetalab/matrix-v1)")
    p.add_argument("--stable", action="store_true", help="also compute the stable characteristic")
    p = sub.add_parser("selftest", parents=[common])
    p.add_argument("--input", help="ignored; selftest always runs the bundled corpus")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    operations_logger = setup_logging()
    try:
        args = build_parser().parse_args(argv)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE

    try:
        code, results, input_digest, text = COMMANDS[args.command](args)
    except UnresolvedNameError as e:
        logger.warning(f"{args.command}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INCONSISTENT
    except InputError as e:
        logger.warning(f"{args.command}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except ZetalabError as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INCONSISTENT

    operations_logger.info(f"{args.command} input={getattr(args, 'input', None)} exit={code} digest={input_digest}")
    if args.json:
        sys.stdout.write(canonical_json(envelope(args.command, input_digest, results)) + "\n")
    else:
        print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
