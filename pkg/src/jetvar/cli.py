"""Command-line front end.

Exit codes: 0 success, 1 mathematical verdict false / extraction failed,
2 input or parse error, 3 undecided (invariant violation, unsupported class,
timeout).
"""
from __future__ import annotations

import argparse
import json
import signal
import sys
from pathlib import Path
from typing import Any

from .bundle import BundleSpec, FieldSpec
from .cancel import CancelToken, cancellation
from .catalog import MODEL_NAMES, Model, builtin_model
from .expr import DEFAULT_ORDER_BOUND
from .errors import (
    Cancelled,
    ExpressionClassError,
    ExtractionError,
    InvariantViolation,
    JetError,
    OrderBoundExceeded,
    ParseError,
)
from .jet import Density, EvolutionaryField, SourceEquation
from .natural import generalized_divergence, is_natural
from .variational import (
    conserved_current,
    euler_lagrange,
    is_null_lagrangian,
    is_symmetry,
    tonti_lagrangian,
)

EXIT_OK, EXIT_FALSE, EXIT_INPUT, EXIT_UNDECIDED = 0, 1, 2, 3


class InputError(Exception):
    pass


class Outcome:
    def __init__(self, status: str, result: Any, lines: list[str], code: int = EXIT_OK):
        self.status = status
        self.result = result
        self.lines = lines
        self.code = code


# ---------------------------------------------------------------------------
# model files

def load_model_file(path: str | Path, order_bound: int | None = None) -> Model:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"cannot read model file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"model file is not valid JSON: {exc}") from None
    return model_from_document(doc, default_name=path.stem, order_bound=order_bound)


def model_from_document(doc: dict, default_name: str = "model",
                        order_bound: int | None = None) -> Model:
    if not isinstance(doc, dict):
        raise InputError("model file must contain a JSON object")
    try:
        bound = order_bound or doc.get("order_bound") or DEFAULT_ORDER_BOUND
        bundle = BundleSpec(int(doc["dimension"]),
                            tuple(FieldSpec(f["name"], f["kind"]) for f in doc["fields"]),
                            int(bound))
    except (KeyError, TypeError) as exc:
        raise InputError(f"model file is missing or has a malformed entry: {exc}") from None
    except ValueError as exc:
        raise InputError(str(exc)) from None
    texts = doc.get("expressions", {})

    def lookup(ref: str):
        if ref not in texts:
            raise InputError(f"expression {ref!r} is not defined in 'expressions'")
        try:
            return bundle.parse(texts[ref])
        except ParseError as exc:
            raise InputError(f"expression {ref!r}: {exc}") from None

    def vector(spec: dict, cls):
        try:
            return cls(bundle, {label: lookup(ref) for label, ref in spec.items()})
        except (ValueError, KeyError) as exc:
            raise InputError(str(exc)) from None

    lagrangian = Density(lookup(doc["lagrangian"])) if doc.get("lagrangian") else None
    source = vector(doc["source"], SourceEquation) if doc.get("source") else None
    fields = {name: vector(spec, EvolutionaryField)
              for name, spec in sorted(doc.get("vectorfields", {}).items())}
    try:
        return Model(doc.get("name", default_name), bundle, lagrangian, source, fields,
                     doc.get("notes", ""))
    except ValueError as exc:
        raise InputError(str(exc)) from None


def model_to_document(model: Model) -> dict:
    b = model.bundle
    exprs: dict[str, str] = {}
    doc: dict[str, Any] = {
        "name": model.name,
        "dimension": b.n,
        "fields": [{"name": f.name, "kind": f.kind} for f in b.fields],
        "order_bound": b.order_bound,
    }
    if model.lagrangian is not None:
        exprs["L"] = str(model.lagrangian.coeff)
        doc["lagrangian"] = "L"
    if model.source is not None:
        doc["source"] = {}
        for key, v in model.source.items():
            ref = f"T[{b.label(key)}]"
            exprs[ref] = str(v)
            doc["source"][b.label(key)] = ref
    if model.known_symmetries:
        doc["vectorfields"] = {}
        for name, V in model.known_symmetries.items():
            doc["vectorfields"][name] = {}
            for key, v in V.items():
                ref = f"{name}[{b.label(key)}]"
                exprs[ref] = str(v)
                doc["vectorfields"][name][b.label(key)] = ref
    doc["expressions"] = exprs
    if model.notes:
        doc["notes"] = model.notes
    return doc


# ---------------------------------------------------------------------------
# commands

def _need_lagrangian(model: Model) -> Density:
    if model.lagrangian is None:
        raise InputError(f"model {model.name!r} has no lagrangian")
    return model.lagrangian


def _need_field(model: Model, name: str | None) -> EvolutionaryField:
    if not name:
        raise InputError("--field NAME is required")
    try:
        return model.known_symmetries[name]
    except KeyError:
        known = ", ".join(model.known_symmetries) or "none"
        raise InputError(f"model {model.name!r} has no vector field {name!r} (known: {known})") from None


def _verdict(label: str, value: bool, exit_on_false: bool) -> Outcome:
    text = "true" if value else "false"
    code = EXIT_FALSE if (exit_on_false and not value) else EXIT_OK
    return Outcome("ok" if value else "false", {label: value}, [f"{label}: {text}"], code)


def cmd_el(model: Model, args) -> Outcome:
    T = euler_lagrange(_need_lagrangian(model), model.bundle)
    b = model.bundle
    return Outcome("ok", {b.label(k): str(v) for k, v in T.items()}, T.as_text("T"))


def cmd_check_variational(model: Model, args) -> Outcome:
    T = model.source_equation()
    try:
        L = tonti_lagrangian(T)
    except ExpressionClassError as exc:
        if model.lagrangian is not None:
            out = _verdict("variational", True, True)
            out.result["method"] = "constructive"
            return out
        raise _Undecided(f"cannot decide: {exc}") from None
    verdict = (euler_lagrange(L, model.bundle) - T).is_zero
    out = _verdict("variational", verdict, True)
    out.result["method"] = "tonti"
    return out


def cmd_null(model: Model, args) -> Outcome:
    return _verdict("null", is_null_lagrangian(_need_lagrangian(model), model.bundle), False)


def cmd_symmetry(model: Model, args) -> Outcome:
    V = _need_field(model, args.field)
    return _verdict("symmetry", is_symmetry(V, model.source_equation()), False)


def cmd_current(model: Model, args) -> Outcome:
    V = _need_field(model, args.field)
    try:
        omega = conserved_current(V, model.source_equation())
    except ExpressionClassError as exc:
        raise _Undecided(str(exc)) from None
    except ExtractionError as exc:
        return Outcome("failed", {"residual": str(exc.residual)},
                       ["current: failed", f"residual = {exc.residual}"], EXIT_FALSE)
    lines = [f"omega[{i}] = {w}" for i, w in enumerate(omega.comps, start=1)]
    return Outcome("ok", {str(i): str(w) for i, w in enumerate(omega.comps, start=1)}, lines)


def cmd_divergence(model: Model, args) -> Outcome:
    div = generalized_divergence(model.source_equation(), model.bundle)
    return Outcome("ok", {str(i): str(c) for i, c in enumerate(div.comps, start=1)},
                   div.as_text())


def cmd_check_natural(model: Model, args) -> Outcome:
    return _verdict("natural", is_natural(model.source_equation(), model.bundle), True)


class _Undecided(Exception):
    pass


COMMANDS = {
    "el": (cmd_el, "print the Euler-Lagrange source equation of the model's lagrangian"),
    "check-variational": (cmd_check_variational, "decide local variationality of the source"),
    "null": (cmd_null, "decide whether the lagrangian is a null lagrangian"),
    "symmetry": (cmd_symmetry, "decide whether --field is a symmetry of the source"),
    "current": (cmd_current, "conserved current generated by --field"),
    "divergence": (cmd_divergence, "generalized divergence of the source"),
    "check-natural": (cmd_check_natural, "decide naturality (Div T = 0)"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", choices=("text", "json"), default="text")
    common.add_argument("--order-bound", type=int, default=None, metavar="K")
    common.add_argument("--timeout", type=float, default=None, metavar="SECONDS")

    parser = argparse.ArgumentParser(prog="jetvar",
                                     description="Variational calculus on jet bundles.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text)
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--model", metavar="FILE")
        src.add_argument("--builtin", metavar="NAME")
        if name in ("symmetry", "current"):
            p.add_argument("--field", metavar="NAME")
    sub.add_parser("list-models", parents=[common], help="list built-in models")
    p = sub.add_parser("export-model", parents=[common], help="print a built-in model as JSON")
    p.add_argument("name")
    return parser


def _emit(args, model_name: str | None, outcome: Outcome, out) -> None:
    if getattr(args, "output", "text") == "json":
        doc = {"command": args.command, "model": model_name, "result": outcome.result,
               "status": outcome.status}
        out.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    else:
        for line in outcome.lines:
            out.write(line + "\n")


def _resolve_model(args) -> Model:
    if args.builtin is not None:
        try:
            model = builtin_model(args.builtin)
        except KeyError as exc:
            raise InputError(exc.args[0]) from None
        if args.order_bound is not None:
            model = Model(model.name, model.bundle.with_order_bound(args.order_bound),
                          model.lagrangian, model.source, model.known_symmetries, model.notes)
        return model
    return load_model_file(args.model, args.order_bound)


def run_command(argv: list[str], out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT

    if args.command == "list-models":
        _emit(args, None, Outcome("ok", list(MODEL_NAMES), list(MODEL_NAMES)), out)
        return EXIT_OK
    if args.command == "export-model":
        try:
            doc = model_to_document(builtin_model(args.name))
        except KeyError as exc:
            return _fail(args, args.name, "input-error", exc.args[0], EXIT_INPUT, out, err)
        if args.output == "json":
            _emit(args, args.name, Outcome("ok", doc, []), out)
        else:
            out.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")
        return EXIT_OK

    model_name = args.builtin or args.model
    token = CancelToken(args.timeout)
    previous = _install_sigint(token)
    try:
        with cancellation(token):
            model = _resolve_model(args)
            model_name = model.name if args.builtin else model_name
            outcome = COMMANDS[args.command][0](model, args)
    except (InputError, ParseError, OrderBoundExceeded) as exc:
        return _fail(args, model_name, "input-error", str(exc), EXIT_INPUT, out, err)
    except (InvariantViolation, _Undecided, Cancelled, ExpressionClassError) as exc:
        return _fail(args, model_name, "undecided", str(exc), EXIT_UNDECIDED, out, err)
    except JetError as exc:
        return _fail(args, model_name, "undecided", str(exc), EXIT_UNDECIDED, out, err)
    finally:
        _restore_sigint(previous)
    _emit(args, model_name, outcome, out)
    return outcome.code


def _fail(args, model_name, status: str, message: str, code: int, out, err) -> int:
    if getattr(args, "output", "text") == "json":
        _emit(args, model_name, Outcome(status, {"error": message}, []), out)
    else:
        err.write(f"jetvar: {message}\n")
    return code


def _install_sigint(token: CancelToken):
    try:
        return signal.signal(signal.SIGINT, lambda *_: token.cancel())
    except ValueError:  # not in the main thread
        return None


def _restore_sigint(previous) -> None:
    if previous is not None:
        try:
            signal.signal(signal.SIGINT, previous)
        except ValueError:
            pass


def main(argv: list[str] | None = None) -> int:
    return run_command(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
