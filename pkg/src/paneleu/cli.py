"""Command-line front end.

Every verb reads a model document, runs the corresponding pipeline and
prints a deterministic report to standard output; module errors map to
distinct nonzero exit codes with a one-line diagnostic on standard error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import reports
from .errors import EngineError
from .model import SemModel, load_model

DEFAULT_BIND = "127.0.0.1:8351"


def _add_common(parser: argparse.ArgumentParser, *, utility: bool = True) -> None:
    parser.add_argument("model", help="path to the model document (JSON)")
    parser.add_argument(
        "--format", choices=("table", "json"), default="table", help="output format"
    )
    if utility:
        parser.add_argument("--utility", default=None, help="utility class name (default: first declared)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="paneleu",
        description=(
            "Compile conditional expected utilities of a structural-equation "
            "decision model, derive the panel summaries and moment-independence "
            "conditions they require, and score candidate policies."
        ),
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("validate", help="check a model document against every invariant")
    _add_common(p, utility=False)

    p = sub.add_parser("paths", help="list the rooted paths and path monomials per vertex")
    _add_common(p, utility=False)

    p = sub.add_parser("compile", help="compile the CEU polynomial")
    _add_common(p)
    p.add_argument("--policy", default=None, help="restrict numeric output to one policy")
    p.add_argument(
        "--error-moments", choices=("truncate", "gaussian"), default="truncate",
        help="rule for reducing error powers to variance symbols",
    )
    p.add_argument(
        "--provenance", action="store_true", help="attach path-tuple provenance to each monomial"
    )

    p = sub.add_parser("independences", help="list the required cross-panel moment independences")
    _add_common(p)
    p.add_argument("--error-moments", choices=("truncate", "gaussian"), default="truncate")

    p = sub.add_parser("summaries", help="list the summaries each panel must deliver")
    _add_common(p)
    p.add_argument("--error-moments", choices=("truncate", "gaussian"), default="truncate")

    for verb in ("score", "rank"):
        p = sub.add_parser(verb, help=f"{verb} the policies by expected utility")
        _add_common(p)
        p.add_argument("--error-moments", choices=("truncate", "gaussian"), default="truncate")
        p.add_argument("--closure", choices=("gaussian", "direct"), default="gaussian")

    p = sub.add_parser("oracle", help="Monte Carlo estimate of the expected utilities")
    _add_common(p)
    p.add_argument("--policy", default=None, help="restrict to one policy")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    return parser


def _emit(args: argparse.Namespace, report: dict) -> int:
    if args.format == "json":
        sys.stdout.write(reports.to_json(report))
    else:
        sys.stdout.write(reports.render_text(report))
    return 0


def _load(args: argparse.Namespace, *, strict: bool = True) -> SemModel:
    return load_model(args.model, strict=strict)


def _run_validate(args: argparse.Namespace) -> int:
    model = _load(args, strict=False)
    report = reports.make_validate_report(model)
    _emit(args, report)
    return 0 if report["valid"] else 3


def _run_paths(args: argparse.Namespace) -> int:
    return _emit(args, reports.make_paths_report(_load(args)))


def _run_compile(args: argparse.Namespace) -> int:
    report = reports.make_compile_report(
        _load(args),
        utility=args.utility,
        error_policy=args.error_moments,
        policy=args.policy,
        provenance=args.provenance,
    )
    return _emit(args, report)


def _run_independences(args: argparse.Namespace) -> int:
    return _emit(
        args,
        reports.make_independences_report(
            _load(args), utility=args.utility, error_policy=args.error_moments
        ),
    )


def _run_summaries(args: argparse.Namespace) -> int:
    return _emit(
        args,
        reports.make_summaries_report(
            _load(args), utility=args.utility, error_policy=args.error_moments
        ),
    )


def _run_score(args: argparse.Namespace, kind: str) -> int:
    return _emit(
        args,
        reports.make_score_report(
            _load(args),
            utility=args.utility,
            error_policy=args.error_moments,
            closure=args.closure,
            kind=kind,
        ),
    )


def _run_oracle(args: argparse.Namespace) -> int:
    return _emit(
        args,
        reports.make_oracle_report(
            _load(args),
            utility=args.utility,
            policy=args.policy,
            samples=args.samples,
            seed=args.seed,
        ),
    )


def _run_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    bind = os.environ.get("PANELEU_BIND", DEFAULT_BIND)
    host, _, port_text = bind.partition(":")
    host = args.host or host or "127.0.0.1"
    port = args.port if args.port is not None else int(port_text or 8351)
    uvicorn.run(create_app(), host=host, port=port, log_level="warning")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    runners = {
        "validate": _run_validate,
        "paths": _run_paths,
        "compile": _run_compile,
        "independences": _run_independences,
        "summaries": _run_summaries,
        "score": lambda a: _run_score(a, "score"),
        "rank": lambda a: _run_score(a, "rank"),
        "oracle": _run_oracle,
        "serve": _run_serve,
    }
    try:
        return runners[args.verb](args)
    except EngineError as err:
        print(f"error: {err}", file=sys.stderr)
        return err.exit_code
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as err:
        print(f"error: model document is not valid JSON: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
