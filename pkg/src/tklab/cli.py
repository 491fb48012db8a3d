"""Command-line interface: ``tklab {verify-paper, check, witness-search, hsic}``.

Exit codes: 0 success or certified, 1 verification-suite failure, 2 input
error, 3 inconclusive search.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from importlib import resources

import numpy as np

from . import __version__, hsic, kernels, properties, verification
from .kernels import ContinuousKernel, NotPSDError
from .measure import ModeError, ShapeError
from .witness import search

EXIT_OK = 0
EXIT_SUITE_FAILED = 1
EXIT_INPUT = 2
EXIT_INCONCLUSIVE = 3

DEFAULT_BUDGET = 100_000
DEFAULT_SEED = 0
DEFAULT_DELTA = "1/100"
DEFAULT_PERMS = 199
BUNDLED = ("dependent", "independent")


class InputError(Exception):
    """Bad user input; reported with exit code 2."""


def _tolerances() -> dict:
    return {
        "float_psd_rtol": kernels.FLOAT_PSD_TOL,
        "search_threshold": search.DEFAULT_THRESHOLD,
        "search_max_denominator": search.DEFAULT_MAX_DENOMINATOR,
    }


def _emit(payload: dict, fmt: str, markdown: str | None, out) -> None:
    if fmt == "markdown" and markdown is not None:
        out.write(markdown)
    else:
        out.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _load_kernel(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON in {path}: {exc}") from None
    try:
        return kernels.as_product(kernels.kernel_from_json(data))
    except NotPSDError as exc:
        raise InputError(str(exc)) from None
    except (ValueError, TypeError, KeyError, ModeError) as exc:
        raise InputError(f"invalid kernel description: {exc}") from None


def _parse_delta(text: str) -> Fraction:
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise InputError(f"invalid --delta {text!r}") from None
    if value < 0:
        raise InputError("--delta must be non-negative")
    return value


# ---------------------------------------------------------------------------
# commands

def cmd_verify_paper(args, out) -> int:
    suite = verification.run_suite(inject_fault=args.inject_fault)
    payload = suite.to_json()
    payload["config"] = {
        "command": "verify-paper",
        "format": args.format,
        "inject_fault": args.inject_fault,
        "tolerances": _tolerances(),
        "version": __version__,
    }
    _emit(payload, args.format, suite.to_markdown(), out)
    if not suite.ok:
        sys.stderr.write(f"verification failed: {suite.first_failure}\n")
        return EXIT_SUITE_FAILED
    return EXIT_OK


def cmd_check(args, out) -> int:
    k = _load_kernel(args.kernel_file)
    delta = _parse_delta(args.delta)
    search_payload = None
    try:
        report = properties.check_kernel(k)
        if args.search and k.all_finite and report.product[properties.I_CHAR].status == properties.UNDECIDED:
            result = search.search_I_witness(k, budget=args.budget, seed=args.seed, delta=delta)
            search_payload = {k_: v for k_, v in result.to_json().items() if k_ != "witness"}
            if result.witness is not None:
                report = properties.decide_product_properties(list(k.components), [result.witness])
    except (TypeError, ValueError, ModeError) as exc:
        raise InputError(str(exc)) from None
    payload = report.to_json()
    payload["config"] = {
        "command": "check",
        "kernel_file": args.kernel_file,
        "search": args.search,
        "budget": args.budget,
        "seed": args.seed,
        "delta": str(delta),
        "format": args.format,
        "tolerances": _tolerances(),
        "version": __version__,
    }
    if search_payload is not None:
        payload["search"] = search_payload
    _emit(payload, args.format, report.to_markdown(), out)
    return EXIT_OK


def cmd_witness_search(args, out) -> int:
    k = _load_kernel(args.kernel_file)
    if not k.all_finite:
        raise InputError("witness search needs finite kernels; continuous kernels are rejected")
    delta = _parse_delta(args.delta)
    if args.budget < 1:
        raise InputError("--budget must be positive")
    try:
        result = search.search_I_witness(k, budget=args.budget, seed=args.seed, delta=delta)
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc)) from None
    payload = result.to_json()
    payload["config"] = {
        "command": "witness-search",
        "kernel_file": args.kernel_file,
        "budget": args.budget,
        "seed": args.seed,
        "delta": str(delta),
        "tolerances": _tolerances(),
        "version": __version__,
    }
    md = f"**{result.status}**: {result.message}\n"
    _emit(payload, args.format, md, out)
    if result.status == search.INCONCLUSIVE:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def parse_groups(text: str | None, n_columns: int) -> tuple:
    """``"0-1,2"`` to ``((0, 1), (2,))``; the groups must partition the columns."""
    if text is None:
        return tuple((c,) for c in range(n_columns))
    groups = []
    for token in text.split(","):
        token = token.strip()
        try:
            if "-" in token:
                lo, hi = (int(x) for x in token.split("-", 1))
                if hi < lo:
                    raise ValueError
                groups.append(tuple(range(lo, hi + 1)))
            else:
                groups.append((int(token),))
        except ValueError:
            raise InputError(f"invalid group {token!r} in --groups") from None
    cols = [c for g in groups for c in g]
    if len(set(cols)) != len(cols):
        raise InputError(f"overlapping column groups in --groups {text!r}")
    if sorted(cols) != list(range(n_columns)):
        raise InputError(f"--groups {text!r} must partition columns 0..{n_columns - 1}")
    return tuple(groups)


def read_csv(text: str) -> tuple:
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r]
    if len(rows) < 2:
        raise InputError("CSV needs a header row and at least one data row")
    header, body = rows[0], rows[1:]
    for i, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise InputError(f"ragged CSV: line {i} has {len(r)} fields, header has {len(header)}")
    try:
        data = np.array([[float(v) for v in r] for r in body])
    except ValueError as exc:
        raise InputError(f"non-numeric CSV value: {exc}") from None
    if not np.all(np.isfinite(data)):
        raise InputError("CSV contains missing or non-finite values")
    return header, data


def bundled_csv(name: str) -> str:
    return resources.files("tklab").joinpath("data", f"{name}.csv").read_text(encoding="utf-8")


def cmd_hsic(args, out) -> int:
    if (args.csv is None) == (args.bundled is None):
        raise InputError("give exactly one of CSV or --bundled")
    if args.bundled is not None:
        text, source = bundled_csv(args.bundled), f"bundled:{args.bundled}"
    else:
        try:
            with open(args.csv, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise InputError(f"cannot read {args.csv}: {exc}") from None
        source = args.csv
    header, data = read_csv(text)
    groups = parse_groups(args.groups, data.shape[1])
    if args.bandwidth is not None and args.bandwidth <= 0:
        raise InputError("--bandwidth must be positive")
    try:
        kern = ContinuousKernel(args.kernel, args.bandwidth)
        samples = hsic.SampleBlock(data, groups)
        result = hsic.permutation_test(samples, [kern] * len(groups), B=args.perms, seed=args.seed)
    except (ValueError, ShapeError) as exc:
        raise InputError(str(exc)) from None
    payload = result.to_json()
    payload["config"] = {
        "command": "hsic",
        "input": source,
        "columns": header,
        "groups": [list(g) for g in groups],
        "kernel": args.kernel,
        "bandwidth": args.bandwidth,
        "perms": args.perms,
        "seed": args.seed,
        "n": int(data.shape[0]),
        "version": __version__,
    }
    md = (
        f"| statistic | p-value | permutations | seed |\n|---|---|---|---|\n"
        f"| {result.statistic:.6g} | {result.p_value:.6g} | {result.permutations} | {result.seed} |\n"
    )
    _emit(payload, args.format, md, out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_INPUT)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tklab", description="Kernel embedding property checks and independence tests.")
    parser.add_argument("--version", action="version", version=f"tklab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("verify-paper", help="run the exact reference verification suite")
    p.add_argument("--format", choices=("json", "markdown"), default="json")
    p.add_argument("--inject-fault", choices=verification.FAULTS, default=None,
                   help="corrupt a fixture to exercise the failure path")
    p.set_defaults(func=cmd_verify_paper)

    p = sub.add_parser("check", help="decide the properties of a kernel given as JSON")
    p.add_argument("kernel_file", metavar="KERNEL_JSON")
    p.add_argument("--search", action="store_true", help="search for a witness when I-char is undecided")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--delta", default=DEFAULT_DELTA)
    p.add_argument("--format", choices=("json", "markdown"), default="json")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("witness-search", help="search for an exact I-char witness")
    p.add_argument("kernel_file", metavar="KERNEL_JSON")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--delta", default=DEFAULT_DELTA)
    p.add_argument("--format", choices=("json", "markdown"), default="json")
    p.set_defaults(func=cmd_witness_search)

    p = sub.add_parser("hsic", help="dHSIC permutation test on CSV data")
    p.add_argument("csv", nargs="?")
    p.add_argument("--bundled", choices=BUNDLED)
    p.add_argument("--groups", default=None, help='column groups, e.g. "0-1,2"')
    p.add_argument("--kernel", choices=kernels.CONTINUOUS_FAMILIES, default=kernels.GAUSSIAN)
    p.add_argument("--bandwidth", type=float, default=None, help="default: median heuristic")
    p.add_argument("--perms", type=int, default=DEFAULT_PERMS)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--format", choices=("json", "markdown"), default="json")
    p.set_defaults(func=cmd_hsic)
    return parser


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except InputError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
