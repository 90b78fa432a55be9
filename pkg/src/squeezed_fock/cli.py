"""Command-line interface: design schemes, herald, sweep, compare, verify.

Exit codes: 0 success, 1 a verification check failed, 2 invalid input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import re
import sys
from dataclasses import dataclass, field
from math import floor
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .cascade import DEFAULT_SEED, compare_schemes, universal_reference
from .detector_loss import EfficiencySpec, fidelity_formula, lossy_fidelity_numeric
from .gaussian_model import SigmaMatrix, UniversalSchemeParams, universal_sigma
from .heralding import DetectionPattern, heralded_state, total_probability
from .oracle import CostGuardError, DEFAULT_ORDER, herald_fidelity
from .special_math import WaveParams
from .synthesis import SchemeDecomposition, decompose, last_transmittance, squeezed_pair, total_mean_photons
from .verification import perturb_entry, run_checks

SCHEMA = "v1"
P_TABLE_MAX = 6

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    flags: dict = field(default_factory=dict)
    out: Path | None = None
    seed: int = DEFAULT_SEED


def parse_range(text: str) -> list[float]:
    """``start:stop:step`` (stop included within half a step) or one number."""
    parts = text.split(":")
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise UsageError(f"cannot parse range {text!r}") from None
    if len(values) == 1:
        return values
    if len(values) != 3:
        raise UsageError(f"range {text!r} must look like start:stop:step")
    start, stop, step = values
    if not step > 0:
        raise UsageError("range step must be positive")
    count = floor((stop - start) / step + 0.5) + 1
    if count < 1:
        raise UsageError(f"range {text!r} is empty")
    return [round(start + i * step, 12) for i in range(count)]


def _scalar(text: str) -> float:
    values = parse_range(text)
    if len(values) != 1:
        raise UsageError(f"expected a single value, got {text!r}")
    return values[0]


def parse_counts(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(c) for c in text.split(","))
    except ValueError:
        raise UsageError(f"cannot parse counts {text!r}") from None


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g")
    return "" if v is None else str(v)


def csv_text(kind: str, columns: Sequence[str], notes: Sequence[str], rows) -> str:
    buf = io.StringIO()
    buf.write(f"# squeezed-fock {__version__} sweep {kind}\n")
    for note in notes:
        buf.write(f"# {note}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def _params_from_args(args) -> UniversalSchemeParams:
    if args.optimal_for is not None:
        if args.a:
            raise UsageError("--a and --optimal-for are mutually exclusive")
        if args.optimal_for < 1:
            raise UsageError("--optimal-for needs n >= 1 (n = 0 has no finite optimum)")
        return UniversalSchemeParams.with_universal_parameter(args.n_modes, 2.0 * args.optimal_for + 1.0, args.r)
    if not args.a:
        raise UsageError("give --a values or --optimal-for n")
    return UniversalSchemeParams(args.n_modes, tuple(args.a), args.r)


def scheme_document(p: UniversalSchemeParams) -> dict:
    x = p.universal_parameter
    d = decompose(p)
    return {
        "schema": SCHEMA,
        "n_modes": p.n_modes,
        "r": p.r,
        "a": list(p.a),
        "X": x,
        "sigma": universal_sigma(p).to_dict(),
        "decomposition": d.to_dict(),
        "mean_photons": total_mean_photons(d),
        "probabilities": [{"n": n, "P": total_probability(x, n)} for n in range(P_TABLE_MAX + 1)],
    }


def load_scheme(path: str) -> tuple[UniversalSchemeParams, dict]:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read scheme {path}: {exc}") from None
    if doc.get("schema") != SCHEMA:
        raise UsageError(f"scheme {path} has schema {doc.get('schema')!r}, expected {SCHEMA!r}")
    p = UniversalSchemeParams(int(doc["n_modes"]), tuple(doc["a"]), float(doc["r"]))
    stored = SigmaMatrix.from_dict(doc["sigma"]).entries
    if not np.allclose(stored, universal_sigma(p).entries, rtol=1e-12, atol=1e-12):
        raise UsageError(f"scheme {path}: sigma does not match its parameters")
    SchemeDecomposition.from_dict(doc["decomposition"])
    return p, doc


def cmd_design(args, cfg: RunConfig) -> int:
    p = _params_from_args(args)
    _emit(json.dumps(scheme_document(p), indent=2) + "\n", cfg.out)
    return EXIT_OK


def cmd_herald(args, cfg: RunConfig) -> int:
    p, _ = load_scheme(args.scheme)
    d = DetectionPattern(parse_counts(args.counts))
    pred = heralded_state(p, d)
    doc = {
        "schema": SCHEMA,
        "counts": list(d.counts),
        "n": pred.sfs.n,
        "r": pred.sfs.r,
        "probability": pred.probability,
    }
    if args.check:
        f, prob = herald_fidelity(universal_sigma(p).entries, d.counts, pred.sfs, args.quad_order)
        doc["oracle"] = {"fidelity": f, "probability": prob, "order": args.quad_order}
    _emit(json.dumps(doc, indent=2) + "\n", cfg.out)
    return EXIT_OK


def _sweep_probability(args) -> str:
    n_values = [int(v) for v in parse_range(args.n)]
    xs = parse_range(args.X)
    rows = [(x, n, total_probability(x, n)) for n in n_values for x in sorted(xs)]
    notes = ["X: universal parameter sum(a) - N + 2", "probability: 2 (X-1)^n / (X+1)^(n+1)"]
    return csv_text("probability", ["X", "n", "probability"], notes, rows)


def _sweep_fidelity(args) -> str:
    x = _scalar(args.X)
    n = int(_scalar(args.n))
    rows = []
    for eta in sorted(parse_range(args.eta)):
        exact = fidelity_formula(x, n, eta)
        numeric = None
        if args.numeric and eta > 0 and n <= 2:
            p = UniversalSchemeParams.with_universal_parameter(2, x, _scalar(args.r))
            numeric = lossy_fidelity_numeric(p, DetectionPattern((n,)), EfficiencySpec(eta))
        rows.append((eta, x, n, exact, numeric))
    notes = [
        "F_analytic: (((X-1) eta^2 + 2) / (X+1))^(n+1)",
        "F_numeric: purification quadrature, two-mode scheme (blank when not computed)",
    ]
    return csv_text("fidelity", ["eta", "X", "n", "F_analytic", "F_numeric"], notes, rows)


def _sweep_squeezing(args) -> str:
    x = _scalar(args.X)
    rows = []
    for r in sorted(parse_range(args.r)):
        p = UniversalSchemeParams.with_universal_parameter(args.n_modes, x, r)
        big, small = squeezed_pair(x, r)
        rows.append((r, x, last_transmittance(x, r), 0.5 * np.log(big), 0.5 * np.log(small),
                     total_mean_photons(decompose(p))))
    notes = [
        "t_last: transmittance of the last beam splitter",
        "r_sq1, r_sq2: squeezings of the two non-vacuum inputs",
        "mean_photons: sum of sinh(r_i)^2 over inputs",
    ]
    return csv_text("squeezing", ["r", "X", "t_last", "r_sq1", "r_sq2", "mean_photons"], notes, rows)


COMPARE_COLUMNS = ["r", "scheme", "n1", "n2", "fidelity", "probability", "max_sq_db", "energy"]
COMPARE_NOTES = [
    "universal: optimal three-mode scheme at X = 2n + 1",
    "cascade: most probable parameters with fidelity >= 1 - 1e-4",
    "max_sq_db: 20 |r_i| / ln 10 of the most squeezed input; energy: sum of sinh(r_i)^2",
]


def _comparison_rows(r_values, n, seed, cascade: bool):
    rows = []
    for r in sorted(r_values):
        p_u, db_u, e_u = universal_reference(r, n)
        rows.append((r, "universal", None, None, 1.0, p_u, db_u, e_u))
        if cascade:
            for rec in compare_schemes(r, n, seed):
                rows.append((r, "cascade", rec.n1, rec.n2, rec.fidelity_cascade, rec.p_cascade,
                             rec.max_sq_db_cascade, rec.energy_cascade))
    return rows


def _sweep_energy(args, cfg: RunConfig) -> str:
    rows = _comparison_rows(parse_range(args.r), 3, cfg.seed, args.compare_cascade)
    return csv_text("energy", COMPARE_COLUMNS, COMPARE_NOTES, rows)


def cmd_sweep(args, cfg: RunConfig) -> int:
    if args.quantity == "probability":
        text = _sweep_probability(args)
    elif args.quantity == "fidelity":
        text = _sweep_fidelity(args)
    elif args.quantity == "squeezing":
        text = _sweep_squeezing(args)
    else:
        text = _sweep_energy(args, cfg)
    _emit(text, cfg.out)
    return EXIT_OK


def cmd_compare(args, cfg: RunConfig) -> int:
    rows = _comparison_rows(parse_range(args.r), args.n, cfg.seed, True)
    _emit(csv_text("compare-cascade", COMPARE_COLUMNS, COMPARE_NOTES, rows), cfg.out)
    return EXIT_OK


def cmd_verify(args, cfg: RunConfig) -> int:
    hook = None
    if args.perturb:
        idx = parse_counts(args.perturb)
        if len(idx) != 2 or min(idx) < 0:
            raise UsageError("--perturb takes two nonnegative indices i,j")
        hook = perturb_entry(*idx)
    results = run_checks(args.level, cfg.seed, args.quad_order, hook)
    lines = []
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        lines.append(f"{status}  {res.name:<36} max deviation {res.deviation:.3e} (tol {res.tolerance:.0e})")
    failed = [r.name for r in results if not r.passed]
    lines.append("all checks passed" if not failed else "failed: " + ", ".join(failed))
    _emit("\n".join(lines) + "\n", cfg.out)
    return EXIT_FAILED if failed else EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", type=Path, default=None, help="write output here instead of stdout")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"random seed (default {DEFAULT_SEED})")
    common.add_argument("--quad-order", type=int, default=DEFAULT_ORDER, help="oracle quadrature order")

    parser = _Parser(prog="squeezed-fock", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("design", parents=[common], help="universal scheme as JSON")
    p.add_argument("--n-modes", type=int, required=True)
    p.add_argument("--r", type=float, default=0.0)
    p.add_argument("--a", type=float, nargs="+", default=None)
    p.add_argument("--optimal-for", type=int, default=None, metavar="N")

    p = sub.add_parser("herald", parents=[common], help="heralded state for a detection pattern")
    p.add_argument("--scheme", required=True, help="scheme JSON written by design")
    p.add_argument("--counts", required=True, help="comma-separated counts, one per detector")
    p.add_argument("--check", action="store_true", help="also evaluate fidelity with the oracle")

    p = sub.add_parser("sweep", parents=[common], help="CSV sweeps")
    p.add_argument("quantity", choices=["probability", "fidelity", "squeezing", "energy"])
    p.add_argument("--X", default="7")
    p.add_argument("--n", default="3")
    p.add_argument("--r", default="0")
    p.add_argument("--eta", default="0:1:0.1")
    p.add_argument("--n-modes", type=int, default=3)
    p.add_argument("--numeric", action="store_true", help="add oracle values where supported")
    p.add_argument("--compare-cascade", action="store_true")

    p = sub.add_parser("compare-cascade", parents=[common], help="universal vs cascade, n = 3")
    p.add_argument("--r", default="-1:1:0.25")
    p.add_argument("--n", type=int, default=3)

    p = sub.add_parser("verify", parents=[common], help="oracle cross-checks")
    p.add_argument("level", nargs="?", choices=["fast", "full"], default="fast")
    p.add_argument("--perturb", default=None, help=argparse.SUPPRESS)
    return parser


COMMANDS = {
    "design": cmd_design,
    "herald": cmd_herald,
    "sweep": cmd_sweep,
    "compare-cascade": cmd_compare,
    "verify": cmd_verify,
}


RANGE_FLAGS = ("--X", "--n", "--r", "--eta")


def _join_negative_values(argv: Sequence[str]) -> list[str]:
    # argparse reads "-1:1:0.1" as an option; glue it to its flag
    out: list[str] = []
    it = iter(argv)
    for tok in it:
        if tok in RANGE_FLAGS:
            nxt = next(it, None)
            if nxt is None:
                out.append(tok)
            elif re.match(r"^-[\d.]", nxt):
                out.append(f"{tok}={nxt}")
            else:
                out.extend([tok, nxt])
        else:
            out.append(tok)
    return out


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    argv = _join_negative_values(sys.argv[1:] if argv is None else list(argv))
    try:
        args = parser.parse_args(argv)
        if args.seed < 0 or args.seed >= 2**64:
            raise UsageError("--seed must be an unsigned 64-bit integer")
        cfg = RunConfig(args.command, vars(args), args.out, args.seed)
        return COMMANDS[args.command](args, cfg)
    except (UsageError, CostGuardError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
