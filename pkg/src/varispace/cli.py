"""Command-line front end.

Subcommands: fit, spectrum, detect-knee, modify, eer, sweep, synth.
Exit codes: 0 success, 1 validation/data error, 2 numerical failure,
3 I/O failure. Every failure prints a single ``error:<category>:`` line on
stderr so scripts can dispatch on the category.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__
from .embeddings import detect_format, load_embeddings, load_trials, save_embeddings
from .errors import DataError, NumericalError
from .scoring import (
    build_enrollment,
    compute_eer,
    run_sweep,
    score_trials,
    write_sweep_csv,
)
from .space import (
    delta_spectrum,
    detect_turning,
    fit,
    load_space,
    save_space,
    write_spectrum_csv,
)
from .subspace import modify_batch_with_reports, parse_spec
from .synth import generate, load_population_config


class _Parser(argparse.ArgumentParser):
    # Usage mistakes are data errors (exit 1), not argparse's default exit 2,
    # which is reserved for numerical failures.
    def error(self, message):
        self.exit(1, f"error:data:{message}\n")


def _fmt(value: float) -> str:
    return format(value, ".17g")


def _parse_k_range(text: str) -> list[int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise DataError(f"bad size range '{text}': expected <first>:<last>:<step>")
    try:
        first, last, step = (int(p) for p in parts)
    except ValueError:
        raise DataError(f"bad size range '{text}': fields must be integers") from None
    if first < 0 or last < first or step < 1:
        raise DataError(
            f"bad size range '{text}': need 0 <= first <= last and step >= 1"
        )
    return list(range(first, last + 1, step))


def _cmd_fit(args) -> int:
    embeddings = load_embeddings(args.embeddings, format=args.format)
    space = fit(embeddings)
    save_space(space, args.out)
    lam = space.eigenvalues
    head = ",".join(_fmt(v) for v in lam[:5])
    tail = ",".join(_fmt(v) for v in lam[-5:])
    print(f"n={len(embeddings)} dim={space.dim}")
    print(f"eigenvalues_top5={head}")
    print(f"eigenvalues_bottom5={tail}")
    print(f"wrote={args.out}")
    return 0


def _cmd_spectrum(args) -> int:
    space = load_space(args.space)
    write_spectrum_csv(space, args.out)
    print(f"dim={space.dim}")
    print(f"wrote={args.out}")
    return 0


def _cmd_detect_knee(args) -> int:
    space = load_space(args.space)
    deltas = delta_spectrum(space)
    result = detect_turning(
        deltas, window=args.window, oscillation_tol=args.tolerance
    )
    flag = "weak" if result.weak else "strong"
    print(f"i_s={result.index} flag={flag}")
    return 0


def _cmd_modify(args) -> int:
    space = load_space(args.space)
    spec = parse_spec(args.spec)
    embeddings = load_embeddings(args.embeddings, format="auto")
    modified, reports = modify_batch_with_reports(space, embeddings, spec)
    out_format = args.format if args.format != "auto" else detect_format(args.embeddings)
    save_embeddings(modified, args.out, format=out_format)
    mean_removed = float(np.mean([r.removed_energy for r in reports]))
    print(f"records={len(modified)} mean_removed_energy={_fmt(mean_removed)}")
    print(f"wrote={args.out}")
    return 0


def _cmd_eer(args) -> int:
    enroll_set = load_embeddings(args.enroll, format=args.format)
    test_set = load_embeddings(args.test, format=args.format)
    trials = load_trials(args.trials)
    wanted = {t.enroll_speaker for t in trials}
    available = set(enroll_set.speakers())
    enrollments = {
        s: build_enrollment(enroll_set, s) for s in sorted(wanted & available)
    }
    result = compute_eer(score_trials(enrollments, test_set, trials))
    print(
        f"eer_percent={_fmt(result.eer_percent)} "
        f"threshold={_fmt(result.threshold_at_eer)} "
        f"n_target={result.n_target} n_nontarget={result.n_nontarget}"
    )
    return 0


def _cmd_sweep(args) -> int:
    space = load_space(args.space)
    embeddings = load_embeddings(args.embeddings, format=args.format)
    trials = load_trials(args.trials)
    sizes = _parse_k_range(args.k)
    result = run_sweep(
        space,
        embeddings,
        trials,
        family=args.family,
        k_values=sizes,
        turning_dim=args.turning,
        clean_enrollment=args.clean_enroll,
    )
    write_sweep_csv(result, args.out)
    for row in result.rows:
        print(f"family={row.family} size={row.size} eer_percent={_fmt(row.eer_percent)}")
    print(f"wrote={args.out} rows={len(result.rows)}")
    return 0


def _cmd_synth(args) -> int:
    config = load_population_config(args.config)
    embeddings = generate(config)
    save_embeddings(embeddings, args.out, format=args.format)
    print(
        f"n_speakers={config.n_speakers} "
        f"utts_per_speaker={config.utts_per_speaker} records={len(embeddings)}"
    )
    print(f"wrote={args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="varispace",
        description=(
            "Fit embedding variability spaces, remove subspace contributions, "
            "and evaluate the machine-perception effect with cosine/EER scoring."
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="fit a variability space from embeddings")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out", required=True, help="output space file")
    p.add_argument("--format", choices=["auto", "csv", "binary"], default="auto")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("spectrum", help="emit the log-eigenvalue/delta CSV")
    p.add_argument("--space", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("detect-knee", help="locate the candidate turning dimension")
    p.add_argument("--space", required=True)
    p.add_argument("--window", type=int, default=10)
    p.add_argument("--tolerance", type=float, default=0.05)
    p.set_defaults(func=_cmd_detect_knee)

    p = sub.add_parser("modify", help="zero a subspace's coefficients in every embedding")
    p.add_argument("--space", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--spec", required=True, help="subspace spec [family:]<start>:<size>:<+|->")
    p.add_argument("--out", required=True)
    p.add_argument(
        "--format",
        choices=["auto", "csv", "binary"],
        default="auto",
        help="output format; auto matches the input",
    )
    p.set_defaults(func=_cmd_modify)

    p = sub.add_parser("eer", help="score trials and report the pooled EER")
    p.add_argument("--enroll", required=True, help="embeddings used for enrollment models")
    p.add_argument("--test", required=True, help="embeddings used for test sides")
    p.add_argument("--trials", required=True)
    p.add_argument("--format", choices=["auto", "csv", "binary"], default="auto")
    p.set_defaults(func=_cmd_eer)

    p = sub.add_parser("sweep", help="EER vs removed-block size for one family")
    p.add_argument("--space", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--trials", required=True)
    p.add_argument("--family", required=True, choices=["primary", "secondary", "residual"])
    p.add_argument(
        "--is",
        dest="turning",
        type=int,
        default=None,
        help="turning dimension anchoring the secondary family",
    )
    p.add_argument("--k", required=True, help="size range <first>:<last>:<step>, inclusive")
    p.add_argument("--out", required=True)
    p.add_argument(
        "--clean-enroll",
        action="store_true",
        help="build enrollment models from the unmodified embeddings",
    )
    p.add_argument("--format", choices=["auto", "csv", "binary"], default="auto")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("synth", help="generate a synthetic speaker population")
    p.add_argument("--config", required=True, help="key=value population config")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["csv", "binary"], default="csv")
    p.set_defaults(func=_cmd_synth)

    return parser


def _one_line(message: str) -> str:
    return " ".join(str(message).split())


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"error:data:{_one_line(exc)}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"error:numerical:{_one_line(exc)}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error:io:{_one_line(exc)}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
