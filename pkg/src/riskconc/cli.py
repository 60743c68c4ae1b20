"""Command-line experiment runner.

``riskconc <subcommand> --config exp.yaml --out results.csv``; see README for
the config layout.  Exit codes: 0 success, 1 self-test failure, 2 config
error, 3 a bound that the config marks as required is not applicable.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import Iterable, Sequence

import yaml

from . import experiments as X

EXIT_OK, EXIT_SELFTEST, EXIT_CONFIG, EXIT_NOT_APPLICABLE = 0, 1, 2, 3


def fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return f"{v:.12g}"
    return str(v)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])


def load_config(path: str, kind: str, seed_override: int | None) -> X.ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise X.ConfigError("--config", str(exc)) from None
    except yaml.YAMLError as exc:
        raise X.ConfigError("--config", f"not valid YAML: {exc}") from None
    cfg = X.parse_config(raw if raw is not None else {}, kind)
    if seed_override is not None:
        cfg = replace(cfg, seed=seed_override)
    return cfg


def _output(cfg: X.ExperimentConfig, out: str | None) -> Path:
    target = out or cfg.output
    if not target:
        raise X.ConfigError("output", "no output path (use --out or set 'output')")
    return Path(target)


def _sibling(path: Path, suffix: str) -> Path:
    return path.with_name(f"{path.stem}{suffix}")


def cmd_estimate(cfg, out: Path, threads: int) -> int:
    rows, summary = X.run_estimate(cfg, threads)
    write_csv(out, X.ESTIMATE_HEADER, rows)
    write_csv(_sibling(out, "_summary.csv"), X.SUMMARY_HEADER, summary)
    return EXIT_OK


def cmd_concentration(cfg, out: Path, threads: int) -> int:
    res = X.run_concentration(cfg, threads)
    write_csv(out, X.CONCENTRATION_HEADER, res.rows)
    if cfg.require_applicable and res.any_inapplicable:
        print("error: a required bound is not applicable for some (n, eps)", file=sys.stderr)
        return EXIT_NOT_APPLICABLE
    return EXIT_OK


def cmd_continuity(cfg, out: Path, threads: int) -> int:
    rows = X.run_continuity(cfg, threads)
    write_csv(out, X.CONTINUITY_HEADER, rows)
    bad = sum(1 for r in rows if not r[-1])
    if bad:
        print(f"warning: inequality violated on {bad} of {len(rows)} rows", file=sys.stderr)
    return EXIT_OK


def cmd_bandit(cfg, out: Path, threads: int) -> int:
    res = X.run_bandit(cfg, threads)
    write_csv(out, X.BANDIT_HEADER, res.aggregate)
    if res.traces:
        folder = _sibling(out, "_traces")
        header = X.trace_header(len(cfg.bandit.arms))
        for (n, s), tr in sorted(res.traces.items()):
            write_csv(folder / f"n{n}_seed{s}.csv", header, X.trace_rows(tr))
    return EXIT_OK


COMMANDS = {
    "estimate": cmd_estimate,
    "concentration": cmd_concentration,
    "continuity": cmd_continuity,
    "bandit": cmd_bandit,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="riskconc", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"run a {name} experiment")
        p.add_argument("--config", required=True, help="YAML experiment file")
        p.add_argument("--out", help="output CSV (overrides 'output' in the config)")
        p.add_argument("--threads", type=int, default=1, help="worker threads (default 1)")
        p.add_argument("--seed-override", type=int, default=None, help="replace the config seed")
    st = sub.add_parser("selftest", help="check closed forms against brute-force oracles")
    st.add_argument("--seed-override", type=int, default=None)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "selftest":
        results = X.selftest(args.seed_override or 0)
        for name, ok, detail in results:
            print(f"{'PASS' if ok else 'FAIL'}  {name}  ({detail})")
        return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_SELFTEST
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed_override is not None and not 0 <= args.seed_override < 2**64:
        print("error: --seed-override must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config, args.command, args.seed_override)
        out = _output(cfg, args.out)
        return COMMANDS[args.command](cfg, out, args.threads)
    except X.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
