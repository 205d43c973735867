"""Command-line interface: ``sqlab {sweep,coverage,calibrate,verify,demo-sgd}``.

Exit codes: 0 success (for ``coverage``: a witness with identical
transcripts was found), 1 checked negative (no witness, failed
verification), 2 usage error, 3 internal error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import experiments as ex

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3


def _parser():
    p = argparse.ArgumentParser(prog="sqlab", description="Statistical query detection experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (("sweep", "risk sweep over the signal grid (CSV)"),
                        ("coverage", "coverage certificate (JSON)"),
                        ("calibrate", "calibrated detector threshold (JSON)"),
                        ("verify", "numerical self-checks"),
                        ("demo-sgd", "SQ proximal-gradient demo (CSV trace)")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", type=Path, help="JSON config document")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--out", type=Path, help="output file (default: stdout)")
        sp.add_argument("--threads", type=int, help="worker threads")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=JSON",
                        help="override a top-level config key, e.g. --set d=20")
    return p


def load_config(args) -> ex.ExperimentConfig:
    data = {}
    if args.config is not None:
        try:
            text = args.config.read_text()
        except OSError as e:
            raise ex.ConfigError(f"cannot read config: {e}") from None
        data = json.loads(text) if text.strip() else {}
        if not isinstance(data, dict):
            raise ex.ConfigError("config must be a JSON object")
    for item in args.set:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ex.ConfigError(f"--set expects KEY=JSON, got {item!r}")
        try:
            data[key] = json.loads(raw)
        except json.JSONDecodeError:
            data[key] = raw
    if args.seed is not None:
        data["seed"] = args.seed
    if args.threads is not None:
        data["threads"] = args.threads
    return ex.ExperimentConfig.from_dict(data)


def _emit(text: str, out):
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def _run(args) -> int:
    cfg = load_config(args)
    if args.command == "sweep":
        _emit(ex.rows_to_csv(ex.run_sweep(cfg)), args.out)
        return EXIT_OK
    if args.command == "coverage":
        cert, beta = ex.run_coverage(cfg)
        _emit(cert.to_json() + "\n", args.out)
        print(f"beta = {beta:.6g}, union {cert.union_size} of {cert.gs_size}", file=sys.stderr)
        return EXIT_OK if (cert.witness is not None and cert.transcripts_identical) else EXIT_NEGATIVE
    if args.command == "calibrate":
        _emit(json.dumps(ex.run_calibrate(cfg), sort_keys=True) + "\n", args.out)
        return EXIT_OK
    if args.command == "verify":
        checks = ex.run_verify(seed=cfg.seed)
        lines = [f"{'PASS' if c.passed else 'FAIL'}  {c.name}  (tol {c.tolerance:g}): {c.detail}" for c in checks]
        _emit("\n".join(lines) + "\n", args.out)
        return EXIT_OK if all(c.passed for c in checks) else EXIT_NEGATIVE
    if args.command == "demo-sgd":
        res = ex.demo_sq_sgd(cfg)
        _emit(res.trace_csv(), args.out)
        print(f"error {res.error:.4g} (lasso only {res.lasso_error:.4g}), queries {res.queries}", file=sys.stderr)
        return EXIT_OK
    raise ex.ConfigError(f"unknown command {args.command}")


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    try:
        return _run(args)
    except (ex.ConfigError, json.JSONDecodeError) as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:  # noqa: BLE001
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
