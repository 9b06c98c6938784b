"""Command line: ``focusfocus {check-model,semiflat,ov,gmn,all}``.

Exit codes: 0 every check passed, 1 a check failed, 2 configuration error,
3 numerical failure (quadrature or series did not converge).
"""

from __future__ import annotations

import argparse
import sys

from .config import RunConfig, load_config
from .errors import ConfigError, NumericalFailure
from .reports import SUITES, run_command, write_outputs

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="focusfocus", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=list(SUITES))
    p.add_argument("--config", help="JSON run configuration (defaults apply when omitted)")
    p.add_argument("--points", type=int, help="override grid.n_c")
    p.add_argument("--tol-scale", type=float, default=1.0, help="multiply every residual tolerance")
    p.add_argument("--out", help="output directory (overrides output_dir)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        if args.points is not None:
            if args.points < 1:
                raise ConfigError("--points must be positive")
            cfg = cfg.with_points(args.points)
        if not args.tol_scale > 0:
            raise ConfigError("--tol-scale must be positive")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report, exports = run_command(args.command, cfg, args.tol_scale)
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    paths = write_outputs(report, exports, args.out or cfg.output_dir)
    print(report.summary())
    for path in paths:
        print(f"wrote {path}")
    return EXIT_PASS if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
