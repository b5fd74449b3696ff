#!/usr/bin/env python3
"""Exercise the cross-validation suites on demand.

Thin wrapper over the `validate` subcommand: writes a config for the
requested parameters and reports the oracle discrepancies (flat-geometry
symbols, truncation order against the elliptic solve, gradient checks).
"""

import argparse
import sys
import tempfile

from gcwaves.cli import main as cli_main


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--rho", type=float, default=0.5)
    ap.add_argument("--beta-under", type=float, default=0.17)
    ap.add_argument("--beta-over", type=float, default=0.17)
    ap.add_argument("--nx", type=int, default=256)
    ap.add_argument("--ny", type=int, default=128)
    args = ap.parse_args()

    with tempfile.NamedTemporaryFile("w", suffix=".cfg", delete=False) as fh:
        fh.write(
            "[params]\n"
            f"rho = {args.rho}\n"
            f"beta_under = {args.beta_under}\n"
            f"beta_over = {args.beta_over}\n"
            f"[grid]\nn = {args.nx}\nstrip_ny = {args.ny}\n"
        )
        cfg = fh.name
    return cli_main(["validate", "--config", cfg])


if __name__ == "__main__":
    sys.exit(main())
