"""Command-line front end for the bound sweep."""

import argparse
import logging
import sys

from .errors import ValidationError
from .sweep import SweepConfig, SWEEP_MODES, report, run_sweep, write_csv

# flag name -> (SweepConfig field, parser)
_KEYS = {
    "nbar-min": ("nbar_min", float),
    "nbar-max": ("nbar_max", float),
    "nbar-step": ("nbar_step", float),
    "planes": ("planes_per_edge", int),
    "mode": ("mode", str),
    "primal": ("primal", lambda s: str(s).strip().lower() in ("1", "true", "yes", "on")),
    "seed": ("seed", int),
    "out": ("output_path", str),
    "cache-dir": ("cache_dir", str),
    "workers": ("workers", int),
}


def read_config_file(path):
    """Flat ``key = value`` file; keys are the long flag names without dashes prefix."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"{path}:{lineno}: expected key=value")
            key, val = (s.strip() for s in line.split("=", 1))
            key = key.lstrip("-").replace("_", "-")
            if key not in _KEYS:
                raise ValidationError(f"{path}:{lineno}: unknown key {key!r}")
            name, conv = _KEYS[key]
            out[name] = conv(val)
    return out


def build_parser():
    p = argparse.ArgumentParser(
        prog="seqbound",
        description="Sweep dual upper bounds on sequential 3-PSK discrimination "
                    "against the quantum limit and write a CSV.")
    p.add_argument("--nbar-min", type=float, help="smallest mean photon number (default 0.1)")
    p.add_argument("--nbar-max", type=float, help="largest mean photon number (default 2.0)")
    p.add_argument("--nbar-step", type=float, help="grid step (default 0.1)")
    p.add_argument("--planes", type=int, help="prior lattice points per edge (default 141)")
    p.add_argument("--mode", choices=SWEEP_MODES, help="dual parametrization (default symmetric)")
    p.add_argument("--primal", action="store_true", default=None,
                   help="also compute an explicit-strategy lower bound")
    p.add_argument("--seed", type=int, help="seed for the random soundness POVMs")
    p.add_argument("--out", help="output CSV path (default bounds.csv)")
    p.add_argument("--cache-dir", help="directory for halfspace cache files")
    p.add_argument("--workers", type=int, help="parallel worker processes")
    p.add_argument("--config", help="key=value file; command-line flags take precedence")
    p.add_argument("-q", "--quiet", action="store_true", help="do not print the report")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(args):
    values = read_config_file(args.config) if args.config else {}
    for flag, (name, _) in _KEYS.items():
        v = getattr(args, flag.replace("-", "_"))
        if v is not None:
            values[name] = v
    return SweepConfig(**values)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
    except (ValidationError, OSError, ValueError, TypeError) as err:
        print(f"seqbound: {err}", file=sys.stderr)
        return 1
    records = run_sweep(cfg)
    write_csv(records, cfg.output_path)
    if not args.quiet:
        sys.stdout.write(report(records))
    return 2 if any(r.failed for r in records) else 0


if __name__ == "__main__":
    sys.exit(main())
