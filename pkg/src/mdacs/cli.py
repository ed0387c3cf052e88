"""``simulate <config> [--out CSV] [--seed N] [--threads N]``."""

import argparse
import io
import os
import sys

from .config import load_config
from .errors import ConfigError, MdacsError
from .experiment import run_experiment, summarize

SEED_ENV = "MDACS_SEED"
HEADER = ("sweep", "algorithm", "sum_rate", "eff_rate", "stderr", "users_selected", "seconds")


def _fmt_sweep(v):
    return f"{v:g}" if isinstance(v, float) else str(v)


def format_csv(rows):
    out = io.StringIO()
    out.write(",".join(HEADER) + "\n")
    for r in rows:
        out.write(f"{_fmt_sweep(r.sweep)},{r.algorithm},{r.sum_rate:.6f},{r.eff_rate:.6f},"
                  f"{r.stderr:.6f},{r.users_selected:.3f},{r.seconds:.3f}\n")
    return out.getvalue()


def resolve_seed(config, cli_seed, env=None):
    """Seed precedence: ``--seed``, then ``$MDACS_SEED``, then the file."""
    env = os.environ if env is None else env
    if cli_seed is not None:
        return cli_seed
    raw = env.get(SEED_ENV)
    if raw not in (None, ""):
        try:
            seed = int(raw)
        except ValueError:
            raise ConfigError(SEED_ENV, f"not an integer: {raw!r}") from None
        if seed < 0:
            raise ConfigError(SEED_ENV, "must be non-negative")
        return seed
    return config.seed


def run(config, threads=1, timing=True):
    """CSV text for the whole sweep."""
    records = run_experiment(config, threads=threads, timing=timing)
    return format_csv(summarize(config, records))


def build_parser():
    p = argparse.ArgumentParser(prog="simulate", description="Run a beam/user selection sweep.")
    p.add_argument("config", help="experiment file (INI)")
    p.add_argument("--out", help="write the CSV here instead of standard output")
    p.add_argument("--seed", type=int, help=f"master seed (overrides ${SEED_ENV} and the file)")
    p.add_argument("--threads", type=int, default=1, help="worker threads across trials")
    p.add_argument("--no-timing", action="store_true",
                   help="write 0 in the seconds column so repeated runs are byte-identical")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    if args.seed is not None and args.seed < 0:
        print("error: --seed must be non-negative", file=sys.stderr)
        return 2
    try:
        config = load_config(args.config)
        config = config.with_seed(resolve_seed(config, args.seed))
        text = run(config, threads=args.threads, timing=not args.no_timing)
    except (MdacsError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        print(f"wrote {args.out} ({text.count(chr(10)) - 1} rows, seed {config.seed})", file=sys.stderr)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
