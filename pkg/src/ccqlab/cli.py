"""``ccqlab`` command line: one subcommand per experiment kind.

Exit status: 0 when every bound check passes, 1 when one fails (a
``witness.json`` is written next to the artifacts), 2 on config or runtime
errors.
"""

from __future__ import annotations

import argparse
import datetime as dt
import json
import logging
import os
import sys

from . import config as cfgmod
from .errors import CcqError, ConfigInvalid, DimensionOverflow
from .experiments import manifest, run, write_outcome

log = logging.getLogger("ccqlab")

EXIT_OK, EXIT_ASSERT, EXIT_ERROR = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ccqlab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in cfgmod.KINDS:
        p = sub.add_parser(kind, help=f"run a '{kind}' experiment")
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--seed", type=int, help="override master_seed (u64)")
        p.add_argument("--out", help="output directory (default: config 'out' or ./out)")
        p.add_argument("--trials", type=int, help="override trials")
        p.add_argument("--threads", type=int, help="worker threads for trial loops")
        p.add_argument("--max-dim", type=int, help="override max Hilbert dimension (env CCQLAB_MAX_DIM)")
    return parser


def _now() -> str:
    return dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.max_dim is not None:
        os.environ["CCQLAB_MAX_DIM"] = str(args.max_dim)
    try:
        raw = cfgmod.load(args.config)
        if not isinstance(raw, dict):
            raise ConfigInvalid({"<root>": "config must be a JSON object"})
        if raw.get("kind", args.kind) != args.kind:
            raise ConfigInvalid({"kind": f"config kind {raw.get('kind')!r} does not match subcommand {args.kind!r}"})
        raw = {**raw, "kind": args.kind}
        for key, value in (("master_seed", args.seed), ("trials", args.trials), ("threads", args.threads)):
            if value is not None:
                raw[key] = value
        cfg = cfgmod.validate(raw)
        out_dir = args.out or cfg.get("out", "out")
        started = _now()
        outcome = run(cfg)
        write_outcome(outcome, out_dir, manifest(cfg, started, _now()))
    except ConfigInvalid as exc:
        print("config invalid:", file=sys.stderr)
        for field, msg in exc.errors.items():
            print(f"  {field}: {msg}", file=sys.stderr)
        return EXIT_ERROR
    except DimensionOverflow as exc:
        print(f"dimension overflow: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (CcqError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for failure in outcome.failures:
        print(f"FAILED {failure['check']}: {json.dumps(failure, default=str)[:300]}", file=sys.stderr)
    log.info("wrote artifacts to %s", out_dir)
    return outcome.status


if __name__ == "__main__":
    sys.exit(main())
