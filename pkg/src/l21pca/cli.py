"""``bench`` command line: run experiment grids, synthesize and corrupt datasets."""

import argparse
import json
import logging
import sys
from pathlib import Path

from . import bench
from .corruption import inject_outliers, occlude, synthesize_lowrank_dataset, to_unit_range
from .io import Dataset, DatasetError, guess_format, load_dataset, matrix_from_images, save_dataset


def _shape(text):
    try:
        h, w = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected HxW, got {text!r}") from None
    return (h, w)


def cmd_run(args):
    config = bench.load_config(args.config, seed=args.seed, output=args.out)
    rows = bench.run_experiment(config, threads=args.threads)
    outdir = config.output if args.out is not None else config.resolve(config.output)
    for path in bench.write_outputs(rows, outdir):
        print(path)
    failed = sum(r.failed for r in rows)
    if failed:
        print(f"{failed} of {len(rows)} cells failed; see failures.txt", file=sys.stderr)
    return 0


def cmd_synth(args):
    x = synthesize_lowrank_dataset(args.d, args.n, args.rank, args.noise, args.seed)
    if args.format == "pgm-dir":
        shape = args.shape or bench._square_shape(args.d)
        save_dataset(Dataset(x=to_unit_range(x), image_shape=shape), args.out, "pgm-dir")
    else:
        save_dataset(Dataset(x=x), args.out, "matrix-csv")
    print(args.out)
    return 0


def cmd_corrupt(args):
    data = load_dataset(args.input)
    if args.shape:
        data.image_shape = args.shape
    elif data.image_shape is None:
        data.image_shape = bench._square_shape(data.x.shape[0])
    if args.mode == "occlude":
        images, record = occlude(data.images, args.fraction, args.seed, fill=args.fill)
        meta = {"kind": record.kind, "seed": args.seed,
                "affected_indices": record.affected_indices.tolist(),
                "squares": [list(s) for s in record.squares]}
    else:
        if args.pool is None:
            pool = bench.synthetic_pool(data.image_shape, 32, args.seed)
        else:
            pool_data = load_dataset(args.pool)
            if pool_data.image_shape is None:
                pool_data.image_shape = bench._square_shape(pool_data.x.shape[0])
            pool = pool_data.images
        images, record = inject_outliers(data.images, pool, args.fraction, args.seed)
        meta = {"kind": record.kind, "seed": args.seed, "n_clean": record.n_clean,
                "n_injected": record.n_injected}
    out = Dataset(x=matrix_from_images(images), image_shape=data.image_shape, name=data.name)
    fmt = "matrix-csv" if guess_format(args.input) == "matrix-csv" else "pgm-dir"
    save_dataset(out, args.out, fmt)
    record_path = Path(str(args.out).rstrip("/") + ".record.json")
    record_path.write_text(json.dumps(meta, indent=2) + "\n")
    print(args.out)
    print(record_path)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="bench", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment grid from a YAML config")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--seed", type=int)
    run.add_argument("--out", type=Path, help="output directory (overrides the config)")
    run.add_argument("--threads", type=int, help="worker threads (default: $BENCH_THREADS or 1)")
    run.set_defaults(func=cmd_run)

    synth = sub.add_parser("synth", help="write a centered low-rank synthetic dataset")
    synth.add_argument("--d", type=int, required=True)
    synth.add_argument("--n", type=int, required=True)
    synth.add_argument("--rank", type=int, required=True)
    synth.add_argument("--noise", type=float, default=0.0)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--format", choices=("matrix-csv", "pgm-dir"), default="matrix-csv")
    synth.add_argument("--shape", type=_shape, help="image shape HxW for pgm-dir output")
    synth.add_argument("--out", required=True, type=Path)
    synth.set_defaults(func=cmd_synth)

    corrupt = sub.add_parser("corrupt", help="occlude images or inject outliers")
    corrupt.add_argument("--mode", choices=("occlude", "inject"), required=True)
    corrupt.add_argument("--fraction", type=float, required=True)
    corrupt.add_argument("--input", required=True, type=Path)
    corrupt.add_argument("--out", required=True, type=Path)
    corrupt.add_argument("--pool", type=Path, help="outlier images (inject); noise images if omitted")
    corrupt.add_argument("--shape", type=_shape, help="image shape HxW for matrix-csv input")
    corrupt.add_argument("--fill", type=float, default=0.0)
    corrupt.add_argument("--seed", type=int, default=0)
    corrupt.set_defaults(func=cmd_corrupt)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (bench.ConfigError, DatasetError, ValueError, OSError) as exc:
        print(f"bench: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
