"""Command line entry point ``phident``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from ..datasets import DATASET_KINDS, Scalers, apply_scalers, generate, read_dataset, write_dataset
from ..diffkit import ConfigurationError
from ..evaluation import evaluate
from ..phin import IdentificationModel
from .config import ConfigError, load_config
from .experiment import run_experiment
from .export import verify_manifest

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    art = run_experiment(cfg, out_dir=args.out, seed=args.seed, jobs=args.jobs)
    print(json.dumps({"run_dir": str(art.run_dir), "test": art.metrics["test"]}, indent=1, sort_keys=True))
    return EXIT_OK


def _cmd_generate(args) -> int:
    params = {}
    for item in args.param or []:
        if "=" not in item:
            raise ConfigError(f"--param expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        params[k] = _parse_value(v)
    if args.seed is not None:
        params["seed"] = args.seed
    try:
        train, test = generate(args.dataset, **params)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    out = Path(args.out) if args.out else Path("data") / args.dataset
    write_dataset(train, out / "train")
    write_dataset(test, out / "test")
    print(str(out))
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    model = IdentificationModel.load(args.model)
    ds = read_dataset(args.data)
    sc_path = Path(args.model).with_name("scalers.json")
    if sc_path.exists():
        ds = apply_scalers(ds, Scalers.from_json(json.loads(sc_path.read_text())))
    rep = evaluate(model, ds, norm=args.norm, jobs=args.jobs)
    summary = rep.summary()
    text = json.dumps(summary, indent=1, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "metrics.json").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def _cmd_report(args) -> int:
    d = Path(args.run)
    bad = verify_manifest(d) if (d / "manifest.json").exists() else []
    if bad:
        print(f"manifest mismatch: {', '.join(bad)}", file=sys.stderr)
        return EXIT_CONFIG
    metrics = json.loads((d / "metrics.json").read_text())
    timings = json.loads((d / "timings.json").read_text()) if (d / "timings.json").exists() else {}
    rows = [("quantity", "train", "test")]
    for key in sorted(set(metrics["train"]) | set(metrics["test"])):
        rows.append((key, _num(metrics["train"].get(key)), _num(metrics["test"].get(key))))
    w = [max(len(r[i]) for r in rows) for i in range(3)]
    for r in rows:
        print("  ".join(c.ljust(w[i]) for i, c in enumerate(r)))
    for k, v in sorted(timings.items()):
        print(f"{k}: {v:.4g}")
    tr = metrics.get("training", {})
    if tr:
        print(f"best epoch {tr['best_epoch']} of {tr['epochs_run']}")
    return EXIT_OK


def _num(v) -> str:
    if v is None:
        return "-"
    return f"{v:.4g}" if isinstance(v, float) else str(v)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="phident", description="Identify port-Hamiltonian latent models from trajectory data.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="train and evaluate one TOML configuration")
    r.add_argument("--config", required=True)
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.add_argument("--jobs", type=int, default=1)
    r.set_defaults(fn=_cmd_run)

    g = sub.add_parser("generate", help="write a reference dataset to disk")
    g.add_argument("--dataset", required=True, choices=DATASET_KINDS)
    g.add_argument("--out")
    g.add_argument("--seed", type=int)
    g.add_argument("--param", action="append", metavar="KEY=VALUE")
    g.set_defaults(fn=_cmd_generate)

    e = sub.add_parser("evaluate", help="evaluate a saved model on a dataset directory")
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--out")
    e.add_argument("--norm", choices=("spectral", "fro"), default="spectral")
    e.add_argument("--jobs", type=int, default=1)
    e.set_defaults(fn=_cmd_evaluate)

    rep = sub.add_parser("report", help="summarize a run directory")
    rep.add_argument("--run", required=True)
    rep.set_defaults(fn=_cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except (ConfigError, ConfigurationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
