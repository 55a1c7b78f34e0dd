"""``fairrep`` command line: dataset statistics, training, sweeps, audits and
exact verification of the bounds.

Exit codes: 0 when all requested work succeeded, 1 when some of it failed
(a training cell, a bound check), 2 for usage errors and unreadable input.
Every JSON document is written with sorted keys and no timestamps, so the
same flags on the same inputs give byte-identical files.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import data, metrics, models
from .data import Dataset, IngestionError
from .models import LAMBDA_GRIDS, ConfigError, TrainingError, Variant, VariantConfig

log = logging.getLogger("fairrep")

SWEEP_METRICS = ("err_gap", "eo_gap", "dp_gap", "joint_err")
# config-file keys that map onto training flags
CONFIG_KEYS = ("variant", "lam", "seed", "epochs", "batch_size", "hidden", "adv_hidden", "lr", "rho", "eps")
CSV_DEFAULTS = {"hidden": 10, "adv_hidden": 10, "epochs": 20}


class UsageError(Exception):
    """Bad flags or unreadable input; maps to exit code 2."""


def dump_json(obj, path=None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")
    return text


def _data_root(args) -> Path:
    return Path(args.data_dir) if args.data_dir else data.data_dir()


def load_dataset(args) -> tuple[Dataset, Dataset, str | None]:
    """(train, test, preset) from ``--dataset`` or from a pair of cache CSVs."""
    if getattr(args, "train_csv", None):
        if not args.test_csv:
            raise UsageError("--train-csv needs --test-csv")
        for p in (args.train_csv, args.test_csv):
            if not Path(p).exists():
                raise UsageError(f"file not found: {p}")
        return data.load_cache(args.train_csv), data.load_cache(args.test_csv), None
    root = _data_root(args)
    if args.dataset == "adult":
        paths = [root / f for f in data.ADULT_FILES]
    elif args.dataset == "compas":
        paths = [root / data.COMPAS_FILE]
    else:
        raise UsageError("choose --dataset adult|compas or give --train-csv/--test-csv")
    missing = [str(p) for p in paths if not p.exists()]
    if missing:
        raise UsageError(
            f"missing {', '.join(missing)}; set FAIRREP_DATA_DIR or --data-dir "
            "(scripts/fetch_data.py downloads the raw files)"
        )
    if args.dataset == "adult":
        train, test = data.load_adult(*paths)
    else:
        train, test = data.load_compas(paths[0])
    return train, test, args.dataset


def _read_config(path) -> dict:
    if not path:
        return {}
    try:
        cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(cfg, dict) or any(isinstance(v, (dict, list)) for v in cfg.values()):
        raise UsageError("config must be a flat JSON object")
    cfg = {("lam" if k == "lambda" else k.replace("-", "_")): v for k, v in cfg.items()}
    unknown = sorted(set(cfg) - set(CONFIG_KEYS))
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    return cfg


def resolve_config(args, preset) -> VariantConfig:
    """Flags override the config file, which overrides preset defaults."""
    merged = _read_config(args.config)
    for key in CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    if "variant" not in merged:
        raise UsageError("--variant is required")
    lam = float(merged.pop("lam", 0.0))
    variant = merged.pop("variant")
    try:
        if preset:
            return VariantConfig.from_preset(preset, variant, lam, **merged)
        return VariantConfig(variant=variant, lam=lam, **{**CSV_DEFAULTS, **merged})
    except (ConfigError, TypeError) as exc:
        raise UsageError(str(exc)) from None


def _checks(rep) -> dict:
    return {name: chk.to_dict() for name, chk in metrics.all_checks(rep).items()}


def _confusion(rep) -> dict:
    cells = np.asarray(rep.cells)
    return {f"a{a}_y{y}_yhat{h}": cells[a, y, h].item() for a in (0, 1) for y in (0, 1) for h in (0, 1)}


def report_document(kind, rep, **extra) -> dict:
    body = rep.to_dict()
    body.pop("cells")
    body["confusion"] = _confusion(rep)
    doc = {"kind": kind, "report": body, "theorem_checks": _checks(rep)}
    doc.update(extra)
    return doc


# --------------------------------------------------------------------------- stats


def cmd_stats(args) -> int:
    train, test, _ = load_dataset(args)
    rec = data.stats(train, test, args.dataset or "csv")
    print(f"{rec['dataset']}: train {rec['n_train']} / test {rec['n_test']}, {rec['dim']} features")
    print(f"{'split':6} {'D0(Y=1)':>8} {'D1(Y=1)':>8} {'dBR':>7} {'D(Y=1)':>7} {'D(A=1)':>7}")
    for split in ("train", "test"):
        s = rec[split]
        print(
            f"{split:6} {s['base_rate0']:8.4f} {s['base_rate1']:8.4f} {s['delta_br']:7.4f} "
            f"{s['p_y1']:7.4f} {s['p_a1']:7.4f}"
        )
    if args.out:
        dump_json({"kind": "stats", **rec}, args.out)
    return 0


# --------------------------------------------------------------------------- train


def cmd_train(args) -> int:
    train, test, preset = load_dataset(args)
    cfg = resolve_config(args, preset)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    log.info("training %s lam=%g seed=%d for %d epochs", cfg.variant.value, cfg.lam, cfg.seed, cfg.epochs)
    try:
        model, hist = models.train(cfg, train, test, snapshot_every=args.snapshot_every)
    except (TrainingError, AssertionError) as exc:
        print(f"training failed: {exc}", file=sys.stderr)
        return 1
    models.save_checkpoint(model, out / "checkpoint.json")
    hist.to_csv(out / "history.csv")
    test_rep = hist.records[-1].test
    train_rep = hist.records[-1].train
    if test_rep is None:
        print("test split lacks a label/group cell; no report written", file=sys.stderr)
        return 1
    doc = report_document(
        "train",
        test_rep,
        dataset=args.dataset or "csv",
        config=cfg.to_dict(),
        train_report=train_rep.to_dict() if train_rep else None,
    )
    dump_json(doc, out / "report.json")
    print(
        f"test: err_gap={test_rep.err_gap:.4f} eo_gap={test_rep.eo_gap:.4f} "
        f"dp_gap={test_rep.dp_gap:.4f} joint_err={test_rep.joint_err:.4f} ber={test_rep.ber:.4f}"
    )
    return 0 if doc["theorem_checks"]["thm4_error_gap_bound"]["pass"] else 1


# --------------------------------------------------------------------------- sweep

_WORKER_DATA = {}


def _worker_init(loader_args):
    _WORKER_DATA["splits"] = load_dataset(argparse.Namespace(**loader_args))


def _run_cell(cfg_dict):
    train, test, _ = _WORKER_DATA["splits"]
    cfg = VariantConfig(**cfg_dict)
    t0 = time.perf_counter()
    try:
        _, hist = models.train(cfg, train, test, snapshot_every=0)
    except (TrainingError, AssertionError) as exc:
        return {"status": "failed", "error": str(exc), "runtime": time.perf_counter() - t0}
    rep = hist.records[-1].test
    return {"status": "ok", "report": rep.to_dict(), "runtime": time.perf_counter() - t0}


def _parse_list(text, cast, name):
    try:
        return [cast(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"cannot parse --{name} {text!r}") from None


def plan_sweep(preset, variants, lambdas, seeds, overrides) -> tuple[list, dict]:
    """Grid cells and the unique training jobs behind them.

    NoDebias ignores lambda, so cells that differ only in lambda (and share an
    epoch budget) reuse one job.
    """
    cells, jobs = [], {}
    for v in variants:
        for lam in lambdas:
            for seed in seeds:
                if preset:
                    cfg = VariantConfig.from_preset(preset, v, lam, seed=seed, **overrides)
                else:
                    cfg = VariantConfig(variant=v, lam=lam, seed=seed, **{**CSV_DEFAULTS, **overrides})
                if cfg.variant is Variant.NODEBIAS:
                    cfg.lam = 0.0
                key = json.dumps(cfg.to_dict(), sort_keys=True)
                jobs.setdefault(key, cfg.to_dict())
                cells.append({"variant": Variant(v).value, "lambda": lam, "seed": seed, "job": key})
    return cells, jobs


def cmd_sweep(args) -> int:
    train, test, preset = load_dataset(args)
    variants = _parse_list(args.variants, str, "variants") if args.variants else [v.value for v in Variant]
    try:
        variants = [Variant(v).value for v in variants]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    grid = LAMBDA_GRIDS.get(preset or "", (0.1, 1.0, 10.0))
    lambdas = _parse_list(args.lambdas, float, "lambdas") if args.lambdas else list(grid)
    seeds = _parse_list(args.seeds, int, "seeds")
    if any(l < 0 for l in lambdas):
        raise UsageError("lambdas must be >= 0")
    overrides = {k: getattr(args, k) for k in ("epochs", "batch_size") if getattr(args, k) is not None}
    cells, jobs = plan_sweep(preset, variants, lambdas, seeds, overrides)
    log.info("%d cells, %d distinct training jobs", len(cells), len(jobs))

    loader = {k: getattr(args, k, None) for k in ("dataset", "data_dir", "train_csv", "test_csv")}
    keys = list(jobs)
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs, initializer=_worker_init, initargs=(loader,)) as pool:
            results = dict(zip(keys, pool.map(_run_cell, [jobs[k] for k in keys])))
    else:
        _WORKER_DATA["splits"] = (train, test, preset)
        results = {}
        for i, k in enumerate(keys, 1):
            results[k] = _run_cell(jobs[k])
            log.info("[%d/%d] %s lam=%g seed=%d: %s", i, len(keys), jobs[k]["variant"], jobs[k]["lam"],
                     jobs[k]["seed"], results[k]["status"])
    _WORKER_DATA.clear()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    delta_br = data.split_stats(test)["delta_br"]
    write_sweep(out, cells, results, variants, lambdas, delta_br)
    failed = [c for c in cells if results[c["job"]]["status"] != "ok"]
    for c in failed:
        print(f"FAILED {c['variant']} lambda={c['lambda']} seed={c['seed']}: {results[c['job']]['error']}",
              file=sys.stderr)
    print(f"{len(cells) - len(failed)}/{len(cells)} cells ok; results in {out}")
    return 1 if failed else 0


def write_sweep(out: Path, cells, results, variants, lambdas, delta_br) -> None:
    fields = ["variant", "lambda", "seed", "status", "error"] + list(SWEEP_METRICS) + [
        "ber", "err0", "err1", "thm4_pass"
    ]
    with open(out / "cells.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(fields)
        for c in cells:
            r = results[c["job"]]
            rep = r.get("report") or {}
            thm4 = ""
            if rep:
                thm4 = rep["err_gap"] <= rep["delta_br"] * rep["ber"] + 2 * rep["eo_gap"] + metrics.EXACT_TOL
            w.writerow(
                [c["variant"], repr(c["lambda"]), c["seed"], r["status"], r.get("error", "")]
                + [repr(rep[m]) if rep else "" for m in list(SWEEP_METRICS) + ["ber", "err0", "err1"]]
                + [thm4]
            )
    with open(out / "timings.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["variant", "lambda", "seed", "runtime_s"])
        for c in cells:
            w.writerow([c["variant"], repr(c["lambda"]), c["seed"], f"{results[c['job']]['runtime']:.3f}"])

    summary = {"kind": "sweep", "delta_br": delta_br, "variants": variants, "lambdas": lambdas, "metrics": {}}
    for m in SWEEP_METRICS:
        table = {}
        with open(out / f"{m}.csv", "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["lambda"] + variants + ["delta_br"])
            for lam in lambdas:
                row = [repr(lam)]
                for v in variants:
                    vals = [
                        results[c["job"]]["report"][m]
                        for c in cells
                        if c["variant"] == v and c["lambda"] == lam and results[c["job"]]["status"] == "ok"
                    ]
                    mean = float(np.mean(vals)) if vals else None
                    table.setdefault(v, []).append(mean)
                    row.append("" if mean is None else repr(mean))
                w.writerow(row + [repr(delta_br)])
        summary["metrics"][m] = table
    dump_json(summary, out / "summary.json")


# --------------------------------------------------------------------------- audit


def read_predictions(path) -> metrics.PredictionSet:
    """CSV with header ``score,label,group``; errors carry the line number."""
    path = Path(path)
    if not path.exists():
        raise UsageError(f"file not found: {path}")
    scores, labels, groups = [], [], []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if header != ["score", "label", "group"]:
            raise UsageError(f"{path}:1: expected header score,label,group, got {','.join(header)!r}")
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != 3:
                raise UsageError(f"{path}:{line}: expected 3 fields, got {len(row)}")
            try:
                s, y, a = float(row[0]), int(row[1]), int(row[2])
            except ValueError as exc:
                raise UsageError(f"{path}:{line}: {exc}") from None
            if not (0.0 <= s <= 1.0):
                raise UsageError(f"{path}:{line}: score {s} outside [0, 1]")
            if y not in (0, 1) or a not in (0, 1):
                raise UsageError(f"{path}:{line}: label and group must be 0 or 1")
            scores.append(s)
            labels.append(y)
            groups.append(a)
    if not scores:
        raise UsageError(f"{path}: no rows")
    return metrics.PredictionSet(np.array(scores), np.array(labels), np.array(groups))


def cmd_audit(args) -> int:
    preds = read_predictions(args.preds)
    try:
        rep = metrics.report(preds)
    except metrics.UndefinedRateError:
        # an empty (a, y) cell: report what is defined, leave the rest null
        values, undefined = metrics.partial_report(preds)
        cells = np.asarray(values.pop("cells"))
        values["confusion"] = {
            f"a{a}_y{y}_yhat{h}": cells[a, y, h].item() for a in (0, 1) for y in (0, 1) for h in (0, 1)
        }
        values["undefined"] = undefined
        doc = {"kind": "audit", "report": values, "theorem_checks": {}, "source": Path(args.preds).name}
        dump_json(doc, args.out)
        for name, reason in undefined.items():
            print(f"undefined {name}: {reason}", file=sys.stderr)
        print("bound checks skipped: some rates are undefined", file=sys.stderr)
        return 0
    doc = report_document("audit", rep, source=Path(args.preds).name)
    dump_json(doc, args.out)
    return 0 if doc["theorem_checks"]["thm4_error_gap_bound"]["pass"] else 1


# --------------------------------------------------------------------------- verify

# (check name, joint family); checkers are looked up on the metrics module at
# call time so a patched checker is what actually runs
SUITE = (
    ("check_thm1", "random"),
    ("check_thm4", "random"),
    ("check_pigeonhole", "marginal"),
    ("check_prop1", "conditional"),
    ("check_prop2", "conditional"),
    ("check_lemma1", "eo"),
    ("check_thm2", "eo"),
    ("check_thm3", "eo"),
    ("check_cor41", "eo"),
    ("check_eo_identity", "eo"),
)


def _joint(family, rng):
    k = int(rng.integers(2, 7))
    if family == "eo":
        return metrics.random_eo_joint(rng, n_points=k)
    return metrics.random_joint(rng, n_points=k, align=None if family == "random" else family)


def run_verify(trials: int, seed: int) -> dict:
    rows = {name: {"check": name, "trials": 0, "passed": 0, "failed": 0, "min_slack": None, "first_failure": None}
            for name, _ in SUITE}
    for i in range(trials):
        for j, (name, family) in enumerate(SUITE):
            rng = np.random.default_rng([seed, i, j])
            result = getattr(metrics, name)(_joint(family, rng))
            checks = result if isinstance(result, list) else [result]
            row = rows[name]
            row["trials"] += 1
            ok = all(c.passed for c in checks)
            row["passed" if ok else "failed"] += 1
            slack = min(c.slack if c.relation == "<=" else -abs(c.slack) for c in checks)
            row["min_slack"] = slack if row["min_slack"] is None else min(row["min_slack"], slack)
            if not ok and row["first_failure"] is None:
                bad = next(c for c in checks if not c.passed)
                row["first_failure"] = {"trial": i, "lhs": bad.lhs, "rhs": bad.rhs, "name": bad.name}
    return {"kind": "verify", "suite": "theorems", "trials": trials, "seed": seed, "results": list(rows.values())}


def cmd_verify(args) -> int:
    if args.trials < 0:
        raise UsageError("--trials must be >= 0")
    doc = run_verify(args.trials, args.seed)
    print(f"{'check':22} {'trials':>6} {'pass':>6} {'fail':>6} {'min slack':>12}")
    for r in doc["results"]:
        slack = "" if r["min_slack"] is None else f"{r['min_slack']:.3e}"
        print(f"{r['check']:22} {r['trials']:6d} {r['passed']:6d} {r['failed']:6d} {slack:>12}")
        if r["first_failure"]:
            f = r["first_failure"]
            print(f"  first failure at trial {f['trial']} ({f['name']}): lhs={f['lhs']!r} rhs={f['rhs']!r}")
    if args.out:
        dump_json(doc, args.out)
    return 1 if any(r["failed"] for r in doc["results"]) else 0


# --------------------------------------------------------------------------- synth


def cmd_synth(args) -> int:
    counts = _parse_list(args.counts, int, "counts")
    if len(counts) != 4:
        raise UsageError("--counts needs four numbers: a0y0,a0y1,a1y0,a1y1")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    kw = dict(dim=args.dim, label_shift=args.label_shift, group_shift=args.group_shift)
    try:
        spec = data.SynthSpec(counts=np.reshape(counts, (2, 2)), seed=args.seed, **kw)
        test_spec = data.SynthSpec(counts=np.reshape(counts, (2, 2)), seed=args.seed + 1, **kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    data.save_cache(data.synth(spec, "train"), out / "train.csv")
    data.save_cache(data.synth(test_spec, "test"), out / "test.csv")
    br = metrics.base_rates(data.synth(spec))
    print(f"wrote {out / 'train.csv'} and {out / 'test.csv'} (delta_br={br[2]:.4f})")
    return 0


# --------------------------------------------------------------------------- parser


def _data_flags(p):
    p.add_argument("--dataset", choices=("adult", "compas"), help="benchmark to load")
    p.add_argument("--data-dir", help="raw data directory (default: $FAIRREP_DATA_DIR or ./data)")
    p.add_argument("--train-csv", help="cached training split written by `fairrep synth`")
    p.add_argument("--test-csv", help="cached test split")


def _nonneg_float(text):
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairrep", description=__doc__.split("\n\n")[0].replace("``", "").replace("\n", " ")
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="progress logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="row counts, base rates and group shares of a dataset")
    _data_flags(p)
    p.add_argument("--out", help="also write the record as JSON")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("train", help="train one variant and write checkpoint, history and report")
    _data_flags(p)
    p.add_argument("--config", help="flat JSON file of training settings")
    p.add_argument("--variant", choices=[v.value for v in Variant])
    p.add_argument("--lambda", dest="lam", type=_nonneg_float, help="trade-off coefficient (>= 0)")
    p.add_argument("--seed", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--hidden", type=int)
    p.add_argument("--adv-hidden", dest="adv_hidden", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--snapshot-every", type=int, default=0, help="record reports every N epochs (0: final only)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="grid over variants, lambdas and seeds; one CSV per metric")
    _data_flags(p)
    p.add_argument("--variants", help="comma list (default: all five)")
    p.add_argument("--lambdas", help="comma list (default: the dataset's grid)")
    p.add_argument("--seeds", default="0,1,2")
    p.add_argument("--epochs", type=int, help="override the preset epoch budget")
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--jobs", type=int, default=1, help="parallel training processes")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("audit", help="fairness report for external predictions (CSV score,label,group)")
    p.add_argument("--preds", required=True)
    p.add_argument("--out", default="-", help="JSON destination (default: stdout)")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("verify", help="check the bounds exactly on seeded random finite distributions")
    p.add_argument("--suite", choices=("theorems",), default="theorems")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="also write the table as JSON")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("synth", help="write a Gaussian-cell synthetic train/test pair")
    p.add_argument("--counts", required=True, help="a0y0,a0y1,a1y0,a1y1 sample counts")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--label-shift", type=float, default=1.0)
    p.add_argument("--group-shift", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"fairrep {args.command}: {exc}", file=sys.stderr)
        return 2
    except (IngestionError, ConfigError) as exc:
        print(f"fairrep {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
