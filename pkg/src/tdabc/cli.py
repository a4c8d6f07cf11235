"""Command line: generate datasets, run the cross-validation protocol, build reports.

    tdabc generate circles data/circles.csv --seed 0
    tdabc run config.json --out results --q 8 --repeats 5
    tdabc report results
"""
import argparse
import csv
import io
import json
import logging
import os
import sys

import numpy as np

from . import dataset as dsm
from .classifiers import KINDS, ClassifierConfig, build_model
from .evaluation import (COUNT_MODES, METRICS, CvPlan, compute_metrics, confusion_matrix,
                         per_label_counts, repeated_cv)

log = logging.getLogger("tdabc")

STRATEGY_KIND = {"R": "TDABC-R", "M": "TDABC-M", "A": "TDABC-A"}


class UserError(Exception):
    """Bad input or configuration (exit code 2)."""


# --- small I/O helpers --------------------------------------------------------

def _num(x):
    x = float(x)
    if x == float("inf"):
        return "inf"
    if x == float("-inf"):
        return "-inf"
    return repr(x)


def _write(path, text):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _write_json(path, obj):
    _write(path, json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serialisable: {type(o)}")


def _csv_text(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerows(rows)
    return buf.getvalue()


def _safe(name):
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in str(name))


# --- generate -----------------------------------------------------------------

def parse_dataset_spec(spec):
    """Preset name, path to a JSON file, or inline JSON."""
    if isinstance(spec, dict):
        return dict(spec)
    if spec in dsm.PRESETS:
        return {"preset": spec}
    if os.path.isfile(spec):
        with open(spec, encoding="utf-8") as fh:
            try:
                return json.load(fh)
            except json.JSONDecodeError as e:
                raise UserError(f"spec: {spec} is not valid JSON ({e})")
    try:
        d = json.loads(spec)
    except json.JSONDecodeError:
        raise UserError(f"spec: {spec!r} is neither a preset ({', '.join(dsm.PRESETS)}), "
                        "a JSON file nor inline JSON")
    if not isinstance(d, dict):
        raise UserError("spec: must be a JSON object")
    return d


def cmd_generate(spec, out_path, seed=0):
    """Write the dataset CSV and a JSON manifest next to it (same stem)."""
    d = parse_dataset_spec(spec)
    seed = int(d.pop("seed", seed))
    try:
        ds = dsm.generate(d, seed)
    except ValueError as e:
        raise UserError(str(e))
    dsm.save_csv(ds, out_path)
    dsm.save_manifest(ds, os.path.splitext(out_path)[0] + ".json")
    return ds


# --- run ----------------------------------------------------------------------

def _load_dataset(entry, base_dir, seed):
    entry = dict(entry)
    name = entry.pop("name", None)
    entry.pop("q", None)
    if "csv" in entry:
        path = entry.pop("csv")
        if not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        if not os.path.isfile(path):
            raise UserError(f"csv: dataset file not found: {path}")
        try:
            return dsm.load_csv(path, entry.pop("label_column", -1), entry.pop("delimiter", ","),
                                name=name)
        except ValueError as e:
            raise UserError(str(e))
    s = int(entry.pop("seed", seed))
    if name:
        entry["name"] = name
    try:
        return dsm.generate(entry, s)
    except ValueError as e:
        raise UserError(str(e))


def _classifier_entries(cfg, args):
    entries = cfg.get("classifiers") or list(KINDS)
    out = []
    for e in entries:
        e = {"kind": e} if isinstance(e, str) else dict(e)
        out.append(e)
    if getattr(args, "strategy", None):
        keep = STRATEGY_KIND[args.strategy]
        out = [e for e in out if e.get("kind") not in STRATEGY_KIND.values() or e["kind"] == keep]
        if not any(e.get("kind") == keep for e in out):
            out.append({"kind": keep})
    return out


def _resolve_classifier(entry, ds_entry, ds_name, args, seed):
    e = dict(entry)
    label = e.pop("name", None) or e.get("kind")
    q = e.get("q", ds_entry.get("q", dsm.DEFAULT_Q.get(ds_name, 3)))
    if getattr(args, "q", None) is not None:
        q = args.q
    e["q"] = q
    e.setdefault("seed", seed)
    if getattr(args, "k", None) is not None:
        e["k"] = args.k
    if getattr(args, "sublevel", None):
        e["sublevel_choice"] = args.sublevel
    if getattr(args, "collapse", None) is not None:
        e["use_edge_collapse"] = args.collapse
    try:
        return label, ClassifierConfig.from_dict(e)
    except (TypeError, ValueError) as err:
        raise UserError(f"classifier {label}: {err}")


def load_run_config(path):
    if not os.path.isfile(path):
        raise UserError(f"config: file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as e:
            raise UserError(f"config: invalid JSON ({e})")
    if not isinstance(cfg, dict):
        raise UserError("config: must be a JSON object")
    if not cfg.get("datasets"):
        raise UserError("datasets: at least one dataset is required")
    return cfg


def _model_key(ds, c):
    return (ds.name, int(c.q), c.use_edge_collapse, str(c.max_filtration), str(c.collapse_rounds),
            c.collapse_fixpoint, c.label_complex)


def cmd_run(config_path, args=None):
    """Run every (dataset, classifier) pair of the config through the
    repeated cross-validation protocol and write per-pair results plus
    aggregate tables."""
    args = args or argparse.Namespace()
    cfg = load_run_config(config_path)
    base = os.path.dirname(os.path.abspath(config_path))
    seed = int(args.seed if getattr(args, "seed", None) is not None else cfg.get("seed", 0))
    out = getattr(args, "out", None) or cfg.get("output_dir") or "results"
    if not os.path.isabs(out) and getattr(args, "out", None) is None:
        out = os.path.join(base, out)
    mode = getattr(args, "count_mode", None) or cfg.get("count_mode", "paper")
    if mode not in COUNT_MODES:
        raise UserError(f"count_mode: must be one of {COUNT_MODES}")
    p = dict(cfg.get("plan", {}))
    p.setdefault("seed", seed)
    if getattr(args, "seed", None) is not None:
        p["seed"] = seed
    if getattr(args, "folds_fraction", None) is not None:
        p["fold_fraction"] = args.folds_fraction
    if getattr(args, "repeats", None) is not None:
        p["repeats"] = args.repeats
    try:
        plan = CvPlan(**p)
    except (TypeError, ValueError) as e:
        raise UserError(f"plan: {e}")
    jobs = int(getattr(args, "jobs", None) or cfg.get("jobs", 1))
    dump_diagrams = bool(cfg.get("dump_diagrams", True))

    datasets = []
    for entry in cfg["datasets"]:
        if isinstance(entry, str):
            entry = {"preset": entry}
        ds = _load_dataset(entry, base, seed)
        datasets.append((entry, ds))
    names = [ds.name for _, ds in datasets]
    if len(set(names)) != len(names):
        raise UserError("datasets: names must be unique")

    os.makedirs(out, exist_ok=True)
    work = []
    for entry, ds in datasets:
        seen = {}
        for ce in _classifier_entries(cfg, args):
            label, ccfg = _resolve_classifier(ce, entry, ds.name, args, seed)
            if label in seen:
                seen[label] += 1
                label = f"{label}_{seen[label]}"
            else:
                seen[label] = 1
            work.append((ds, label, ccfg, plan, mode))

    # the TDABC variants of one dataset share complex and diagrams
    models = {}
    manifest = {"seed": seed, "count_mode": mode, "plan": vars(plan), "runs": []}
    for ds, label, ccfg, _, _ in work:
        log.info("%s / %s", ds.name, label)
        model = None
        if ccfg.is_tdabc:
            key = _model_key(ds, ccfg)
            if key not in models:
                try:
                    models[key] = build_model(ds.points, ccfg)
                except ValueError as e:
                    raise UserError(f"{ds.name} / {label}: {e}")
                if dump_diagrams:
                    buf = io.StringIO()
                    models[key].diagrams.to_csv(buf)
                    _write(os.path.join(out, _safe(ds.name), f"diagrams_q{ccfg.q}.csv"), buf.getvalue())
            model = models[key]
        try:
            res = repeated_cv(ds, ccfg, plan, jobs=jobs, model=model)
        except ValueError as e:
            raise UserError(f"{ds.name} / {label}: {e}")
        ddir = os.path.join(out, _safe(ds.name))
        _write_json(os.path.join(ddir, "dataset.json"), ds.manifest())
        cdir = os.path.join(ddir, _safe(label))
        labels = list(range(ds.n_labels))
        rep = compute_metrics(per_label_counts(res.Y, res.Yhat, labels, mode), res.Y, res.Yhat)
        M = confusion_matrix(res.Y, res.Yhat, labels)
        rows = [("index", "true", "predicted")]
        rows += [(int(i), ds.label_names[a], ds.label_names[b])
                 for i, a, b in zip(res.index, res.Y, res.Yhat)]
        _write(os.path.join(cdir, "predictions.csv"), _csv_text(rows))
        _write_json(os.path.join(cdir, "predictions.json"),
                    {"dataset": ds.name, "classifier": label, "config": ccfg.to_dict(),
                     "plan": vars(plan), "label_names": ds.label_names, "folds": res.folds})
        _write_json(os.path.join(cdir, "metrics.json"),
                    {"dataset": ds.name, "classifier": label, **rep.to_dict()})
        _write(os.path.join(cdir, "metrics.csv"),
               _csv_text([("metric", "value")] + [(k, _num(v)) for k, v in rep.metrics.items()]))
        _write(os.path.join(cdir, "confusion.csv"),
               _csv_text([[""] + ds.label_names] +
                         [[ds.label_names[r]] + M[r].tolist() for r in range(len(labels))]))
        manifest["runs"].append({"dataset": ds.name, "classifier": label,
                                 "dir": os.path.relpath(cdir, out).replace(os.sep, "/")})
    _write_json(os.path.join(out, "run.json"), manifest)
    write_tables(collect_results([out]), out)
    return out


# --- report -------------------------------------------------------------------

def collect_results(dirs):
    """{(dataset, classifier): metrics dict}, scanning for metrics.json files."""
    found = {}
    for d in dirs:
        for root, _, files in sorted(os.walk(d)):
            if "metrics.json" in files:
                with open(os.path.join(root, "metrics.json"), encoding="utf-8") as fh:
                    m = json.load(fh)
                key = (m["dataset"], m["classifier"])
                if key in found:
                    log.warning("duplicate result for %s / %s, keeping %s", *key, root)
                found[key] = dict(m, _dir=root)
    return found


def _order(names, pref):
    return [n for n in pref if n in names] + sorted(n for n in names if n not in pref)


def metric_tables(found):
    """{metric: (datasets, classifiers, rows)} where each row holds the values
    per dataset followed by mean and stdev across datasets."""
    datasets = _order({k[0] for k in found}, ["circles", "moon", "swissroll", "normdist",
                                               "sphere", "iris", "wine", "breast_cancer"])
    clfs = _order({k[1] for k in found}, ["TDABC-A", "TDABC-M", "TDABC-R", "wkNN", "kNN"])
    tables = {}
    for metric in METRICS:
        rows = []
        for c in clfs:
            vals = [found[(d, c)]["metrics"][metric] if (d, c) in found else None for d in datasets]
            present = [v for v in vals if v is not None]
            mean = float(np.mean(present)) if present else float("nan")
            sd = float(np.std(present, ddof=1)) if len(present) > 1 else float("nan")
            rows.append((c, vals, mean, sd))
        tables[metric] = (datasets, clfs, rows)
    return tables


def write_tables(found, out_dir):
    if not found:
        raise UserError("no results (metrics.json) found")
    tdir = os.path.join(out_dir, "tables")
    tables = metric_tables(found)
    summary = {}
    for metric, (datasets, clfs, rows) in tables.items():
        lines = [["classifier"] + datasets + ["mean", "stdev"]]
        js = {}
        for c, vals, mean, sd in rows:
            lines.append([c] + ["" if v is None else _num(v) for v in vals] + [_num(mean), _num(sd)])
            js[c] = {"values": dict(zip(datasets, vals)), "mean": mean, "stdev": sd}
            summary.setdefault(metric, {})[c] = (mean, sd)
        _write(os.path.join(tdir, f"{metric}.csv"), _csv_text(lines))
        _write_json(os.path.join(tdir, f"{metric}.json"), js)
    clfs = tables[METRICS[0]][1]
    lines = [["metric"] + clfs]
    for metric in METRICS:
        lines.append([metric] + [f"{summary[metric][c][0]:.3f}±{summary[metric][c][1]:.3f}"
                                 for c in clfs])
    _write(os.path.join(tdir, "summary.csv"), _csv_text(lines))
    _write_json(os.path.join(tdir, "summary.json"),
                {m: {c: {"mean": v[0], "stdev": v[1]} for c, v in summary[m].items()}
                 for m in METRICS})
    return tdir


def cmd_report(results_dirs, out_dir=None):
    """Aggregate tables (CSV/JSON) plus SVG confusion heatmaps and barcodes."""
    from .persistence import DiagramSet
    from .plotting import barcode_svg, confusion_svg

    if isinstance(results_dirs, str):
        results_dirs = [results_dirs]
    for d in results_dirs:
        if not os.path.isdir(d):
            raise UserError(f"results: not a directory: {d}")
    found = collect_results(results_dirs)
    if not found:
        raise UserError("results: no run outputs (metrics.json) found")
    out_dir = out_dir or os.path.join(results_dirs[0], "report")
    write_tables(found, out_dir)
    fdir = os.path.join(out_dir, "figures")
    os.makedirs(fdir, exist_ok=True)
    for (dname, cname), m in sorted(found.items()):
        cpath = os.path.join(m["_dir"], "confusion.csv")
        if os.path.isfile(cpath):
            with open(cpath, encoding="utf-8") as fh:
                rows = list(csv.reader(fh))
            labels = rows[0][1:]
            M = np.array([[int(x) for x in r[1:]] for r in rows[1:]])
            confusion_svg(M, labels, os.path.join(fdir, f"confusion_{_safe(dname)}_{_safe(cname)}.svg"),
                          title=f"{dname} / {cname}")
    for d in results_dirs:
        for root, _, files in sorted(os.walk(d)):
            if os.path.abspath(root).startswith(os.path.abspath(out_dir)):
                continue
            for f in sorted(files):
                if f.startswith("diagrams_") and f.endswith(".csv"):
                    with open(os.path.join(root, f), encoding="utf-8") as fh:
                        dg = DiagramSet.from_csv(fh)
                    name = os.path.basename(root)
                    barcode_svg(dg, os.path.join(fdir, f"barcode_{_safe(name)}_{f[9:-4]}.svg"),
                                title=f"{name} {f[9:-4]}")
    return out_dir


# --- entry point --------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="tdabc", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("generate", help="write a synthetic dataset as CSV + JSON manifest")
    g.add_argument("spec", help=f"preset ({', '.join(dsm.PRESETS)}), JSON file or inline JSON")
    g.add_argument("out", help="output CSV path")
    g.add_argument("--seed", type=int, default=0)

    r = sub.add_parser("run", help="run the cross-validation protocol from a JSON config")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (default: config's output_dir)")
    r.add_argument("--seed", type=int)
    r.add_argument("--q", type=int)
    r.add_argument("--strategy", choices=sorted(STRATEGY_KIND))
    r.add_argument("--sublevel", choices=["birth", "middle", "death"])
    r.add_argument("--k", type=int)
    r.add_argument("--folds-fraction", type=float, dest="folds_fraction")
    r.add_argument("--repeats", type=int)
    r.add_argument("--count-mode", choices=list(COUNT_MODES), dest="count_mode")
    r.add_argument("--collapse", action=argparse.BooleanOptionalAction, default=None)
    r.add_argument("--jobs", type=int)

    rp = sub.add_parser("report", help="aggregate tables and figures from run outputs")
    rp.add_argument("results", nargs="+")
    rp.add_argument("--out")
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.cmd == "generate":
            cmd_generate(args.spec, args.out, args.seed)
        elif args.cmd == "run":
            out = cmd_run(args.config, args)
            print(out)
        else:
            print(cmd_report(args.results, args.out))
    except UserError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # noqa: BLE001
        log.exception("internal error")
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
