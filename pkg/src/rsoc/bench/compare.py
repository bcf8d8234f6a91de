"""Overlay several finished runs of the same experiment."""
from __future__ import annotations

import csv
import os

from ..ddp import CSV_FIELDS
from .config import ExperimentConfig
from .runner import _fmt, read_report, report_svg


class MismatchedRunsError(ValueError):
    """Runs given to :func:`compare` belong to different experiments."""


def load_run(path):
    cfg = ExperimentConfig.load(os.path.join(path, "config.resolved"))
    return cfg, read_report(os.path.join(path, "report.csv"))


def run_labels(paths, configs):
    """Solver names, made unique with the directory name where needed."""
    names = [c.solver for c in configs]
    return [n if names.count(n) == 1 else f"{n}:{os.path.basename(os.path.normpath(p))}"
            for n, p in zip(names, paths)]


def compare(paths, out_dir, x_field="iter"):
    """Merge run directories into ``compare.csv`` (long format) and ``compare.svg``.

    Returns the list of run labels.
    """
    if len(paths) < 2:
        raise ValueError("compare needs at least two run directories")
    if x_field not in ("iter", "dyn_evals"):
        raise ValueError("x axis must be 'iter' or 'dyn_evals'")
    loaded = [load_run(p) for p in paths]
    names = {cfg.name for cfg, _ in loaded}
    if len(names) != 1:
        raise MismatchedRunsError(f"runs come from different experiments: {', '.join(sorted(names))}")
    labels = run_labels(paths, [cfg for cfg, _ in loaded])
    if len(set(labels)) != len(labels):
        raise ValueError("run labels are not unique")
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "compare.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("run",) + CSV_FIELDS)
        for label, (_, rows) in zip(labels, loaded):
            for row in rows:
                cells = []
                for f in CSV_FIELDS:
                    v = row[f]
                    cells.append(_fmt(int(v)) if f in ("iter", "stage", "dyn_evals") else _fmt(v))
                w.writerow([label] + cells)
    with open(os.path.join(out_dir, "compare.svg"), "w") as fh:
        fh.write(report_svg(names.pop(), [(l, rows) for l, (_, rows) in zip(labels, loaded)], x_field))
    return labels
