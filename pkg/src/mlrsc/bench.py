"""Parameter sweeps over the simulation models.

Each grid point and replicate draws one network, runs RSC for every
``(p, q)`` pair and, when the dense guard allows, the exact SC baseline.
One :class:`RunRecord` is produced per method run.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import asdict, dataclass, fields
from typing import Iterable, Optional, Sequence

import numpy as np

from .cluster import PipelineConfig, rsc_coclustering, rsc_pipeline, sc_coclustering, sc_pipeline
from .metrics import ami, ari, misclassification_rate
from .sbm import model_preset, sample_msbm, sample_mscbm
from .sketch import DENSE_MAX_N

log = logging.getLogger(__name__)

AXES = ("n", "L", "rho")
STAGES = ("sparsify", "operator", "krylov", "rayleigh_ritz", "eigen", "kmeans", "total")


@dataclass
class RunRecord:
    model: int
    axis: str
    axis_value: float
    n: int
    layers: int
    rho: float
    method: str
    p: Optional[float]
    q: Optional[int]
    replicate: int
    seed: int
    k: int
    misclassification: Optional[float] = None
    fraction_misclassified: Optional[float] = None
    ari: Optional[float] = None
    ami: Optional[float] = None
    misclassification_col: Optional[float] = None
    t_sparsify: Optional[float] = None
    t_operator: Optional[float] = None
    t_krylov: Optional[float] = None
    t_rayleigh_ritz: Optional[float] = None
    t_eigen: Optional[float] = None
    t_kmeans: Optional[float] = None
    t_total: Optional[float] = None
    error: str = ""


FIELDNAMES = [f.name for f in fields(RunRecord)]
TIMING_FIELDS = [name for name in FIELDNAMES if name.startswith("t_")]


def _fill_timings(rec, timings):
    # co-clustering stages are prefixed row_/col_; fold them into one column
    for stage in STAGES:
        total = sum(v for k, v in timings.items()
                    if k == stage or k.endswith("_" + stage))
        hit = any(k == stage or k.endswith("_" + stage) for k in timings)
        setattr(rec, "t_" + stage, total if hit else None)


def _score(rec, model, result, directed):
    if directed:
        row, col = result.row.labels, result.col.labels
        rec.misclassification = misclassification_rate(model.row, row)
        rec.misclassification_col = misclassification_rate(model.col, col)
        truth, est = model.row, row
    else:
        est = result.cluster.labels
        truth = model.row
        rec.misclassification = misclassification_rate(truth, est)
    rec.fraction_misclassified = rec.misclassification / 2
    rec.ari = ari(truth, est)
    rec.ami = ami(truth, est)


def _grid_params(axis, value, n, L, rho):
    if axis == "n":
        return int(value), L, rho
    if axis == "L":
        return n, int(value), rho
    return n, L, float(value)


def run_benchmark(model_id: int, axis: str, values: Sequence[float], n: int = 1000,
                  L: int = 20, rho: float = 0.1, p_list: Iterable[float] = (0.7,),
                  q_list: Iterable[int] = (4,), replicates: int = 1, seed: int = 0,
                  restarts: int = 10, test_distribution: str = "gaussian",
                  run_sc: bool = True) -> list[RunRecord]:
    """Run the sweep and return one record per (grid point, replicate, method run)."""
    if axis == "layers":
        axis = "L"
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}")
    directed = model_id == 4
    p_list, q_list = list(p_list), list(q_list)
    records = []
    for value in values:
        n_i, L_i, rho_i = _grid_params(axis, value, n, L, rho)
        base = dict(model=model_id, axis=axis, axis_value=value, n=n_i, layers=L_i,
                    rho=rho_i, k=3)
        try:
            model = model_preset(model_id, n_i, L_i, rho_i)
        except Exception as exc:
            records.append(RunRecord(method="rsc", p=None, q=None, replicate=-1,
                                     seed=seed, error=f"{type(exc).__name__}: {exc}",
                                     **base))
            continue
        for rep in range(replicates):
            rep_seed = seed + rep
            runs = [("rsc", p, q) for p in p_list for q in q_list]
            if run_sc and n_i <= DENSE_MAX_N:
                runs.append(("sc", None, None))
            try:
                net = sample_mscbm(model, rep_seed) if directed else sample_msbm(model, rep_seed)
            except Exception as exc:
                for method, p, q in runs:
                    records.append(RunRecord(method=method, p=p, q=q, replicate=rep,
                                             seed=rep_seed, error=f"simulate: {exc}", **base))
                continue
            for method, p, q in runs:
                rec = RunRecord(method=method, p=p, q=q, replicate=rep, seed=rep_seed, **base)
                try:
                    if method == "rsc":
                        cfg = PipelineConfig(3, p, q, rep_seed, restarts,
                                             test_distribution=test_distribution)
                        res = rsc_coclustering(net, cfg) if directed else rsc_pipeline(net, cfg)
                    elif directed:
                        res = sc_coclustering(net, 3, 3, rep_seed, restarts)
                    else:
                        res = sc_pipeline(net, 3, rep_seed, restarts)
                    _score(rec, model, res, directed)
                    _fill_timings(rec, res.timings)
                except Exception as exc:
                    stage = getattr(exc, "stage", "")
                    rec.error = f"{stage + ': ' if stage else ''}{type(exc).__name__}: {exc}"
                    log.warning("run failed: %s", rec.error)
                records.append(rec)
    return records


def summarize(records: Sequence[RunRecord]) -> list[dict]:
    """Mean metrics per (axis value, method, p, q), skipping error rows."""
    groups: dict = {}
    for rec in records:
        key = (rec.axis_value, rec.method, rec.p, rec.q)
        groups.setdefault(key, []).append(rec)
    rows = []
    for (value, method, p, q), recs in groups.items():
        ok = [r for r in recs if not r.error]

        def mean(attr):
            vals = [getattr(r, attr) for r in ok if getattr(r, attr) is not None]
            return float(np.mean(vals)) if vals else None

        rows.append({
            "model": recs[0].model, "axis": recs[0].axis, "axis_value": value,
            "method": method, "p": p, "q": q, "runs": len(ok),
            "errors": len(recs) - len(ok),
            "mean_misclassification": mean("misclassification"),
            "mean_misclassification_col": mean("misclassification_col"),
            "mean_ari": mean("ari"), "mean_ami": mean("ami"),
            "mean_t_total": mean("t_total"),
        })
    return rows


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return value


def write_records(records, stream):
    writer = csv.DictWriter(stream, fieldnames=FIELDNAMES, lineterminator="\n")
    writer.writeheader()
    for rec in records:
        writer.writerow({k: _fmt(v) for k, v in asdict(rec).items()})


def write_summary(rows, stream):
    if not rows:
        return
    writer = csv.DictWriter(stream, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _fmt(v) for k, v in row.items()})
