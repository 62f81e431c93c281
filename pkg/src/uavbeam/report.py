"""CSV emission for Monte Carlo results.

Every table is written even when there is nothing to report, in which case
it carries only its header. Angles are in radians, delays in ms and rates
in bits/s/Hz.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from .association import METRICS, SOLVERS
from .config import WEIGHT_MODES, Variant
from .harness import Aggregate, MonteCarloResult
from .initial_access import SCHEMES, ia_delay

CHARACTERISTICS = ("position", "velocity")
IA_Q_VALUES = (4, 6, 8)

MATCHING_COLUMNS = ["n_t", "metric", "weights"] + list(SOLVERS)
TIMING_COLUMNS = ["n_t", "metric", "weights", "solver", "mean_seconds", "se_seconds"]
WEIGHT_COLUMNS = ["n_t", "slot"] + [f"w_{c}" for c in CHARACTERISTICS] + [f"se_{c}" for c in CHARACTERISTICS]
ANGLE_COLUMNS = ["n_t", "slot", "isac_phi_rmse", "isac_theta_rmse", "feedback_phi_rmse", "feedback_theta_rmse"]
WINDOW_COLUMNS = ["n_t", "trials", "closest_slot", "isac_phi_rmse", "isac_theta_rmse",
                  "feedback_phi_rmse", "feedback_theta_rmse"]
RATE_COLUMNS = ["n_t", "scheme", "slot", "rate", "se"]
RATE_SUMMARY_COLUMNS = ["n_t", "scheme", "mean_rate", "se", "loss_vs_oracle"]
IA_COLUMNS = ["Q_B", "Q_U"] + [f"{s}_ms" for s in SCHEMES]
IA_SIM_COLUMNS = ["n_t", "scheme", "mean_delay_ms", "success_rate"]

TABLES = {
    "matching_accuracy": MATCHING_COLUMNS,
    "solver_timing": TIMING_COLUMNS,
    "weights": WEIGHT_COLUMNS,
    "angle_error": ANGLE_COLUMNS,
    "angle_error_window": WINDOW_COLUMNS,
    "rates": RATE_COLUMNS,
    "rate_summary": RATE_SUMMARY_COLUMNS,
    "ia_delay": IA_COLUMNS,
    "ia_simulated": IA_SIM_COLUMNS,
}


class ReportError(OSError):
    pass


def _aggregates(result) -> List[Aggregate]:
    if result is None:
        return []
    if isinstance(result, MonteCarloResult):
        return [result.by_nt[n] for n in sorted(result.by_nt)]
    if isinstance(result, Aggregate):
        return [result]
    return list(result)


def matching_rows(aggs: Sequence[Aggregate]) -> List[Dict]:
    rows = []
    for a in aggs:
        table: Dict = {}
        for label in a.variants:
            v = Variant.parse(label)
            table.setdefault((v.metric, v.weights), {})[v.solver] = a.mean_accuracy(label)
        for metric in METRICS:
            for weights in WEIGHT_MODES:
                cells = table.get((metric, weights))
                if cells:
                    rows.append({"n_t": a.n_t, "metric": metric, "weights": weights, **cells})
    return rows


def timing_rows(aggs: Sequence[Aggregate]) -> List[Dict]:
    rows = []
    for a in aggs:
        for i, label in enumerate(a.variants):
            v = Variant.parse(label)
            rows.append({"n_t": a.n_t, "metric": v.metric, "weights": v.weights, "solver": v.solver,
                         "mean_seconds": a.solver_seconds[i], "se_seconds": a.solver_seconds_se[i]})
    return rows


def weight_rows(aggs: Sequence[Aggregate]) -> List[Dict]:
    rows = []
    for a in aggs:
        for n in range(a.weights.shape[0]):
            row = {"n_t": a.n_t, "slot": n}
            for m, c in enumerate(CHARACTERISTICS[:a.weights.shape[1]]):
                row[f"w_{c}"] = a.weights[n, m]
                row[f"se_{c}"] = a.weights_se[n, m]
            rows.append(row)
    return rows


def angle_rows(aggs: Sequence[Aggregate]) -> List[Dict]:
    rows = []
    for a in aggs:
        r = a.angle_rmse
        for n in range(r.shape[2]):
            rows.append({"n_t": a.n_t, "slot": n,
                         "isac_phi_rmse": r[0, 0, n], "isac_theta_rmse": r[0, 1, n],
                         "feedback_phi_rmse": r[1, 0, n], "feedback_theta_rmse": r[1, 1, n]})
    return rows


def window_rows(aggs: Sequence[Aggregate]) -> List[Dict]:
    return [{"n_t": a.n_t, "trials": a.trials, "closest_slot": a.closest_slot,
             "isac_phi_rmse": a.window_rmse[0, 0], "isac_theta_rmse": a.window_rmse[0, 1],
             "feedback_phi_rmse": a.window_rmse[1, 0], "feedback_theta_rmse": a.window_rmse[1, 1]}
            for a in aggs]


def rate_rows(aggs: Sequence[Aggregate]) -> List[Dict]:
    rows = []
    for a in aggs:
        for s, name in enumerate(a.schemes):
            for n in range(a.rates.shape[1]):
                rows.append({"n_t": a.n_t, "scheme": name, "slot": n,
                             "rate": a.rates[s, n], "se": a.rates_se[s, n]})
    return rows


def rate_summary_rows(aggs: Sequence[Aggregate]) -> List[Dict]:
    rows = []
    for a in aggs:
        oracle = a.mean_rate("oracle")
        for s, name in enumerate(a.schemes):
            per_trial = a.trial_rate[:, s]
            se = per_trial.std(ddof=1) / np.sqrt(len(per_trial)) if len(per_trial) > 1 else 0.0
            mean = float(per_trial.mean())
            loss = (oracle - mean) / oracle if oracle > 0 else float("nan")
            rows.append({"n_t": a.n_t, "scheme": name, "mean_rate": mean, "se": se,
                         "loss_vs_oracle": loss})
    return rows


def ia_delay_rows(q_values: Iterable[int] = IA_Q_VALUES, S1: int = 2, S2: int = 2,
                  T_p: float = 5.0, proposed_variant: str = "with-ra") -> List[Dict]:
    rows = []
    for qb in q_values:
        for qu in q_values:
            row = {"Q_B": qb, "Q_U": qu}
            for s in SCHEMES:
                row[f"{s}_ms"] = ia_delay(s, qb, qu, S1, S2, T_p, proposed_variant)
            rows.append(row)
    return rows


def ia_sim_rows(aggs: Sequence[Aggregate]) -> List[Dict]:
    return [{"n_t": a.n_t, "scheme": s, "mean_delay_ms": a.ia_delay[s], "success_rate": a.ia_success[s]}
            for a in aggs for s in a.ia_delay]


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Dict]) -> Path:
    try:
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(columns), restval="")
            w.writeheader()
            for row in rows:
                w.writerow({k: _fmt(v) for k, v in row.items()})
    except OSError as exc:
        raise ReportError(f"cannot write {path}: {exc}") from exc
    return path


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def emit_report(result, out_dir, ia_config=None, figures: Optional[bool] = None) -> Dict[str, Path]:
    """Write every CSV table (and optionally PNG figures) into ``out_dir``.

    ``result`` may be a :class:`MonteCarloResult`, one :class:`Aggregate`,
    a sequence of them or ``None``; empty input yields header-only tables.
    The closed-form IA table depends only on ``ia_config``.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ReportError(f"cannot create output directory {out}: {exc}") from exc
    aggs = _aggregates(result)
    if ia_config is None and isinstance(result, MonteCarloResult):
        ia_config = result.config.ia.config
    if figures is None:
        figures = isinstance(result, MonteCarloResult) and result.config.output.figures

    builders = {
        "matching_accuracy": matching_rows,
        "solver_timing": timing_rows,
        "weights": weight_rows,
        "angle_error": angle_rows,
        "angle_error_window": window_rows,
        "rates": rate_rows,
        "rate_summary": rate_summary_rows,
        "ia_simulated": ia_sim_rows,
    }
    paths = {}
    for name, build in builders.items():
        paths[name] = write_csv(out / f"{name}.csv", TABLES[name], build(aggs))
    if ia_config is not None:
        ia_rows = ia_delay_rows(IA_Q_VALUES, ia_config.S1, ia_config.S2, ia_config.T_p,
                                ia_config.proposed_variant)
    else:
        ia_rows = ia_delay_rows() if aggs else []
    paths["ia_delay"] = write_csv(out / "ia_delay.csv", IA_COLUMNS, ia_rows)

    if figures:
        from .plotting import render_figures
        paths.update(render_figures(aggs, ia_rows, out))
    return paths
