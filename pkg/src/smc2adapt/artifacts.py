"""Run artifacts: trace and sample CSVs, summary JSON, score tables.

Every file is a pure function of (config, seed): floats are written with
shortest round-trip repr and the trace's wall_ms column is zeroed so
repeated runs produce byte-identical files. Measured wall times stay
available in memory on the StageRecord objects.
"""

from __future__ import annotations

import json

import numpy as np

TRACE_HEADER = "d,g_d,Nx,R,esjd,ess,tll,wall_ms"
SCORES_HEADER = "method,Z_MSE,Z_TLL,Z"


def _fmt(value) -> str:
    return repr(float(value))


def write_trace_csv(path, trace) -> None:
    """Write stage records; columns match the stage trace one to one."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(TRACE_HEADER + "\n")
        for rec in trace:
            fh.write(
                f"{rec.d},{_fmt(rec.temper)},{rec.nx},{rec.sweeps},"
                f"{_fmt(rec.esjd)},{_fmt(rec.ess)},{rec.tll},0\n"
            )


def write_samples_csv(path, model, ensemble) -> None:
    """Write the final parameter particles (constrained scale) with weights."""
    thetas = model.transform.to_constrained(ensemble.phis)
    weights = ensemble.weights
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(model.param_names) + ",weight\n")
        for row, w in zip(thetas, weights):
            fh.write(",".join(_fmt(v) for v in row) + f",{_fmt(w)}\n")


def summary_payload(model, ensemble, flavor: str, seed: int) -> dict:
    """Posterior means/variances per parameter plus run-level counters."""
    thetas = model.transform.to_constrained(ensemble.phis)
    w = ensemble.weights
    means = w @ thetas
    variances = w @ (thetas - means) ** 2
    return {
        "model": model.name,
        "flavor": flavor,
        "seed": int(seed),
        "n_theta": ensemble.n_theta,
        "nx_final": int(ensemble.nx),
        "n_stages": len(ensemble.trace),
        "tll": int(ensemble.tll),
        "posterior": {
            name: {"mean": float(m), "var": float(v)}
            for name, m, v in zip(model.param_names, means, variances)
        },
    }


def write_summary_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_scores_csv(path, metrics) -> None:
    """Write RunMetrics rows in the benchmark table layout."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(SCORES_HEADER + "\n")
        for m in metrics:
            fh.write(f"{m.label},{_fmt(m.z_mse)},{_fmt(m.z_tll)},{_fmt(m.z)}\n")
