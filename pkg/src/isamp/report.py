"""Result serialization: metrics CSVs, plot-data CSVs and the run JSON.

Every floating-point value is written with 17 significant digits so files
round-trip exactly; files are written atomically (temp file + rename).
The run JSON embeds the full numeric payload, which lets plot files be
regenerated byte-identically later.
"""

import json
import os
import tempfile
from typing import List

import numpy as np

from . import __version__
from .harness import (METHOD_ORDER, CurveMetrics, MetricsTable,
                      WeightDistResult)
from .sampler import Summary


def fmt(x) -> str:
    return f"{float(x):.17g}"


def atomic_write_text(path, text: str):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def version_string() -> str:
    return f"isamp-{__version__}"


# ----------------------------------------------------------------------
# payload construction (plain JSON-serializable dictionaries)
# ----------------------------------------------------------------------

def metrics_payload(table: MetricsTable) -> dict:
    return {
        "type": "metrics",
        "methods": {
            m: {
                "bias": table.methods[m].bias,
                "mse": table.methods[m].mse,
                "coverage_95": table.methods[m].coverage_95,
                "avg_ci_length": table.methods[m].avg_ci_length,
            }
            for m in METHOD_ORDER if m in table.methods
        },
        "n_failed": table.n_failed,
        "scenario": {
            "kind": table.scenario.kind,
            "N": table.scenario.N,
            "n": table.scenario.n,
            "M": table.scenario.M,
            "b_pi_true": table.scenario.b_pi_true,
            "base_seed": table.scenario.base_seed,
        },
    }


def curve_payload(cm: CurveMetrics) -> dict:
    return {
        "type": "curve",
        "grid": list(cm.grid),
        "truth": list(cm.truth),
        "methods": {
            m: {
                "mean_fit": list(cm.mean_fit[m]),
                "bias": list(cm.bias[m]),
                "mse": list(cm.mse[m]),
                "coverage_95": list(cm.coverage[m]),
                "avg_ci_length": list(cm.avg_ci_length[m]),
                "grid_avg_coverage": cm.grid_avg_coverage[m],
                "grid_avg_coverage_se": cm.grid_avg_coverage_se[m],
            }
            for m in METHOD_ORDER if m in cm.mean_fit
        },
        "n_failed": cm.n_failed,
        "scenario": {
            "kind": cm.scenario.kind,
            "N": cm.scenario.N,
            "n": cm.scenario.n,
            "M": cm.scenario.M,
            "base_seed": cm.scenario.base_seed,
        },
    }


def summary_payload(summary: Summary) -> dict:
    return {
        "parameters": list(summary.names),
        "mean": list(map(float, summary.mean)),
        "sd": list(map(float, summary.sd)),
        "q2.5": list(map(float, summary.q2_5)),
        "q97.5": list(map(float, summary.q97_5)),
    }


def fit_payload(summary: Summary, method: str, model: str,
                curve=None, diagnostics=None) -> dict:
    payload = {
        "type": "fit",
        "model": model,
        "method": method,
        "summary": summary_payload(summary),
    }
    if curve is not None:
        payload["curve"] = {
            "x": list(map(float, curve["x"])),
            "mean": list(map(float, curve["mean"])),
            "lo": list(map(float, curve["lo"])),
            "hi": list(map(float, curve["hi"])),
        }
    if diagnostics:
        payload["diagnostics"] = diagnostics
    return payload


def weights_dist_payload(res: WeightDistResult) -> dict:
    return {
        "type": "weights_dist",
        "summary": summary_payload(res.summary),
        "hist_edges": list(map(float, res.hist_edges)),
        "hist_density": list(map(float, res.hist_density)),
        "density_grid": list(map(float, res.density_grid)),
        "true_density": list(map(float, res.true_density)),
        "estimated_density": list(map(float, res.estimated_density)),
        "N": res.N,
        "n": res.n,
        "seed": res.seed,
        "pi_scale": res.pi_scale,
    }


# ----------------------------------------------------------------------
# file emission from payloads
# ----------------------------------------------------------------------

def emit_files(payload: dict, out_dir: str) -> List[str]:
    """Write the CSV files described by a payload; returns the paths."""
    kind = payload["type"]
    written = []

    def put(name, text):
        path = os.path.join(out_dir, name)
        atomic_write_text(path, text)
        written.append(path)

    if kind == "metrics":
        rows = [
            [m] + [fmt(payload["methods"][m][c])
                   for c in ("bias", "mse", "coverage_95", "avg_ci_length")]
            for m in payload["methods"]
        ]
        put("metrics.csv",
            _csv(["method", "bias", "mse", "coverage_95", "avg_ci_length"], rows))
    elif kind == "curve":
        # grid-averaged metrics in the standard metrics layout
        rows = []
        for m in payload["methods"]:
            d = payload["methods"][m]
            rows.append([
                m,
                fmt(np.mean(d["bias"])),
                fmt(np.mean(d["mse"])),
                fmt(d["grid_avg_coverage"]),
                fmt(np.mean(d["avg_ci_length"])),
            ])
        put("metrics.csv",
            _csv(["method", "bias", "mse", "coverage_95", "avg_ci_length"], rows))
        for m, d in payload["methods"].items():
            rows = [
                [fmt(x), fmt(t), fmt(mf), fmt(b), fmt(e), fmt(c), fmt(ln)]
                for x, t, mf, b, e, c, ln in zip(
                    payload["grid"], payload["truth"], d["mean_fit"], d["bias"],
                    d["mse"], d["coverage_95"], d["avg_ci_length"])
            ]
            put(f"curve_{m}.csv",
                _csv(["x", "truth", "mean", "bias", "mse", "coverage_95",
                      "avg_ci_length"], rows))
    elif kind == "fit":
        s = payload["summary"]
        rows = [
            [name, fmt(mn), fmt(sd), fmt(lo), fmt(hi)]
            for name, mn, sd, lo, hi in zip(
                s["parameters"], s["mean"], s["sd"], s["q2.5"], s["q97.5"])
        ]
        put("fit_summary.csv",
            _csv(["parameter", "mean", "sd", "q2.5", "q97.5"], rows))
        if "curve" in payload:
            c = payload["curve"]
            rows = [[fmt(x), fmt(mn), fmt(lo), fmt(hi)]
                    for x, mn, lo, hi in zip(c["x"], c["mean"], c["lo"], c["hi"])]
            put(f"curve_{payload['method']}.csv",
                _csv(["x", "mean", "lo", "hi"], rows))
    elif kind == "weights_dist":
        s = payload["summary"]
        rows = [
            [name, fmt(mn), fmt(sd), fmt(lo), fmt(hi)]
            for name, mn, sd, lo, hi in zip(
                s["parameters"], s["mean"], s["sd"], s["q2.5"], s["q97.5"])
        ]
        put("weights_summary.csv",
            _csv(["parameter", "mean", "sd", "q2.5", "q97.5"], rows))
        edges = payload["hist_edges"]
        rows = [[fmt(edges[i]), fmt(edges[i + 1]), fmt(d)]
                for i, d in enumerate(payload["hist_density"])]
        put("weights_hist.csv", _csv(["bin_left", "bin_right", "density"], rows))
        rows = [[fmt(x), fmt(t), fmt(e)]
                for x, t, e in zip(payload["density_grid"],
                                   payload["true_density"],
                                   payload["estimated_density"])]
        put("weights_density.csv",
            _csv(["x", "true_density", "estimated_density"], rows))
    else:
        raise ValueError(f"unknown payload type: {kind!r}")
    return written


def write_run_json(out_dir: str, command: str, config: dict, payload: dict,
                   wall_time_s: float, seeds=None) -> str:
    doc = {
        "command": command,
        "version": version_string(),
        "wall_time_s": wall_time_s,
        "seeds": seeds if seeds is not None else config.get("seed"),
        "config": config,
        "payload": payload,
    }
    path = os.path.join(out_dir, "run.json")
    atomic_write_text(path, json.dumps(doc, indent=2) + "\n")
    return path


def write_report(result, out_dir: str, command: str = "", config=None,
                 wall_time_s: float = 0.0) -> List[str]:
    """Serialize a study/fit/experiment result into ``out_dir``."""
    if isinstance(result, MetricsTable):
        payload = metrics_payload(result)
    elif isinstance(result, CurveMetrics):
        payload = curve_payload(result)
    elif isinstance(result, WeightDistResult):
        payload = weights_dist_payload(result)
    elif isinstance(result, Summary):
        payload = fit_payload(result, method="", model="")
    elif isinstance(result, dict) and "type" in result:
        payload = result
    else:
        raise ValueError("unsupported result object")
    paths = emit_files(payload, out_dir)
    paths.append(write_run_json(out_dir, command, config or {}, payload,
                                wall_time_s))
    return paths
