"""Result serialization (JSON, CSV) and figure emission (SVG).

JSON files carry full double precision and a schema_version so that
plots can be re-rendered byte-identically from a saved result file.
All writes are atomic: content goes to a temporary file in the target
directory and is moved into place with os.replace.
"""

import csv
import io
import json
import os
import tempfile

import numpy as np

from .links import get_link
from .sroc import sroc_curve

SCHEMA_VERSION = 1

_FIT_FIELDS = (
    "theta", "alpha", "beta", "sigma_theta", "sigma_alpha",
    "gamma0", "gamma1", "loglik", "sauc", "sauc_variance",
    "ci_low", "ci_high", "sop_sensitivity", "sop_specificity",
    "converged", "boundary_hit",
)

_CURVE_X = np.linspace(0.001, 0.999, 200)


def _studies_payload(studies):
    payload = []
    for s in studies:
        entry = {"label": s.label, "tp": s.n11, "fp": s.n10, "fn": s.n01, "tn": s.n00}
        if s.cutoff is not None:
            entry["cutoff"] = s.cutoff
        payload.append(entry)
    return payload


def _fit_payload(fit):
    p = fit.params
    return {
        "theta": p.theta,
        "alpha": p.alpha,
        "beta": p.beta,
        "sigma_theta": p.sigma_theta,
        "sigma_alpha": p.sigma_alpha,
        "gamma0": None if np.isposinf(fit.gamma0) else float(fit.gamma0),
        "gamma1": float(fit.gamma1),
        "loglik": float(fit.loglik),
        "sauc": fit.sroc.sauc,
        "sauc_variance": fit.sroc.sauc_variance,
        "ci_low": fit.sroc.ci_low,
        "ci_high": fit.sroc.ci_high,
        "sop_sensitivity": fit.sroc.sop_sensitivity,
        "sop_specificity": fit.sroc.sop_specificity,
        "converged": fit.converged,
        "boundary_hit": fit.boundary_hit,
        "covariance": None if fit.covariance is None else np.asarray(fit.covariance).tolist(),
    }


def fit_report(fit, studies, link="logistic"):
    """Serializable document for a single fit."""
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "fit",
        "link": link,
        "p": float(fit.p),
        "selection": None if fit.spec is None else {
            "c0": fit.spec.c0, "c1": fit.spec.c1, "p": fit.spec.p,
        },
        "fit": _fit_payload(fit),
        "studies": _studies_payload(studies),
    }


def sensitivity_report(table, studies, link="logistic"):
    """Serializable document for a sensitivity-analysis grid."""
    rows = []
    for row in table:
        entry = {"c0": row.spec.c0, "c1": row.spec.c1, "p": row.p}
        if row.result is not None:
            entry["fit"] = _fit_payload(row.result)
            entry["error"] = None
        else:
            entry["fit"] = None
            entry["error"] = row.error
        rows.append(entry)
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "sensitivity",
        "link": link,
        "rows": rows,
        "studies": _studies_payload(studies),
    }


def simulation_report(summary):
    """Serializable document for a simulation study summary."""
    sc = summary.scenario
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "simulation",
        "scenario": {
            "sens": sc.sens, "spec": sc.spec, "beta": sc.beta,
            "sigma_theta": sc.sigma_theta, "sigma_alpha": sc.sigma_alpha,
            "n1_range": list(sc.n1_range), "n0_range": list(sc.n0_range),
            "gamma1": sc.gamma1, "p_target": sc.p_target,
            "c0": sc.c0, "c1": sc.c1, "s_tilde": sc.s_tilde,
            "link": sc.link,
        },
        "replications": summary.replications,
        "true_sauc": summary.true_sauc,
        "published_fraction": summary.published_fraction,
        "rows": [
            {
                "estimator": r.label,
                "mean_sauc100": r.mean_sauc100,
                "sd_sauc100": r.sd_sauc100,
                "reps_used": r.reps_used,
                "n_failed": r.n_failed,
            }
            for r in summary.rows
        ],
    }


def _atomic_write(path, content):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as handle:
            handle.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_text(doc):
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _fit_csv(doc):
    rows = []
    if doc["kind"] == "fit":
        entries = [{"c0": None, "c1": None, "p": doc["p"], "fit": doc["fit"], "error": None}]
        if doc["selection"] is not None:
            entries[0]["c0"] = doc["selection"]["c0"]
            entries[0]["c1"] = doc["selection"]["c1"]
    else:
        entries = doc["rows"]
    for e in entries:
        base = [e["c0"], e["c1"], e["p"]]
        if e["fit"] is None:
            rows.append(base + [""] * len(_FIT_FIELDS) + [e["error"]])
        else:
            rows.append(base + [e["fit"][k] for k in _FIT_FIELDS] + [""])
    return _csv_text(["c0", "c1", "p", *_FIT_FIELDS, "error"], rows)


def _simulation_csv(doc):
    header = ["estimator", "mean_sauc100", "sd_sauc100", "reps_used", "n_failed",
              "true_sauc100", "published_fraction"]
    rows = [
        [r["estimator"], r["mean_sauc100"], r["sd_sauc100"], r["reps_used"],
         r["n_failed"], 100.0 * doc["true_sauc"], doc["published_fraction"]]
        for r in doc["rows"]
    ]
    return _csv_text(header, rows)


def _scatter_from_studies(studies_payload):
    pts = []
    for s in studies_payload:
        tpr = s["tp"] / (s["tp"] + s["fn"])
        fpr = s["fp"] / (s["fp"] + s["tn"])
        pts.append((fpr, tpr))
    return pts


def _curve_points(fit_payload, link):
    ys = sroc_curve(fit_payload["alpha"], fit_payload["beta"], _CURVE_X, link)
    return list(_CURVE_X), list(ys)


def render_figures(doc):
    """SVG figures for a result document; returns {suffix: svg_text}.

    Rendering depends only on the document contents, so a saved JSON
    file reproduces its figures exactly.
    """
    from .svg import render_sauc_trend, render_sroc_panel

    kind = doc["kind"]
    figures = {}
    if kind == "fit":
        link = get_link(doc["link"])
        fit = doc["fit"]
        xs, ys = _curve_points(fit, link)
        figures["sroc"] = render_sroc_panel(
            [(f"p={doc['p']:g}", xs, ys)],
            scatter_points=_scatter_from_studies(doc["studies"]),
            sop_points=[("sop", 1.0 - fit["sop_specificity"], fit["sop_sensitivity"])],
            title="SROC curve",
        )
        return figures
    if kind == "sensitivity":
        link = get_link(doc["link"])
        pairs = sorted({(r["c0"], r["c1"]) for r in doc["rows"]})
        for c0, c1 in pairs:
            rows = [
                r for r in doc["rows"]
                if (r["c0"], r["c1"]) == (c0, c1) and r["fit"] is not None
            ]
            rows.sort(key=lambda r: -r["p"])
            if not rows:
                continue
            tag = f"c0_{c0:.3f}_c1_{c1:.3f}"
            curves, sops = [], []
            for r in rows:
                xs, ys = _curve_points(r["fit"], link)
                curves.append((f"p={r['p']:g}", xs, ys))
                sops.append(
                    (f"p={r['p']:g}",
                     1.0 - r["fit"]["sop_specificity"], r["fit"]["sop_sensitivity"])
                )
            figures[f"sroc_{tag}"] = render_sroc_panel(
                curves,
                scatter_points=_scatter_from_studies(doc["studies"]),
                sop_points=sops,
                title=f"SROC curves, c0={c0:.3f} c1={c1:.3f}",
            )
            figures[f"sauc_{tag}"] = render_sauc_trend(
                [r["p"] for r in rows],
                [r["fit"]["sauc"] for r in rows],
                ci_low=[r["fit"]["ci_low"] for r in rows],
                ci_high=[r["fit"]["ci_high"] for r in rows],
                title=f"SAUC vs p, c0={c0:.3f} c1={c1:.3f}",
            )
        return figures
    if kind == "simulation":
        return figures
    raise ValueError(f"unknown report kind {kind!r}")


def emit_report(doc, out_dir, basename, formats=("json", "csv", "svg")):
    """Write a result document in the requested formats; returns paths."""
    written = []
    if "json" in formats:
        path = os.path.join(out_dir, f"{basename}.json")
        _atomic_write(path, _json_text(doc))
        written.append(path)
    if "csv" in formats:
        path = os.path.join(out_dir, f"{basename}.csv")
        if doc["kind"] == "simulation":
            _atomic_write(path, _simulation_csv(doc))
        else:
            _atomic_write(path, _fit_csv(doc))
        written.append(path)
    if "svg" in formats:
        for suffix, svg_text in render_figures(doc).items():
            path = os.path.join(out_dir, f"{basename}_{suffix}.svg")
            _atomic_write(path, svg_text)
            written.append(path)
    return written
