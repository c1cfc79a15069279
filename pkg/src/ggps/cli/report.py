"""Fit-run reports: a JSON document plus an aligned console rendering.

Schema (``format`` = ``ggps-report/1``)::

    {
      "format": "ggps-report/1",
      "version": str,            # package version that wrote the report
      "seed": int,
      "settings": {...},         # method, ci level, m, models requested
      "dataset": {"label", "source", "n", "min", "max", "mean"},
      "models": [                # one entry per fitted model, in request order
        {"fit": {...FitResult fields...}, "gof": {...GofReport fields...}}
      ],
      "ranking": [label, ...],   # model labels by increasing AIC
      "warnings": [str, ...]     # "label: text" for collapse / non-convergence
    }

Floats are written with ``repr`` precision (``NaN`` and ``Infinity`` for
non-finite values), so :func:`read_report` rebuilds every field bit-exactly.
Arrays are nested lists; the ``spec`` field (a ModelSpec) is stored as ``{"name", "m"}``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from ..estimation import FitResult, model_spec
from ..gof import SIGNIFICANCE, GofReport

FORMAT = "ggps-report/1"


@dataclass(frozen=True)
class ModelEntry:
    fit: FitResult
    gof: GofReport

    @property
    def label(self) -> str:
        return self.fit.spec.label


@dataclass(frozen=True)
class RunReport:
    dataset: dict
    models: tuple[ModelEntry, ...]
    seed: int
    version: str
    settings: dict = field(default_factory=dict)

    def __post_init__(self):
        labels = [m.label for m in self.models]
        if len(set(labels)) != len(labels):
            raise ValueError("each model may appear only once in a report")

    @property
    def ranking(self) -> list[str]:
        """Model labels by increasing AIC (ties keep request order)."""
        order = sorted(range(len(self.models)), key=lambda i: self.models[i].gof.aic)
        return [self.models[i].label for i in order]

    @property
    def warnings(self) -> list[str]:
        return [f"{m.label}: {w}" for m in self.models for w in m.fit.warnings]

    @property
    def any_unconverged(self) -> bool:
        return any(not m.fit.converged for m in self.models)


# -- encoding ------------------------------------------------------------------
def _plain(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    if isinstance(v, tuple):
        return list(v)
    return v


def _fit_to_dict(fit: FitResult) -> dict:
    out = {}
    for f in fields(fit):
        v = getattr(fit, f.name)
        if f.name == "spec":
            v = {"name": v.name, "m": getattr(v.family, "m", None)}
        elif f.name == "method_logliks":
            v = {k: float(x) for k, x in v.items()}
        out[f.name] = _plain(v)
    return out


def _fit_from_dict(d: dict) -> FitResult:
    spec_d = d["spec"]
    spec = model_spec(spec_d["name"], spec_d["m"] or 5)
    arrays = ("estimates", "trace", "score", "std_errors", "ci")
    kw = {k: v for k, v in d.items() if k != "spec"}
    for name in arrays:
        kw[name] = np.array(kw[name], dtype=float)
    if kw["ci"].size == 0:
        kw["ci"] = kw["ci"].reshape(0, 2)
    kw["info_matrix"] = None if kw["info_matrix"] is None else np.array(kw["info_matrix"], dtype=float)
    kw["at_bound"] = tuple(kw["at_bound"])
    kw["warnings"] = tuple(kw["warnings"])
    return FitResult(spec=spec, **kw)


def report_to_dict(report: RunReport) -> dict:
    return {
        "format": FORMAT,
        "version": report.version,
        "seed": report.seed,
        "settings": report.settings,
        "dataset": report.dataset,
        "models": [{"fit": _fit_to_dict(m.fit), "gof": {k: _plain(v) for k, v in asdict(m.gof).items()}}
                   for m in report.models],
        "ranking": report.ranking,
        "warnings": report.warnings,
    }


def write_report(report: RunReport, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report_to_dict(report), indent=1) + "\n", encoding="utf-8")
    return path


def read_report(path) -> RunReport:
    """Rebuild a :class:`RunReport` written by :func:`write_report`."""
    d = json.loads(Path(path).read_text(encoding="utf-8"))
    if d.get("format") != FORMAT:
        raise ValueError(f"not a {FORMAT} document")
    models = tuple(ModelEntry(_fit_from_dict(m["fit"]), GofReport(**m["gof"])) for m in d["models"])
    return RunReport(
        dataset=d["dataset"], models=models, seed=d["seed"], version=d["version"], settings=d["settings"],
    )


# -- console rendering -----------------------------------------------------------
def _cell(v, digits=5) -> str:
    return "NA" if v is None or not np.isfinite(v) else f"{v:.{digits}f}"


def _align(rows) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows)


def render_report(report: RunReport) -> str:
    """Console tables: estimates with standard errors, then fit statistics."""
    ds = report.dataset
    out = [f"dataset {ds['label']}: n={ds['n']}, min={ds['min']:.6g}, max={ds['max']:.6g}", ""]
    est_rows = [["model", "alpha", "beta", "gamma", "theta"]]
    for m in report.models:
        p = m.fit.params
        se = dict(zip(m.fit.param_names, m.fit.std_errors))
        row = [m.label]
        for name in ("alpha", "beta", "gamma", "theta"):
            row.append("-" if name not in p else f"{p[name]:.5g} ({_cell(se[name], 4)})")
        est_rows.append(row)
    out += ["parameter estimates (standard errors)", _align(est_rows), ""]
    stat_rows = [["model", "k", "-logL", "AIC", "AICC", "BIC", "K-S", "p-value", "W", "A", "notes"]]
    for m in report.models:
        g = m.gof
        notes = []
        if g.rejected:
            notes.append(f"rejected at {SIGNIFICANCE:g}")
        if m.fit.collapsed:
            notes.append("collapses to GG sub-model")
        pinned = [n for n in m.fit.at_bound if not (n == "theta" and m.fit.collapsed)]
        if pinned:
            notes.append("on bound: " + ",".join(pinned))
        if not m.fit.converged:
            notes.append("not converged")
        stat_rows.append([
            m.label, str(m.fit.k), _cell(-m.fit.loglik), _cell(g.aic, 4), _cell(g.aicc, 4), _cell(g.bic, 4),
            _cell(g.ks_stat, 4), _cell(g.ks_pvalue, 4), _cell(g.cm_stat, 4), _cell(g.ad_stat, 4), "; ".join(notes),
        ])
    out += [f"fit statistics (K-S significance level {SIGNIFICANCE:g})", _align(stat_rows), ""]
    out.append("ranking by AIC: " + ", ".join(report.ranking))
    if report.warnings:
        out += ["", "warnings:"] + [f"  {w}" for w in report.warnings]
    return "\n".join(out) + "\n"
