"""Experiment runners behind the CLI subcommands.

Each runner takes a validated :class:`ExperimentConfig` and returns a
:class:`RunOutcome` holding in-memory artifacts (CSV text, JSON documents)
plus the list of failed theorem-level checks. Writing to disk happens in
:func:`write_outcome` so the numeric payload stays byte-reproducible.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__, rng as rngmod
from .channels import d_nfold, sample_words
from .config import ExperimentConfig
from .errors import InfeasibleBlocklength, RateInfeasible
from .linalg import operator_jensen_sqrt_check
from .measures import DEFAULT_ALPHA_GRID, holevo_information, info_report
from .resolvability import HIGH_ALPHAS, LOW_ALPHAS, codebook_size, distance_trials, theoretical_exponent
from .security import advantage_audit
from .typicality import atypical_mass_audit, build_typicality, check_typical_bounds, symmetrization_check
from .wiretap import (DecoderConfig, build_wiretap_code, distinguishing_security, estimate_average_error)


def fmt(x) -> str:
    """17 significant digits, so CSV round-trips are lossless."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return "" if x is None else str(x)


def csv_text(header, rows) -> str:
    """CSV with ``header`` columns; ``rows`` are dicts (extra keys ignored)."""
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(header)
    for row in rows:
        out.writerow([fmt(row.get(h)) for h in header])
    return buf.getvalue()


@dataclass
class RunOutcome:
    kind: str
    csv: dict = field(default_factory=dict)    # filename -> text
    json: dict = field(default_factory=dict)   # filename -> document
    failures: list = field(default_factory=list)

    @property
    def status(self) -> int:
        return 1 if self.failures else 0

    def fail(self, check: str, **witness):
        self.failures.append({"check": check, **witness})


# -- info ------------------------------------------------------------------

def run_info(cfg: ExperimentConfig) -> RunOutcome:
    d = cfg.cq_channel()
    p = cfg.distribution(d.input_size)
    w = cfg.legit_channel() if cfg.get("legit_channel") else None
    rep = info_report(d, p, w, cfg.get("alphas", DEFAULT_ALPHA_GRID))
    out = RunOutcome("info")
    out.csv["info.csv"] = rep.to_csv()
    out.json["info.json"] = rep.to_dict()
    if abs(rep.i_pd - (rep.h_u - rep.h_p)) > 1e-9:
        out.fail("holevo_identity", i_pd=rep.i_pd, h_u=rep.h_u, h_p=rep.h_p)
    if min(rep.h_p, rep.h_u) < 0 or (rep.i_pw is not None and rep.i_pw < 0):
        out.fail("non_negative_entropies", report=rep.to_dict())
    return out


# -- resolve / sweep -------------------------------------------------------

def _resolve_points(cfg: ExperimentConfig):
    """``(n, rate_or_None, M)`` grid points in deterministic order."""
    for n in cfg.n_grid:
        if "M" in cfg.raw:
            for m in cfg["M"]:
                yield n, None, m
        for r in cfg.get("rates", []):
            yield n, r, codebook_size(n, r)


RESOLVE_HEADER = ["trial", "seed", "n", "M", "distance"]


def run_resolve(cfg: ExperimentConfig) -> RunOutcome:
    d = cfg.cq_channel()
    p = cfg.distribution(d.input_size)
    out = RunOutcome("resolve")
    rows, summaries = [], []
    for n, rate, m in _resolve_points(cfg):
        res = distance_trials(d, p, n, m, cfg.trials, cfg.master_seed, workers=cfg["threads"])
        res.rate = rate
        if rate is not None:
            res.exponent = _exponent_or_none(d, p, rate, cfg.get("epsilon"))
        rows.extend(res.rows())
        summaries.append(res.summary())
        bad = np.flatnonzero((res.distances < -1e-12) | (res.distances > 2 + 1e-12))
        if bad.size:
            out.fail("distance_range", n=n, M=m, trials=bad.tolist())
    out.csv["resolve_trials.csv"] = csv_text(RESOLVE_HEADER, rows)
    out.json["resolve_summary.json"] = {"points": summaries}
    return out


def _exponent_or_none(d, p, rate, epsilon):
    try:
        return theoretical_exponent(d, p, rate, epsilon)
    except ValueError:
        return None


def fit_log_slope(ns, means, stderrs) -> dict:
    """Weighted least squares of ``log(mean)`` on ``n``.

    Weights are inverse delta-method variances ``(se / mean)^-2``. Returns
    ``slope``/``slope_se`` (None when any mean is zero: ``degenerate``).
    """
    ns, means, stderrs = (np.asarray(a, dtype=float) for a in (ns, means, stderrs))
    if len(ns) < 2 or np.any(means <= 0):
        return {"slope": None, "slope_se": None, "degenerate": True}
    var = (np.maximum(stderrs, 1e-300) / means) ** 2
    wts = 1.0 / var
    nbar = np.sum(wts * ns) / wts.sum()
    sxx = np.sum(wts * (ns - nbar) ** 2)
    slope = float(np.sum(wts * (ns - nbar) * np.log(means)) / sxx)
    return {"slope": slope, "slope_se": float(math.sqrt(1.0 / sxx)), "degenerate": False}


SWEEP_HEADER = ["point", "trial", "seed", "n", "M", "rate", "distance"]


def run_sweep(cfg: ExperimentConfig) -> RunOutcome:
    d = cfg.cq_channel()
    p = cfg.distribution(d.input_size)
    holevo = holevo_information(d, p)
    out = RunOutcome("sweep")
    rows, fits = [], []
    series = [("rate", r) for r in cfg.get("rates", [])] + [("M", m) for m in cfg.get("M", [])]
    point = 0
    for key, value in series:
        means, ses, ns = [], [], []
        for n in cfg.n_grid:
            m = codebook_size(n, value) if key == "rate" else value
            res = distance_trials(d, p, n, m, cfg.trials, cfg.master_seed, workers=cfg["threads"])
            for r in res.rows():
                rows.append({**r, "point": point, "rate": value if key == "rate" else None})
            means.append(res.mean)
            ses.append(res.std_error)
            ns.append(n)
            point += 1
        fit = fit_log_slope(ns, means, ses)
        fit.update({key: value, "n": ns, "means": means, "std_errors": ses})
        if fit["degenerate"]:
            fit["flag"] = "degenerate"
        else:
            significant = fit["slope"] + 3 * fit["slope_se"] < 0
            fit["significantly_negative"] = bool(significant)
            if key == "rate" and value <= holevo and not significant:
                fit["flag"] = "resolvability regime violated"
        fits.append(fit)
    out.csv["sweep.csv"] = csv_text(SWEEP_HEADER, rows)
    out.json["sweep_summary.json"] = {"holevo": holevo, "fits": fits}
    return out


# -- lemmas ----------------------------------------------------------------

LEMMA_HEADER = ["check", "n", "detail", "value", "bound", "pass"]


def run_lemmas(cfg: ExperimentConfig) -> RunOutcome:
    d = cfg.cq_channel()
    p = cfg.distribution(d.input_size)
    eps = cfg.get("epsilon", 0.2)
    out = RunOutcome("lemmas")
    rows = []
    alpha_grid = list(itertools.product(HIGH_ALPHAS, LOW_ALPHAS, HIGH_ALPHAS, LOW_ALPHAS))
    for n in cfg.n_grid:
        words = None
        if d.input_size ** n > 81:
            g = rngmod.stream(cfg.master_seed, n, "lemmas/words")
            words = list(sample_words(p, (81, n), g))
        tb = check_typical_bounds(d, p, n, eps, words)
        rows += [
            {"check": "typical_joint", "n": n, "detail": f"words={tb.words_checked}",
             "value": tb.joint_margin, "bound": -1e-9, "pass": tb.joint_margin >= -1e-9},
            {"check": "typical_output", "n": n, "detail": "", "value": tb.output_margin, "bound": -1e-9,
             "pass": tb.output_margin >= -1e-9},
            {"check": "typical_trace", "n": n, "detail": "", "value": tb.theta_trace,
             "bound": tb.theta_trace_bound, "pass": tb.theta_trace < tb.theta_trace_bound},
        ]
        if not tb.passed:
            out.fail("typical_bounds", n=n, witness=tb.witness)
        if (d.input_size * d.dim) ** n <= 10 ** 6:
            for rep in atypical_mass_audit(d, p, n, eps, alpha_grid):
                tag = "alphas=" + "/".join(fmt(a) for a in rep.alphas)
                rows += [
                    {"check": "atypical_joint", "n": n, "detail": tag, "value": rep.joint_mass,
                     "bound": rep.joint_bound, "pass": rep.joint_mass <= rep.joint_bound + 1e-12},
                    {"check": "atypical_output", "n": n, "detail": tag, "value": rep.output_mass,
                     "bound": rep.output_bound, "pass": rep.output_mass <= rep.output_bound + 1e-12},
                ]
                if not rep.passed:
                    out.fail("atypical_mass", n=n, alphas=list(rep.alphas))
            rows.append({"check": "atypical_split", "n": n, "detail": "", "value": rep.typical_overlap,
                         "bound": 1 - rep.joint_mass - rep.output_mass, "pass": rep.split_margin >= -1e-10})
        ell = cfg["ell"]
        tp = build_typicality(d, p, n, eps)
        for label, t_map in (("D", lambda w: d_nfold(d, w)),
                             ("GammaD", lambda w: tp.gamma(w) @ d_nfold(d, w))):
            if d.input_size ** n > 4096:
                break
            sr = symmetrization_check(t_map, p, n, ell, cfg.trials, cfg.master_seed)
            bound = min(sr.rhs_first, sr.rhs_second) + 3 * sr.lhs_stderr
            rows.append({"check": f"symmetrization_{label}", "n": n, "detail": f"ell={ell}",
                         "value": sr.lhs_mean, "bound": bound, "pass": sr.passed})
            if not sr.passed:
                out.fail("symmetrization", n=n, T=label, lhs=sr.lhs_mean, rhs=bound)
        g = rngmod.stream(cfg.master_seed, n, "lemmas/jensen")
        jr = operator_jensen_sqrt_check(lambda: d_nfold(d, sample_words(p, (n,), g)), cfg.trials)
        rows.append({"check": "operator_jensen_sqrt", "n": n, "detail": "", "value": jr.max_gap,
                     "bound": 1e-8, "pass": jr.passed})
        if not jr.passed:
            out.fail("operator_jensen_sqrt", n=n, gap=jr.max_gap)
    out.csv["lemmas.csv"] = csv_text(LEMMA_HEADER, rows)
    out.json["lemmas_summary.json"] = {"epsilon": eps, "checks": len(rows),
                                       "failed": sum(1 for r in rows if not r["pass"])}
    return out


# -- wiretap / advantage ---------------------------------------------------

WIRETAP_HEADER = ["trial", "message", "decoded", "correct"]


def _built_codes(cfg: ExperimentConfig):
    d = cfg.cq_channel()
    w = cfg.legit_channel()
    p = cfg.distribution(d.input_size)
    for n in cfg.n_grid:
        for rate, rate_tilde in zip(cfg["rates"], cfg["rate_tilde"]):
            try:
                code = build_wiretap_code(p, w, d, n, rate, rate_tilde, cfg.master_seed)
            except (InfeasibleBlocklength, RateInfeasible) as exc:
                yield n, rate, rate_tilde, None, type(exc).__name__ + ": " + str(exc)
                continue
            yield n, rate, rate_tilde, code, None


def run_wiretap(cfg: ExperimentConfig) -> RunOutcome:
    d = cfg.cq_channel()
    w = cfg.legit_channel()
    p = cfg.distribution(d.input_size)
    out = RunOutcome("wiretap")
    summaries, rows = [], []
    for n, rate, rate_tilde, code, reason in _built_codes(cfg):
        if code is None:
            summaries.append({"n": n, "R": rate, "R_tilde": rate_tilde, "built": False, "reason": reason})
            continue
        dec = DecoderConfig(cfg["decoder_threshold"]) if "decoder_threshold" in cfg.raw \
            else DecoderConfig.default(code, p, w, d)
        err = estimate_average_error(code, p, w, dec, cfg.trials, cfg.master_seed)
        sec = distinguishing_security(code, d, p)
        tag = f"n{n}_R{len(summaries)}"
        rows += [{"trial": t, "message": m, "decoded": g, "correct": c, "code": tag}
                 for t, m, g, c in err.records]
        out.json[f"wiretap_code_{tag}.json"] = code.to_json()
        summaries.append({
            "n": n, "R": rate, "R_tilde": rate_tilde, "built": True, "code": tag, "L": code.L, "M": code.M,
            "decoder_threshold": dec.threshold, "average_error": err.rate, "error_std": err.std_error,
            "message_prior": err.prior, "delta": sec.delta, "certificate": sec.certificate,
        })
        if not sec.triangle_ok:
            out.fail("security_triangle", n=n, delta=sec.delta, certificate=sec.certificate)
        if math.log(code.L) / n < rate - 1e-9:
            out.fail("rate_accounting", n=n, L=code.L, rate=rate)
    if not any(s["built"] for s in summaries):
        raise RateInfeasible("no (n, R, R~) combination in the config yields a feasible code")
    out.csv["wiretap_trials.csv"] = csv_text(["code"] + WIRETAP_HEADER, rows)
    out.json["wiretap_summary.json"] = {"codes": summaries}
    return out


def run_advantage(cfg: ExperimentConfig) -> RunOutcome:
    d = cfg.cq_channel()
    p = cfg.distribution(d.input_size)
    out = RunOutcome("advantage")
    summaries, csvs = [], []
    for n, rate, rate_tilde, code, reason in _built_codes(cfg):
        if code is None:
            summaries.append({"n": n, "R": rate, "R_tilde": rate_tilde, "built": False, "reason": reason})
            continue
        sec = distinguishing_security(code, d, p)
        g = rngmod.stream(cfg.master_seed, n, "advantage/priors")
        priors = [g.dirichlet(np.ones(code.L)) for _ in range(cfg["priors"])]
        audit = advantage_audit(sec.states, priors, rng=g)
        tag = f"n{n}_R{len(summaries)}"
        out.csv[f"audit_{tag}.csv"] = audit.to_csv()
        worst = audit.worst
        summaries.append({"n": n, "R": rate, "R_tilde": rate_tilde, "built": True, "L": code.L, "M": code.M,
                          "delta": audit.delta, "exhaustive": audit.exhaustive, "rows": len(audit.rows),
                          "max_advantage": worst.advantage if worst else 0.0, "passed": audit.passed})
        if not audit.passed:
            out.fail("advantage_bound", n=n, advantage=worst.advantage, delta=audit.delta)
    if not any(s["built"] for s in summaries):
        raise RateInfeasible("no (n, R, R~) combination in the config yields a feasible code")
    out.json["advantage_summary.json"] = {"codes": summaries}
    return out


RUNNERS = {
    "info": run_info,
    "resolve": run_resolve,
    "sweep": run_sweep,
    "lemmas": run_lemmas,
    "wiretap": run_wiretap,
    "advantage": run_advantage,
}


def run(cfg: ExperimentConfig) -> RunOutcome:
    return RUNNERS[cfg.kind](cfg)


def manifest(cfg: ExperimentConfig, started: str, finished: str) -> dict:
    return {
        "config_sha256": cfg.digest(),
        "tool": "ccqlab",
        "version": __version__,
        "master_seed": cfg.master_seed,
        "seed_rule": rngmod.ALGORITHM,
        "started": started,
        "finished": finished,
    }


def write_outcome(outcome: RunOutcome, out_dir, manifest_doc: dict | None = None) -> list:
    from pathlib import Path

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in outcome.csv.items():
        (out_dir / name).write_text(text)
        written.append(out_dir / name)
    for name, doc in outcome.json.items():
        (out_dir / name).write_text(json.dumps(doc, indent=1, sort_keys=True, default=_json_default))
        written.append(out_dir / name)
    if outcome.failures:
        (out_dir / "witness.json").write_text(json.dumps(outcome.failures, indent=1, default=_json_default))
        written.append(out_dir / "witness.json")
    if manifest_doc is not None:
        (out_dir / "manifest.json").write_text(json.dumps(manifest_doc, indent=1))
        written.append(out_dir / "manifest.json")
    return written


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return str(obj)
