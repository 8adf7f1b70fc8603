"""Reproducible scenario runner.

A config names one scenario, a 64-bit master seed, a trial count and
scenario parameters.  Ensemble member ``i`` always draws from
``seed_stream(seed, i)``, so the report body is a pure function of the
config; only ``wall_clock_seconds`` varies between runs.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
import time
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import actualization as act
from . import correlations as corr
from . import dynamics as dyn
from . import hidden
from . import nocloning as nc
from .fiq import FiqState
from .streams import MASK64, seed_stream

SCHEMA_VERSION = "1"
SCENARIOS = ("spread", "wigner", "einstein", "entangle", "chsh", "noclone", "hv-oracle")

DEFAULTS: dict[str, dict[str, Any]] = {
    "spread": {"delta_v0": 0.01, "length": 1.0, "times": [0, 25, 50, 100, 200],
               "x0": 0.5, "v0": -0.5},
    "wigner": {"state": "prefix=;biased=2/3;", "friend_depth": 1},
    "einstein": {"left": [0.0, 0.25], "right": [0.75, 1.0], "p_left": "1/2"},
    "entangle": {"a_center": 0.0, "b_center": 10.0, "delta_a": 16.0, "delta_l": 0.5,
                 "max_actualizations": 4, "variance_samples": 1_000_000},
    "chsh": {"mode": "both", "mixtures": 5},
    "noclone": {"cells": 8, "permutations": 1000, "pairs": 1000, "fiq_depth": 3},
    "hv-oracle": {"states": 50, "max_digits": 16, "max_biased": 6},
}
DEFAULT_TRIALS = {"spread": 1, "wigner": 30_000, "einstein": 30_000, "entangle": 100_000,
                  "chsh": 100_000, "noclone": 1, "hv-oracle": 100_000}


class ConfigError(ValueError):
    """Invalid experiment configuration; ``errors`` lists every violation."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid config:\n  " + "\n  ".join(self.errors))


class ReportWriteError(OSError):
    pass


@dataclass
class ExperimentConfig:
    scenario: str
    seed: int = 0
    trials: int | None = None
    params: dict[str, Any] = field(default_factory=dict)
    output_format: str = "json"
    output_path: str | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {"scenario", "seed", "trials", "params", "output_format", "output_path"}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(["unknown config keys: %s" % ", ".join(unknown)])
        if "scenario" not in data:
            raise ConfigError(["missing required key 'scenario'"])
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(["config is not valid JSON: %s" % exc]) from exc
        except OSError as exc:
            raise ConfigError(["cannot read config %s: %s" % (path, exc)]) from exc
        if not isinstance(data, dict):
            raise ConfigError(["config must be a JSON object"])
        return cls.from_dict(data)

    def resolved(self) -> "ExperimentConfig":
        """Fill defaults and validate; raises ``ConfigError`` listing all problems."""
        errors = []
        if self.scenario not in SCENARIOS:
            raise ConfigError(["unknown scenario %r; expected one of %s"
                               % (self.scenario, ", ".join(SCENARIOS))])
        if not isinstance(self.seed, int) or not 0 <= self.seed <= MASK64:
            errors.append("seed must be a 64-bit unsigned integer")
        trials = DEFAULT_TRIALS[self.scenario] if self.trials is None else self.trials
        if not isinstance(trials, int) or trials < 1:
            errors.append("trials must be an integer >= 1")
        if self.output_format not in ("json", "csv"):
            errors.append("output_format must be 'json' or 'csv'")
        unknown = sorted(set(self.params) - set(DEFAULTS[self.scenario]))
        if unknown:
            errors.append("unknown %s parameters: %s" % (self.scenario, ", ".join(unknown)))
        params = {**DEFAULTS[self.scenario], **self.params}
        cfg = ExperimentConfig(self.scenario, self.seed, trials, params,
                               self.output_format, self.output_path)
        if not errors:
            try:
                errors.extend(VALIDATORS[self.scenario](params, trials))
            except (TypeError, ValueError) as exc:
                errors.append("malformed %s parameters: %s" % (self.scenario, exc))
        if errors:
            raise ConfigError(errors)
        return cfg

    def to_dict(self) -> dict:
        return {"scenario": self.scenario, "seed": self.seed, "trials": self.trials,
                "params": self.params, "output_format": self.output_format,
                "output_path": self.output_path}


# ------------------------------------------------------------- validators

def _try(errors: list, label: str, fn: Callable):
    try:
        fn()
    except (ValueError, TypeError, KeyError, ZeroDivisionError) as exc:
        errors.append("%s: %s" % (label, exc))


def _validate_spread(p, trials):
    errors = []
    _try(errors, "delta_v0", lambda: dyn.critical_time(p["length"], p["delta_v0"]))
    if any(t < 0 for t in p["times"]):
        errors.append("times must be non-negative")
    t_c = p["length"] / p["delta_v0"] if p["delta_v0"] > 0 and p["length"] > 0 else 0
    if sum(1 for t in p["times"] if t < t_c) < 2:
        errors.append("need at least two sample times before saturation to fit a slope")
    _try(errors, "particle", lambda: _spread_particle(p))
    return errors


def _validate_wigner(p, trials):
    errors = []
    _try(errors, "state", lambda: FiqState.parse(p["state"]))
    if not 0 <= p["friend_depth"] <= act.MAX_BRANCH_DEPTH:
        errors.append("friend_depth must lie in [0, %d]" % act.MAX_BRANCH_DEPTH)
    return errors


def _validate_einstein(p, trials):
    errors = []
    _try(errors, "branches", lambda: _branched(p))
    return errors


def _validate_entangle(p, trials):
    errors = []
    _try(errors, "pair", lambda: corr.make_pair(p["a_center"], p["b_center"],
                                                 p["delta_a"], p["delta_l"]))
    if not 0 <= p["max_actualizations"] <= 8:
        errors.append("max_actualizations must lie in [0, 8]")
    if p["variance_samples"] < 1000:
        errors.append("variance_samples must be at least 1000")
    if trials < 10_000:
        errors.append("nonsignaling test needs trials >= 10^4")
    return errors


def _validate_chsh(p, trials):
    errors = []
    if p["mode"] not in ("brute-force", "mixture", "both"):
        errors.append("chsh mode must be brute-force, mixture or both")
    if p["mixtures"] < 0:
        errors.append("mixtures must be non-negative")
    if p["mode"] != "brute-force" and trials < 100:
        errors.append("mixture mode needs trials >= 100")
    return errors


def _validate_noclone(p, trials):
    errors = []
    if p["cells"] < 2:
        errors.append("cells must be at least 2")
    if p["permutations"] < 1 or p["pairs"] < 1:
        errors.append("permutations and pairs must be positive")
    if not 1 <= p["fiq_depth"] <= nc.MAX_FIQ_DEPTH:
        errors.append("fiq_depth must lie in [1, %d]" % nc.MAX_FIQ_DEPTH)
    return errors


def _validate_hv(p, trials):
    errors = []
    if p["states"] < 1:
        errors.append("states must be positive")
    if not 2 <= p["max_digits"] <= hidden.MAX_COMPLETION_DIGITS:
        errors.append("max_digits must lie in [2, %d]" % hidden.MAX_COMPLETION_DIGITS)
    if p["max_biased"] < 0:
        errors.append("max_biased must be non-negative")
    if trials < 10_000:
        errors.append("hv-oracle needs trials >= 10^4")
    return errors


VALIDATORS = {"spread": _validate_spread, "wigner": _validate_wigner,
              "einstein": _validate_einstein, "entangle": _validate_entangle,
              "chsh": _validate_chsh, "noclone": _validate_noclone, "hv-oracle": _validate_hv}


# -------------------------------------------------------------- scenarios

def _binomial_ok(count: int, n: int, p: float, z: float = 5.0) -> bool:
    sigma = math.sqrt(n * p * (1 - p))
    return abs(count - n * p) <= z * sigma if sigma > 0 else count == round(n * p)


def _spread_particle(p) -> dyn.ParticleState:
    half = p["delta_v0"] / 2
    return dyn.ParticleState((p["x0"], p["x0"]), (p["v0"] - half, p["v0"] + half), p["length"])


def _run_spread(cfg):
    p = cfg.params
    dv0, ell = p["delta_v0"], p["length"]
    times = [float(t) for t in p["times"]]
    widths = [dyn.spread_width(dv0, t, ell) for t in times]
    t_c = dyn.critical_time(ell, dv0)
    pre = [(t, w) for t, w in zip(times, widths) if t < t_c]
    slope = float(np.polyfit([t for t, _ in pre], [w for _, w in pre], 1)[0])
    particle = _spread_particle(p)
    positions = [dyn.evolve_particle(particle, t).position for t in times]
    width_at_tc = dyn.spread_width(dv0, t_c, ell)
    summary = {"times": times, "widths": widths, "slope": slope, "critical_time": t_c,
               "width_at_critical_time": width_at_tc,
               "particle_positions": [list(x) for x in positions]}
    verdicts = {"slope_matches_delta_v0": abs(slope - dv0) <= 1e-9,
                "saturates_at_length": width_at_tc == ell}
    rows = [("time", "width", "position_lo", "position_hi")]
    rows += [(t, w, x[0], x[1]) for t, w, x in zip(times, widths, positions)]
    return summary, verdicts, rows


def _run_wigner(cfg):
    p = cfg.params
    s = FiqState.parse(p["state"])
    depth = p["friend_depth"]
    outcomes = Counter()
    outside_same = 0
    for i in range(cfg.trials):
        run = act.wigner_friend_run(s, depth, seed_stream(cfg.seed, i))
        outcomes[run.inside_state.determined[:depth]] += 1
        outside_same += run.outside_state == s
    predicted = act.enumerate_branches(s, depth).outcome_weights(depth)
    table = []
    within = True
    for key in sorted(set(predicted) | set(outcomes)):
        w = predicted.get(key, Fraction(0))
        ok = _binomial_ok(outcomes[key], cfg.trials, float(w))
        within &= ok
        table.append({"outcome": "".join(map(str, key)), "count": outcomes[key],
                      "predicted_weight": str(w), "within_5_sigma": ok})
    summary = {"outcomes": table, "outside_identical_runs": outside_same, "runs": cfg.trials}
    verdicts = {"outside_state_unchanged": outside_same == cfg.trials,
                "inside_matches_branch_weights": within}
    return summary, verdicts, None


def _branched(p) -> corr.BranchedPosition:
    return corr.BranchedPosition(tuple(p["left"]), tuple(p["right"]), Fraction(p["p_left"]))


def _run_einstein(cfg):
    s = _branched(cfg.params)
    left = 0
    sharp = True
    for i in range(cfg.trials):
        post = corr.collapse_branch(s, seed_stream(cfg.seed, i))
        left += post.p_left == 1
        sharp &= {post.p_left, post.p_right} == {0, 1}
    summary = {"left_count": left, "runs": cfg.trials, "p_left": str(s.p_left)}
    verdicts = {"left_frequency_within_5_sigma": _binomial_ok(left, cfg.trials, float(s.p_left)),
                "post_states_sharp": sharp}
    return summary, verdicts, None


def side_sequences(max_len: int):
    """Every A/B actualization order of length 1..max_len."""
    for n in range(1, max_len + 1):
        for seq in itertools.product("AB", repeat=n):
            yield "".join(seq)


def _run_entangle(cfg):
    p = cfg.params
    pair = corr.make_pair(p["a_center"], p["b_center"], p["delta_a"], p["delta_l"])
    worst = abs(pair.identity_residual())
    n_admissible = 0
    for j, seq in enumerate(side_sequences(p["max_actualizations"])):
        rng = seed_stream(cfg.seed, j)
        state = pair
        try:
            for side in seq:
                state = corr.actualize_local(state, side, rng)
                worst = max(worst, abs(state.identity_residual()))
        except ValueError:
            continue  # regime exhausted: sequence not admissible
        n_admissible += 1
    base = 1_000_000
    variance = {fam: corr.variance_oracle(pair, p["variance_samples"],
                                          seed_stream(cfg.seed, base + k), fam)
                for k, fam in enumerate(corr.FAMILIES)}
    signal = corr.nonsignaling_test(pair, cfg.trials, seed_stream(cfg.seed, base + 10))
    mutant = corr.nonsignaling_test(pair, cfg.trials, seed_stream(cfg.seed, base + 11),
                                    signal_shift=pair.delta_b / 2)
    summary = {"delta_b": pair.delta_b, "admissible_sequences": n_admissible,
               "max_identity_residual": worst,
               "variance_rel_error": {f: v.rel_error for f, v in variance.items()},
               "nonsignaling": {"tvd": signal.tvd, "threshold": signal.threshold,
                                "pass": signal.passed},
               "signaling_mutant": {"tvd": mutant.tvd, "threshold": mutant.threshold,
                                    "pass": mutant.passed}}
    verdicts = {"identity_holds": worst <= 1e-12,
                "variance_oracle_within_1pct": all(v.rel_error <= 0.01 for v in variance.values()),
                "nonsignaling": signal.passed,
                "mutant_detected": not mutant.passed}
    return summary, verdicts, None


def _run_chsh(cfg):
    p = cfg.params
    summary, verdicts = {}, {}
    if p["mode"] in ("brute-force", "both"):
        best = corr.chsh_max_deterministic()
        summary["max_abs_S_deterministic"] = float(best)
        verdicts["deterministic_max_is_2"] = best == 2
    if p["mode"] in ("mixture", "both"):
        signs = list(itertools.product((1, -1), repeat=4))
        estimates = []
        ok = True
        for k in range(p["mixtures"]):
            rng = seed_stream(cfg.seed, k)
            weights = rng.dirichlet(np.ones(len(signs)))
            est = corr.chsh_value(corr.ChshStrategy.shared_mixture(signs, weights),
                                  cfg.trials, rng)
            ok &= abs(est.value) <= 2 + 5 * est.stderr
            estimates.append({"S": est.value, "stderr": est.stderr})
        summary["mixtures"] = estimates
        verdicts["mixtures_within_bound"] = ok
    return summary, verdicts, None


def _random_distribution(rng, n):
    return dyn.GridDistribution.normalized(rng.dirichlet(np.ones(n)))


def _run_noclone(cfg):
    p = cfg.params
    n = p["cells"]
    rng = seed_stream(cfg.seed, 0)
    conserved = 0
    for _ in range(p["permutations"]):
        p1, p2 = _random_distribution(rng, n), _random_distribution(rng, n)
        conserved += nc.conservation_check(rng.permutation(n), p1, p2)
    rng = seed_stream(cfg.seed, 1)
    positive = 0
    min_deficit = math.inf
    for _ in range(p["pairs"]):
        p1, p2 = _random_distribution(rng, n), _random_distribution(rng, n)
        q1, q2 = _random_distribution(rng, n), _random_distribution(rng, n)
        rep = nc.clone_deficit(p1, p2, q1, q2)
        positive += rep.deficit > 0 and not rep.clonable
        min_deficit = min(min_deficit, rep.deficit)
    deltas = [nc.clone_deficit(dyn.GridDistribution.delta(n, i), dyn.GridDistribution.delta(n, j),
                               dyn.GridDistribution.uniform(n), dyn.GridDistribution.uniform(n))
              for i in range(n) for j in range(n) if i != j]
    d = p["fiq_depth"]
    fiq_pair = nc.fiq_clone_deficit(FiqState((), (Fraction(2, 3),)),
                                    FiqState((), (Fraction(1, 3),)), d)
    summary = {"conserved": conserved, "permutations": p["permutations"],
               "positive_deficits": positive, "pairs": p["pairs"], "min_deficit": min_deficit,
               "delta_pairs_clonable": sum(r.clonable for r in deltas),
               "delta_pairs": len(deltas), "fiq_example": fiq_pair.to_dict()}
    verdicts = {"kl_conserved": conserved == p["permutations"],
                "deficit_positive": positive == p["pairs"],
                "deltas_clonable": all(r.clonable for r in deltas)}
    return summary, verdicts, None


def random_fiq(rng: np.random.Generator, max_prefix: int, max_biased: int,
               max_den: int = 12) -> FiqState:
    prefix = tuple(int(b) for b in rng.integers(2, size=int(rng.integers(max_prefix + 1))))
    biased = []
    for _ in range(int(rng.integers(max_biased + 1))):
        den = int(rng.integers(2, max_den + 1))
        biased.append(Fraction(int(rng.integers(1, den)), den))
    return FiqState(prefix, tuple(biased))


def _run_hv(cfg):
    p = cfg.params
    rows = []
    ok = True
    for i in range(p["states"]):
        rng = seed_stream(cfg.seed, i)
        D = int(rng.integers(2, p["max_digits"] + 1))
        s = random_fiq(rng, min(4, D), p["max_biased"])
        s = FiqState(s.determined[:D], s.biased)
        k = int(rng.integers(1, min(3, D) + 1))
        steps = int(rng.integers(0, D - k + 1))
        rep = hidden.equivalence_oracle(s, steps, D, cfg.trials, rng, k=k)
        ok &= rep.passed
        rows.append({"state": str(s), "D": D, "steps": steps, "k": k, "tvd": rep.tvd,
                     "threshold": rep.threshold, "pass": rep.passed})
    return {"cases": rows}, {"all_equivalent": ok}, None


DRIVERS = {"spread": _run_spread, "wigner": _run_wigner, "einstein": _run_einstein,
           "entangle": _run_entangle, "chsh": _run_chsh, "noclone": _run_noclone,
           "hv-oracle": _run_hv}


# -------------------------------------------------------------- reporting

def _jsonable(obj):
    if isinstance(obj, float) and math.isinf(obj):
        return "inf" if obj > 0 else "-inf"
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return _jsonable(float(obj))
    return obj


def report_body(report: dict) -> dict:
    return {k: v for k, v in report.items() if k != "wall_clock_seconds"}


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True)


def _csv_text(report: dict, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if rows is None:
        writer.writerow(("key", "value"))
        flat = {"scenario": report["scenario"], "pass": report["pass"]}
        flat.update({"verdict." + k: v for k, v in report["verdicts"].items()})
        flat.update({"summary." + k: json.dumps(v, sort_keys=True)
                     for k, v in report["summary"].items()})
        rows = list(flat.items())
    writer.writerows(rows)
    return buf.getvalue()


def run(config: ExperimentConfig | dict, echo: bool = False) -> dict:
    """Execute one scenario and return its report.

    The report is written to ``output_path`` when one is configured and
    printed to stdout when ``echo`` is set.
    """
    if isinstance(config, dict):
        config = ExperimentConfig.from_dict(config)
    cfg = config.resolved()
    start = time.perf_counter()
    summary, verdicts, rows = DRIVERS[cfg.scenario](cfg)
    verdicts = {k: bool(v) for k, v in verdicts.items()}
    report = _jsonable({
        "schema_version": SCHEMA_VERSION,
        "scenario": cfg.scenario,
        "config": cfg.to_dict(),
        "summary": summary,
        "verdicts": verdicts,
        "pass": all(verdicts.values()),
    })
    report["wall_clock_seconds"] = time.perf_counter() - start
    text = (_csv_text(report, rows) if cfg.output_format == "csv"
            else dumps_report(report) + "\n")
    if cfg.output_path:
        try:
            Path(cfg.output_path).write_text(text)
        except OSError as exc:
            raise ReportWriteError("cannot write report to %s: %s" % (cfg.output_path, exc)) from exc
    if echo:
        print(text, end="")
    return report
