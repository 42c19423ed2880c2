"""Batch experiment driver: ``qsrc <command> --config <json> --out <csv>``.

Exit codes: 0 success, 2 configuration error, 3 property violation,
4 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from qsrc import compression, properties
from qsrc.config import DEFAULT_EXACT_BUDGET, TOL, default_dense_cap
from qsrc.exceptions import ConfigError, PropertyViolation, ResourceCapError, ValidationError
from qsrc.functionals import (
    BoundReport,
    fidelity,
    holevo_information,
    holevo_via_relative_entropy,
    smin_binary,
    von_neumann_entropy,
)
from qsrc.states import (
    Ensemble,
    as_density_matrix,
    as_pure_state,
    bloch_state,
    ensemble_average,
    optimal_purification_pair,
    projector,
)

HEADER = "# qsrc-compress v1"
RD_COLUMNS = ["protocol", "N", "rate", "log_dim", "avg_distortion", "bound_lhs", "bound_rhs",
              "bound_ok", "estimation", "samples", "seed"]
PROTOCOL_COLUMNS = ["protocol", "N", "rate", "log_dim", "avg_distortion", "std_error",
                    "purified_distortion", "contractivity_violations", "holevo", "bound_lhs",
                    "bound_rhs", "bound_ok", "estimation", "samples", "seed"]
PROTOCOL_ALIASES = {"blind": compression.BLIND_SJ, "blind_sj": compression.BLIND_SJ,
                    "composed": compression.COMPOSED, "composed_purified": compression.COMPOSED}

EXIT_OK, EXIT_CONFIG, EXIT_PROPERTY, EXIT_CAP = 0, 2, 3, 4


# --- config parsing -----------------------------------------------------------


class ConfigSource:
    """Raw config text plus a best-effort mapping from JSON paths to line numbers."""

    def __init__(self, path: str, text: str):
        self.path = path
        self.text = text

    def line_of(self, where: Sequence[Any]) -> int | None:
        pos, line, skip = 0, None, 0
        for key in where:
            if isinstance(key, int):
                # list items usually repeat their keys, so skip earlier siblings
                skip = key
                continue
            pat = re.compile(r'"' + re.escape(str(key)) + r'"\s*:')
            m = None
            for _ in range(skip + 1):
                m = pat.search(self.text, pos)
                if m is None:
                    break
                pos = m.end()
            skip = 0
            if m is None:
                break
            line = self.text.count("\n", 0, m.start()) + 1
        return line

    def error(self, where: Sequence[Any], msg: str) -> ConfigError:
        dotted = "".join(f"[{k}]" if isinstance(k, int) else f".{k}" for k in where).lstrip(".") or "<root>"
        line = self.line_of(where)
        loc = f"{self.path}:{line}" if line else self.path
        return ConfigError(f"{loc}: {dotted}: {msg}")


def load_config(path: str) -> tuple[dict, ConfigSource]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    src = ConfigSource(path, text)
    if not isinstance(data, dict):
        raise src.error([], "top level must be a JSON object")
    return data, src


def _complex(x, src: ConfigSource, where) -> complex:
    if isinstance(x, bool):
        raise src.error(where, "expected a number or [re, im] pair")
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, list) and len(x) == 2 and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in x):
        return complex(x[0], x[1])
    raise src.error(where, "expected a number or [re, im] pair")


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def parse_state(spec, src: ConfigSource, where: list) -> np.ndarray:
    """Bloch vector ``[x, y, z]``, nested matrix, or ``{"bloch"|"matrix"|"ket": ...}``."""
    try:
        if isinstance(spec, dict):
            if len(spec) != 1 or next(iter(spec)) not in ("bloch", "matrix", "ket"):
                raise src.error(where, 'state object needs exactly one of "bloch", "matrix", "ket"')
            key, val = next(iter(spec.items()))
            if key == "bloch":
                if not _is_bloch(val):
                    raise src.error(where + ["bloch"], "Bloch vector must be three real numbers")
                return parse_state(val, src, where + ["bloch"])
            if key == "ket":
                if not isinstance(val, list) or not val:
                    raise src.error(where + ["ket"], "ket must be a nonempty list of amplitudes")
                amps = [_complex(a, src, where + ["ket", i]) for i, a in enumerate(val)]
                return projector(as_pure_state(np.array(amps)))
            return _matrix(val, src, where + ["matrix"])
        if _is_bloch(spec):
            x, y, z = (float(v) for v in spec)
            if x * x + y * y + z * z > 1.0 + TOL.norm:
                raise src.error(where, f"Bloch vector {spec} has length > 1")
            return bloch_state(x, y, z)
        if isinstance(spec, list) and spec and all(isinstance(r, list) for r in spec):
            return _matrix(spec, src, where)
    except ValidationError as exc:
        raise src.error(where, str(exc)) from exc
    raise src.error(where, "state must be a Bloch vector [x, y, z] or a square matrix")


def _is_bloch(v) -> bool:
    return isinstance(v, list) and len(v) == 3 and all(_is_number(x) for x in v)


def _matrix(rows, src: ConfigSource, where) -> np.ndarray:
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise src.error(where, "matrix must be a nonempty list of rows")
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise src.error(where, f"matrix must be square ({n} rows)")
    m = np.array([[_complex(v, src, where + [i, j]) for j, v in enumerate(r)] for i, r in enumerate(rows)])
    try:
        return as_density_matrix(m)
    except ValidationError as exc:
        raise src.error(where, str(exc)) from exc


def parse_ensemble(spec, src: ConfigSource, where: list) -> Ensemble:
    if not isinstance(spec, dict):
        raise src.error(where, 'ensemble must be an object with "probs" and "states"')
    for key in ("probs", "states"):
        if key not in spec:
            raise src.error(where, f'missing "{key}"')
    probs, states = spec["probs"], spec["states"]
    if not isinstance(probs, list) or not all(_is_number(p) for p in probs):
        raise src.error(where + ["probs"], "probs must be a list of numbers")
    if not isinstance(states, list) or len(states) != len(probs):
        raise src.error(where + ["states"], f"need {len(probs)} states to match probs")
    mats = [parse_state(s, src, where + ["states", i]) for i, s in enumerate(states)]
    try:
        return Ensemble(probs, mats)
    except ValidationError as exc:
        raise src.error(where, str(exc)) from exc


def _int_list(val, src, where, lo: int = 1) -> list[int]:
    vals = val if isinstance(val, list) else [val]
    if not vals or not all(isinstance(v, int) and not isinstance(v, bool) and v >= lo for v in vals):
        raise src.error(where, f"expected an integer >= {lo} or a list of them")
    return [int(v) for v in vals]


def _float_list(val, src, where) -> list[float]:
    vals = val if isinstance(val, list) else [val]
    if not vals or not all(_is_number(v) and math.isfinite(v) and v >= 0 for v in vals):
        raise src.error(where, "expected a nonnegative number or a list of them")
    return [float(v) for v in vals]


@dataclass
class Experiment:
    """One ensemble with its protocol grid."""

    name: str
    ensemble: Ensemble
    protocols: list[str]
    lengths: list[int]
    rates: list[float]
    mode: str = "topk"
    delta: float | None = None
    seed: int | None = None
    samples: int | None = None
    dense_cap: int = field(default_factory=default_dense_cap)
    exact_budget: int = DEFAULT_EXACT_BUDGET


def parse_experiment(spec: dict, src: ConfigSource, where: list, defaults: dict, seed: int | None) -> Experiment:
    merged = {**defaults, **spec}
    if "ensemble" not in merged:
        raise src.error(where, 'missing "ensemble"')
    ens = parse_ensemble(merged["ensemble"], src, where + ["ensemble"])
    raw = merged.get("protocols", merged.get("protocol", "blind_sj"))
    names = raw if isinstance(raw, list) else [raw]
    protos = []
    for i, p in enumerate(names):
        if p not in PROTOCOL_ALIASES:
            raise src.error(where + ["protocols"], f"unknown protocol {p!r}; use blind_sj or composed_purified")
        protos.append(PROTOCOL_ALIASES[p])
    len_key = "N" if "N" in merged else "k"
    if len_key not in merged:
        raise src.error(where, 'missing block length "N" (or "k")')
    lengths = _int_list(merged[len_key], src, where + [len_key])
    mode = merged.get("mode", "topk")
    if mode not in ("topk", "delta"):
        raise src.error(where + ["mode"], 'mode must be "topk" or "delta"')
    delta = None
    if mode == "delta":
        delta = merged.get("delta")
        if not _is_number(delta) or delta <= 0:
            raise src.error(where + ["delta"], "delta mode needs a positive \"delta\"")
        rates = [math.nan]
    else:
        if "rates" not in merged and "rate" not in merged:
            raise src.error(where, 'missing "rates"')
        key = "rates" if "rates" in merged else "rate"
        rates = _float_list(merged[key], src, where + [key])
    samples = merged.get("samples")
    if samples is not None and not (isinstance(samples, int) and samples >= 1):
        raise src.error(where + ["samples"], "samples must be a positive integer")
    cap = merged.get("dense_cap", default_dense_cap())
    budget = merged.get("exact_budget", DEFAULT_EXACT_BUDGET)
    for key, val in (("dense_cap", cap), ("exact_budget", budget)):
        if not (isinstance(val, int) and not isinstance(val, bool) and val >= 1):
            raise src.error(where + [key], f"{key} must be a positive integer")
    cfg_seed = merged.get("seed")
    if cfg_seed is not None and not (isinstance(cfg_seed, int) and cfg_seed >= 0):
        raise src.error(where + ["seed"], "seed must be a nonnegative integer")
    return Experiment(
        name=str(merged.get("name", f"experiment{where[-1] if where else ''}")), ensemble=ens,
        protocols=protos, lengths=lengths, rates=rates, mode=mode, delta=delta,
        seed=seed if seed is not None else cfg_seed, samples=samples, dense_cap=cap, exact_budget=budget,
    )


def parse_experiments(data: dict, src: ConfigSource, seed: int | None) -> list[Experiment]:
    if "experiments" in data:
        exps = data["experiments"]
        if not isinstance(exps, list) or not exps:
            raise src.error(["experiments"], "experiments must be a nonempty list")
        defaults = {k: v for k, v in data.items() if k not in ("experiments", "kind")}
        out = []
        for i, e in enumerate(exps):
            if not isinstance(e, dict):
                raise src.error(["experiments", i], "experiment must be an object")
            out.append(parse_experiment(e, src, ["experiments", i], defaults, seed))
        return out
    return [parse_experiment({k: v for k, v in data.items() if k != "kind"}, src, [], {}, seed)]


# --- output -------------------------------------------------------------------


def fmt(x) -> str:
    """Deterministic text for a CSV cell; never emits NaN."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return ""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


class CsvOut:
    def __init__(self, columns: list[str]):
        self.buf = io.StringIO()
        self.buf.write(HEADER + "\n")
        self.writer = csv.writer(self.buf, lineterminator="\n")
        self.writer.writerow(columns)

    def comment(self, text: str) -> None:
        self.buf.write(f"# {text}\n")

    def row(self, values: Sequence) -> None:
        self.writer.writerow([v if isinstance(v, str) else fmt(v) for v in values])

    def save(self, path: str) -> None:
        Path(path).write_text(self.buf.getvalue())


def _bound_cells(b: BoundReport) -> list:
    if not b.applicable:
        return [b.lhs, None, "n/a"]
    return [b.lhs, b.rhs, b.satisfied]


def _estimation(rec: compression.ProtocolRecord) -> list:
    return [rec.estimation, rec.samples, rec.seed]


# --- commands -----------------------------------------------------------------


def _single_ensemble(data: dict, src: ConfigSource) -> Ensemble:
    if "ensemble" not in data:
        raise src.error([], 'missing "ensemble"')
    return parse_ensemble(data["ensemble"], src, ["ensemble"])


def cmd_holevo(data: dict, src: ConfigSource, args) -> tuple[CsvOut, int]:
    ens = _single_ensemble(data, src)
    s_avg = von_neumann_entropy(ensemble_average(ens))
    s_mean = float(sum(p * von_neumann_entropy(r) for p, r in zip(ens.probs, ens.states)))
    chi = holevo_information(ens)
    chi_rel = holevo_via_relative_entropy(ens)
    out = CsvOut(["entropy_average", "mean_member_entropy", "holevo", "holevo_relative_entropy", "delta"])
    out.row([s_avg, s_mean, chi, chi_rel, abs(chi - chi_rel)])
    return out, EXIT_OK


def cmd_binary_smin(data: dict, src: ConfigSource, args) -> tuple[CsvOut, int]:
    ens = _single_ensemble(data, src)
    if len(ens) != 2:
        raise src.error(["ensemble", "states"], f"binary-smin needs exactly 2 members, got {len(ens)}")
    (p1, p2), (r1, r2) = ens.probs, ens.states
    f = fidelity(r1, r2)
    formula = smin_binary(p1, p2, r1, r2)
    psi1, psi2 = optimal_purification_pair(r1, r2)
    built = von_neumann_entropy(p1 * projector(psi1) + p2 * projector(psi2))
    chi = holevo_information(ens)
    gap = formula - chi
    out = CsvOut(["fidelity", "smin_formula", "smin_constructed", "holevo", "gap"])
    out.row([f, formula, built, chi, gap])
    return out, EXIT_OK if gap >= -TOL.bound else EXIT_PROPERTY


def _run(exp: Experiment, proto: str, n: int, rate: float, threads: int) -> compression.ProtocolRecord:
    kwargs = dict(rate=None if math.isnan(rate) else rate, mode=exp.mode, delta=exp.delta, seed=exp.seed,
                  samples=exp.samples, exact_budget=exp.exact_budget, dense_cap=exp.dense_cap, threads=threads)
    if proto == compression.BLIND_SJ:
        return compression.run_blind_sj(exp.ensemble, n, **kwargs)
    return compression.run_composed(exp.ensemble, n, **kwargs)


def cmd_rd_sweep(data: dict, src: ConfigSource, args) -> tuple[CsvOut, int]:
    exps = parse_experiments(data, src, args.seed)
    out = CsvOut(RD_COLUMNS)
    status = EXIT_OK
    for exp in exps:
        out.comment(f"experiment {exp.name} source={exp.ensemble.fingerprint()} "
                    f"holevo={fmt(holevo_information(exp.ensemble))}")
        for proto in exp.protocols:
            for n in exp.lengths:
                for rate in exp.rates:
                    try:
                        rec = _run(exp, proto, n, rate, args.threads)
                    except (ResourceCapError, ValidationError) as exc:
                        reason = str(exc).replace("\n", " ")
                        out.row([proto, n, rate, None, None, None, None, "n/a", f"skipped: {reason}", None, None])
                        continue
                    check = compression.verify_record(rec, exp.ensemble)
                    if not check.satisfied:
                        status = EXIT_PROPERTY
                    out.row([proto, n, rec.rate if math.isnan(rate) else rate, rec.log_dim_encoded,
                             rec.avg_distortion, *_bound_cells(check), *_estimation(rec)])
    return out, status


def cmd_protocol(data: dict, src: ConfigSource, args) -> tuple[CsvOut, int]:
    exps = parse_experiments(data, src, args.seed)
    out = CsvOut(PROTOCOL_COLUMNS)
    status = EXIT_OK
    for exp in exps:
        out.comment(f"experiment {exp.name} source={exp.ensemble.fingerprint()}")
        for proto in exp.protocols:
            for n in exp.lengths:
                for rate in exp.rates:
                    rec = _run(exp, proto, n, rate, args.threads)
                    check = compression.verify_record(rec, exp.ensemble)
                    if not check.satisfied or rec.contractivity_violations:
                        status = EXIT_PROPERTY
                    out.row([proto, n, rec.rate, rec.log_dim_encoded, rec.avg_distortion, rec.std_error,
                             rec.purified_distortion, rec.contractivity_violations, rec.holevo,
                             *_bound_cells(check), *_estimation(rec)])
    return out, status


def cmd_props(data: dict, src: ConfigSource, args) -> tuple[CsvOut, int]:
    seed = args.seed if args.seed is not None else data.get("seed")
    if not (isinstance(seed, int) and not isinstance(seed, bool) and seed >= 0):
        raise src.error(["seed"], "props needs a nonnegative integer seed (config or --seed)")
    suites = data.get("suites", {name: None for name in properties.SUITES})
    if isinstance(suites, list):
        suites = {name: None for name in suites}
    if not isinstance(suites, dict):
        raise src.error(["suites"], "suites must be a list of names or an object of name -> samples")
    for name, count in suites.items():
        if name not in properties.SUITES:
            raise src.error(["suites", name], f"unknown suite; choose from {sorted(properties.SUITES)}")
        if count is not None and not (isinstance(count, int) and count >= 1):
            raise src.error(["suites", name], "sample count must be a positive integer")
    tamper = data.get("negative_control", False)
    if not isinstance(tamper, bool):
        raise src.error(["negative_control"], "negative_control must be true or false")
    out = CsvOut(["suite", "checked", "drawn", "violations", "worst_slack", "passed"])
    failures = []
    for name, count in suites.items():
        res = properties.run_suite(name, seed, count, args.threads, tamper=tamper)
        out.row([name, res.checked, res.drawn, len(res.counterexamples), res.worst_slack, res.passed])
        failures.extend(c.to_json() for c in res.counterexamples)
        if not res.passed and not res.counterexamples:
            failures.append({"suite": name, "seed": seed, "index": None,
                             "detail": {"reason": f"only {res.checked} applicable samples drawn"}})
    dump = data.get("counterexamples", f"{args.out}.counterexamples.json")
    Path(dump).write_text(json.dumps({"seed": seed, "negative_control": tamper, "counterexamples": failures},
                                     indent=2, sort_keys=True) + "\n")
    return out, EXIT_PROPERTY if failures else EXIT_OK


COMMANDS = {
    "holevo": cmd_holevo,
    "binary-smin": cmd_binary_smin,
    "rd-sweep": cmd_rd_sweep,
    "props": cmd_props,
    "protocol": cmd_protocol,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qsrc", description="Quantum source compression experiments.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON experiment configuration")
    parser.add_argument("--out", required=True, help="CSV report path")
    parser.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for per-sample work")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        print("qsrc: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    if args.threads < 1:
        print("qsrc: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        data, src = load_config(args.config)
        kind = data.get("kind")
        if kind is not None and kind != args.command:
            raise src.error(["kind"], f"config is for {kind!r}, not {args.command!r}")
        out, status = COMMANDS[args.command](data, src, args)
    except ConfigError as exc:
        print(f"qsrc: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceCapError as exc:
        print(f"qsrc: resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    except PropertyViolation as exc:
        print(f"qsrc: property violation: {exc}", file=sys.stderr)
        return EXIT_PROPERTY
    except (ValidationError, ValueError) as exc:
        print(f"qsrc: invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out.save(args.out)
    if status == EXIT_PROPERTY:
        print(f"qsrc: property violation; see {args.out}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
