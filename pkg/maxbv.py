#!/usr/bin/env python3
"""
Exact evaluation of maximal operators on step functions, with the variation
analyses and verification suites built on top.

Examples:
    python maxbv.py eval --operator cone --alpha 1 --x 1 --input chi.json
    python maxbv.py maximal-variation --alpha 1/2 --input chi.json
    python maxbv.py counterexample lipschitz --beta 3/4 --bumps 200 --format csv
    python maxbv.py verify --suite all --seed 42
"""

import argparse
import json
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from analysis import (
    AnalysisConfig,
    MaximalSampler,
    Shape,
    alpha_monotonicity_violations,
    attachment_slack,
    check_extremizer,
    classify_shape,
    corpus,
    default_window,
    detachment_set,
    divergence_certificate,
    endpoint_attachment_gaps,
    grid_oracle,
    make_attachment_example,
    make_divergence_N,
    make_spike_pair,
    make_spike_train,
    maximal_superlevel_measure,
    maximal_variation,
    random_lipschitz_N,
    single_peak_corpus,
    spike_pair_profile,
    variation_slack,
    verify_bpl,
    verify_square_lemma,
    weak_type_ratio,
    weak_type_window,
)
from functions import (
    FunctionError,
    PiecewiseLinearFunction,
    StepFunction,
    l1_norm,
    lipschitz_constant,
    plf_from_dict,
    plf_to_dict,
    step_function_from_dict,
    step_function_to_dict,
    total_variation,
)
from maximal import MaximalOperator, OperatorKind, eval_nontangential
from numerics import format_decimal, format_rational, is_finite, to_rational

SEED_ENV = "MAXBV_SEED"
OPERATORS = [kind.value for kind in OperatorKind]
SUITES = ["theorem1", "sharpness", "theorem2", "square", "bpl", "sandwich",
          "theorem3", "theorem4", "weaktype", "shape", "oracle",
          "extremizer", "monotonicity", "attachment"]
DEFAULT_ALPHAS = "0,1/5,1/4,1/3,1/2,1,2"
# corpus suites only need component ends, not 2^-40 locations
SUITE_TOL = Fraction(1, 2 ** 20)

CHI = StepFunction.indicator(-1, 0)


class InputError(ValueError):
    """Bad input files or flag combinations (exit code 2)."""


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def _rational_arg(text):
    try:
        return to_rational(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def _window_arg(text):
    lo, sep, hi = text.partition(":")
    if not sep:
        raise argparse.ArgumentTypeError(f"window must look like LO:HI, got {text!r}")
    lo, hi = _rational_arg(lo), _rational_arg(hi)
    if lo >= hi:
        raise argparse.ArgumentTypeError(f"empty window {text!r}")
    return lo, hi


def _rational_list(text):
    return tuple(_rational_arg(part) for part in text.split(",") if part.strip())


def resolve_seed(flag: Optional[int], environ=None) -> int:
    """--seed wins, then MAXBV_SEED, then 0."""
    if flag is not None:
        return flag
    environ = os.environ if environ is None else environ
    raw = environ.get(SEED_ENV)
    if raw is None or raw.strip() == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"{SEED_ENV} must be an integer, got {raw!r}")


@dataclass(frozen=True)
class RunConfig:
    command: str
    input: Optional[str] = None
    lipschitz: Optional[str] = None
    operator: str = "cone"
    alpha: Fraction = Fraction(1)
    truncation: Optional[Fraction] = None
    side: str = "right"
    x: Optional[Fraction] = None
    window: Optional[Tuple[Fraction, Fraction]] = None
    tol: Optional[Fraction] = None
    seed: int = 0
    out: Optional[str] = None
    format: str = "table"
    construction: Optional[str] = None
    n: int = 1000
    beta: Fraction = Fraction(3, 4)
    bumps: int = 200
    radius_out: Optional[str] = None
    lam: Tuple[Fraction, ...] = ()
    alphas: Tuple[Fraction, ...] = ()
    suite: str = "all"
    samples: int = 20
    quiet: bool = False

    @classmethod
    def from_args(cls, args, environ=None) -> "RunConfig":
        values = {name: getattr(args, name) for name in cls.__dataclass_fields__
                  if hasattr(args, name) and getattr(args, name) is not None}
        values["seed"] = resolve_seed(getattr(args, "seed", None), environ)
        return cls(**values)

    @property
    def analysis(self) -> AnalysisConfig:
        if self.tol is None:
            return AnalysisConfig()
        return AnalysisConfig(tol=self.tol)


# ---------------------------------------------------------------------------
# inputs and outputs
# ---------------------------------------------------------------------------

class LoadedInputs(NamedTuple):
    f: Optional[StepFunction]
    N: Optional[PiecewiseLinearFunction]
    lipschitz: Optional[Fraction]


def _read_json(path):
    path = Path(path)
    if not path.exists():
        raise InputError(f"file not found: {path}")
    try:
        with open(path, 'r', encoding='utf-8') as handle:
            return json.load(handle)
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: line {e.lineno}, column {e.colno}: {e.msg}")


def load_inputs(input_path=None, lipschitz_path=None) -> LoadedInputs:
    """Parse and validate the f file and the optional N file."""
    f = N = lip = None
    if input_path is not None:
        try:
            f = step_function_from_dict(_read_json(input_path))
        except FunctionError as e:
            raise InputError(f"{input_path}: {e}")
    if lipschitz_path is not None:
        try:
            N = plf_from_dict(_read_json(lipschitz_path))
        except FunctionError as e:
            raise InputError(f"{lipschitz_path}: {e}")
        lip = lipschitz_constant(N)
    return LoadedInputs(f, N, lip)


def dump_step_function(f: StepFunction, path):
    with open(path, 'w', encoding='utf-8') as handle:
        json.dump(step_function_to_dict(f), handle, indent=2)
        handle.write("\n")


def dump_radius(N: PiecewiseLinearFunction, path):
    with open(path, 'w', encoding='utf-8') as handle:
        json.dump(plf_to_dict(N), handle, indent=2)
        handle.write("\n")


class Column(NamedTuple):
    name: str
    rational: bool = True


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (Fraction, int, float)):
        return format_rational(value)
    return str(value)


def _frame(rows: Sequence[dict], schema: Sequence[Column], decimals: bool) -> pd.DataFrame:
    columns = [c.name for c in schema]
    if decimals:
        columns += [f"{c.name}_decimal" for c in schema if c.rational]
    records = []
    for row in rows:
        record = [_cell(row.get(c.name)) for c in schema]
        if decimals:
            record += ["" if row.get(c.name) is None else format_decimal(row[c.name])
                       for c in schema if c.rational]
        records.append(record)
    return pd.DataFrame(records, columns=columns, dtype=object)


def emit_csv(rows: Sequence[dict], schema: Sequence[Column], path=None):
    """
    Write rows as CSV: primary columns in schema order (rationals as p/q),
    then one `<name>_decimal` column per rational column. path=None writes
    to stdout.
    """
    text = _frame(rows, schema, decimals=True).to_csv(index=False, lineterminator="\n")
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, 'w', encoding='utf-8', newline='') as handle:
            handle.write(text)


def emit_table(rows: Sequence[dict], schema: Sequence[Column], path=None):
    frame = _frame(rows, schema, decimals=False)
    text = "(no rows)\n" if frame.empty else frame.to_string(index=False) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, 'w', encoding='utf-8') as handle:
            handle.write(text)


def emit(config: RunConfig, rows, schema):
    if config.format == "csv":
        emit_csv(rows, schema, config.out)
    else:
        emit_table(rows, schema, config.out)


def banner(title):
    print("=" * 60)
    print(title)
    print("=" * 60)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def build_operator(config: RunConfig, N: Optional[PiecewiseLinearFunction]) -> MaximalOperator:
    kind = OperatorKind(config.operator)
    if kind is OperatorKind.CONE:
        return MaximalOperator.cone(config.alpha)
    if kind in (OperatorKind.TRUNCATED, OperatorKind.DIAMOND, OperatorKind.ONE_SIDED):
        if config.truncation is None:
            raise InputError(f"--operator {kind.value} needs --truncation")
        if kind is OperatorKind.TRUNCATED:
            return MaximalOperator.truncated(config.truncation)
        if kind is OperatorKind.DIAMOND:
            return MaximalOperator.diamond(config.truncation)
        return MaximalOperator.one_sided(config.truncation, config.side)
    if N is None:
        raise InputError(f"--operator {kind.value} needs --lipschitz FILE")
    if kind is OperatorKind.LIPSCHITZ:
        return MaximalOperator.lipschitz(N)
    return MaximalOperator.mixed(config.alpha, N)


def _require_f(config: RunConfig, inputs: LoadedInputs) -> StepFunction:
    if inputs.f is None:
        raise InputError(f"'{config.command}' needs --input FILE")
    return inputs.f


EVAL_SCHEMA = [Column("x"), Column("value"), Column("witness", rational=False), Column("a"), Column("b")]


def cmd_eval(config: RunConfig, inputs: LoadedInputs) -> int:
    f = _require_f(config, inputs)
    if config.x is None:
        raise InputError("'eval' needs --x")
    op = build_operator(config, inputs.N)
    result = op.evaluate(f, config.x)
    a, b = result.interval if result.interval else (None, None)
    row = {"x": config.x, "value": result.value, "witness": result.witness.value, "a": a, "b": b}
    if config.format == "csv":
        emit(config, [row], EVAL_SCHEMA)
    else:
        print(f"{op.label} f({format_rational(config.x)}) = {format_rational(result.value)}")
        print(f"witness: {result.describe()}")
    return 0


VARIATION_SCHEMA = [Column("variation_f"), Column("l1_norm")]


def cmd_variation(config: RunConfig, inputs: LoadedInputs) -> int:
    f = _require_f(config, inputs)
    emit(config, [{"variation_f": total_variation(f), "l1_norm": l1_norm(f)}], VARIATION_SCHEMA)
    return 0


MAXIMAL_VARIATION_SCHEMA = [
    Column("variation_f"), Column("variation_Mf_lower"), Column("variation_Mf_struct"),
    Column("tolerance"), Column("partition_size", rational=False),
    Column("converged", rational=False), Column("components", rational=False),
]


def cmd_maximal_variation(config: RunConfig, inputs: LoadedInputs) -> int:
    f = _require_f(config, inputs)
    op = build_operator(config, inputs.N)
    report = maximal_variation(f, op, config.window, config=config.analysis)
    emit(config, [{
        "variation_f": total_variation(f),
        "variation_Mf_lower": report.lower_bound,
        "variation_Mf_struct": report.structural_value,
        "tolerance": report.tolerance,
        "partition_size": report.partition_size,
        "converged": report.converged,
        "components": len(report.components),
    }], MAXIMAL_VARIATION_SCHEMA)
    if not report.consistent:
        print(f"❌ lower bound exceeds the structural value for {op.label}", file=sys.stderr)
        return 1
    return 0


DETACHMENT_SCHEMA = [
    Column("lo"), Column("hi"), Column("lo_clipped", rational=False), Column("hi_clipped", rational=False),
    Column("shape", rational=False), Column("vertex"), Column("vertex_value"),
]


def cmd_detachment(config: RunConfig, inputs: LoadedInputs) -> int:
    f = _require_f(config, inputs)
    op = build_operator(config, inputs.N)
    window = config.window or default_window(f)
    sampler = MaximalSampler(f, op)
    analysis = config.analysis
    rows = []
    for component in detachment_set(f, op, window, config=analysis, sampler=sampler):
        component = classify_shape(f, op, component, config=analysis, sampler=sampler)
        rows.append({
            "lo": component.lo, "hi": component.hi,
            "lo_clipped": component.lo_clipped, "hi_clipped": component.hi_clipped,
            "shape": component.shape.value, "vertex": component.vertex_point,
            "vertex_value": component.vertex_value,
        })
    emit(config, rows, DETACHMENT_SCHEMA)
    return 0


SPIKE_SCHEMA = [Column("n", rational=False), Column("alpha"), Column("at_third"), Column("at_half"),
                Column("at_two_thirds"), Column("limit_at_third"), Column("interior_maximum", rational=False)]
CERTIFICATE_SCHEMA = [Column("K", rational=False), Column("x_prime"), Column("value"),
                      Column("x_k"), Column("zero_value"), Column("S")]


def cmd_counterexample(config: RunConfig, inputs: LoadedInputs) -> int:
    if config.construction == "cone-spike":
        profile = spike_pair_profile(config.alpha, config.n)
        emit(config, [{
            "n": profile.n, "alpha": profile.alpha, "at_third": profile.at_third,
            "at_half": profile.at_half, "at_two_thirds": profile.at_two_thirds,
            "limit_at_third": profile.limit_at_third,
            "interior_maximum": profile.has_interior_maximum,
        }], SPIKE_SCHEMA)
        return 0

    certificate = divergence_certificate(config.beta, config.bumps)
    if config.radius_out is not None:
        dump_radius(make_divergence_N(config.beta, config.bumps), config.radius_out)
    rows = [{"K": row.K, "x_prime": row.x_prime, "value": row.value, "x_k": row.x_k,
             "zero_value": row.zero_value, "S": row.partial_sum} for row in certificate.rows]
    emit(config, rows, CERTIFICATE_SCHEMA)
    if not certificate.verified:
        print("❌ divergence certificate failed", file=sys.stderr)
        return 1
    return 0


SWEEP_SCHEMA = [Column("alpha"), Column("variation_f"), Column("variation_Mf_lower"),
                Column("variation_Mf_struct"), Column("ratio")]


def cmd_sweep(config: RunConfig, inputs: LoadedInputs) -> int:
    """For each alpha, the corpus member (or the --input f) with the largest lower-bound ratio."""
    functions = [inputs.f] if inputs.f is not None else corpus(config.samples, config.seed)
    alphas = config.alphas or _rational_list(DEFAULT_ALPHAS)
    rows = []
    for alpha in tqdm(alphas, desc="sweep", disable=config.quiet):
        op = MaximalOperator.cone(alpha)
        best = None
        for f in functions:
            variation = total_variation(f)
            if variation == 0:
                continue
            report = maximal_variation(f, op, config=config.analysis)
            ratio = report.lower_bound / variation
            if best is None or ratio > best["ratio"]:
                best = {"alpha": alpha, "variation_f": variation,
                        "variation_Mf_lower": report.lower_bound,
                        "variation_Mf_struct": report.structural_value, "ratio": ratio}
        if best is not None:
            rows.append(best)
    emit(config, rows, SWEEP_SCHEMA)
    return 0


WEAKTYPE_SCHEMA = [Column("alpha"), Column("lambda"), Column("measure"), Column("ratio")]


def cmd_weaktype(config: RunConfig, inputs: LoadedInputs) -> int:
    f = inputs.f if inputs.f is not None else CHI
    lams = config.lam or (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4))
    norm = l1_norm(f)
    if not is_finite(norm) or norm == 0:
        raise InputError("weaktype needs f with finite, positive L1 norm")
    if any(lam <= 0 for lam in lams):
        raise InputError("--lambda levels must be positive")
    rows = []
    for lam in lams:
        window = config.window or weak_type_window(f, config.alpha, lam)
        measure = maximal_superlevel_measure(f, MaximalOperator.cone(config.alpha), lam, window,
                                             config=config.analysis)
        rows.append({"alpha": config.alpha, "lambda": lam, "measure": measure,
                     "ratio": lam * measure / norm})
    emit(config, rows, WEAKTYPE_SCHEMA)
    return 0


# ---------------------------------------------------------------------------
# verification suites
# ---------------------------------------------------------------------------

class SuiteResult(NamedTuple):
    name: str
    checked: int
    failures: List[str]
    notes: Tuple[str, ...] = ()

    @property
    def passed(self) -> bool:
        return not self.failures


def _progress(items, desc, config):
    return tqdm(items, desc=desc, disable=config.quiet, leave=False)


def _random_point(rng, lo=-5, hi=5, denominator=16) -> Fraction:
    return Fraction(int(rng.integers(lo * denominator, hi * denominator + 1)), denominator)


def suite_theorem1(config: RunConfig) -> SuiteResult:
    alphas = [Fraction(1, 3), Fraction(2, 5), Fraction(1, 2), Fraction(3, 4), Fraction(1), Fraction(2)]
    analysis = AnalysisConfig(tol=SUITE_TOL, component_points=33, initial_level=10, refinements=1)
    failures, checked = [], 0
    for i, f in enumerate(_progress(corpus(config.samples, config.seed), "theorem1", config)):
        variation = total_variation(f)
        for alpha in alphas:
            report = maximal_variation(f, MaximalOperator.cone(alpha), config=analysis)
            checked += 1
            if report.lower_bound > variation:
                failures.append(f"member {i}, alpha={alpha}: {report.lower_bound} > {variation}")
    return SuiteResult("theorem1", checked, failures)


def suite_sharpness(config: RunConfig) -> SuiteResult:
    analysis = AnalysisConfig(refinements=3, initial_level=6)
    operators = [MaximalOperator.cone(alpha) for alpha in (Fraction(1, 3), Fraction(1, 2), Fraction(1), Fraction(2))]
    # Lip(N) = 0 <= 1/2: V(M^1_N chi) = V(chi) = 2 as well
    operators += [MaximalOperator.lipschitz(PiecewiseLinearFunction.constant(R))
                  for R in (Fraction(1, 2), Fraction(1), Fraction(3))]
    failures = []
    for op in operators:
        report = maximal_variation(CHI, op, config=analysis)
        if not 2 - Fraction(1, 10 ** 6) <= report.structural_value <= 2:
            failures.append(f"{op.label}: structural value {report.structural_value}")
        history = report.history
        if any(later < earlier for earlier, later in zip(history, history[1:])):
            failures.append(f"{op.label}: lower bound decreased under refinement")
        if report.lower_bound > 2:
            failures.append(f"{op.label}: lower bound {report.lower_bound} > 2")
    return SuiteResult("sharpness", len(operators), failures)


def suite_theorem2(config: RunConfig) -> SuiteResult:
    profile = spike_pair_profile(Fraction(1, 5), config.n)
    failures = []
    if not profile.has_interior_maximum:
        failures.append(f"no interior maximum at 1/2 for n={config.n}")
    if abs(profile.at_third - Fraction(9, 5)) > Fraction(5, 100):
        failures.append(f"M(1/3) = {profile.at_third} is not within 5e-2 of 9/5")
    if profile.at_half < 2 - Fraction(1, 100):
        failures.append(f"M(1/2) = {profile.at_half} < 2 - 1e-2")
    return SuiteResult("theorem2", 1, failures)


def suite_square(config: RunConfig) -> SuiteResult:
    rng = np.random.default_rng(config.seed)
    failures = []
    members = corpus(config.samples, config.seed)
    for i, f in enumerate(_progress(members, "square", config)):
        R = Fraction(int(rng.integers(1, 33)), 8)
        x = _random_point(rng)
        if not verify_square_lemma(f, R, x):
            failures.append(f"member {i}: R={R}, x={x}")
    return SuiteResult("square", len(members), failures)


def suite_bpl(config: RunConfig) -> SuiteResult:
    rng = np.random.default_rng(config.seed)
    failures = []
    members = corpus(config.samples, config.seed)
    for i, f in enumerate(_progress(members, "bpl", config)):
        y = _random_point(rng)
        steps = int(rng.integers(1, 65))
        t = Fraction(steps, 16)
        offset = int(rng.integers(1, steps + 1)) * (1 if rng.integers(0, 2) else -1)
        x = y + Fraction(offset, 16)
        if not verify_bpl(f, x, y, t):
            failures.append(f"member {i}: x={x}, y={y}, t={t}")
    return SuiteResult("bpl", len(members), failures)


def suite_sandwich(config: RunConfig) -> SuiteResult:
    rng = np.random.default_rng(config.seed)
    ladder = [Fraction(1, 5), Fraction(1, 3), Fraction(1, 2), Fraction(1), Fraction(2)]
    failures, checked = [], 0
    for i, f in enumerate(_progress(corpus(config.samples, config.seed), "sandwich", config)):
        x = _random_point(rng)
        values = {alpha: eval_nontangential(f, alpha, x).value for alpha in ladder}
        for j, beta in enumerate(ladder):
            for alpha in ladder[j + 1:]:
                checked += 1
                if not (beta / alpha) * values[alpha] <= values[beta] <= values[alpha]:
                    failures.append(f"member {i}, x={x}, beta={beta}, alpha={alpha}")
    return SuiteResult("sandwich", checked, failures)


def suite_theorem3(config: RunConfig) -> SuiteResult:
    analysis = AnalysisConfig(tol=SUITE_TOL, component_points=65, initial_level=8, refinements=1)
    failures = []
    members = corpus(config.samples, config.seed)
    for i, f in enumerate(_progress(members, "theorem3", config)):
        lip = Fraction(1, 2) if i % 2 == 0 else Fraction(1, 4)
        N = random_lipschitz_N(config.seed + i, lip)
        variation = total_variation(f)
        report = maximal_variation(f, MaximalOperator.lipschitz(N), config=analysis)
        if report.lower_bound > variation:
            failures.append(f"member {i}, Lip(N)={lip}: {report.lower_bound} > {variation}")
    return SuiteResult("theorem3", len(members), failures)


def suite_theorem4(config: RunConfig) -> SuiteResult:
    certificate = divergence_certificate(config.beta, config.bumps)
    failures = [f"K={row.K}: M(x'_K)={row.value}, M(x_K)={row.zero_value}"
                for row in certificate.rows if not row.verified]
    if certificate.partial_sum(config.bumps) != certificate.analytic_sum:
        failures.append("S(K) differs from the analytic sum")
    for K in (25, 50, 100):
        if 2 * K <= config.bumps:
            growth = certificate.partial_sum(2 * K) - certificate.partial_sum(K)
            if growth <= Fraction(1, 20):
                failures.append(f"S({2 * K}) - S({K}) = {growth} <= 1/20")
    return SuiteResult("theorem4", len(certificate.rows), failures)


def suite_weaktype(config: RunConfig) -> SuiteResult:
    failures, notes = [], []
    uncentered = MaximalOperator.cone(1)
    for lam in (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)):
        measure = maximal_superlevel_measure(CHI, uncentered, lam, weak_type_window(CHI, 1, lam))
        if abs(measure - (2 / lam - 1)) > Fraction(1, 10 ** 6):
            failures.append(f"lambda={lam}: measure {measure} != {2 / lam - 1}")
    checked = 3

    # spike trains approach sums of point masses, where the weak-type ratios peak
    members = corpus(config.samples, config.seed)
    members += [make_spike_train(spikes, 64, spacing) for spikes in (2, 3)
                for spacing in (Fraction(1, 2), Fraction(1), Fraction(2))]
    ladder = (Fraction(1, 8), Fraction(1, 4), Fraction(1, 2), Fraction(3, 4))
    best = {Fraction(0): Fraction(0), Fraction(1): Fraction(0)}
    for i, f in enumerate(_progress(members, "weaktype", config)):
        top = max(abs(v) for v in f.values)
        for alpha in best:
            for share in ladder:
                lam = top * share
                ratio = weak_type_ratio(f, alpha, lam)
                checked += 1
                best[alpha] = max(best[alpha], ratio)
                if ratio > 2:
                    failures.append(f"member {i}, alpha={alpha}, lambda={lam}: ratio {ratio} > 2")
    notes.append(f"largest ratio at alpha=0: {format_decimal(best[Fraction(0)], 6)}"
                 f" (centered constant is about 1.567)")
    notes.append(f"largest ratio at alpha=1: {format_decimal(best[Fraction(1)], 6)}")
    return SuiteResult("weaktype", checked, failures, tuple(notes))


def suite_shape(config: RunConfig) -> SuiteResult:
    analysis = AnalysisConfig(tol=SUITE_TOL, component_points=65)
    failures, checked = [], 0
    for i, f in enumerate(_progress(corpus(config.samples, config.seed), "shape", config)):
        for alpha in (Fraction(1, 3), Fraction(1, 2), Fraction(1)):
            op = MaximalOperator.cone(alpha)
            sampler = MaximalSampler(f, op)
            for component in detachment_set(f, op, default_window(f), config=analysis, sampler=sampler):
                component = classify_shape(f, op, component, config=analysis, sampler=sampler)
                checked += 1
                if component.shape is Shape.UNDETERMINED:
                    failures.append(f"member {i}, alpha={alpha}: ({component.lo}, {component.hi}) undetermined")

    spikes = make_spike_pair(100)
    op = MaximalOperator.cone(Fraction(1, 5))
    sampler = MaximalSampler(spikes, op)
    middle = [c for c in detachment_set(spikes, op, default_window(spikes), config=analysis, sampler=sampler)
              if c.contains(Fraction(1, 2))]
    checked += 1
    if not middle:
        failures.append("spike pair: 1/2 is not detached")
    elif classify_shape(spikes, op, middle[0], config=analysis, sampler=sampler).shape is not Shape.UNDETERMINED:
        failures.append("spike pair: the component containing 1/2 was classified")
    return SuiteResult("shape", checked, failures)


def suite_oracle(config: RunConfig) -> SuiteResult:
    rng = np.random.default_rng(config.seed)
    ladder = [Fraction(1, 5), Fraction(1, 3), Fraction(1, 2), Fraction(1), Fraction(2)]
    steps = (Fraction(1, 2 ** 8), Fraction(1, 2 ** 10), Fraction(1, 2 ** 12))
    final_gap = Fraction(1, 100)
    failures, notes = [], []
    largest_gap = Fraction(0)
    members = corpus(config.samples, config.seed, max_pieces=6)
    for i, f in enumerate(_progress(members, "oracle", config)):
        alpha = ladder[int(rng.integers(0, len(ladder)))]
        x = _random_point(rng, -3, 3)
        value = eval_nontangential(f, alpha, x).value
        gaps = [value - grid_oracle(f, alpha, x, step) for step in steps]
        if min(gaps) < 0:
            failures.append(f"member {i}: grid beats the engine at alpha={alpha}, x={x}")
        if any(later > earlier for earlier, later in zip(gaps, gaps[1:])):
            failures.append(f"member {i}: gap grew under refinement at alpha={alpha}, x={x}")
        if gaps[-1] > final_gap:
            failures.append(f"member {i}: final gap {format_decimal(gaps[-1], 6)} > 1e-2 at alpha={alpha}, x={x}")
        largest_gap = max(largest_gap, gaps[-1])
    notes.append(f"largest final gap: {format_decimal(largest_gap, 6)}")
    return SuiteResult("oracle", len(members), failures, tuple(notes))


def suite_extremizer(config: RunConfig) -> SuiteResult:
    analysis = AnalysisConfig(tol=SUITE_TOL, component_points=33, initial_level=8, refinements=1)
    failures, checked = [], 0
    members = [CHI] + single_peak_corpus(config.samples, config.seed)
    for i, f in enumerate(_progress(members, "extremizer", config)):
        slack = variation_slack(f, analysis.tol)
        for alpha in (Fraction(2, 5), Fraction(1, 2), Fraction(1), Fraction(2)):
            check = check_extremizer(f, alpha, analysis)
            checked += 1
            if check.gap > slack:
                failures.append(f"member {i}, alpha={alpha}: V(Mf) = {check.structural_value}, "
                                f"V(f) = {check.variation}")
            if check.lower_bound > check.variation:
                failures.append(f"member {i}, alpha={alpha}: lower bound {check.lower_bound} > V(f)")
    return SuiteResult("extremizer", checked, failures)


def suite_monotonicity(config: RunConfig) -> SuiteResult:
    analysis = AnalysisConfig(tol=SUITE_TOL, component_points=33, initial_level=8, refinements=1)
    ladder = (Fraction(1, 3), Fraction(1, 2), Fraction(1), Fraction(2))
    pairs = len(ladder) * (len(ladder) - 1) // 2
    failures = []
    members = corpus(config.samples, config.seed)
    for i, f in enumerate(_progress(members, "monotonicity", config)):
        for alpha, beta, v_alpha, v_beta in alpha_monotonicity_violations(f, ladder, analysis):
            failures.append(f"member {i}: V(M^{beta} f) = {v_beta} > V(M^{alpha} f) = {v_alpha}")
    return SuiteResult("monotonicity", pairs * len(members), failures)


def suite_attachment(config: RunConfig) -> SuiteResult:
    analysis = AnalysisConfig(component_points=33)
    failures, checked = [], 0
    members = corpus(config.samples, config.seed)
    for i, f in enumerate(_progress(members, "attachment", config)):
        slack = attachment_slack(f, analysis.tol)
        for alpha in (Fraction(1, 3), Fraction(1, 2), Fraction(1)):
            for end in endpoint_attachment_gaps(f, MaximalOperator.cone(alpha), config=analysis):
                checked += 1
                if end.gap > slack:
                    failures.append(f"member {i}, alpha={alpha}: end near {format_decimal(end.inner, 8)} "
                                    f"is {format_decimal(end.gap, 6)} off")

    # the inner jump point (1 - alpha)/2 of the boundary example stays attached
    example = make_attachment_example(Fraction(1, 2))
    op = MaximalOperator.cone(Fraction(1, 2))
    sampler = MaximalSampler(example, op)
    components = detachment_set(example, op, default_window(example), config=analysis, sampler=sampler)
    checked += 1
    middle = [c for c in components if c.contains(Fraction(3, 16))]
    if len(components) != 3 or not middle:
        failures.append(f"boundary example: {len(components)} components, expected 3")
    elif sampler.detached(Fraction(1, 4)) or abs(middle[0].hi_outer - Fraction(1, 4)) > analysis.tol:
        failures.append("boundary example: 1/4 is not the attached outer end of (1/8, 1/4)")
    return SuiteResult("attachment", checked, failures)


SUITE_RUNNERS = {
    "theorem1": suite_theorem1,
    "sharpness": suite_sharpness,
    "theorem2": suite_theorem2,
    "square": suite_square,
    "bpl": suite_bpl,
    "sandwich": suite_sandwich,
    "theorem3": suite_theorem3,
    "theorem4": suite_theorem4,
    "weaktype": suite_weaktype,
    "shape": suite_shape,
    "oracle": suite_oracle,
    "extremizer": suite_extremizer,
    "monotonicity": suite_monotonicity,
    "attachment": suite_attachment,
}


def cmd_verify(config: RunConfig, inputs: LoadedInputs) -> int:
    names = SUITES if config.suite == "all" else [config.suite]
    banner(f"Verification suites (seed {config.seed}, samples {config.samples})")
    results = []
    for name in names:
        result = SUITE_RUNNERS[name](config)
        results.append(result)
        mark = "✓" if result.passed else "❌"
        print(f"{mark} {name}: {result.checked} checks, {len(result.failures)} failures")
        for failure in result.failures[:5]:
            print(f"    {failure}")
        for note in result.notes:
            print(f"    ⚠️  {note}")
    print()
    banner("SUMMARY")
    failed = [r.name for r in results if not r.passed]
    print(f"Suites passed: {len(results) - len(failed)}/{len(results)}")
    if failed:
        print(f"❌ Failed: {', '.join(failed)}")
        return 1
    print("✓ All checks passed")
    return 0


COMMANDS = {
    "eval": cmd_eval,
    "variation": cmd_variation,
    "maximal-variation": cmd_maximal_variation,
    "detachment": cmd_detachment,
    "counterexample": cmd_counterexample,
    "sweep": cmd_sweep,
    "weaktype": cmd_weaktype,
    "verify": cmd_verify,
}


def run(config: RunConfig) -> int:
    """Execute one subcommand. 0 success, 1 verification failure, 2 input error."""
    try:
        inputs = load_inputs(config.input, config.lipschitz)
        if inputs.lipschitz is not None and config.format != "csv":
            print(f"Lip(N) = {format_rational(inputs.lipschitz)}")
        return COMMANDS[config.command](config, inputs)
    except ValueError as e:
        # InputError plus the library errors (NumericsError, FunctionError, RegionError, AnalysisError)
        print(f"❌ {e}", file=sys.stderr)
        return 2


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _common_options(parser, operator=True):
    parser.add_argument("--input", "-i", help="Step function JSON file")
    parser.add_argument("--tol", type=_rational_arg,
                        help="Location/convergence tolerance, P/Q or decimal (default: 2^-40)")
    parser.add_argument("--seed", type=int, help=f"Random seed (default: ${SEED_ENV} or 0)")
    parser.add_argument("--out", "-o", help="Output file (default: stdout)")
    parser.add_argument("--format", choices=["table", "csv"], default="table",
                        help="Output format (default: table)")
    parser.add_argument("--quiet", "-q", action="store_true", help="Hide progress bars")
    if operator:
        parser.add_argument("--operator", choices=OPERATORS, default="cone",
                            help="Maximal operator (default: cone)")
        parser.add_argument("--alpha", type=_rational_arg, default=Fraction(1),
                            help="Aperture alpha (default: 1)")
        parser.add_argument("--truncation", type=_rational_arg,
                            help="Constant radius R (truncated, diamond) or A (one-sided)")
        parser.add_argument("--side", choices=["left", "right"], default="right",
                            help="Side of the one-sided operator (default: right)")
        parser.add_argument("--lipschitz", help="Truncation function N JSON file")
        parser.add_argument("--window", type=_window_arg, help="Analysis window LO:HI")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Exact maximal operators on step functions and their variation"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="Evaluate a maximal function at one point")
    _common_options(p)
    p.add_argument("--x", type=_rational_arg, help="Evaluation point")

    p = sub.add_parser("variation", help="Total variation and L1 norm of f")
    _common_options(p, operator=False)

    p = sub.add_parser("maximal-variation", help="Variation of the maximal function")
    _common_options(p)

    p = sub.add_parser("detachment", help="Detachment components and their shapes")
    _common_options(p)

    p = sub.add_parser("counterexample", help="Reproduce a counterexample construction")
    p.add_argument("construction", choices=["cone-spike", "lipschitz"])
    _common_options(p, operator=False)
    p.add_argument("--alpha", type=_rational_arg, default=Fraction(1, 5),
                   help="Aperture for cone-spike (default: 1/5)")
    p.add_argument("--n", type=int, default=1000, help="Spike parameter n (default: 1000)")
    p.add_argument("--beta", type=_rational_arg, default=Fraction(3, 4),
                   help="Lipschitz constant of N, > 1/2 (default: 3/4)")
    p.add_argument("--bumps", type=int, default=200, help="Number of bumps (default: 200)")
    p.add_argument("--radius-out", help="Also write the truncation function N as JSON")

    p = sub.add_parser("sweep", help="B(alpha) lower bounds over a seeded corpus")
    _common_options(p, operator=False)
    p.add_argument("--alphas", type=_rational_list, help=f"Comma-separated alphas (default: {DEFAULT_ALPHAS})")
    p.add_argument("--samples", type=int, default=20, help="Corpus size (default: 20)")

    p = sub.add_parser("weaktype", help="Weak-type ratios lambda*|{M f > lambda}|/||f||_1")
    _common_options(p, operator=False)
    p.add_argument("--alpha", type=_rational_arg, default=Fraction(1), help="Aperture alpha (default: 1)")
    p.add_argument("--lambda", dest="lam", type=_rational_list,
                   help="Comma-separated levels (default: 1/4,1/2,3/4)")
    p.add_argument("--window", type=_window_arg, help="Measurement window LO:HI")

    p = sub.add_parser("verify", help="Run the verification suites")
    _common_options(p, operator=False)
    p.add_argument("--suite", choices=SUITES + ["all"], default="all", help="Suite to run (default: all)")
    p.add_argument("--samples", type=int, default=20, help="Corpus size per suite (default: 20)")
    p.add_argument("--n", type=int, default=1000, help="Spike parameter for theorem2 (default: 1000)")
    p.add_argument("--beta", type=_rational_arg, default=Fraction(3, 4),
                   help="Lipschitz constant for theorem4 (default: 3/4)")
    p.add_argument("--bumps", type=int, default=200, help="Bumps for theorem4 (default: 200)")

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = RunConfig.from_args(args)
    except InputError as e:
        print(f"❌ {e}", file=sys.stderr)
        return 2
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
