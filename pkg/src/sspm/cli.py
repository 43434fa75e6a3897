"""Experiment runner: counter-budget sweeps, the errata demo and stream validation."""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .baselines import CountMin, CountSketch
from .deletion import (
    DoubleSpaceSaving,
    IntegratedSpaceSaving,
    LegacySpaceSavingPM,
    check_params,
    dss_sizes,
    exact,
    iss_size,
)
from .errors import BudgetTooSmall, ConfigInvalid, SketchError
from .evaluation import (
    BoundReport,
    check_epsilon_bound,
    check_residual_bound,
    compute_are,
    max_abs_error,
    report_topk,
    topk_f1,
)
from .spacesaving import SpaceSaving
from .stream import OpStream, exact_frequencies, read_stream, validate_stream
from .workloads import WorkloadKind, WorkloadSpec, gen_adversarial, generate, recorded_alpha

SKETCH_NAMES = {
    "SS": "SpaceSaving",
    "USS": "UnbiasedSpaceSaving",
    "DSS": "DoubleSpaceSaving±",
    "UDSS": "UnbiasedDoubleSpaceSaving±",
    "ISS": "IntegratedSpaceSaving±",
    "LegacySSPM": "LegacySpaceSaving±",
    "CountMin": "CountMin",
    "CountSketch": "CountSketch",
}

CSV_COLUMNS = [
    "sketch", "kind", "budget_fields", "entries", "epsilon", "alpha", "seed", "are",
    "f1_topk", "max_error", "eps_f1_bound", "eps_bound_pass", "residual_bound_pass",
    "runtime_ms",
]


@dataclass
class ExperimentConfig:
    workload: WorkloadSpec | str | Path | OpStream
    sketches: list[tuple[str, int]] = field(default_factory=list)
    epsilon: float = 0.01
    alpha: float = 2.0
    k_top: int = 100
    seed: int = 0
    output: str | Path | None = None
    timing: bool = False
    jobs: int = 1

    def validate(self) -> None:
        try:
            check_params(self.epsilon, self.alpha)
        except SketchError as exc:
            raise ConfigInvalid(str(exc)) from exc
        if self.k_top < 1:
            raise ConfigInvalid("k must be >= 1")
        for kind, budget in self.sketches:
            if kind not in SKETCH_NAMES:
                raise ConfigInvalid(f"unknown sketch {kind!r}; choose from {sorted(SKETCH_NAMES)}")
            if budget < 1:
                raise ConfigInvalid(f"budget must be positive, got {budget}")


def dss_split(entries: int, alpha) -> tuple[int, int]:
    """Split an entry budget between the insert and delete sides as ``a : a - 1``."""
    a = exact(alpha)
    m_i = round(Fraction(entries) * a / (2 * a - 1))
    m_i = min(max(m_i, 1), entries - 1)
    return m_i, entries - m_i


def build_sketch(kind: str, budget: int, alpha, universe: int, seed: int):
    """Construct a sketch whose field count is at most ``budget``."""
    if kind in ("SS", "USS"):
        return SpaceSaving(_entries(budget, 2), unbiased=kind == "USS", seed=seed)
    if kind in ("DSS", "UDSS"):
        entries = _entries(budget, 2, minimum=2)
        m_i, m_d = dss_split(entries, alpha)
        return DoubleSpaceSaving(m_i, m_d, unbiased=kind == "UDSS", seed=seed)
    if kind == "ISS":
        return IntegratedSpaceSaving(_entries(budget, 3))
    if kind == "LegacySSPM":
        return LegacySpaceSavingPM(_entries(budget, 2))
    if kind == "CountMin":
        return CountMin(budget, universe, seed)
    if kind == "CountSketch":
        return CountSketch(budget, universe, seed)
    raise ConfigInvalid(f"unknown sketch {kind!r}")


def _entries(budget: int, per_entry: int, minimum: int = 1) -> int:
    n = budget // per_entry
    if n < minimum:
        raise BudgetTooSmall(f"budget {budget} holds fewer than {minimum} entries")
    return n


def entry_count(sketch) -> int:
    if isinstance(sketch, DoubleSpaceSaving):
        return sketch.entries_capacity
    if isinstance(sketch, (SpaceSaving, IntegratedSpaceSaving)):
        return sketch.capacity
    return sketch.fields


def meets_theorem_size(kind: str, sketch, epsilon, alpha) -> bool:
    """Whether a sketch with a deterministic guarantee is at least its theorem size."""
    if kind == "ISS":
        return sketch.capacity >= iss_size(epsilon, alpha)
    if kind == "DSS":
        m_i, m_d = dss_sizes(epsilon, alpha)
        return sketch.m_insert >= m_i and sketch.m_delete >= m_d
    return False


def load_workload(config: ExperimentConfig) -> tuple[OpStream, int]:
    """The stream and the universe size used to size linear sketches."""
    w = config.workload
    if isinstance(w, OpStream):
        stream = w
        universe = int(stream.header.get("universe", 0)) or len(set(stream.items.tolist()))
    elif isinstance(w, WorkloadSpec):
        stream = generate(w)
        universe = w.universe
    else:
        stream = read_stream(w)
        universe = int(stream.header.get("universe", 0)) or len(set(stream.items.tolist()))
    return stream, max(universe, 1)


def _run_cell(kind, budget, config, stream, table, stats, universe):
    try:
        sketch = build_sketch(kind, budget, config.alpha, universe, config.seed)
    except BudgetTooSmall as exc:
        raise ConfigInvalid(str(exc)) from exc
    start = time.perf_counter()
    if kind in ("SS", "USS"):
        sketch.extend(stream.items[~stream.deletes])
    else:
        sketch.extend(stream)
    elapsed = (time.perf_counter() - start) * 1000.0
    eps_report = check_epsilon_bound(table, sketch, config.epsilon, stats.f1)
    variant = "double" if kind in ("DSS", "UDSS") else "integrated"
    k_eff = min(config.k_top, len(table))
    res_report = check_residual_bound(table, sketch, config.epsilon, config.alpha, k_eff, variant)
    f1_score = topk_f1(table, report_topk(table, sketch, k_eff), k_eff) if k_eff else float("nan")
    are = compute_are(table, sketch) if stats.f1 > 0 else float("nan")
    row = {
        "sketch": SKETCH_NAMES[kind],
        "kind": kind,
        "budget_fields": sketch.fields,
        "entries": entry_count(sketch),
        "epsilon": config.epsilon,
        "alpha": config.alpha,
        "seed": config.seed,
        "are": f"{are:.6f}",
        "f1_topk": f"{f1_score:.6f}",
        "max_error": f"{max_abs_error(table, sketch):g}",
        "eps_f1_bound": f"{eps_report.bound_value:g}",
        "eps_bound_pass": int(eps_report.passed),
        "residual_bound_pass": int(res_report.passed),
        "runtime_ms": f"{elapsed:.3f}" if config.timing else "",
    }
    guaranteed = meets_theorem_size(kind, sketch, config.epsilon, config.alpha)
    return row, guaranteed and not eps_report.passed


def run_experiment(config: ExperimentConfig) -> tuple[list[dict], bool]:
    """Run every ``(sketch, budget)`` cell once over the workload.

    Returns the CSV rows in configuration order and whether any sketch with a
    deterministic guarantee, sized at or above its theorem size, broke the
    ``epsilon * F1`` bound.
    """
    config.validate()
    if not config.sketches:
        return [], False
    stream, universe = load_workload(config)
    stats = validate_stream(stream, config.alpha)
    table = exact_frequencies(stream)
    cells = list(config.sketches)
    args = (config, stream, table, stats, universe)
    if config.jobs > 1:
        with ThreadPoolExecutor(config.jobs) as pool:
            results = list(pool.map(lambda c: _run_cell(c[0], c[1], *args), cells))
    else:
        results = [_run_cell(kind, budget, *args) for kind, budget in cells]
    rows = [r for r, _ in results]
    return rows, any(v for _, v in results)


def write_csv(rows: Sequence[dict], fh) -> None:
    writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\r\n")
    writer.writeheader()
    writer.writerows(rows)


def bound_report_row(name: str, report: BoundReport) -> dict:
    return {
        "sketch": name,
        "bound_kind": report.bound_kind.value,
        "bound_value": f"{report.bound_value:g}",
        "max_observed_error": f"{report.max_observed_error:g}",
        "violations": len(report.violating_items),
        "passed": int(report.passed),
    }


def demo_errata(m: int = 2) -> dict:
    """Run the legacy and Integrated sketches on adversarial interleaved streams.

    Part one targets a legacy sketch with ``m`` counters and sizes the
    Integrated sketch from the stream's recorded alpha with ``epsilon = 1/m``.
    Part two targets ``2m`` counters and gives both sketches exactly ``2m``
    counters, which covers the Integrated theorem size because alpha < 2.
    """
    eps = Fraction(1, m)
    out = {}

    stream = gen_adversarial(m)
    alpha = recorded_alpha(stream)
    table = exact_frequencies(stream)
    f1 = sum(table.values())
    legacy = LegacySpaceSavingPM(m)
    legacy.extend(stream)
    iss = IntegratedSpaceSaving(iss_size(eps, alpha))
    iss.extend(stream)
    out["stream"] = dict(stream.header)
    out["legacy"] = check_epsilon_bound(table, legacy, eps, f1)
    out["iss"] = check_epsilon_bound(table, iss, eps, f1)
    out["iss_capacity"] = iss.capacity

    matched = 2 * m
    stream2 = gen_adversarial(matched)
    alpha2 = recorded_alpha(stream2)
    table2 = exact_frequencies(stream2)
    f1_2 = sum(table2.values())
    legacy2 = LegacySpaceSavingPM(matched)
    legacy2.extend(stream2)
    iss2 = IntegratedSpaceSaving(matched)
    iss2.extend(stream2)
    out["matched_stream"] = dict(stream2.header)
    out["matched_theorem_size"] = iss_size(eps, alpha2)
    out["legacy_matched"] = check_epsilon_bound(table2, legacy2, eps, f1_2)
    out["iss_matched"] = check_epsilon_bound(table2, iss2, eps, f1_2)
    return out


def format_errata(result: dict, m: int) -> str:
    lines = [
        f"adversarial stream for m={m}: I={result['stream']['I']} D={result['stream']['D']} "
        f"alpha={result['stream']['alpha']}",
        f"  legacy SpaceSaving± (m={m}):            {result['legacy']}",
        f"  Integrated SpaceSaving± (m={result['iss_capacity']}):        {result['iss']}",
        f"matched budget of {2 * m} counters (Integrated theorem size "
        f"{result['matched_theorem_size']}), alpha={result['matched_stream']['alpha']}:",
        f"  legacy SpaceSaving±:     {result['legacy_matched']}",
        f"  Integrated SpaceSaving±: {result['iss_matched']}",
    ]
    return "\n".join(lines)


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _name_list(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sspm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="sweep sketches over counter budgets and write CSV")
    run.add_argument("--workload", default="zipf-suffix",
                     help="zipf-suffix, interleaved or file:<path>")
    run.add_argument("--beta", type=float, default=1.0)
    run.add_argument("--universe", type=int, default=22_000)
    run.add_argument("--insertions", type=int, default=100_000)
    run.add_argument("--deletions", type=int, default=50_000)
    run.add_argument("--update-prob", type=float, default=0.4)
    run.add_argument("--alpha", type=float, default=2.0)
    run.add_argument("--epsilon", type=float, default=0.01)
    run.add_argument("--sketches", type=_name_list, default=["ISS", "DSS", "UDSS", "CountMin", "CountSketch"])
    run.add_argument("--budgets", type=_int_list, default=[2048, 4096, 8192, 16384])
    run.add_argument("--k", type=int, default=100)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", default="-")
    run.add_argument("--timing", action="store_true", help="fill the runtime_ms column")
    run.add_argument("--jobs", type=int, default=1)

    errata = sub.add_parser("errata-demo", help="legacy vs Integrated on an adversarial stream")
    errata.add_argument("--m", type=int, default=2)

    val = sub.add_parser("validate", help="check a stream file against the deletion budget")
    val.add_argument("--file", required=True)
    val.add_argument("--alpha", type=float, default=math.inf)
    return parser


def _config_from_args(args) -> ExperimentConfig:
    if args.workload.startswith("file:"):
        workload = args.workload[len("file:"):]
    else:
        try:
            kind = WorkloadKind(args.workload)
        except ValueError as exc:
            raise ConfigInvalid(f"unknown workload {args.workload!r}") from exc
        if kind is WorkloadKind.ADVERSARIAL:
            raise ConfigInvalid("use the errata-demo command for adversarial streams")
        workload = WorkloadSpec(
            kind, beta=args.beta, universe=args.universe, insertions=args.insertions,
            deletions=args.deletions, alpha=args.alpha, seed=args.seed,
            update_prob=args.update_prob,
        )
    sketches = [(s, b) for s in args.sketches for b in args.budgets]
    return ExperimentConfig(
        workload=workload, sketches=sketches, epsilon=args.epsilon, alpha=args.alpha,
        k_top=args.k, seed=args.seed, output=args.out, timing=args.timing, jobs=args.jobs,
    )


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            config = _config_from_args(args)
            rows, violated = run_experiment(config)
            if args.out == "-":
                write_csv(rows, sys.stdout)
            else:
                with open(args.out, "w", newline="", encoding="utf-8") as fh:
                    write_csv(rows, fh)
            return 2 if violated else 0
        if args.command == "errata-demo":
            if args.m < 2:
                raise ConfigInvalid("--m must be >= 2")
            result = demo_errata(args.m)
            print(format_errata(result, args.m))
            return 2 if not (result["iss"].passed and result["iss_matched"].passed) else 0
        if args.command == "validate":
            stats = validate_stream(read_stream(args.file), args.alpha)
            buf = io.StringIO()
            print(f"N={stats.n_ops} I={stats.inserts} D={stats.deletes} F1={stats.f1} "
                  f"alpha_effective={stats.alpha_effective:g}", file=buf)
            sys.stdout.write(buf.getvalue())
            return 0
    except (SketchError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 1


if __name__ == "__main__":
    sys.exit(main())
