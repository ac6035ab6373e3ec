"""Benchmark harness: degradation cases, ablation arms, lambda sweeps.

The default suite runs four desk-scale cases on a 64x64 Shepp-Logan phantom
(one pure-noise case, one pixel-mask case, two row-undersampled frequency
cases at keep fractions 0.25 and 0.125), five seeds each.  Each case runs
six arms: the three mode presets plus three component knock-outs, all
reached purely through controller coefficients (extreme beta3 values
saturate the sigmoid at exactly 0 or 1 in float64).

Absolute scores are machine- and build-specific; the harness targets the
order relations between arms.  Aggregates are the arithmetic mean and the
population standard deviation over seeds.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import risk as riskmod
from .engine import RunRecord, run
from .errors import CapabilityError, ParameterError
from .operators import (
    ForwardOperator,
    Observation,
    degrade,
    frequency_mask_operator,
    identity_operator,
    pixel_mask_operator,
    with_seed,
)
from .phantoms import make_phantom, make_sampling_mask
from .runcfg import RunConfig
from .runio import write_run_dir
from .tensorio import atomic_write_bytes

ARMS = ("conservative", "balanced", "enhancement", "no-controller", "no-fidelity", "no-prior")
_SATURATE = 1e4

METRIC_NAMES = ("psnr", "ssim", "structure", "risk", "residual")


def default_config() -> RunConfig:
    """Protocol base config for the ablation suite.

    Differs from the engine defaults: a full-strength data pull, a heavier
    smoothing prior, and a nonzero stochastic perturbation.  The perturbation
    models the sampling stochasticity of a generative prior; without it a
    purely contractive prior can only delete content, never fabricate it,
    and the knock-out arms would be indistinguishable on the risk axis.
    """
    from .branches import FidelityConfig, PriorConfig

    return RunConfig(
        steps=60,
        fidelity=FidelityConfig(eta=1.0, inner_iters=1),
        prior=PriorConfig(kind="tv-chambolle", strength=0.25, inner_iters=30, noise_inject=0.07),
    )


@dataclass(frozen=True, eq=False)
class BenchCase:
    """One degradation scenario: phantom + operator + run seeds."""

    name: str
    phantom: str
    size: int
    operator: ForwardOperator
    seeds: tuple[int, ...]

    def image(self) -> np.ndarray:
        return make_phantom(self.phantom, self.size)

    def observation(self, seed: int) -> Observation:
        return degrade(with_seed(self.operator, seed), self.image())


def default_suite(suite_seed: int = 0, size: int = 64) -> list[BenchCase]:
    """The four standard cases, five seeds each, fully determined by suite_seed."""
    seeds = tuple(suite_seed + i for i in range(5))
    cases = [
        BenchCase(
            name="noise",
            phantom="shepp-logan",
            size=size,
            operator=identity_operator((size, size), noise_sigma=0.1),
            seeds=seeds,
        ),
        BenchCase(
            name="inpaint",
            phantom="shepp-logan",
            size=size,
            operator=pixel_mask_operator(
                make_sampling_mask("random-uniform", 0.5, size, seed=suite_seed + 101),
                noise_sigma=0.02,
            ),
            seeds=seeds,
        ),
        BenchCase(
            name="kspace4x",
            phantom="shepp-logan",
            size=size,
            operator=frequency_mask_operator(
                make_sampling_mask("center-weighted-lines", 0.25, size, seed=suite_seed + 102),
                noise_sigma=0.01,
            ),
            seeds=seeds,
        ),
        BenchCase(
            name="kspace8x",
            phantom="shepp-logan",
            size=size,
            operator=frequency_mask_operator(
                make_sampling_mask("center-weighted-lines", 0.125, size, seed=suite_seed + 103),
                noise_sigma=0.01,
            ),
            seeds=seeds,
        ),
    ]
    return cases


def case_by_name(suite: list[BenchCase], name: str) -> BenchCase:
    for case in suite:
        if case.name == name:
            return case
    raise ParameterError(f"no case named {name!r}; have {[c.name for c in suite]}")


def arm_config(base: RunConfig, arm: str) -> RunConfig:
    """Config-level reduction for one ablation arm."""
    if arm in ("conservative", "balanced", "enhancement"):
        return replace(base, mode_preset=arm)
    c = base.controller
    if arm == "no-controller":
        # static fusion: alpha = sigmoid(0) = 0.5 everywhere
        return replace(base, mode_preset=None,
                       controller=replace(c, beta1=0.0, beta2=0.0, beta3=0.0, lam=0.0))
    if arm == "no-fidelity":
        # alpha saturates to exactly 0.0: the prior branch alone survives
        return replace(base, mode_preset=None,
                       controller=replace(c, beta1=0.0, beta2=0.0, beta3=-_SATURATE, lam=1.0))
    if arm == "no-prior":
        # alpha saturates to exactly 1.0: the fidelity branch alone survives
        return replace(base, mode_preset=None,
                       controller=replace(c, beta1=0.0, beta2=0.0, beta3=_SATURATE, lam=1.0))
    raise ParameterError(f"unknown ablation arm {arm!r}")


def _bench_config(base: RunConfig, seed: int) -> RunConfig:
    # bench runs keep only the final step on disk unless the caller insists
    record_every = base.record_every if base.record_every is not None else base.steps
    return replace(base, seed=seed, record_every=record_every)


def run_case(case: BenchCase, cfg: RunConfig, seed: int) -> tuple[RunRecord, dict[str, float | None]]:
    """One engine run plus the final-image metric row for aggregation."""
    obs = case.observation(seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)  # intentional beta3 > 0 arm
        record = run(obs, _bench_config(cfg, seed))
    last = record.latest()
    try:
        risk_value: float | None = riskmod.hallucination_risk(record.final, obs.ground_truth, obs.operator)
    except CapabilityError:
        risk_value = None  # operators without an exact null space
    row = {
        "psnr": last.psnr,
        "ssim": last.ssim,
        "structure": riskmod.structure_score(record.final, obs.ground_truth),
        "risk": risk_value,
        "residual": last.residual,
    }
    return record, row


@dataclass(eq=False)
class AblationTable:
    """Per-arm aggregate metrics for one case (mean and population std over seeds)."""

    case_name: str
    arms: tuple[str, ...] = ARMS
    cells: dict[str, dict[str, tuple[float | None, float | None]]] = field(default_factory=dict)
    raw: dict[str, dict[str, list[float | None]]] = field(default_factory=dict)

    def mean(self, arm: str, metric: str) -> float | None:
        return self.cells[arm][metric][0]


def _aggregate(values: list[float | None]) -> tuple[float | None, float | None]:
    if any(v is None for v in values):
        return None, None
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.mean()), float(arr.std())


def run_ablation(case: BenchCase, base: RunConfig, jobs: int = 1,
                 out_dir: str | Path | None = None) -> AblationTable:
    """Run all six arms over the case's seeds and aggregate.

    Any failing run aborts the whole table; nothing is imputed.  When
    ``out_dir`` is given, each run directory is written under
    ``out_dir/runs/{case}/{arm}/{seed}``.
    """
    tasks = [(arm, seed) for arm in ARMS for seed in case.seeds]

    def _one(task):
        arm, seed = task
        return run_case(case, arm_config(base, arm), seed)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_one, tasks))
    else:
        results = [_one(t) for t in tasks]

    table = AblationTable(case_name=case.name)
    for arm in ARMS:
        table.raw[arm] = {m: [] for m in METRIC_NAMES}
        table.cells[arm] = {}
    for (arm, seed), (record, row) in zip(tasks, results):
        for m in METRIC_NAMES:
            table.raw[arm][m].append(row[m])
        if out_dir is not None:
            write_run_dir(record, Path(out_dir) / "runs" / case.name / arm / str(seed))
    for arm in ARMS:
        for m in METRIC_NAMES:
            table.cells[arm][m] = _aggregate(table.raw[arm][m])
    return table


def ablation_csv_text(tables: list[AblationTable]) -> str:
    cols = ["case", "arm"]
    for m in METRIC_NAMES:
        cols += [f"{m}_mean", f"{m}_std"]
    lines = [",".join(cols)]
    for table in tables:
        for arm in table.arms:
            row = [table.case_name, arm]
            for m in METRIC_NAMES:
                mean, std = table.cells[arm][m]
                row.append("" if mean is None else str(mean))
                row.append("" if std is None else str(std))
            lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def lambda_sweep(case: BenchCase, base: RunConfig, points: int,
                 jobs: int = 1) -> list[dict[str, float | None]]:
    """Evenly spaced lambda values in [0, 1]; per value, seed-mean outputs."""
    if points < 3:
        raise ParameterError(f"sweep needs at least 3 points, got {points}")
    lams = np.linspace(0.0, 1.0, points)

    def _one(task):
        lam, seed = task
        cfg = replace(base, mode_preset=None, controller=replace(base.controller, lam=float(lam)))
        record, row = run_case(case, cfg, seed)
        alpha_mean = float(np.mean([s.mean_alpha for s in record.steps]))
        return alpha_mean, row

    rows: list[dict[str, float | None]] = []
    tasks = [(lam, seed) for lam in lams for seed in case.seeds]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_one, tasks))
    else:
        results = [_one(t) for t in tasks]
    per_lam = len(case.seeds)
    for i, lam in enumerate(lams):
        chunk = results[i * per_lam : (i + 1) * per_lam]
        alphas = [a for a, _ in chunk]
        risks = [r["risk"] for _, r in chunk]
        rows.append({
            "lambda": float(lam),
            "mean_alpha": float(np.mean(alphas)),
            "psnr": float(np.mean([r["psnr"] for _, r in chunk])),
            "residual": float(np.mean([r["residual"] for _, r in chunk])),
            "risk": None if any(r is None for r in risks) else float(np.mean(risks)),
        })
    return rows


def sweep_csv_text(rows: list[dict[str, float | None]]) -> str:
    lines = ["lambda,mean_alpha,psnr,residual,risk"]
    for r in rows:
        risk = "" if r["risk"] is None else str(r["risk"])
        lines.append(f"{r['lambda']},{r['mean_alpha']},{r['psnr']},{r['residual']},{risk}")
    return "\n".join(lines) + "\n"


def run_suite(suite: list[BenchCase], base: RunConfig, out_dir: str | Path,
              jobs: int = 1, write_runs: bool = True) -> list[AblationTable]:
    """Run the ablation for every case and write ablation.csv + metadata."""
    out = Path(out_dir)
    tables = [
        run_ablation(case, base, jobs=jobs, out_dir=out if write_runs else None)
        for case in suite
    ]
    atomic_write_bytes(out / "ablation.csv", ablation_csv_text(tables).encode())
    meta = [
        "suite: default",
        "inputs: synthetic analytic phantoms (no clinical data)",
    ]
    for case in suite:
        meta.append(
            f"case {case.name}: phantom={case.phantom} size={case.size} "
            f"operator={case.operator.kind} noise_sigma={case.operator.noise_sigma} "
            f"seeds={list(case.seeds)}"
        )
    atomic_write_bytes(out / "metadata.txt", ("\n".join(meta) + "\n").encode())
    return tables
