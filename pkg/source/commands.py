"""The experiments behind each CLI verb.

Every command resolves a `RunConfig`, fans per-discriminant or per-draw work out to the task
queue, merges the results in submission order and writes a `RunManifest` beside its outputs.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np
from modules import settings
from modules.arith import FamilySelector, admissible_discriminants
from modules.cache import cached_coefficients, open_cache, tolerance_key
from modules.enums import CentralValueMethod, CutoffMode, DistributionKind, Group, ProviderMode
from modules.errors import MethodDisagreementError, MissingDataError, UsageError
from modules.lfunc import collinearity_deviation, ensure_epsilon, twisted_l_function, verify_functional_equation
from modules.newforms import Newform, get_newform
from modules.plotting import comparison_script, write_script
from modules.run_manifest import RunManifest
from modules.shimura import (
    LIFTS,
    build_lift,
    calibrate_kappa,
    central_value_kz,
    default_reference_d,
    empirical_lift,
    is_vanishing,
)
from modules.stats import (
    EmpiricalDistribution,
    EnsembleContext,
    base_n_std,
    compare_distributions,
    estimate_c_std,
    excised_sample,
    lowest_phase_distribution,
    n_std,
    pooled_phase_density,
)
from modules.tasks import run_tasks
from threads.central_values import CentralValueTask
from threads.sampler import parallel_draws
from threads.zeros import ZeroSearchParameters, ZeroTask

if TYPE_CHECKING:
    from collections.abc import Sequence

    from modules.task import Task

logger = logging.getLogger(__name__)

# tasks per cache flush; an interrupted run loses at most one chunk
CHUNK_SIZE = 64


@dataclass
class RunConfig:
    seed: int
    jobs: int
    cache_dir: Path
    afe_tolerance: float
    zero_tolerance: float
    z_imag_tolerance: float
    kz_tolerance: float
    max_terms: int
    t_max: float
    zero_count: int
    matrix_count: int
    excised_max_attempts: int
    eval_point_count: int
    heart: int
    diamond: int
    derive_coefficients: bool
    coefficient_files: dict[str, Path] = field(default_factory=dict)

    @classmethod
    def from_settings(cls, **overrides) -> RunConfig:
        """Config file values with every non-None keyword taking precedence."""
        values = {
            "seed": settings.get_seed(),
            "jobs": settings.get_worker_thread_count(),
            "cache_dir": settings.get_cache_dir(),
            "afe_tolerance": settings.get_afe_tolerance(),
            "zero_tolerance": settings.get_zero_tolerance(),
            "z_imag_tolerance": settings.get_z_imag_tolerance(),
            "kz_tolerance": settings.get_kz_tolerance(),
            "max_terms": settings.get_max_terms(),
            "t_max": settings.get_t_max(),
            "zero_count": settings.get_zero_count(),
            "matrix_count": settings.get_matrix_count(),
            "excised_max_attempts": settings.get_excised_max_attempts(),
            "eval_point_count": settings.get_eval_point_count(),
            "heart": settings.get_heart(),
            "diamond": settings.get_diamond(),
            "derive_coefficients": settings.get_derive_coefficients(),
        }
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)

    def coefficient_file(self, label: str) -> Path | None:
        if label in self.coefficient_files:
            return self.coefficient_files[label]
        return settings.get_coefficient_file(label)

    @property
    def zero_parameters(self) -> ZeroSearchParameters:
        return ZeroSearchParameters(
            count=self.zero_count,
            t_max=self.t_max,
            afe_tolerance=self.afe_tolerance,
            zero_tolerance=self.zero_tolerance,
            imag_tolerance=self.z_imag_tolerance,
            max_terms=self.max_terms,
        )

    def to_dict(self) -> dict:
        dct = asdict(self)
        dct["cache_dir"] = self.cache_dir.as_posix()
        dct["coefficient_files"] = {k: v.as_posix() for k, v in self.coefficient_files.items()}
        return dct


def _fmt(v: float) -> str:
    return repr(float(v))


def _manifest_path(out: Path) -> Path:
    return out.with_name(f"{out.stem}.manifest.json")


def _finish(manifest: RunManifest, path: Path) -> RunManifest:
    manifest.finish()
    manifest.write_to(path)
    logger.info(f"{manifest.command}: manifest written to {path}")
    return manifest


# --- shared pipeline ---


def load_form(label: str, cfg: RunConfig) -> Newform:
    form = get_newform(label, cfg.coefficient_file(label), cfg.derive_coefficients)
    ensure_epsilon(form)
    return form


def family_of(form: Newform, x: float, cfg: RunConfig) -> list[int]:
    family = admissible_discriminants(form, x, FamilySelector(form.kind, cfg.heart, cfg.diamond))
    if not family:
        raise UsageError(f"{form.label}: no admissible discriminants up to {x:g}")
    return family


def prepare_coefficients(form: Newform, family: Sequence[int], cfg: RunConfig, t_max: float = 0.0):
    """Generate (or load from cache) every coefficient the largest twist will need, before fanning out."""
    L = twisted_l_function(form, max(family), afe_tolerance=cfg.afe_tolerance, max_terms=cfg.max_terms)
    n_max = max(L.terms_needed(0.5 + 1j * t_max))
    if form.provider.mode is ProviderMode.FILE:
        form.coefficients(n_max)
    else:
        cached_coefficients(form, n_max, cfg.cache_dir)


def _run_chunked(tasks: Sequence[Task], cfg: RunConfig, flush):
    for start in range(0, len(tasks), CHUNK_SIZE):
        chunk = tasks[start : start + CHUNK_SIZE]
        try:
            run_tasks(chunk, cfg.jobs)
        finally:
            flush([task for task in chunk if task.result is not None])
        logger.info(f"{min(start + CHUNK_SIZE, len(tasks))} of {len(tasks)} twists done")


def collect_zeros(form: Newform, family: Sequence[int], cfg: RunConfig) -> dict[int, list[str]]:
    """Cached rows `central_vanishing, t1..tk` for each D of `family`, computing the missing ones."""
    params = cfg.zero_parameters
    key = tolerance_key(
        afe=params.afe_tolerance,
        zero=params.zero_tolerance,
        imag=params.imag_tolerance,
        tmax=params.t_max,
        count=params.count,
    )
    columns = ("central_vanishing", *(f"t{i}" for i in range(1, params.count + 1)))
    cache = open_cache(cfg.cache_dir, "zeros", form.label, key, columns)

    pending = [d for d in family if d not in cache]
    if pending:
        logger.info(f"{form.label}: {len(family) - len(pending)} twists cached, computing {len(pending)}")
        prepare_coefficients(form, pending, cfg, params.t_max)
        tasks = [ZeroTask(form, d, params) for d in pending]
        _run_chunked(
            tasks,
            cfg,
            lambda done: cache.append(
                (t.d, [str(int(t.result.central_vanishing)), *map(_fmt, t.result.ordinates)]) for t in done
            ),
        )
    return {d: cache.rows[d] for d in family}


def collect_central_values(form: Newform, family: Sequence[int], cfg: RunConfig) -> dict[int, complex]:
    key = tolerance_key(afe=cfg.afe_tolerance)
    cache = open_cache(cfg.cache_dir, "central_values", form.label, key, ("re", "im"))

    pending = [d for d in family if d not in cache]
    if pending:
        logger.info(f"{form.label}: {len(family) - len(pending)} central values cached, computing {len(pending)}")
        prepare_coefficients(form, pending, cfg)
        tasks = [CentralValueTask(form, d, cfg.afe_tolerance, cfg.max_terms) for d in pending]
        _run_chunked(
            tasks,
            cfg,
            lambda done: cache.append((t.d, [_fmt(t.result.real), _fmt(t.result.imag)]) for t in done),
        )
    return {d: complex(float(cache.rows[d][0]), float(cache.rows[d][1])) for d in family}


def zero_distribution(rows: dict[int, list[str]]) -> EmpiricalDistribution:
    pairs = [(d, float(row[1])) for d, row in rows.items()]
    return EmpiricalDistribution.from_pairs(pairs, DistributionKind.LOWEST_ZERO)


def _ensemble_sampler(group: Group, size: int, cfg: RunConfig):
    def sampler(start: int, count: int):
        return parallel_draws(group, size, cfg.seed, start, count, cfg.jobs)

    return sampler


# --- commands ---


def cmd_sample_ensemble(
    group: Group, n: int, count: int, out: Path, cfg: RunConfig, full_phases: bool = False
) -> RunManifest:
    """Write `count` draws of `group` at matrix size `n` as `group,n,seed,draw,theta_min,lambda_at_one`."""
    if n < 1 or count < 1:
        raise UsageError("matrix size and count must be positive")
    if group.doubled and n % 2:
        raise UsageError(f"{group.value} needs an even matrix size, got {n}")

    manifest = RunManifest("sample-ensemble", seed=cfg.seed, parameters={"group": group.value, "n": n, "count": count})
    manifest.settings = cfg.to_dict()
    samples = parallel_draws(group, n, cfg.seed, 0, count, cfg.jobs)

    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["group", "n", "seed", "draw", "theta_min", "lambda_at_one"])
        for s in samples:
            writer.writerow([group.value, n, cfg.seed, s.draw, _fmt(s.lowest_phase()), _fmt(s.lambda_at_one)])
    manifest.outputs.append(out.as_posix())

    if full_phases:
        phases_out = out.with_name(f"{out.stem}_phases.csv")
        with phases_out.open("w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["draw", "index", "phase"])
            for s in samples:
                writer.writerows([s.draw, i, _fmt(p)] for i, p in enumerate(s.eigenphases))
        manifest.outputs.append(phases_out.as_posix())

    density = pooled_phase_density(samples)
    manifest.results = {
        "mean_lowest_phase": lowest_phase_distribution(samples).mean,
        "near_zero_density_ratio": float(density.density[0] / np.mean(density.density)),
    }
    return _finish(manifest, _manifest_path(out))


def cmd_compute_zeros(label: str, x: float, out: Path, cfg: RunConfig) -> RunManifest:
    """Lowest zeros of every admissible twist D <= x, as `label,D,central_vanishing,t1..tk`."""
    form = load_form(label, cfg)
    family = family_of(form, x, cfg)
    manifest = RunManifest("compute-zeros", label=label, seed=cfg.seed, x_max=x, settings=cfg.to_dict())
    manifest.parameters = {"epsilon_f": [form.epsilon_f.real, form.epsilon_f.imag], "family_size": len(family)}

    rows = collect_zeros(form, family, cfg)

    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["label", "D", "central_vanishing", *(f"t{i}" for i in range(1, cfg.zero_count + 1))])
        for d in family:
            writer.writerow([label, d, *rows[d]])
    manifest.outputs.append(out.as_posix())
    manifest.results = {"central_vanishing": sum(row[0] == "1" for row in rows.values())}
    return _finish(manifest, _manifest_path(out))


def cmd_central_values(label: str, x: float, method: CentralValueMethod, out: Path, cfg: RunConfig) -> RunManifest:
    """L(f, 1/2, psi_D) over the family, by the approximate functional equation, Kohnen-Zagier or both."""
    if method is not CentralValueMethod.DIRECT and label not in LIFTS:
        raise UsageError(f"{label}: no Kohnen-Zagier route; use --method direct")

    form = load_form(label, cfg)
    family = family_of(form, x, cfg)
    manifest = RunManifest("central-values", label=label, seed=cfg.seed, x_max=x, settings=cfg.to_dict())
    manifest.parameters = {"method": method.value, "family_size": len(family)}

    direct: dict[int, complex] = {}
    if method is not CentralValueMethod.KZ:
        direct = collect_central_values(form, family, cfg)

    lift = None
    if method is not CentralValueMethod.DIRECT:
        lift = build_lift(form, max(family))
        calibrate_kappa(lift, default_reference_d(lift, family))
        manifest.results.update({"kappa": lift.kappa, "reference_D": lift.reference_d})
    elif form.is_self_dual and form.weight == 2:
        lift = empirical_lift(form, {d: v.real for d, v in direct.items()})
        manifest.results.update({"kappa": lift.kappa, "reference_D": lift.reference_d})

    header = ["label", "D"]
    if direct:
        header += ["re", "im"]
    if method is not CentralValueMethod.DIRECT:
        header += ["c_D", "kz"]
    if method is CentralValueMethod.BOTH:
        header += ["rel_diff"]

    max_rel_diff = 0.0
    vanishing = 0
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for d in family:
            row: list = [label, d]
            value = None
            if direct:
                value = direct[d]
                row += [_fmt(value.real), _fmt(value.imag)]
            if method is not CentralValueMethod.DIRECT:
                kz = central_value_kz(lift, d)
                row += [lift.c(d), _fmt(kz)]
                if value is None:
                    value = complex(kz)
                else:
                    rel = abs(value.real - kz) / max(abs(kz), 1e-300) if kz else abs(value.real)
                    max_rel_diff = max(max_rel_diff, rel)
                    row.append(_fmt(rel))
            if is_vanishing(abs(value), lift, d):
                vanishing += 1
            writer.writerow(row)
    manifest.outputs.append(out.as_posix())

    manifest.results["vanishing"] = vanishing
    if method is CentralValueMethod.BOTH:
        manifest.results["max_rel_diff"] = max_rel_diff
    if direct and not form.is_self_dual:
        manifest.results["collinearity_deviation"] = collinearity_deviation(direct.values())
    _finish(manifest, _manifest_path(out))
    if max_rel_diff > cfg.kz_tolerance:
        raise MethodDisagreementError(
            f"{label}: direct and Kohnen-Zagier central values differ by {max_rel_diff:.3g}"
            f" (tolerance {cfg.kz_tolerance:g})"
        )
    return manifest


def _ensemble_context(form: Newform, x: float, cfg: RunConfig) -> EnsembleContext:
    base = base_n_std(x, form.level)
    return EnsembleContext(
        n_std=base,
        n_matrices=cfg.matrix_count,
        seed=cfg.seed,
        max_attempts=cfg.excised_max_attempts,
        eval_point_count=cfg.eval_point_count,
        sampler=_ensemble_sampler(Group.SO_EVEN, 2 * base, cfg),
    )


def cmd_estimate_cutoff(
    label: str, x: float, grid: Sequence[float], mode: CutoffMode, out: Path, cfg: RunConfig
) -> RunManifest:
    """Discrepancy curve `c_candidate,discrepancy` of the c_std grid search and its argmin."""
    form = load_form(label, cfg)
    if form.kind.group is not Group.SO_EVEN:
        raise UsageError(f"{label}: the excised model applies to orthogonal families only")
    family = family_of(form, x, cfg)
    ctx = _ensemble_context(form, x, cfg)
    manifest = RunManifest("estimate-cutoff", label=label, seed=cfg.seed, x_max=x, settings=cfg.to_dict())
    manifest.parameters = {"grid": list(grid), "mode": mode.value, "n_std": ctx.n_std, "matrix_size": ctx.matrix_size}

    if mode is CutoffMode.ZEROS_VS_EXCISED:
        dist = zero_distribution(collect_zeros(form, family, cfg))
    else:
        values = collect_central_values(form, family, cfg)
        dist = EmpiricalDistribution.from_pairs(
            [(d, abs(v)) for d, v in values.items()], DistributionKind.CENTRAL_VALUE
        )

    result = estimate_c_std(form.weight, dist, ctx, grid, mode)

    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["c_candidate", "discrepancy"])
        for c, v in zip(result.candidates, result.discrepancies):
            writer.writerow([_fmt(c), "nan" if math.isnan(v) else _fmt(v)])
    manifest.outputs.append(out.as_posix())
    manifest.results = {
        "argmin": result.argmin,
        "acceptance_rates": [float(r) for r in result.acceptance_rates],
        "infeasible": [float(c) for c, ok in zip(result.candidates, result.feasible) if not ok],
    }
    return _finish(manifest, _manifest_path(out))


def _write_table(path: Path, header: list[str], columns: list[np.ndarray]):
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows([_fmt(v) for v in row] for row in zip(*columns))


def cmd_compare(label: str, x: float, out_dir: Path, cfg: RunConfig, cutoff: float | None = None) -> RunManifest:
    """Unit-mean lowest zeros against the family's random-matrix model, with a gnuplot script for the plots."""
    form = load_form(label, cfg)
    group = form.kind.group
    if cutoff is not None and group is not Group.SO_EVEN:
        raise UsageError(f"{label}: --cutoff applies to orthogonal families only")
    family = family_of(form, x, cfg)
    size = n_std(x, group, form.level)
    manifest = RunManifest("compare", label=label, seed=cfg.seed, x_max=x, settings=cfg.to_dict())
    manifest.parameters = {"group": group.value, "matrix_size": size, "cutoff": cutoff}

    zeros = zero_distribution(collect_zeros(form, family, cfg))
    eigen = lowest_phase_distribution(parallel_draws(group, size, cfg.seed, 0, cfg.matrix_count, cfg.jobs))
    excised = None
    if cutoff is not None:
        excised = lowest_phase_distribution(excised_sample(form.weight, cutoff, _ensemble_context(form, x, cfg)))
    comparison = compare_distributions(zeros, eigen, excised)

    out_dir.mkdir(parents=True, exist_ok=True)
    histogram_csv = out_dir / f"{label}_histogram.csv"
    split_csv = out_dir / f"{label}_split.csv"
    header = ["center", "zeros", "eigenphases"]
    columns = [comparison.zeros_density.centers, comparison.zeros_density.density, comparison.eigen_density.density]
    if comparison.excised_density is not None:
        header.append("excised")
        columns.append(comparison.excised_density.density)
    _write_table(histogram_csv, header, columns)
    _write_table(
        split_csv,
        ["center", "small", "large"],
        [comparison.small_density.centers, comparison.small_density.density, comparison.large_density.density],
    )

    summary = {
        "label": label,
        "zeros_mean": comparison.zeros.mean,
        "eigenphases_mean": comparison.eigenphases.mean,
        "zeros_normalization": comparison.zeros.normalization,
        "eigenphases_normalization": comparison.eigenphases.normalization,
        "small_mean": comparison.small.mean,
        "large_mean": comparison.large.mean,
        "small_count": len(comparison.small),
        "large_count": len(comparison.large),
    }
    if comparison.excised is not None:
        summary["excised_normalization"] = comparison.excised.normalization
    summary_json = out_dir / f"{label}_summary.json"
    with summary_json.open("w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2)

    script = write_script(
        out_dir / f"{label}.gp", comparison_script(label, histogram_csv, split_csv, excised=excised is not None)
    )
    manifest.outputs += [p.as_posix() for p in (histogram_csv, split_csv, summary_json, script)]
    manifest.results = summary
    return _finish(manifest, out_dir / f"{label}.manifest.json")


def cmd_calibrate(label: str, cfg: RunConfig, x: float = 1000.0) -> RunManifest:
    """Root number, functional-equation residuals and (weights 4 to 8) kappa_f of one form."""
    form = get_newform(label, cfg.coefficient_file(label), cfg.derive_coefficients)
    form.epsilon_f = None
    eps = ensure_epsilon(form)
    family = family_of(form, x, cfg)

    untwisted = verify_functional_equation(twisted_l_function(form, 1, afe_tolerance=cfg.afe_tolerance))
    twisted = verify_functional_equation(twisted_l_function(form, family[0], afe_tolerance=cfg.afe_tolerance))
    manifest = RunManifest("calibrate", label=label, seed=cfg.seed, x_max=x, settings=cfg.to_dict())
    manifest.results = {
        "epsilon_f": [eps.real, eps.imag],
        "fe_residual_untwisted": untwisted,
        "fe_residual_first_twist": twisted,
        "first_twist": family[0],
    }
    print(f"{label}: epsilon_f = {eps.real:+.12f}{eps.imag:+.12f}i")
    print(f"{label}: functional equation residual {untwisted:.2e} (D=1), {twisted:.2e} (D={family[0]})")

    if label in LIFTS:
        try:
            lift = build_lift(form, max(family))
            kappa = calibrate_kappa(lift, default_reference_d(lift, family))
        except MissingDataError as e:
            logger.warning(f"{label}: kappa not calibrated: {e}")
        else:
            manifest.results.update({"kappa": kappa, "reference_D": lift.reference_d})
            print(f"{label}: kappa_f = {kappa:.12g} (D={lift.reference_d})")

    return _finish(manifest, cfg.cache_dir / "manifests" / f"calibrate_{label}.manifest.json")
