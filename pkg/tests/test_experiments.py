"""Desk-scale reproductions; run with `pytest -m desk_scale`."""

import csv
from dataclasses import replace

import numpy as np
import pytest
from commands import cmd_compare, cmd_estimate_cutoff
from modules.arith import FamilySelector, admissible_discriminants
from modules.enums import CutoffMode, Group
from modules.ensembles import (
    draw_pool,
    eigenphases,
    haar_special_orthogonal,
    haar_unitary,
    haar_unitary_symplectic,
    rng_for,
    symplectic_form,
)
from modules.lfunc import central_value, collinearity_deviation, twisted_l_function
from modules.shimura import build_lift, calibrate_kappa, central_value_kz, default_reference_d
from modules.stats import pooled_phase_density
from scipy.stats import ks_2samp

pytestmark = pytest.mark.desk_scale


@pytest.mark.parametrize(
    ("group", "low", "high"), [(Group.U, 0.8, 1.2), (Group.SO_EVEN, 1.5, np.inf), (Group.USP, 0.0, 0.5)]
)
def test_eigenphase_density_shapes_at_size_fifty(group, low, high):
    density = pooled_phase_density(draw_pool(group, 50, 1, 10_000))
    ratio = density.density[0] / np.mean(density.density)
    assert low <= ratio <= high


def test_repulsion_weakens_with_the_conductor(cfg, tmp_path):
    manifest = cmd_compare("3.8.a.a", 10_000, tmp_path, replace(cfg, jobs=4, matrix_count=10_000))
    assert manifest.results["small_mean"] > manifest.results["large_mean"]


def test_weight_two_excision_constant(cfg, tmp_path):
    grid = [0.4, 0.8, 1.6, 3.2, 6.4]
    manifest = cmd_estimate_cutoff(
        "11.2.a.a", 10_000, grid, CutoffMode.ZEROS_VS_EXCISED, tmp_path / "c.csv", replace(cfg, matrix_count=5_000)
    )
    assert 0.8 <= manifest.results["argmin"] <= 3.2


@pytest.mark.parametrize("label", ["7.4.a.a", "3.6.a.a", "3.8.a.a"])
def test_kohnen_zagier_on_twenty_discriminants(calibrated, label):
    form = calibrated(label)
    family = admissible_discriminants(form, 500, FamilySelector(form.kind))
    lift = build_lift(form, max(family))
    calibrate_kappa(lift, default_reference_d(lift, family))
    for d in family[:20]:
        kz = central_value_kz(lift, d)
        direct = central_value(twisted_l_function(form, d)).real
        assert direct == pytest.approx(kz, rel=1e-4, abs=1e-9), d


def test_collinearity_up_to_two_thousand(calibrated):
    form = calibrated("13.2.e.a")
    family = admissible_discriminants(form, 2000, FamilySelector(form.kind))
    values = [central_value(twisted_l_function(form, d)) for d in family]
    assert collinearity_deviation(values) < 1e-3


def test_haar_samplers_at_size_twenty():
    traces = np.array([np.trace(haar_unitary(20, rng_for(3, i))) for i in range(10_000)])
    assert np.mean(np.abs(traces) ** 2) == pytest.approx(1.0, abs=0.05)

    j = symplectic_form(20)
    for i in range(10_000):
        a = haar_special_orthogonal(20, rng_for(4, i))
        assert np.linalg.det(a) == pytest.approx(1.0, abs=1e-9)
        phases = eigenphases(a)
        np.testing.assert_allclose(np.sort(phases), np.sort(-phases), atol=1e-9)
        b = haar_unitary_symplectic(20, rng_for(5, i))
        np.testing.assert_allclose(b.conj().T @ b, np.eye(20), atol=1e-9)
        np.testing.assert_allclose(b.T @ j @ b, j, atol=1e-9)


@pytest.mark.parametrize("sampler", [haar_special_orthogonal, haar_unitary_symplectic])
def test_haar_invariance_at_size_twenty(sampler):
    q = sampler(20, rng_for(11, 0))
    plain = [np.trace(sampler(20, rng_for(12, i))).real for i in range(5_000)]
    moved = [np.trace(q @ sampler(20, rng_for(12, i))).real for i in range(5_000, 10_000)]
    assert ks_2samp(plain, moved).pvalue > 1e-3


@pytest.mark.parametrize("label", ["7.4.a.a", "3.6.a.a", "3.8.a.a"])
def test_cutoff_curve_is_reproducible_and_stable(cfg, tmp_path, label):
    grid = [2.0**i for i in range(-4, 60, 4)]

    def curve(name, matrices):
        out = tmp_path / f"{name}.csv"
        manifest = cmd_estimate_cutoff(
            label, 2_000, grid, CutoffMode.ZEROS_VS_EXCISED, out, replace(cfg, matrix_count=matrices)
        )
        with out.open(newline="") as f:
            discrepancies = [float(row[1]) for row in list(csv.reader(f))[1:]]
        return manifest.results["argmin"], discrepancies

    argmin, discrepancies = curve("first", 2_000)
    again, again_discrepancies = curve("again", 2_000)
    doubled, _ = curve("doubled", 4_000)
    assert (again, again_discrepancies) == (argmin, discrepancies)
    assert np.isfinite(discrepancies[: grid.index(argmin) + 1]).all()
    assert abs(grid.index(doubled) - grid.index(argmin)) <= 1
