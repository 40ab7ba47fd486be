import json

import numpy as np
import pytest
from modules.cache import (
    CACHE_VERSION,
    cached_coefficients,
    coefficient_cache_path,
    open_cache,
    tolerance_key,
)
from modules.newforms import get_newform


def test_tolerance_key_is_sorted_and_compact():
    assert tolerance_key(zero=1e-8, afe=1e-12, count=1) == "afe1e-12-count1-zero1e-08"


def test_rows_survive_a_reopen(tmp_path):
    cache = open_cache(tmp_path, "zeros", "11.2.a.a", "k", ("central_vanishing", "t1"))
    cache.append([(5, ["0", "1.5"]), (8, ["1", "0.75"])])
    reopened = open_cache(tmp_path, "zeros", "11.2.a.a", "k", ("central_vanishing", "t1"))
    assert reopened.rows == {5: ["0", "1.5"], 8: ["1", "0.75"]}
    assert 5 in reopened
    assert 12 not in reopened
    assert reopened.path.read_text().splitlines()[0] == "D,central_vanishing,t1"


def test_append_skips_known_rows(tmp_path):
    cache = open_cache(tmp_path, "central_values", "7.4.a.a", "k", ("re", "im"))
    cache.append([(8, ["1.0", "0.0"])])
    cache.append([(8, ["2.0", "0.0"]), (29, ["3.0", "0.0"])])
    assert len(cache.path.read_text().splitlines()) == 3
    assert open_cache(tmp_path, "central_values", "7.4.a.a", "k", ("re", "im")).rows[8] == ["1.0", "0.0"]


def test_a_different_key_is_a_different_file(tmp_path):
    open_cache(tmp_path, "zeros", "3.8.a.a", "a", ("t1",)).append([(13, ["1.0"])])
    assert len(open_cache(tmp_path, "zeros", "3.8.a.a", "b", ("t1",))) == 0


def test_truncated_last_row_is_ignored(tmp_path):
    cache = open_cache(tmp_path, "zeros", "3.8.a.a", "k", ("central_vanishing", "t1"))
    cache.append([(13, ["0", "1.0"])])
    with cache.path.open("a") as f:
        f.write("28,0\n")
    assert open_cache(tmp_path, "zeros", "3.8.a.a", "k", ("central_vanishing", "t1")).rows == {13: ["0", "1.0"]}


def test_incompatible_cache_is_discarded(tmp_path):
    cache = open_cache(tmp_path, "zeros", "3.8.a.a", "k", ("t1",))
    cache.append([(13, ["1.0"])])
    meta = json.loads(cache.sidecar.read_text())
    meta["file_version"] = str(CACHE_VERSION.bump_major())
    cache.sidecar.write_text(json.dumps(meta))

    assert len(open_cache(tmp_path, "zeros", "3.8.a.a", "k", ("t1",))) == 0
    assert not cache.path.exists()


def test_changed_columns_discard_the_cache(tmp_path):
    open_cache(tmp_path, "zeros", "3.8.a.a", "k", ("t1",)).append([(13, ["1.0"])])
    assert len(open_cache(tmp_path, "zeros", "3.8.a.a", "k", ("t1", "t2"))) == 0


def test_coefficients_are_cached_and_reused(tmp_path):
    form = get_newform("7.3.b.a")
    first = cached_coefficients(form, 100, tmp_path)
    path = coefficient_cache_path(tmp_path, "7.3.b.a")
    assert path.is_file()
    assert json.loads(path.with_suffix(".json").read_text())["n_max"] == 100

    fresh = get_newform("7.3.b.a")
    second = cached_coefficients(fresh, 50, tmp_path)
    np.testing.assert_array_equal(second, first[:51])
    assert fresh.coefficients(100)[7] == pytest.approx(first[7])
