import json

import numpy as np
import pytest

from orlicz_bilinear import ConfigError, Grid, delta_p
from orlicz_bilinear.config import (
    REFERENCE_FAMILIES,
    load_run,
    parse_data,
    parse_grid,
    parse_matrix,
    parse_run,
    reference_random_pair,
    reference_runs,
)


def test_matrix_shorthands():
    np.testing.assert_array_equal(parse_matrix("identity", 2).constant, np.eye(2))
    rot = parse_matrix("rotation:0.3", 2)
    np.testing.assert_allclose(rot.constant, np.exp(0.3j) * np.eye(2))
    conj = parse_matrix("rotation:0.3", 2, conjugate=True)
    np.testing.assert_allclose(conj.constant, np.exp(-0.3j) * np.eye(2))
    a, b = reference_random_pair()
    np.testing.assert_array_equal(parse_matrix("random", 2).constant, a)
    np.testing.assert_array_equal(parse_matrix("random", 2, conjugate=True).constant, b)


def test_matrix_records():
    m = parse_matrix({"re": [[2, 0], [0, 1]], "im": [[0, 0.1], [0.1, 0]]}, 2)
    np.testing.assert_allclose(m.constant, [[2, 0.1j], [0.1j, 1]])
    scalar = parse_matrix({"re": 1.5, "im": 0.2}, 3)
    np.testing.assert_allclose(scalar.constant, (1.5 + 0.2j) * np.eye(3))
    with pytest.raises(ConfigError):
        parse_matrix({"kind": "nope"}, 2)
    with pytest.raises(ConfigError):
        parse_matrix(3, 2)
    with pytest.raises(ConfigError):
        parse_matrix("rotation_field:0.2", 1)


def test_rotation_field_on_grid():
    grid = Grid(1, 16, 4.0)
    field = parse_matrix("rotation_field:0.4", 1, grid=grid)
    assert not field.is_constant
    assert field.stack.shape == (16, 1, 1)
    np.testing.assert_allclose(field.stack[0, 0, 0], np.exp(0.4j))


def test_reference_pair_is_p_elliptic():
    a, b = reference_random_pair()
    assert delta_p(a, 4) > 0 and delta_p(b, 4) > 0


def test_grid_and_data_parsing():
    grid = parse_grid({"d": 2, "N": 16, "length": 4.0})
    assert grid == Grid(2, 16, 4.0)
    with pytest.raises(ConfigError):
        parse_grid({"d": 1, "N": 4})
    with pytest.raises(ConfigError):
        parse_grid([1, 2])
    f, g = parse_data({}, Grid(1, 32, 10.0))
    assert np.argmax(np.abs(f.values)) == 16
    assert np.argmax(np.abs(g.values)) in (14, 15)
    with pytest.raises(ConfigError):
        parse_data({"f": {"kind": "square"}}, Grid(1, 32))


def test_run_parsing_defaults(tmp_path):
    rc = parse_run({"young": "power:4", "grid": {"d": 1, "N": 32}})
    assert rc.label == "power:4|d1N32"
    assert rc.t_max == "auto"
    pair, a, b, f, g = rc.build()
    np.testing.assert_array_equal(a.constant, np.eye(1))
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"young": "zygmund:3", "A": "rotation:0.2", "T_max": 5}))
    loaded = load_run(path)
    assert loaded.t_max == 5.0
    _, a, b, _, _ = loaded.build()
    np.testing.assert_allclose(b.constant, np.conj(a.constant))


def test_run_parsing_errors(tmp_path):
    with pytest.raises(ConfigError):
        parse_run([])
    with pytest.raises(ConfigError):
        parse_run({"grid": {}})
    with pytest.raises(ConfigError):
        parse_run({"young": "power:4", "T_max": "soon"})
    with pytest.raises(ConfigError):
        load_run(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_run(bad)


def test_reference_runs():
    runs = reference_runs()
    assert len(runs) == len(REFERENCE_FAMILIES) * (2 + 2 + 3)
    labels = [r.label for r in runs]
    assert len(set(labels)) == len(labels)
    assert "power:4|random|d2N32" in labels
