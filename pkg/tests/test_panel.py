import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cvarkit.errors import (
    DuplicateTimestamp,
    InvalidRoles,
    MissingColumn,
    NonNumericCell,
    TooShort,
    UnassignedColumn,
)
from cvarkit.panel import (
    RoleKind,
    SeriesRole,
    TimeSeriesPanel,
    first_difference,
    from_columns,
    load_panel,
    parse_role_config,
)
from conftest import write_panel_csv, write_roles


def test_load_minimal(tmp_path):
    csv = write_panel_csv(tmp_path / "p.csv", {"W": [0, 1, 0], "Y": [1.0, 2.0, 3.0]},
                          time=["2020-01-01", "2020-02-01", "2020-03-01"])
    panel = load_panel(csv, {"W": "policy:1", "Y": "treated:1"})
    assert panel.n_series == 2 and panel.n_obs == 3
    assert panel.roles == (SeriesRole(RoleKind.POLICY, 1), SeriesRole(RoleKind.TREATED, 1))


def test_blank_cell_rejected(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("t,W,Y\n0,1,2\n1,,3\n")
    with pytest.raises(NonNumericCell):
        load_panel(path, {"W": "policy:1", "Y": "treated:1"})


def test_non_numeric_rejected(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("t,W,Y\n0,1,2\n1,abc,3\n")
    with pytest.raises(NonNumericCell):
        load_panel(path, {"W": "policy:1", "Y": "treated:1"})


def test_column_order_normalised(tmp_path):
    cols = {name: np.arange(5.0) + i for i, name in
            enumerate(["IP_DEU", "CD", "MU_DEU", "IP_US", "MU_US"])}
    csv = write_panel_csv(tmp_path / "p.csv", cols)
    roles = write_roles(tmp_path / "roles.cfg", {
        "CD": "policy:1", "IP_US": "treated:1", "MU_US": "treated:2",
        "IP_DEU": "control:1", "MU_DEU": "control:2"})
    panel = load_panel(csv, roles)
    assert panel.labels == ("CD", "IP_US", "MU_US", "IP_DEU", "MU_DEU")
    np.testing.assert_array_equal(panel.column("IP_DEU"), np.arange(5.0))


def test_missing_and_unassigned(tmp_path):
    csv = write_panel_csv(tmp_path / "p.csv", {"W": [0, 1], "Y": [1, 2]})
    with pytest.raises(MissingColumn):
        load_panel(csv, {"W": "policy:1", "Y": "treated:1", "Z": "control:1"})
    with pytest.raises(UnassignedColumn):
        load_panel(csv, {"W": "policy:1"})


def test_duplicate_timestamp(tmp_path):
    csv = write_panel_csv(tmp_path / "p.csv", {"W": [0, 1, 1], "Y": [1, 2, 3]}, time=[1, 2, 2])
    with pytest.raises(DuplicateTimestamp):
        load_panel(csv, {"W": "policy:1", "Y": "treated:1"})


def test_rows_sorted_by_time(tmp_path):
    csv = write_panel_csv(tmp_path / "p.csv", {"W": [3.0, 1.0, 2.0], "Y": [30.0, 10.0, 20.0]},
                          time=[3, 1, 2])
    panel = load_panel(csv, {"W": "policy:1", "Y": "treated:1"})
    np.testing.assert_array_equal(panel.column("W"), [1.0, 2.0, 3.0])
    assert panel.time_index == (1, 2, 3)


def test_load_is_deterministic(tmp_path):
    rng = np.random.default_rng(0)
    csv = write_panel_csv(tmp_path / "p.csv", {"W": rng.normal(size=50), "Y": rng.normal(size=50)})
    a = load_panel(csv, {"W": "policy:1", "Y": "treated:1"})
    b = load_panel(csv, {"W": "policy:1", "Y": "treated:1"})
    np.testing.assert_array_equal(a.observations, b.observations)
    assert a.labels == b.labels and a.roles == b.roles


def test_role_rules():
    with pytest.raises(InvalidRoles):
        from_columns({"W": [1, 2], "Y0": [1, 2]}, {"W": "policy:1", "Y0": "control:1"})
    with pytest.raises(InvalidRoles):
        from_columns({"A": [1, 2], "B": [1, 2]}, {"A": "policy:1", "B": "policy:1"})
    with pytest.raises(InvalidRoles):
        SeriesRole.parse("outcome:1")


def test_role_config_parsing():
    roles = parse_role_config("# comment\nCD = policy:1\nIP_US = treated:1  # trailing\n\n")
    assert roles == {"CD": SeriesRole(RoleKind.POLICY, 1), "IP_US": SeriesRole(RoleKind.TREATED, 1)}


def test_storage_is_readonly_column_major():
    panel = from_columns({"W": [1, 2, 3], "Y": [4, 5, 6]}, {"W": "policy:1", "Y": "treated:1"})
    assert panel.observations.flags.f_contiguous
    assert panel.observations.dtype == np.float64
    with pytest.raises(ValueError):
        panel.observations[0, 0] = 9.0


def test_nan_rejected():
    with pytest.raises(NonNumericCell):
        TimeSeriesPanel(np.array([[1.0, np.nan]]), ["a", "b"], ["policy:1", "treated:1"])


def test_first_difference_examples():
    panel = from_columns({"W": [5, 5, 5, 5], "Y": [1, 2, 3, 4]}, {"W": "policy:1", "Y": "treated:1"})
    d = first_difference(panel)
    np.testing.assert_array_equal(d.column("W"), [0, 0, 0])
    np.testing.assert_array_equal(d.column("Y"), [1, 1, 1])
    assert d.roles == panel.roles and d.n_obs == 3


def test_first_difference_random_walk(rng):
    steps = 0.3 + rng.standard_normal(2000)
    x = np.cumsum(steps)
    panel = from_columns({"Y": x}, {"Y": "treated:1"})
    d = first_difference(panel).column("Y")
    np.testing.assert_allclose(d, x[1:] - x[:-1], rtol=0, atol=0)
    assert abs(d.mean() - 0.3) < 4 * steps.std() / np.sqrt(d.size)


def test_first_difference_too_short():
    with pytest.raises(TooShort):
        first_difference(from_columns({"Y": [1.0]}, {"Y": "treated:1"}))


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 40), st.integers(1, 3)),
              elements=st.floats(-1e6, 1e6)))
def test_difference_then_cumsum_round_trip(data):
    n = data.shape[1]
    labels = [f"s{i}" for i in range(n)]
    roles = ["policy:1"] + [f"treated:{j}" for j in range(1, n)]
    panel = TimeSeriesPanel(data, labels, roles)
    d = first_difference(panel).observations
    rebuilt = np.vstack([data[:1], data[:1] + np.cumsum(d, axis=0)])
    np.testing.assert_allclose(rebuilt, data, rtol=1e-12, atol=1e-12 * max(1.0, np.abs(data).max()) * data.shape[0])
