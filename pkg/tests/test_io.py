import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from agetb import io
from agetb.calibrate import CaseRow, CaseSeries, FitConfig, fit
from agetb.cluster import cluster_age_bins
from agetb.errors import ConsistencyError, DomainError, MissingKey, ParseError, UnknownKey
from agetb.model import initial_state, preset
from agetb.scenarios import ScenarioSpec, run_scenario
from agetb.sensitivity import sensitivity_run
from agetb.simulate import annual_new_cases, integrate

HEADER = "year,g1,g2,g3,total\n"


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


# -- case series -----------------------------------------------------------------


def test_bundled_case_series(cases):
    row = cases.row(2004)
    assert (row.groups, row.total) == ((24247, 688080, 257952), 970279)
    assert cases.years == list(range(2004, 2022))
    assert [cases.row(y).total for y in (2019, 2020, 2021)] == [775764, 670538, 639548]
    for r in cases.rows:
        if r.groups is not None:
            assert abs(sum(r.groups) - r.total) <= 1


def test_total_within_rounding_accepted(tmp_path):
    s = io.load_case_series(write(tmp_path, "c.csv", HEADER + "2004,1,2,3,7\n"))
    assert s.row(2004).total == 7


def test_total_mismatch_names_year(tmp_path):
    with pytest.raises(ConsistencyError, match="2007"):
        io.load_case_series(write(tmp_path, "c.csv", HEADER + "2006,1,2,3,6\n2007,1,2,3,8\n"))


@pytest.mark.parametrize("text,row,column", [
    ("", 1, None),
    ("year,a,b,c,total\n2004,1,2,3,6\n", 1, None),
    (HEADER, 2, None),
    (HEADER + "2004,1,x,3,6\n", 2, "g2"),
    (HEADER + "2004,1,2,3\n", 2, None),
    (HEADER + "2004,1,,3,4\n", 2, None),
    (HEADER + "2004,1,2,3,6\n20x5,1,2,3,6\n", 3, "year"),
    (HEADER + "2004,1,2,3,\n", 2, "total"),
])
def test_parse_errors(tmp_path, text, row, column):
    with pytest.raises(ParseError) as info:
        io.load_case_series(write(tmp_path, "c.csv", text))
    assert info.value.row == row
    assert info.value.column == column


def test_case_series_roundtrip(tmp_path, cases):
    io.write_case_series(cases, tmp_path / "c.csv")
    assert io.load_case_series(tmp_path / "c.csv") == cases


@given(st.lists(st.tuples(st.floats(0, 1e7), st.floats(0, 1e7), st.floats(0, 1e7)), min_size=1, max_size=8))
def test_case_series_roundtrip_property(tmp_path_factory, groups):
    rows = tuple(CaseRow(2000 + k, g, float(sum(g))) for k, g in enumerate(groups))
    path = tmp_path_factory.mktemp("rt") / "c.csv"
    io.write_case_series(CaseSeries(rows), path)
    assert io.load_case_series(path).rows == rows


# -- parameters --------------------------------------------------------------------


def test_params_preset_only(tmp_path):
    assert io.load_params(write(tmp_path, "p.params", "preset = varying_n\n")) == preset("varying_n")


def test_params_override(tmp_path):
    p = io.load_params(write(tmp_path, "p.params", "preset = varying_n\nomega = 0.95  # stronger BCG\n"))
    assert p.omega == 0.95
    assert p.beta == preset("varying_n").beta


def test_params_domain_error(tmp_path):
    with pytest.raises(DomainError):
        io.load_params(write(tmp_path, "p.params", "preset = varying_n\nomega = 1.5\n"))
    with pytest.raises(DomainError):
        io.load_params(write(tmp_path, "p.params", "preset = varying_n\neps = 1.5\n"))


def test_params_unknown_key(tmp_path):
    with pytest.raises(UnknownKey, match="kappa"):
        io.load_params(write(tmp_path, "p.params", "preset = varying_n\nkappa = 2\n"))


def test_params_missing_key(tmp_path):
    with pytest.raises(MissingKey, match="beta"):
        io.load_params(write(tmp_path, "p.params", "A = 1\nrho = 1\nomega = 0.5\n"))


def test_params_full_roundtrip(tmp_path):
    for name in ("constant_n", "varying_n"):
        p = preset(name)
        path = write(tmp_path, "p.params", io.dump_params(p))
        assert io.load_params(path) == p


def test_params_switch_mode(tmp_path):
    p = io.load_params(write(tmp_path, "p.params", "preset = varying_n\nn_mode = constant\n"))
    np.testing.assert_array_equal(p.n_fixed, initial_state().totals())


def test_params_parse_error(tmp_path):
    with pytest.raises(ParseError):
        io.load_params(write(tmp_path, "p.params", "preset = varying_n\nomega 0.5\n"))
    with pytest.raises(ParseError):
        io.load_params(write(tmp_path, "p.params", "theta = 1, 2, 3\n"))


def test_resolve_params(tmp_path):
    assert io.resolve_params(None) == preset("varying_n")
    assert io.resolve_params("constant_n") == preset("constant_n")
    path = write(tmp_path, "p.params", "preset = constant_n\n")
    assert io.resolve_params(str(path)) == preset("constant_n")


# -- results --------------------------------------------------------------------


def test_trajectory_roundtrip(tmp_path, varying, y0):
    traj = integrate(varying, y0, 2005.0, 2006.0, dt=0.01)
    io.write_trajectory(traj, tmp_path / "t.csv")
    back = io.read_trajectory(tmp_path / "t.csv")
    np.testing.assert_array_equal(back["times"], traj.times)
    np.testing.assert_array_equal(back["states"], traj.states)
    np.testing.assert_array_equal(back["new_case_flux"], traj.new_case_flux)
    assert back["header"][:5] == ["time", "S1", "E1", "I1", "R1"]


def test_annual_roundtrip(tmp_path, varying, y0):
    series = annual_new_cases(integrate(varying, y0, 2005.0, 2008.0, dt=0.01), 2005)
    io.write_annual(series, tmp_path / "a.csv")
    assert io.read_annual(tmp_path / "a.csv") == series


def test_projection_roundtrip(tmp_path, varying):
    projs = [run_scenario(varying, ScenarioSpec(n, horizon=2026), dt=0.05) for n in ("x", "y")]
    io.write_projections(projs, tmp_path / "p.csv")
    back = io.read_projections(tmp_path / "p.csv")
    assert [p.name for p in back] == ["x", "y"]
    for a, b in zip(projs, back):
        assert a.years == b.years
        np.testing.assert_array_equal(a.cases, b.cases)


def test_prcc_roundtrip_sorted(tmp_path, varying):
    res = sensitivity_run(varying, n=60, seed=5)
    io.write_prcc(res, tmp_path / "p.csv")
    back = io.read_prcc(tmp_path / "p.csv")
    assert back == res.as_dict()
    mags = [abs(v) for v in back.values()]
    assert mags == sorted(mags, reverse=True)


def test_cluster_roundtrip(tmp_path):
    table = io.load_incidence_table()
    res = cluster_age_bins(table, k=3)
    io.write_clusters(res, table.rates, tmp_path / "c.csv")
    assert io.read_clusters(tmp_path / "c.csv") == dict(zip(res.labels, res.assignment))


def test_fit_outputs_roundtrip(tmp_path, cases, varying):
    res = fit(cases, varying, FitConfig(max_evals=12))
    report = io.fit_report(res, {2019: 0.5})
    io.write_json(report, tmp_path / "f.json")
    assert io.read_json(tmp_path / "f.json") == report
    io.write_residuals(res, tmp_path / "r.csv")
    back = io.read_residuals(tmp_path / "r.csv")
    np.testing.assert_array_equal(back["years"], res.years)
    np.testing.assert_array_equal(back["residuals"], res.residuals)
    np.testing.assert_array_equal(back["predicted"], res.predicted)


def test_incidence_table_errors(tmp_path):
    with pytest.raises(ParseError):
        io.load_incidence_table(write(tmp_path, "t.csv", "label,rate\nx,1\n"))
    with pytest.raises(ParseError):
        io.load_incidence_table(write(tmp_path, "t.csv", "age_bin,mean_cases,mean_rate\n"))
