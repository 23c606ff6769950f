import math

import numpy as np
import pytest

from swimthrust import sweep as S


def row(h, g2, converged=True):
    return S.SweepRow(h, (0.0, g2, 0.0), (0.0, 0.0, 0.0), (0.0, g2 / (6 * math.pi), 0.0), 1e-9, 100, converged)


def synthetic(fn, hs):
    return S.SweepTable([row(float(h), float(fn(h))) for h in hs])


def test_default_grid():
    hs = S.SweepConfig().h_values()
    assert len(hs) == 101 and hs[0] == 0.0 and hs[-1] == 200.0
    assert {160.0, 180.0, 200.0} <= set(hs)


@pytest.mark.parametrize("kwargs, field", [
    (dict(h_min=5.0, h_max=5.0), "h_max"),
    (dict(h_min=-1.0), "h_min"),
    (dict(n_points=1), "n_points"),
    (dict(abs_tol=0.0), "abs_tol"),
    (dict(mass_ratio=-2.0), "mass_ratio"),
    (dict(path="sideways"), "path"),
    (dict(p0_sign="up"), "p0_sign"),
    (dict(workers=0), "workers"),
    (dict(path="raw"), "h_min"),
    (dict(grid=(3.0, 1.0)), "grid"),
    (dict(plateau_threshold=2.0), "plateau_threshold"),
])
def test_invalid_configs_name_the_field(kwargs, field):
    with pytest.raises(S.ConfigError) as exc:
        S.SweepConfig(**kwargs)
    assert exc.value.field == field
    assert field in str(exc.value)


def test_unknown_setting_is_rejected():
    with pytest.raises(S.ConfigError, match="colour"):
        S.SweepConfig.from_mapping({"colour": "red"})


def test_csv_layout_and_round_trip():
    table = S.SweepTable([row(0.0, -3 * math.pi), row(0.1, 1 / 3), row(7.5, 2.0 ** 0.5, converged=False)])
    text = table.to_csv()
    lines = text.splitlines()
    assert len(lines) == 4
    assert lines[0] == ",".join(S.CSV_HEADER)
    back = S.SweepTable.from_csv(text)
    assert back.rows == table.rows
    assert back.to_csv() == text


def test_csv_round_trip_keeps_nan():
    r = S.SweepRow(1.0, (0.0, 1.0, 0.0), (math.nan,) * 3, (0.0, 1.0, 0.0), 0.0, 1, True)
    back = S.SweepTable.from_csv(S.SweepTable([r]).to_csv()).rows[0]
    assert all(math.isnan(v) for v in back.R)


def test_csv_rejects_foreign_header():
    with pytest.raises(ValueError):
        S.SweepTable.from_csv("a,b,c\n1,2,3\n")


def test_zero_crossing_of_linear_table():
    zc = S.find_zero_crossing(synthetic(lambda h: 6 - h, np.linspace(0, 20, 11)))
    assert zc.found and zc.direction == "+-"
    assert zc.root == pytest.approx(6.0, abs=0.05)


def test_zero_crossing_live_bisection():
    calls = []

    def f(h):
        calls.append(h)
        return 6.123 - h

    zc = S.find_zero_crossing(f, tol=0.05)
    assert zc.found and zc.bracket[1] - zc.bracket[0] < 0.05
    assert abs(zc.root - 6.123) < 0.05
    assert zc.n_evals == len(calls)


def test_table_then_live_refinement():
    zc = S.find_zero_crossing(synthetic(lambda h: h - 6.3, [0, 4, 8, 12]), evaluate=lambda h: h - 6.3, tol=0.01)
    assert zc.direction == "-+"
    assert abs(zc.root - 6.3) < 0.01


@pytest.mark.parametrize("fn", [lambda h: 1 + h, lambda h: -1 - h * h])
def test_no_crossing(fn):
    zc = S.find_zero_crossing(synthetic(fn, np.linspace(0, 20, 11)))
    assert not zc.found and zc.root is None
    assert zc.describe() == "no crossing"


def test_plateau_analysis():
    table = synthetic(lambda h: 18 - 400 / (h + 1) ** 2 - 3 * (h < 5), np.linspace(0, 200, 101))
    result = S.analyze(table)
    assert result.plateau_present
    g = table.G2
    onset = result.plateau_onset
    assert np.all(np.abs(g[table.h >= onset] - g[-1]) <= 0.02 * abs(g[-1]))
    assert abs(g[table.h < onset][-1] - g[-1]) > 0.02 * abs(g[-1])
    assert result.omega_opt(1e-6, 1e-3) == pytest.approx(2 * onset**2)
    assert "omega_opt" in result.summary(1e-6, 1e-3)


def test_plateau_absent():
    result = S.analyze(synthetic(lambda h: h, np.linspace(1, 200, 50)))
    assert not result.plateau_present
    assert "not reached" in result.summary()


def test_plateau_needs_enough_rows():
    result = S.analyze(synthetic(lambda h: 5.0, [1.0, 5.0]))
    assert result.plateau_onset is None and not result.plateau_present
    assert "not determined" in result.summary()


def test_relative_variation():
    assert S.relative_variation([1.0, 1.0, 1.0]) == 0.0
    assert S.relative_variation([0.99, 1.0, 1.01]) == pytest.approx(0.02)


def test_sweep_is_deterministic_and_parallel_safe():
    cfg = S.SweepConfig(grid=(0.0, 3.0, 9.0), workers=1)
    a, b = S.run_sweep(cfg), S.run_sweep(cfg)
    assert a.to_csv() == b.to_csv()
    c = S.run_sweep(S.SweepConfig(grid=(0.0, 3.0, 9.0), workers=2))
    for ra, rc in zip(a.rows, c.rows):
        np.testing.assert_allclose(rc.G, ra.G, rtol=0, atol=1e-14)
    for r in a.rows:
        np.testing.assert_array_equal(r.gamma1, np.array(r.G) / (6 * math.pi))


def test_emit_outputs(tmp_path):
    table = synthetic(lambda h: 6 - h, np.linspace(0, 12, 5))
    cfg = S.SweepConfig(out=str(tmp_path / "g.csv"), plot=str(tmp_path / "g.svg"))
    written = S.emit_outputs(table, S.analyze(table), cfg)
    assert (tmp_path / "g.csv").read_text() == table.to_csv()
    assert "zero crossing" in (tmp_path / "g.summary.txt").read_text()
    assert (tmp_path / "g.svg").stat().st_size > 0
    assert written["plot"].endswith("g.svg")


def test_unwritable_path_is_named(tmp_path):
    table = synthetic(lambda h: 1.0, [0.0, 1.0])
    bad = str(tmp_path / "missing" / "g.csv")
    with pytest.raises(OSError, match="missing"):
        S.emit_outputs(table, S.analyze(table), S.SweepConfig(out=bad))
