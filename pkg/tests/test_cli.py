import csv
import subprocess
import sys

import pytest

from qdpanel.cli import RunConfig, main, read_config_file
from qdpanel.errors import ParameterError

SMALL = ["--set", "states=8", "--set", "counties_per_state=12", "--set", "pairs_per_border=5",
         "--set", "quarters=25"]


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("world")
    assert main(["synth", "--out", str(d), "--seed", "3"] + SMALL) == 0
    return d


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def truth(d):
    return dict(line.split(" = ") for line in (d / "truth.txt").read_text().splitlines())


def test_synth_writes_inputs_and_config(synth_dir):
    for name in ("unemployment.csv", "benefits_notices.csv", "wages.csv", "separation.csv",
                 "state_gdp.csv", "pairs.csv", "distances.csv", "run.cfg", "truth.txt"):
        assert (synth_dir / name).exists()
    assert float(truth(synth_dir)["true_alpha"]) == pytest.approx(0.0545)


def test_estimate_on_synthetic_world(synth_dir, tmp_path):
    out = tmp_path / "res"
    assert main(["estimate", "--config", str(synth_dir / "run.cfg"), "--out", str(out)]) == 0
    rows = read_rows(out / "estimates.csv")
    models = [r["model"] for r in rows]
    for label in ("a1_1_pooled_ols", "a1_2_additive_fe", "a1_3_ife_baseline", "a1_4_ife_distance",
                  "a1_5_ife_distance_wages", "a2_1_ife_state_gdp", "a2_2_additive_fe",
                  "a2_3_additive_fe_state_gdp"):
        assert label in models
    base = next(r for r in rows if r["model"] == "a1_3_ife_baseline")
    alpha = float(truth(synth_dir)["true_alpha"])
    assert abs(float(base["coef"]) - alpha) <= 2 * float(base["se"])
    report = (out / "report.txt").read_text()
    for key in ("beta = 0.99", "k = 1", "r = 2", "bootstrap B = 200", "seed = 3", "s (mean over window)"):
        assert key in report
    assert "Table A1" in report and "Table A2" in report


def test_estimate_is_byte_deterministic(synth_dir, tmp_path):
    cfg = str(synth_dir / "run.cfg")
    for name in ("a", "b"):
        assert main(["estimate", "--config", cfg, "--out", str(tmp_path / name),
                     "--set", "bootstrap=50"]) == 0
    for f in ("estimates.csv", "report.txt"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_missing_wages_skips_column_five(synth_dir, tmp_path):
    out = tmp_path / "nw"
    assert main(["estimate", "--config", str(synth_dir / "run.cfg"), "--out", str(out),
                 "--set", "wages=", "--set", "state_gdp=", "--set", "bootstrap=0"]) == 0
    rows = {r["model"]: r for r in read_rows(out / "estimates.csv")}
    assert rows["a1_5_ife_distance_wages"]["coef"] == "skipped: missing input"
    assert "a2_1_ife_state_gdp" not in rows
    report = (out / "report.txt").read_text()
    assert "skipped: missing input" in report


def test_flag_overrides_config(synth_dir, tmp_path):
    out = tmp_path / "k2"
    assert main(["estimate", "--config", str(synth_dir / "run.cfg"), "--out", str(out),
                 "--k", "2", "--r", "1", "--beta", "0.98", "--set", "bootstrap=0"]) == 0
    report = (out / "report.txt").read_text()
    assert "k = 2" in report and "r = 1" in report and "beta = 0.98" in report
    names = {r["regressor"] for r in read_rows(out / "estimates.csv")
             if r["model"] == "a1_3_ife_baseline"}
    assert names == {"benefits_1", "benefits_2"}


def test_stage_failure_exit_code_and_cleanup(synth_dir, tmp_path, capsys):
    out = tmp_path / "fail"
    rc = main(["estimate", "--config", str(synth_dir / "run.cfg"), "--out", str(out),
               "--set", "pairs=missing.csv"])
    assert rc == 2
    assert "stage 'config'" in capsys.readouterr().err
    bad_pairs = tmp_path / "pairs.csv"
    bad_pairs.write_text("id,a,b\n")
    rc = main(["ingest", "--config", str(synth_dir / "run.cfg"), "--out", str(out),
               "--set", f"pairs={bad_pairs}"])
    assert rc == 1
    assert "stage 'ingest'" in capsys.readouterr().err
    assert not (out / "county_panels.csv").exists()


def test_ingest_command(synth_dir, tmp_path):
    out = tmp_path / "ing"
    assert main(["ingest", "--config", str(synth_dir / "run.cfg"), "--out", str(out)]) == 0
    assert (out / "county_panels.csv").read_text().startswith("fips,year,quarter,urate")
    assert "pairs kept = 40" in (out / "ingest_report.txt").read_text()
    # the canonical panel can feed estimation directly
    res = tmp_path / "from_panel"
    assert main(["estimate", "--config", str(synth_dir / "run.cfg"), "--out", str(res),
                 "--set", f"county_panels={out / 'county_panels.csv'}", "--set", "unemployment=",
                 "--set", "benefits=", "--set", "bootstrap=0"]) == 0


def test_effects_defaults(tmp_path):
    assert main(["effects", "--out", str(tmp_path), "--set", "alpha=0.052"]) == 0
    rows = {r["scenario_id"]: float(r["implied_urate"]) for r in read_rows(tmp_path / "effects.csv")}
    assert rows["cut_99_to_26_n4"] == pytest.approx(0.078, abs=0.001)
    assert rows["cut_99_to_26_n8"] == pytest.approx(0.067, abs=0.001)
    assert rows["extend_26_to_99_permanent"] == pytest.approx(0.096, abs=0.002)
    paths = read_rows(tmp_path / "effects_paths.csv")
    assert len(paths) == 3 * 40


def test_effects_scenario_file_row_errors(tmp_path, capsys):
    sc = tmp_path / "sc.csv"
    sc.write_text("scenario_id,alpha,w1,w2,base_urate,n\nok,0.052,99,26,0.099,4\n"
                  "bad,0.052,-1,26,0.099,4\nperm,0.052,26,99,0.05,inf\n")
    out = tmp_path / "o"
    assert main(["effects", "--out", str(out), "--set", f"scenarios={sc}"]) == 0
    assert [r["scenario_id"] for r in read_rows(out / "effects.csv")] == ["ok", "perm"]
    assert "bad" in capsys.readouterr().err
    assert read_rows(out / "effects_errors.csv")[0]["scenario_id"] == "bad"


def test_effects_empty_list(tmp_path):
    sc = tmp_path / "sc.csv"
    sc.write_text("scenario_id,alpha,w1,w2,base_urate,n\n")
    assert main(["effects", "--out", str(tmp_path / "o"), "--set", f"scenarios={sc}"]) == 0
    assert (tmp_path / "o" / "effects.csv").read_text().count("\n") == 1


def test_effects_alpha_from_estimates(synth_dir, tmp_path):
    est = tmp_path / "est"
    assert main(["estimate", "--config", str(synth_dir / "run.cfg"), "--out", str(est),
                 "--set", "bootstrap=0"]) == 0
    assert main(["effects", "--out", str(tmp_path / "eff"),
                 "--set", f"alpha_source={est / 'estimates.csv'}"]) == 0
    base = next(r for r in read_rows(est / "estimates.csv") if r["model"] == "a1_3_ife_baseline")
    rows = read_rows(tmp_path / "eff" / "effects.csv")
    assert float(rows[0]["alpha"]) == pytest.approx(float(base["coef"]), rel=1e-11)


def test_effects_without_alpha_is_config_error(tmp_path):
    assert main(["effects", "--out", str(tmp_path)]) == 2


def test_geo_commands(tmp_path):
    (tmp_path / "blocks.csv").write_text(
        "block_geoid,lon,lat,pop\n010010000001,-85.9,32.2,10\n010010000002,-85.7,32.3,30\n"
        "130010000001,-85.3,32.2,20\n")
    sq = lambda x: [[x, 32.0], [x + 0.5, 32.0], [x + 0.5, 32.5], [x, 32.5], [x, 32.0]]
    (tmp_path / "counties.geojson").write_text(
        '{"type":"FeatureCollection","features":['
        f'{{"type":"Feature","properties":{{"fips":"01001"}},"geometry":{{"type":"Polygon","coordinates":[{sq(-86.0)}]}}}},'
        f'{{"type":"Feature","properties":{{"GEOID":"13001"}},"geometry":{{"type":"Polygon","coordinates":[{sq(-85.5)}]}}}}]}}')
    (tmp_path / "pairs.csv").write_text("pair_id,fips_a,fips_b\np,01001,13001\n")
    cfg = tmp_path / "geo.cfg"
    cfg.write_text("blocks = blocks.csv\ncounties = counties.geojson\npairs = pairs.csv\n"
                   "centers = out/centers.csv  # written by geo-centers\nout = out\n")
    assert main(["geo-centers", "--config", str(cfg)]) == 0
    centers = read_rows(tmp_path / "out" / "centers.csv")
    assert float(centers[0]["lon"]) == pytest.approx(-85.75)
    assert main(["geo-distances", "--config", str(cfg)]) == 0
    d = read_rows(tmp_path / "out" / "distances.csv")
    assert [r["fips"] for r in d] == ["01001", "13001"]
    assert all(float(r["dist_km"]) > 0 for r in d)


def test_validate_quick_criteria(tmp_path, capsys):
    rc = main(["validate", "--out", str(tmp_path), "--criteria", "scenarios,permanent,identities"])
    assert rc == 0
    rows = read_rows(tmp_path / "validation.csv")
    assert [r["criterion"] for r in rows] == ["scenarios", "permanent", "identities"]
    assert "3/3 criteria passed" in capsys.readouterr().out


def test_validate_smoke_mode(tmp_path):
    assert main(["validate", "--out", str(tmp_path), "--criteria", "consistency",
                 "--reps", "10", "-B", "50"]) == 0
    assert read_rows(tmp_path / "validation.csv")[0]["mode"] == "smoke"


def test_validate_unknown_criterion(tmp_path, capsys):
    assert main(["validate", "--out", str(tmp_path), "--criteria", "nope"]) == 2
    err = capsys.readouterr().err
    assert "nope" in err and "consistency" in err


def test_config_parsing(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("# comment\nbeta = 0.98\nk = 2\ncontrols = wages, distance\nwindow_start = 2006Q1\n")
    c = RunConfig.from_mapping(read_config_file(cfg), tmp_path)
    assert (c.beta, c.k, c.controls, str(c.window_start)) == (0.98, 2, ("wages", "distance"), "2006Q1")
    with pytest.raises(ParameterError):
        RunConfig.from_mapping({"bogus": "1"})
    with pytest.raises(ParameterError):
        RunConfig(k=0).validate()
    with pytest.raises(ParameterError):
        RunConfig(bootstrap=10).validate()


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "qdpanel", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for cmd in ("ingest", "estimate", "effects", "geo-centers", "geo-distances", "synth", "validate"):
        assert cmd in out.stdout
