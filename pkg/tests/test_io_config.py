import numpy as np
import pytest

from spinpair.config import RunConfig, load_config
from spinpair.exceptions import InputError
from spinpair.io import CSVFormatError, read_outcomes_csv, read_populations_csv, write_populations_csv
from spinpair.trajectory import PopulationTrajectory


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_population_round_trip(tmp_path):
    traj = PopulationTrajectory(
        np.array([0.0, 0.01, 0.02]),
        np.array([[1.0, 0.0, 0.0], [0.8, 0.15, 0.05], [0.6, 0.3, 0.1]]),
        np.full((3, 3), 0.01),
    )
    path = tmp_path / "p.csv"
    write_populations_csv(path, traj)
    back = read_populations_csv(path)
    assert np.array_equal(back.times, traj.times)
    assert np.array_equal(back.populations, traj.populations)
    assert np.array_equal(back.stderr, traj.stderr)


def test_normalization_flag(tmp_path):
    path = write(tmp_path / "p.csv", "time_s,p00,p1m1,p2m2\n0,0.64,0.2,0.16\n0.04,0.32,0.3,0.38\n")
    traj = read_populations_csv(path, normalize=True)
    assert traj.p00 == pytest.approx([1.0, 0.5])


@pytest.mark.parametrize(
    "text,line,column",
    [
        ("time_s,p00,p1m1,p2m2\n0,1,0,0\n0.1,x,0,0\n", 3, "p00"),
        ("time_s,p00,p1m1\n0,1,0\n", 1, "p2m2"),
        ("time_s,p00,p1m1,p2m2\n0,1,0,0\n0.2,1,0\n", 3, None),
        ("time_s,p00,p1m1,p2m2\n0.2,1,0,0\n0.1,1,0,0\n", 3, "time_s"),
        ("time_s,p00,p1m1,p2m2\n0,1.5,0,0\n", 2, "p00"),
        ("time_s,p00,p1m1,p2m2,se00\n0,1,0,0,0.1\n", 1, None),
        ("time_s,p00,p1m1,p2m2,extra\n0,1,0,0,1\n", 1, "extra"),
    ],
)
def test_malformed_csv_names_line_and_column(tmp_path, text, line, column):
    path = write(tmp_path / "bad.csv", text)
    with pytest.raises(CSVFormatError) as info:
        read_populations_csv(path)
    assert info.value.line == line
    assert info.value.column == column
    assert f":{line}" in str(info.value)


def test_empty_and_missing_files(tmp_path):
    with pytest.raises(CSVFormatError):
        read_populations_csv(write(tmp_path / "e.csv", ""))
    with pytest.raises(CSVFormatError):
        read_populations_csv(write(tmp_path / "h.csv", "time_s,p00,p1m1,p2m2\n"))
    with pytest.raises(InputError):
        read_populations_csv(tmp_path / "missing.csv")


def test_outcome_csv(tmp_path):
    path = write(tmp_path / "o.csv", "time_s,p0,p1,p2\n0,0.5,0.02,0.48\n")
    times, outcomes = read_outcomes_csv(path)
    assert times.tolist() == [0.0]
    assert outcomes[0].p1 == 0.02
    with pytest.raises(CSVFormatError):
        read_outcomes_csv(write(tmp_path / "o2.csv", "time_s,p0,p1,p2\n0,0.7,0.5,0.0\n"))


def test_config_defaults_and_ini(tmp_path):
    cfg = RunConfig()
    assert cfg.b_field == 8.5 and cfg.ratio == 2.34
    ini = write(tmp_path / "run.ini", "[spinpair]\ntemperature_uk = 1.5\nfield_scan = 0, 5, 10\nbackend = delta\n")
    loaded = load_config(ini)
    assert loaded.temperature_uk == 1.5
    assert loaded.field_scan == (0.0, 5.0, 10.0)
    assert loaded.backend == "delta"


@pytest.mark.parametrize(
    "body",
    ["backend = square\n", "capture = 1.5\n", "field_scan =\n", "trap_khz = 1, 2\n", "typo_key = 3\n", "temperature_uk = -1\n"],
)
def test_config_rejects_invalid(tmp_path, body):
    with pytest.raises(InputError):
        load_config(write(tmp_path / "bad.ini", "[spinpair]\n" + body))


def test_config_round_trips_through_dict():
    cfg = RunConfig(temperature_uk=3.0, e_cut=9.5)
    assert RunConfig.from_mapping(cfg.to_dict()) == cfg
