import pytest
from hypothesis import given, settings, strategies as st

from rnmh.config import ConfigError, RunConfig, parse_config, serialize, with_overrides


def test_empty_file_gives_defaults():
    cfg = parse_config("")
    assert cfg == RunConfig()
    assert (cfg.mass, cfg.charge, cfg.ell, cfg.m, cfg.n_points) == (1.0, 0.5, 2, 0, 2048)


def test_comments_and_whitespace():
    cfg = parse_config("# header\n  mass = 2.0   # trailing\n\ncharge=0.25\nshape = bump\n")
    assert cfg.mass == 2.0 and cfg.charge == 0.25 and cfg.shape == "bump"


def test_charge_range_error():
    with pytest.raises(ConfigError) as info:
        parse_config("charge = 1.5\n")
    assert info.value.key == "charge" and info.value.line == 1


@pytest.mark.parametrize("text,key,line", [
    ("mass = 1\nfoo = 2\n", "foo", 2),
    ("n_points = 12.5\n", "n_points", 1),
    ("ell = 2\nell = 3\n", "ell", 2),
    ("\n\nsigma = 3\n", "sigma", 3),
    ("cfl = 0\n", "cfl", 1),
    ("constraint_solved = maybe\n", "constraint_solved", 1),
    ("ell = 1\nm = 2\n", "m", 2),
    ("t_final = 10.5\n", "t_final", 1),
    ("boundary = open\n", "boundary", 1),
    ("amplitude = nan\n", "amplitude", 1),
])
def test_field_level_errors(text, key, line):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.key == key and info.value.line == line
    assert f"line {line}" in str(info.value)


def test_malformed_line():
    with pytest.raises(ConfigError) as info:
        parse_config("mass 1\n")
    assert info.value.line == 1


def test_refusals():
    with pytest.raises(ConfigError):
        parse_config("m = 1\nscalar_amplitude = 0.1\n")
    with pytest.raises(ConfigError):
        parse_config("m = 1\nq_F = 0.3\n")
    with pytest.raises(ConfigError) as info:
        parse_config("center = 150\nt_final = 100\n")
    assert info.value.key == "center"
    # a Sommerfeld boundary lets the pulse leave
    assert parse_config("center = 150\nboundary = sommerfeld\n").center == 150.0


def test_overrides_coerce_strings():
    cfg = with_overrides(RunConfig(), {"n_points": "1024", "q_A": "0.1", "constraint_solved": "false"})
    assert cfg.n_points == 1024 and cfg.q_A == 0.1 and cfg.constraint_solved is False
    with pytest.raises(ConfigError):
        with_overrides(RunConfig(), {"nope": 1})
    with pytest.raises(ConfigError):
        with_overrides(RunConfig(), {"ell": 2.5})


configs = st.builds(
    dict,
    mass=st.floats(0.5, 5.0),
    charge_ratio=st.floats(-0.95, 0.95),
    n_points=st.integers(16, 8192),
    n_theta=st.integers(8, 128),
    ell=st.integers(0, 6),
    shape=st.sampled_from(["gaussian", "bump"]),
    width=st.floats(0.5, 8.0),
    amplitude=st.floats(-10, 10),
    direction=st.sampled_from(["static", "outgoing", "ingoing"]),
    constraint_solved=st.booleans(),
    q_A=st.floats(-1, 1),
    epsilon=st.floats(0.01, 10),
    sigma=st.floats(1.0, 2.0),
    cfl=st.floats(0.01, 1.0),
    n_reports=st.integers(0, 50),
    report_cadence=st.sampled_from([0.5, 1.0, 2.0]),
    snapshot_cadence=st.integers(1, 4),
    boundary=st.sampled_from(["isolated", "sommerfeld"]),
    spin_system=st.sampled_from(["consistent", "literal"]),
    csv_path=st.sampled_from(["", "out/a.csv", "run 1.csv"]),
)


@given(configs)
@settings(max_examples=50)
def test_round_trip(d):
    mass = d.pop("mass")
    d["charge"] = d.pop("charge_ratio") * mass
    d["mass"] = mass
    d["t_final"] = d.pop("n_reports") * d["report_cadence"]
    d["rstar_min"], d["rstar_max"] = -1000.0, 1000.0
    cfg = with_overrides(RunConfig(), d)
    again = parse_config(serialize(cfg))
    assert again == cfg
    assert serialize(again) == serialize(cfg)
