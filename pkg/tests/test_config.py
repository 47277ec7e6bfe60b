import pytest

from plapsys.config import ConfigError, RunConfig, dump_config, load_config, parse_config, parse_value


def test_defaults_valid():
    cfg = RunConfig()
    assert cfg.grid().dims == (33, 33)
    assert cfg.params().p == 2.0


def test_parse_comments_and_fractions():
    cfg = parse_config("""
        # regularizing regime
        N = 2
        n = 16        # cells per axis
        p = 3/2
        r = 6
        data = singular
        alpha = 1.68
        omega = auto
        eps = none
    """)
    assert cfg.p == 1.5 and cfg.n == (16,) and cfg.omega == "auto" and cfg.eps is None
    assert cfg.data == "singular"


def test_dump_roundtrip():
    cfg = RunConfig(N=3, n=(4, 5, 6), extent=(1.0, 2.0, 0.5), p=1.8, theta=0.2, r=5.0,
                    center=(0.3, 0.7, 0.2), m=1.18, omega=0.5, accel="newton")
    assert parse_config(dump_config(cfg)) == cfg


def test_load_config(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("p = 1.5\nr = 6\n")
    assert load_config(path).r == 6.0


@pytest.mark.parametrize("text", [
    "q = 1",             # unknown key
    "p = 1.5\np = 2",    # duplicate
    "p 1.5",             # no '='
    "p = abc",           # bad number
    "p = 0.9",           # out of range, via CouplingParams
    "theta = 1.0\np = 1.5",
    "N = 4",
    "n = 1",
    "n = 4,4,4",         # three entries for N = 2
    "data = rough",
    "omega = 2",
    "accel = fast",
    "method = bfgs",
    "center = 0.5",
    "alpha = -1",
    "m = 0.5",
    "floor = 0",
    "extent = 0",
])
def test_rejects(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_parse_value_unknown():
    with pytest.raises(ConfigError):
        parse_value("bogus", "1")


def test_rhs_kinds():
    for kind in ("smooth", "singular", "zero"):
        cfg = RunConfig(n=(6,), data=kind, alpha=1.0)
        f = cfg.rhs()
        assert f.grid.dims == (7, 7)
    assert not RunConfig(data="zero").rhs().values.any()
    a = RunConfig(n=(6,), data="singular", alpha=1.0, amplitude=3.0).rhs()
    b = RunConfig(n=(6,), data="singular", alpha=1.0).rhs()
    assert (a.values == 3.0 * b.values).all()
