import pytest

from sns2d import config as cfgmod
from sns2d.harness import ConfigError, StudyConfig


def write(tmp_path, text):
    p = tmp_path / "c.cfg"
    p.write_text(text)
    return p


class TestLoad:
    def test_defaults_match_study_defaults(self):
        assert cfgmod.study_config(cfgmod.load_config(env={})) == StudyConfig()

    def test_file_values(self, tmp_path):
        p = write(tmp_path, "[grid]\nN = 32\n[noise]\nsigmas = 1,0; 0,1; 0.5,0.5\n[study]\nlevels = 8, 16, 32\n")
        cfg = cfgmod.load_config(p, env={})
        assert cfg["grid"]["N"] == 32
        assert cfgmod.noise_model(cfg).K == 3
        assert cfg["study"]["levels"] == (8, 16, 32)

    def test_unknown_key_named(self, tmp_path):
        p = write(tmp_path, "[scheme]\nnu = 0.1\n")
        with pytest.raises(ConfigError, match="scheme.nu"):
            cfgmod.load_config(p, env={})

    def test_unknown_section(self, tmp_path):
        with pytest.raises(ConfigError, match="physics"):
            cfgmod.load_config(write(tmp_path, "[physics]\nmu = 1\n"), env={})

    def test_bad_value(self):
        with pytest.raises(ConfigError, match="grid.N"):
            cfgmod.load_config(overrides=["grid.N=sixty"], env={})

    def test_overrides_match_file(self, tmp_path):
        p = write(tmp_path, "[scheme]\nmu = 0.02\n[study]\nsamples = 16\n")
        a = cfgmod.study_config(cfgmod.load_config(p, env={}))
        b = cfgmod.study_config(cfgmod.load_config(overrides=["mu=0.02", "study.samples=16"], env={}))
        assert a == b

    def test_ambiguous_bare_key(self):
        with pytest.raises(ConfigError, match="ambiguous"):
            cfgmod.load_config(overrides=["seed=3"], env={})

    def test_env_seed(self):
        cfg = cfgmod.load_config(env={"SNS_SEED": "99"})
        assert cfg["study"]["master_seed"] == 99 and cfg["run"]["seed"] == 99
        cfg = cfgmod.load_config(overrides=["study.master_seed=5"], env={"SNS_SEED": "99"})
        assert cfg["study"]["master_seed"] == 5

    def test_K_truncates_sigmas(self):
        assert cfgmod.noise_model(cfgmod.load_config(overrides=["K=1"], env={})).K == 1
        assert cfgmod.noise_model(cfgmod.load_config(overrides=["K=0"], env={})).K == 0
        with pytest.raises(ConfigError):
            cfgmod.noise_model(cfgmod.load_config(overrides=["K=3"], env={}))

    def test_empty_sigmas(self):
        assert cfgmod.noise_model(cfgmod.load_config(overrides=["sigmas=none"], env={})).K == 0
