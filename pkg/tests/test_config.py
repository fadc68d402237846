"""Run-config parsing: schema validation with line-numbered errors."""

import pytest

from radioae.config import RunConfig, apply_overrides, parse_config
from radioae.errors import ConfigError

GOOD = """\
# full example
[dataset]
modulation = gfsk
n_examples = 500
example_len = 88
sps = 4
seed = 11
gfsk_bt = 0.3

[channel]
snr_db = 18
clock_ppm_max = 25

[train]
epochs = 3
batch_size = 32
noise_sigma = 0.1
lambda1 = 2e-4
alpha = 0.002
seed = 12
"""


class TestParseConfig:
    def test_full_example(self):
        cfg = parse_config(GOOD)
        assert cfg.dataset.modulation == "gfsk"
        assert cfg.dataset.n_examples == 500
        assert cfg.dataset.seed == 11
        assert cfg.channel.snr_db == 18.0
        assert cfg.channel.clock_ppm_max == 25.0
        assert cfg.train.epochs == 3
        assert cfg.train.lambda1 == 2e-4
        assert cfg.train.adam.alpha == 0.002
        assert cfg.train.seed == 12

    def test_defaults_without_file(self):
        cfg = RunConfig()
        assert cfg.dataset.n_examples == 20000
        assert cfg.dataset.example_len == 88
        assert cfg.train.epochs == 25
        assert cfg.channel.snr_db == 20.0

    def test_comments_and_blanks_ignored(self):
        cfg = parse_config("\n# hi\n[train]\nepochs = 2  # inline\n")
        assert cfg.train.epochs == 2

    def test_unknown_key_reports_line(self):
        text = "[dataset]\nmodulation = qpsk\nbogus = 1\n"
        with pytest.raises(ConfigError, match="line 3"):
            parse_config(text)

    def test_unknown_section_reports_line(self):
        with pytest.raises(ConfigError, match="line 1"):
            parse_config("[nope]\n")

    def test_bad_type_reports_line(self):
        with pytest.raises(ConfigError, match="line 2"):
            parse_config("[train]\nepochs = soon\n")

    def test_int_key_rejects_float_value(self):
        with pytest.raises(ConfigError, match="line 2"):
            parse_config("[train]\nepochs = 2.5\n")

    def test_key_outside_section_reports_line(self):
        with pytest.raises(ConfigError, match="line 1"):
            parse_config("epochs = 3\n")

    def test_duplicate_key_reports_line(self):
        with pytest.raises(ConfigError, match="line 3"):
            parse_config("[train]\nepochs = 1\nepochs = 2\n")

    def test_bad_modulation_rejected(self):
        with pytest.raises(ConfigError, match="modulation"):
            parse_config("[dataset]\nmodulation = ofdm\n")

    def test_invalid_value_range_rejected(self):
        with pytest.raises(ConfigError):
            parse_config("[train]\nepochs = 0\n")


class TestOverrides:
    def test_flags_win(self):
        cfg = apply_overrides(parse_config(GOOD), seed=99, epochs=1,
                              modulation="qpsk", snr_db=25.0)
        assert cfg.dataset.seed == 99
        assert cfg.train.seed == 99
        assert cfg.train.epochs == 1
        assert cfg.dataset.modulation == "qpsk"
        assert cfg.channel.snr_db == 25.0

    def test_none_overrides_keep_config(self):
        cfg = apply_overrides(parse_config(GOOD))
        assert cfg.train.epochs == 3
        assert cfg.dataset.modulation == "gfsk"
