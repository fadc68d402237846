"""Run-config files: flat key=value lines under [section] headers.

'#' starts a comment; blank lines are ignored. Every key is validated
against the schema below at parse time and errors carry the offending
line number. Unknown sections or keys are rejected.

Example:

    [dataset]
    modulation = qpsk
    n_examples = 20000

    [channel]
    snr_db = 20

    [train]
    epochs = 25
    seed = 7
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .adam import AdamHyper
from .dsp import ChannelSampler
from .errors import ConfigError
from .training import TrainConfig

__all__ = ["DatasetConfig", "RunConfig", "parse_config", "load_config"]


@dataclass(frozen=True)
class DatasetConfig:
    modulation: str = "qpsk"
    n_examples: int = 20000
    example_len: int = 88
    sps: int = 4
    seed: int = 0
    rrc_beta: float = 0.35
    rrc_span: int = 8
    gfsk_bt: float = 0.3
    gfsk_mod_index: float = 0.5


@dataclass(frozen=True)
class RunConfig:
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    channel: ChannelSampler = field(default_factory=ChannelSampler)
    train: TrainConfig = field(default_factory=TrainConfig)


def _convert(kind, raw, lineno, key):
    try:
        if kind is int:
            # reject floats masquerading as ints
            if any(c in raw for c in ".eE") and not raw.lstrip("+-").isdigit():
                raise ValueError
            return int(raw)
        return kind(raw)
    except ValueError:
        raise ConfigError(
            f"line {lineno}: {key} expects {kind.__name__}, got {raw!r}") from None


_SCHEMA = {
    "dataset": {
        "modulation": str,
        "n_examples": int,
        "example_len": int,
        "sps": int,
        "seed": int,
        "rrc_beta": float,
        "rrc_span": int,
        "gfsk_bt": float,
        "gfsk_mod_index": float,
    },
    "channel": {
        "phase_noise_std": float,
        "clock_ppm_max": float,
        "multipath_amp": float,
        "snr_db": float,
        "carrier_offset_max": float,
    },
    "train": {
        "epochs": int,
        "batch_size": int,
        "noise_sigma": float,
        "lambda1": float,
        "lambda2": float,
        "alpha": float,
        "beta1": float,
        "beta2": float,
        "epsilon": float,
        "seed": int,
        "val_examples": int,
    },
}

_ADAM_KEYS = {"alpha", "beta1", "beta2", "epsilon"}


def parse_config(text, origin="<config>"):
    """Parse config text into a RunConfig; raises ConfigError on any problem."""
    values = {"dataset": {}, "channel": {}, "train": {}}
    section = None
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in _SCHEMA:
                raise ConfigError(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        if section is None:
            raise ConfigError(f"line {lineno}: key outside any [section]")
        key, raw = (part.strip() for part in line.split("=", 1))
        schema = _SCHEMA[section]
        if key not in schema:
            raise ConfigError(f"line {lineno}: unknown key {key!r} in [{section}]")
        if key in values[section]:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[section][key] = (lineno, _convert(schema[key], raw, lineno, key))

    ds = values["dataset"]
    if "modulation" in ds:
        lineno, mod = ds["modulation"]
        if mod.lower() not in ("qpsk", "gfsk"):
            raise ConfigError(f"line {lineno}: modulation must be qpsk or gfsk, got {mod!r}")
        ds["modulation"] = (lineno, mod.lower())

    def build(cls, section_values, extra=None):
        kwargs = {k: v for k, (_, v) in section_values.items()}
        if extra:
            kwargs.update(extra)
        try:
            return cls(**kwargs)
        except ValueError as exc:
            raise ConfigError(f"{origin}: {exc}") from exc

    adam_kwargs = {k: v for k, (_, v) in values["train"].items() if k in _ADAM_KEYS}
    train_values = {k: v for k, v in values["train"].items() if k not in _ADAM_KEYS}
    try:
        adam = AdamHyper(**adam_kwargs)
    except ValueError as exc:
        raise ConfigError(f"{origin}: {exc}") from exc
    return RunConfig(
        dataset=build(DatasetConfig, ds),
        channel=build(ChannelSampler, values["channel"]),
        train=build(TrainConfig, train_values, extra={"adam": adam}),
    )


def load_config(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    return parse_config(text, origin=path)


def apply_overrides(config, *, seed=None, epochs=None, modulation=None, snr_db=None):
    """Fold the CLI flags into a parsed RunConfig (flags win)."""
    ds, ch, tr = config.dataset, config.channel, config.train
    if modulation is not None:
        ds = replace(ds, modulation=modulation)
    if seed is not None:
        ds = replace(ds, seed=seed)
        tr = replace(tr, seed=seed)
    if epochs is not None:
        tr = replace(tr, epochs=epochs)
    if snr_db is not None:
        ch = replace(ch, snr_db=snr_db)
    return RunConfig(dataset=ds, channel=ch, train=tr)
