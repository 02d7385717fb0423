"""Run configuration: defaults, ``key = value`` files and flag overrides."""
from __future__ import annotations

from dataclasses import dataclass, fields

from .corpus import TASKS, task_boundary
from .errors import ConfigurationError
from .seq2seq import VARIANTS, ModelConfig
from .train import TrainConfig


@dataclass
class RunConfig:
    task: str = "normalization"
    variant: str = "plain"
    char_emb: int = 100
    pos_emb: int = 50
    hidden: int = 200
    context_hidden: int = 200
    ensemble: int = 5
    # None means 40 for normalization and 30 otherwise
    max_epochs: int | None = None
    patience: int = 10
    alpha: float = 0.2
    beam: int = 3
    lm_order: int = 3
    lm_smoothing: str = "witten_bell"
    lambda_lm: float = 0.0
    learning_rate: float = 0.1
    clip_norm: float = 5.0
    seed: int = 0
    precision: str = "float64"
    case_insensitive: bool = False
    max_context: int | None = None
    data: str | None = None
    out: str | None = None

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigurationError(f"unknown task {self.task!r}; choose one of {', '.join(TASKS)}")
        if self.variant not in VARIANTS:
            raise ConfigurationError(f"unknown variant {self.variant!r}; choose one of {', '.join(VARIANTS)}")
        for name in ("ensemble", "patience", "beam", "lm_order"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1")

    @property
    def epochs(self):
        if self.max_epochs is not None:
            return self.max_epochs
        return 40 if self.task == "normalization" else 30

    @property
    def boundary(self):
        return task_boundary(self.task)

    def member_seeds(self):
        return [self.seed + k for k in range(self.ensemble)]

    def model_config(self, seed):
        return ModelConfig(variant=self.variant, char_emb=self.char_emb, pos_emb=self.pos_emb,
                           hidden=self.hidden, context_hidden=self.context_hidden,
                           precision=self.precision, seed=seed, max_context=self.max_context)

    def train_config(self):
        return TrainConfig(max_epochs=self.epochs, patience=self.patience,
                           learning_rate=self.learning_rate, clip_norm=self.clip_norm,
                           alpha=self.alpha, shuffle_seed=self.seed, boundary=self.boundary)

    def to_text(self):
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            lines.append(f"{f.name} = {'' if value is None else value}")
        return "\n".join(lines) + "\n"


_FIELDS = {f.name: f for f in fields(RunConfig)}


def _convert(name, raw):
    """Parse a config-file string into the type of field ``name``."""
    default = _FIELDS[name].default
    typ = _FIELDS[name].type
    if raw == "" and "None" in str(typ):
        return None
    try:
        if isinstance(default, bool):
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if "int" in str(typ):
            return int(raw)
        if "float" in str(typ):
            return float(raw)
    except ValueError:
        raise ConfigurationError(f"bad value {raw!r} for {name}") from None
    return raw


def parse_config_text(text, source="<config>"):
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELDS:
            raise ConfigurationError(f"{source}:{lineno}: unknown key {key!r}")
        values[key] = _convert(key, raw)
    return values


def load_config_file(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read(), path)


def resolve(file_values=None, overrides=None):
    """Defaults, then file values, then explicit overrides (``None`` means unset)."""
    values = {}
    values.update(file_values or {})
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return RunConfig(**values)
