"""Experiment configuration and its flat ``key=value`` text form."""

from dataclasses import asdict, dataclass, field, fields, replace

from .errors import ConfigError
from .features.mfcc import MfccConfig
from .features.segments import SEGMENTATION_MODES

DEFAULT_CLASSES = ("angry", "happy", "sad", "neutral")


@dataclass(frozen=True)
class ModelConfig:
    """Architecture, preprocessing and ablation switches."""

    classes: tuple = DEFAULT_CLASSES
    vocabulary: tuple = ()
    embed_dim: int = 300
    hidden_size: int = 128
    heads: int = 4
    dropout: float = 0.3
    alpha: float = 0.1
    n_mfcc: int = 40
    frame_ms: float = 25.0
    hop_ms: float = 10.0
    window: str = "hamming"
    n_mels: int = 40
    n_fft: int = 512
    preemphasis: float = 0.97
    sample_rate: int = 16000
    overlap: float = 0.1
    segmentation: str = "aligned"
    use_stop_gradient: bool = True
    use_align_loss: bool = True
    use_cross_attention: bool = True

    def __post_init__(self):
        if not self.classes:
            raise ConfigError("need at least one class")
        if len(set(self.classes)) != len(self.classes):
            raise ConfigError("class names must be unique")
        if self.hidden_size < 1 or self.embed_dim < 1 or self.heads < 1:
            raise ConfigError("sizes must be positive")
        if (2 * self.hidden_size) % self.heads:
            raise ConfigError(
                f"heads={self.heads} must divide 2*hidden_size={2 * self.hidden_size}"
            )
        if self.alpha < 0:
            raise ConfigError(f"alpha must be non-negative, got {self.alpha}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must lie in [0, 1), got {self.dropout}")
        if self.segmentation not in SEGMENTATION_MODES:
            raise ConfigError(f"segmentation must be one of {SEGMENTATION_MODES}")
        if not 0.0 <= self.overlap < 0.5:
            raise ConfigError(f"overlap must lie in [0, 0.5), got {self.overlap}")
        try:
            self.mfcc_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def n_classes(self):
        return len(self.classes)

    @property
    def context_dim(self):
        return 2 * self.hidden_size

    @property
    def head_dim(self):
        return self.context_dim // self.heads

    @property
    def effective_alpha(self):
        """Weight of the auxiliary heads in both the loss and the fused score."""
        if not (self.use_align_loss and self.use_cross_attention):
            return 0.0
        return self.alpha

    @property
    def stop_gradient_active(self):
        return self.use_stop_gradient and self.use_cross_attention

    def mfcc_config(self):
        return MfccConfig(
            n_mfcc=self.n_mfcc,
            frame_ms=self.frame_ms,
            hop_ms=self.hop_ms,
            window=self.window,
            n_mels=self.n_mels,
            n_fft=self.n_fft,
            preemphasis=self.preemphasis,
        )

    def preprocessing_key(self):
        """Fields that determine extracted features."""
        keys = ("n_mfcc", "frame_ms", "hop_ms", "window", "n_mels", "n_fft",
                "preemphasis", "sample_rate", "overlap", "segmentation")
        return {k: getattr(self, k) for k in keys}


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    clip_norm: float = 1.0
    batch_size: int = 64
    max_epochs: int = 100
    patience: int = 10
    folds: int = 10

    def __post_init__(self):
        if self.lr <= 0 or self.clip_norm <= 0:
            raise ConfigError("learning rate and clip norm must be positive")
        if self.batch_size < 1 or self.max_epochs < 1 or self.patience < 1:
            raise ConfigError("batch size, epochs and patience must be positive")
        if self.folds < 2:
            raise ConfigError(f"need at least 2 folds, got {self.folds}")


@dataclass(frozen=True)
class Experiment:
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)


MODEL_KEYS = tuple(f.name for f in fields(ModelConfig))
TRAIN_KEYS = tuple(f.name for f in fields(TrainConfig))


def _parse_value(default, text):
    if isinstance(default, bool):
        lowered = text.strip().lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"not a boolean: {text!r}")
    if isinstance(default, tuple):
        return tuple(v.strip() for v in text.split(",") if v.strip())
    try:
        return type(default)(text.strip())
    except ValueError:
        raise ConfigError(f"cannot parse {text!r} as {type(default).__name__}") from None


def _format_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_overrides(pairs):
    """Split string ``key -> value`` pairs into typed model/train overrides."""
    model, train = {}, {}
    defaults_m, defaults_t = ModelConfig(), TrainConfig()
    for key, value in pairs.items():
        key = key.strip().replace("-", "_")
        if key in MODEL_KEYS:
            model[key] = _parse_value(getattr(defaults_m, key), value)
        elif key in TRAIN_KEYS:
            train[key] = _parse_value(getattr(defaults_t, key), value)
        else:
            raise ConfigError(f"unknown configuration key {key!r}")
    return model, train


def read_key_values(text):
    pairs = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"config line {number}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        pairs[key.strip()] = value.strip()
    return pairs


def load_config_file(path, base=None):
    with open(path, encoding="utf-8") as fh:
        pairs = read_key_values(fh.read())
    return apply_overrides(base or Experiment(), pairs)


def apply_overrides(experiment, pairs):
    model, train = parse_overrides(pairs)
    return Experiment(replace(experiment.model, **model), replace(experiment.train, **train))


def to_key_values(experiment):
    """Flat text with one ``key=value`` per line: model keys, then training keys."""
    lines = []
    for section in (experiment.model, experiment.train):
        for key, value in asdict(section).items():
            lines.append(f"{key}={_format_value(value)}")
    return "\n".join(lines) + "\n"
