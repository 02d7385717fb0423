"""Character-level encoder-decoder normalization with source context and segment-level LM fusion."""

__version__ = "0.1.0"

from .errors import ConfigurationError, CorpusFormatError, InputError  # noqa: E402
from .seq2seq import VARIANTS, ModelConfig, Seq2SeqModel, TrainingExample  # noqa: E402

__all__ = [
    "VARIANTS",
    "ConfigurationError",
    "CorpusFormatError",
    "InputError",
    "ModelConfig",
    "Seq2SeqModel",
    "TrainingExample",
    "__version__",
]
