"""mixsent: three-class sentiment classification for code-mixed
(Hinglish-style) social-media text.

Library layout mirrors the pipeline: corpus -> preprocess -> tokenizer /
features -> baselines / transformer -> metrics, with a CLI front end.
"""

__version__ = "0.1.0"

from .corpus import Corpus, LabeledTweet, SentimentLabel, SplitSpec  # noqa: F401
from .errors import InputError, MixsentError, TrainingError  # noqa: F401
