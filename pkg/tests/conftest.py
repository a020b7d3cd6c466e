import json
from pathlib import Path

import pytest

from mixsent.corpus import Corpus, LabeledTweet, SentimentLabel
from mixsent.tokenizer import TokenizerConfig, Vocabulary

DATA_DIR = Path(__file__).parent / "data"


def make_corpus(labels, text_fn=None):
    """Corpus with one record per label; texts unique by default."""
    text_fn = text_fn or (lambda i, l: f"text {i}")
    return Corpus([
        LabeledTweet(id=str(i), text=text_fn(i, label), label=SentimentLabel(label))
        for i, label in enumerate(labels)
    ])


@pytest.fixture
def segment_vocab():
    """The 7-token fixture: specials + li / ##kh / ##na."""
    return Vocabulary.from_pieces(["li", "##kh", "##na"])


@pytest.fixture
def tok_cfg():
    return TokenizerConfig(max_len=16)


@pytest.fixture
def preprocess_golden():
    return json.loads((DATA_DIR / "preprocess_golden.json").read_text(encoding="utf-8"))
