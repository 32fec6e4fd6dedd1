from __future__ import annotations

import pytest
import torch
from transformers import BertConfig, BertForMaskedLM, BertTokenizer

from plm_scorer_sidecar import MaskedLMScorer, SidecarConfig

SPECIALS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
WORDS = [
    "the", "a", "an", "person", "personx", "persony", "arrive", "arrives",
    "at", "bar", "casino", "drink", "relax", "himself", "record", "sets",
    "new", "result", "as", "wanted", "to", "want", "take", "rest", "eat",
    "food", "play", "game", "games", "before", "needed", "because", "felt",
    "will", "others", "seen", "is", "what", "does", "do", "w", "q", "u",
    "tail", "opt", "concept", "notion", "##s", "##x", "##0", "##1", "##2",
    "##3", "##4", "##5", "##6", "##7", "##8", "##9", ",", ".", "?", "!",
]


@pytest.fixture(scope="session")
def tiny_checkpoint(tmp_path_factory) -> str:
    """A self-contained masked-LM checkpoint built offline: a WordPiece
    vocabulary plus a randomly initialized tiny BERT, saved to disk."""
    path = tmp_path_factory.mktemp("tiny-mlm")
    vocab = path / "vocab.txt"
    vocab.write_text("\n".join(SPECIALS + WORDS) + "\n", encoding="utf-8")
    tokenizer = BertTokenizer(str(vocab))
    torch.manual_seed(20240809)
    config = BertConfig(
        vocab_size=len(SPECIALS) + len(WORDS),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=200,
    )
    model = BertForMaskedLM(config)
    model.save_pretrained(str(path))
    tokenizer.save_pretrained(str(path))
    return str(path)


@pytest.fixture(scope="session")
def tiny_scorer(tiny_checkpoint) -> MaskedLMScorer:
    return MaskedLMScorer(SidecarConfig(model=tiny_checkpoint, max_len=128, batch_size=8))
