"""Per-token pseudo-log-likelihoods from a masked language model.

For a text of n tokens, the model runs n masked forward passes (batched):
pass i masks token i and reads log P(t_i | rest) at that position. Special
and boundary tokens frame the input but are never masked, scored, or
returned, so the caller's token count matches the returned lists.

Texts longer than the limit are truncated to exactly ``max_len`` scored
tokens and flagged. With ``option_delimiter`` set, only the tokens after
the delimiter's last occurrence are scored (the full text still conditions
every prediction); by default the whole sequence is scored.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import torch
from transformers import AutoModelForMaskedLM, AutoTokenizer


@dataclass
class SidecarConfig:
    model: str
    device: str = "cpu"
    max_len: int = 128
    batch_size: int = 16
    option_delimiter: Optional[str] = None

    def __post_init__(self) -> None:
        if self.max_len < 2:
            raise ValueError(f"max_len {self.max_len} must be >= 2")
        if self.batch_size < 1:
            raise ValueError(f"batch_size {self.batch_size} must be >= 1")


@dataclass(frozen=True)
class ScoredText:
    tokens: tuple[str, ...]
    logprobs: tuple[float, ...]
    truncated: bool


class MaskedLMScorer:
    def __init__(self, config: SidecarConfig):
        self.config = config
        self.tokenizer = AutoTokenizer.from_pretrained(config.model)
        self.model = AutoModelForMaskedLM.from_pretrained(config.model)
        self.model.to(config.device)
        self.model.eval()
        if self.tokenizer.mask_token_id is None:
            raise ValueError(f"{config.model} has no mask token; not a masked LM")

    def _encode(self, text: str) -> tuple[list[int], int]:
        """Token ids without specials, plus the index scoring starts at."""
        delimiter = self.config.option_delimiter
        if delimiter and delimiter in text:
            cut = text.rindex(delimiter) + len(delimiter)
            prefix_ids = self.tokenizer.encode(text[:cut], add_special_tokens=False)
            option_ids = self.tokenizer.encode(text[cut:], add_special_tokens=False)
            return prefix_ids + option_ids, len(prefix_ids)
        return self.tokenizer.encode(text, add_special_tokens=False), 0

    def score(self, text: str, max_len: Optional[int] = None) -> ScoredText:
        if not text.strip():
            raise ValueError("cannot score empty text")
        limit = min(max_len, self.config.max_len) if max_len else self.config.max_len
        if limit < 2:
            raise ValueError(f"effective max_len {limit} must be >= 2")

        ids, score_from = self._encode(text)
        if not ids:
            raise ValueError("text produced no tokens")
        truncated = len(ids) > limit
        ids = ids[:limit]
        score_from = min(score_from, len(ids) - 1)

        cls_id = self.tokenizer.cls_token_id
        sep_id = self.tokenizer.sep_token_id
        frame: list[int] = []
        if cls_id is not None:
            frame.append(cls_id)
        offset = len(frame)
        frame.extend(ids)
        if sep_id is not None:
            frame.append(sep_id)

        positions = list(range(score_from, len(ids)))
        logprobs: list[float] = []
        base = torch.tensor([frame], dtype=torch.long, device=self.config.device)
        with torch.no_grad():
            for start in range(0, len(positions), self.config.batch_size):
                chunk = positions[start : start + self.config.batch_size]
                batch = base.repeat(len(chunk), 1)
                for row, pos in enumerate(chunk):
                    batch[row, offset + pos] = self.tokenizer.mask_token_id
                logits = self.model(input_ids=batch).logits
                for row, pos in enumerate(chunk):
                    dist = torch.log_softmax(logits[row, offset + pos], dim=-1)
                    logprobs.append(min(dist[ids[pos]].item(), 0.0))

        tokens = self.tokenizer.convert_ids_to_tokens(ids[score_from:])
        return ScoredText(tokens=tuple(tokens), logprobs=tuple(logprobs), truncated=truncated)

    def vocab_probability_sum(self, text: str, position: int) -> float:
        """Sum of the model's probabilities over the vocabulary with
        ``position`` masked; sanity check that the output is a distribution."""
        ids, _ = self._encode(text)
        ids = ids[: self.config.max_len]
        if not 0 <= position < len(ids):
            raise ValueError(f"position {position} outside token range {len(ids)}")
        frame = [self.tokenizer.cls_token_id, *ids, self.tokenizer.sep_token_id]
        frame[1 + position] = self.tokenizer.mask_token_id
        with torch.no_grad():
            logits = self.model(input_ids=torch.tensor([frame], device=self.config.device)).logits
        return torch.softmax(logits[0, 1 + position], dim=-1).sum().item()
