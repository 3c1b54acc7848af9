"""Real-model scorer adapters (optional; require the ``models`` extra).

Checkpoints are picked by family, not pinned: an entailment classifier
for semantic frames, a text2text QA model answering yes/no per sentence
for discourse, and a contextual-embedding precision matcher for content
verifiability.  All imports are lazy so stub mode never touches them.
"""

from __future__ import annotations

from .scorers import sentences


class EntailmentConsistencyScorer:
    """Probability that the summary is entailed by the document."""

    def __init__(self, checkpoint: str, device: str = "cpu", max_length: int = 512):
        from transformers import AutoModelForSequenceClassification, AutoTokenizer

        self._tokenizer = AutoTokenizer.from_pretrained(checkpoint)
        self._model = AutoModelForSequenceClassification.from_pretrained(checkpoint)
        self._model.eval().to(device)
        self._device = device
        self._max_length = max_length

    def score(self, document: str, summary: str) -> float:
        import torch

        inputs = self._tokenizer(
            summary, document, truncation=True, max_length=self._max_length,
            return_tensors="pt",
        ).to(self._device)
        with torch.no_grad():
            logits = self._model(**inputs).logits[0]
        probs = torch.softmax(logits, dim=-1)
        # entailment-class index is a model detail; by convention binary
        # consistency heads put "consistent" last, NLI heads first
        index = self._model.config.num_labels - 1 if self._model.config.num_labels == 2 else 0
        return float(probs[index])


class QAYesProbabilityScorer:
    """Per-sentence probability of the model answering yes, averaged."""

    QUESTION = 'question: Is this claim consistent with the document? claim: {claim} document: {document}'

    def __init__(self, checkpoint: str, device: str = "cpu", max_length: int = 1024):
        from transformers import AutoModelForSeq2SeqLM, AutoTokenizer

        self._tokenizer = AutoTokenizer.from_pretrained(checkpoint)
        self._model = AutoModelForSeq2SeqLM.from_pretrained(checkpoint)
        self._model.eval().to(device)
        self._device = device
        self._max_length = max_length
        self._yes_id = self._tokenizer("Yes").input_ids[0]
        self._no_id = self._tokenizer("No").input_ids[0]

    def _yes_probability(self, document: str, claim: str) -> float:
        import torch

        prompt = self.QUESTION.format(claim=claim, document=document)
        inputs = self._tokenizer(
            prompt, truncation=True, max_length=self._max_length, return_tensors="pt"
        ).to(self._device)
        decoder_start = torch.tensor([[self._model.config.decoder_start_token_id]])
        with torch.no_grad():
            logits = self._model(
                **inputs, decoder_input_ids=decoder_start.to(self._device)
            ).logits[0, -1]
        pair = torch.softmax(logits[[self._yes_id, self._no_id]], dim=-1)
        return float(pair[0])

    def score(self, document: str, summary: str) -> float:
        parts = sentences(summary) or [summary]
        # multi-sentence summaries average per-sentence probabilities
        return sum(self._yes_probability(document, s) for s in parts) / len(parts)


class TokenPrecisionScorer:
    """Greedy contextual-embedding precision of summary tokens vs the document."""

    def __init__(self, checkpoint: str, device: str = "cpu", max_length: int = 512):
        from transformers import AutoModel, AutoTokenizer

        self._tokenizer = AutoTokenizer.from_pretrained(checkpoint)
        self._model = AutoModel.from_pretrained(checkpoint)
        self._model.eval().to(device)
        self._device = device
        self._max_length = max_length

    def _embed(self, text: str):
        import torch

        inputs = self._tokenizer(
            text, truncation=True, max_length=self._max_length, return_tensors="pt"
        ).to(self._device)
        with torch.no_grad():
            hidden = self._model(**inputs).last_hidden_state[0]
        return torch.nn.functional.normalize(hidden, dim=-1)

    def score(self, document: str, summary: str) -> float:
        doc_emb = self._embed(document)
        sum_emb = self._embed(summary)
        similarity = sum_emb @ doc_emb.T
        # precision: each summary token's best match in the document
        return float(similarity.max(dim=1).values.mean())
