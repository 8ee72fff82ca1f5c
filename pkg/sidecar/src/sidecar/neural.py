"""Transformer-backed similarity and perplexity.

Checkpoints are pinned here and loaded once at startup. Synthesis has no
small pinnable checkpoint, so this backend keeps the builtin synthesizer
and reports that in /healthz. Loading needs the weights on disk or a
reachable hub; construction fails fast otherwise so the service never
starts half-ready.
"""

from __future__ import annotations

import threading

from .lite import LiteTts

STS_CHECKPOINT = "distilbert-base-uncased"
PPL_CHECKPOINT = "distilgpt2"


class NeuralSts:
    """Greedy token-matching F1 over contextual embeddings, the usual
    BERTScore recipe without idf weighting or baseline rescaling."""

    def __init__(self, checkpoint: str = STS_CHECKPOINT, cpu: bool = True):
        import torch
        from transformers import AutoModel, AutoTokenizer

        self.model_name = checkpoint
        self._torch = torch
        self._tok = AutoTokenizer.from_pretrained(checkpoint)
        self._model = AutoModel.from_pretrained(checkpoint)
        self._model.eval()
        self._device = "cpu" if cpu or not torch.cuda.is_available() else "cuda"
        self._model.to(self._device)
        self._lock = threading.Lock()

    def _embed(self, text: str):
        torch = self._torch
        enc = self._tok(text, return_tensors="pt", truncation=True,
                        max_length=256).to(self._device)
        with torch.no_grad():
            out = self._model(**enc).last_hidden_state[0]
        mask = enc["attention_mask"][0].bool()
        emb = out[mask][1:-1]  # drop [CLS] and [SEP]
        if emb.shape[0] == 0:
            emb = out[mask]
        return torch.nn.functional.normalize(emb, dim=-1)

    def score(self, candidate: str, reference: str) -> float:
        if not candidate.strip() or not reference.strip():
            raise ValueError("empty text")
        with self._lock:
            cand = self._embed(candidate)
            ref = self._embed(reference)
            sim = cand @ ref.T
            precision = float(sim.max(dim=1).values.mean())
            recall = float(sim.max(dim=0).values.mean())
        if precision + recall == 0.0:
            return 0.0
        f1 = 2.0 * precision * recall / (precision + recall)
        return min(1.0, max(0.0, f1))


class NeuralPpl:
    def __init__(self, checkpoint: str = PPL_CHECKPOINT, cpu: bool = True):
        import torch
        from transformers import AutoModelForCausalLM, AutoTokenizer

        self.model_name = checkpoint
        self._torch = torch
        self._tok = AutoTokenizer.from_pretrained(checkpoint)
        self._model = AutoModelForCausalLM.from_pretrained(checkpoint)
        self._model.eval()
        self._device = "cpu" if cpu or not torch.cuda.is_available() else "cuda"
        self._model.to(self._device)
        self._lock = threading.Lock()

    def score(self, text: str) -> float:
        if not text.strip():
            raise ValueError("empty text")
        torch = self._torch
        enc = self._tok(text, return_tensors="pt", truncation=True,
                        max_length=512).to(self._device)
        if enc["input_ids"].shape[1] < 2:
            raise ValueError("text too short to score")
        with self._lock, torch.no_grad():
            out = self._model(**enc, labels=enc["input_ids"])
        return float(torch.exp(out.loss))


class NeuralBackend:
    name = "neural"

    def __init__(self, cpu: bool = True):
        self.tts = LiteTts()  # no pinned synthesis checkpoint, see module doc
        self.sts = NeuralSts(cpu=cpu)
        self.ppl = NeuralPpl(cpu=cpu)
