"""Transformer backbone: fine-tune a local sequence-classification
checkpoint with AdamW and a linear learning-rate schedule.

Imports are deferred so the worker starts (and the stub keeps working)
without torch/transformers installed; a missing dependency or checkpoint
becomes a structured error response rather than a crash.
"""

from __future__ import annotations

from .protocol import PredictRequest, ProtocolError, TrainRequest, WireInstance

DEFAULT_LEARNING_RATE = 2e-5


def _import_torch():
    try:
        import torch
        from transformers import (
            AutoModelForSequenceClassification,
            AutoTokenizer,
            get_linear_schedule_with_warmup,
        )
    except ImportError as exc:
        raise ProtocolError(f"backbone load failure: {exc}") from None
    return torch, AutoModelForSequenceClassification, AutoTokenizer, get_linear_schedule_with_warmup


class HfBackbone:
    """Fine-tune `checkpoint` per train request; one model per model_dir."""

    name = "hf"

    def __init__(self, checkpoint: str, deterministic: bool = False) -> None:
        if not checkpoint:
            raise ProtocolError("hf backbone needs --checkpoint")
        self.checkpoint = checkpoint
        self.deterministic = deterministic
        self._truncated = 0

    def _encode(self, tokenizer, instances: tuple[WireInstance, ...]):
        texts = [inst.fused_text for inst in instances]
        limit = tokenizer.model_max_length
        untruncated = tokenizer(texts, truncation=False)["input_ids"]
        self._truncated += sum(1 for ids in untruncated if len(ids) > limit)
        return tokenizer(
            texts, truncation=True, padding=True, max_length=limit, return_tensors="pt"
        )

    def train(self, request: TrainRequest) -> dict:
        torch, model_cls, tokenizer_cls, linear_schedule = _import_torch()
        hp = request.hyperparameters
        if self.deterministic:
            torch.manual_seed(request.seed)
            torch.use_deterministic_algorithms(True, warn_only=True)
        try:
            tokenizer = tokenizer_cls.from_pretrained(self.checkpoint)
            model = model_cls.from_pretrained(self.checkpoint, num_labels=2)
        except Exception as exc:
            raise ProtocolError(f"backbone load failure: {exc}") from None

        self._truncated = 0
        encoded = self._encode(tokenizer, request.instances)
        labels = torch.tensor([int(inst.label) for inst in request.instances])
        dataset = torch.utils.data.TensorDataset(
            encoded["input_ids"], encoded["attention_mask"], labels
        )
        generator = torch.Generator().manual_seed(request.seed)
        loader = torch.utils.data.DataLoader(
            dataset, batch_size=hp.batch_size, shuffle=True, generator=generator
        )
        learning_rate = (
            hp.learning_rate if hp.learning_rate != 0.5 else DEFAULT_LEARNING_RATE
        )
        optimizer = torch.optim.AdamW(model.parameters(), lr=learning_rate)
        scheduler = linear_schedule(
            optimizer, num_warmup_steps=0,
            num_training_steps=len(loader) * hp.epochs,
        )

        best_metric, best_epoch, stale = float("-inf"), 1, 0
        for epoch in range(1, hp.epochs + 1):
            model.train()
            for input_ids, attention_mask, batch_labels in loader:
                optimizer.zero_grad()
                out = model(
                    input_ids=input_ids, attention_mask=attention_mask,
                    labels=batch_labels,
                )
                out.loss.backward()
                optimizer.step()
                scheduler.step()
            metric = self._evaluate(torch, model, tokenizer, request)
            if metric > best_metric:
                best_metric, best_epoch, stale = metric, epoch, 0
                model.save_pretrained(request.model_dir)
                tokenizer.save_pretrained(request.model_dir)
            else:
                stale += 1
                if stale > hp.early_stopping_patience:
                    break
        return {
            "best_epoch": best_epoch,
            "validation_metric": best_metric,
            "truncated": self._truncated,
        }

    def _evaluate(self, torch, model, tokenizer, request: TrainRequest) -> float:
        held_out = request.validation or request.instances
        encoded = self._encode(tokenizer, held_out)
        labels = [bool(inst.label) for inst in held_out]
        model.eval()
        with torch.no_grad():
            logits = model(
                input_ids=encoded["input_ids"],
                attention_mask=encoded["attention_mask"],
            ).logits
        predicted = logits.argmax(dim=-1).tolist()
        hits = [(p == 1) == l for p, l in zip(predicted, labels)]
        if all(labels) or not any(labels):
            return sum(hits) / len(hits)
        tpr = sum(h for h, l in zip(hits, labels) if l) / sum(labels)
        tnr = sum(h for h, l in zip(hits, labels) if not l) / (len(labels) - sum(labels))
        return (tpr + tnr) / 2.0

    def predict(self, request: PredictRequest) -> list[dict]:
        torch, model_cls, tokenizer_cls, _ = _import_torch()
        try:
            tokenizer = tokenizer_cls.from_pretrained(request.model_dir)
            model = model_cls.from_pretrained(request.model_dir)
        except Exception:
            raise ProtocolError(f"model not found: {request.model_dir}") from None
        encoded = self._encode(tokenizer, request.instances)
        model.eval()
        with torch.no_grad():
            logits = model(
                input_ids=encoded["input_ids"],
                attention_mask=encoded["attention_mask"],
            ).logits
            scores = torch.softmax(logits, dim=-1)[:, 1].tolist()
        return [
            {"id": inst.id, "label": score >= 0.5, "score": float(score)}
            for inst, score in zip(request.instances, scores)
        ]
