"""Tiny feed-forward answer classifier over the 110-slot token input.

One shared embedding matrix holds every token family (object attributes,
coordinate bins, question words) at distinct row offsets; the concatenated
embeddings feed a single tanh hidden layer and a softmax over the answer
vocabulary. Everything is float64 numpy with hand-written gradients, so
inference is bit-deterministic given a checkpoint.
"""

import json
from dataclasses import dataclass

import numpy as np

from .data import (
    BINS,
    MAX_OBJECTS,
    OBJECT_FIELDS,
    QUESTION_SLOTS,
    Vocab,
    encode_example,
)

N_SLOTS = MAX_OBJECTS * 6 + QUESTION_SLOTS


def _family_sizes(vocab: Vocab) -> list[int]:
    sizes = [len(vocab.fields[f]) + 1 for f in OBJECT_FIELDS]
    sizes += [BINS + 1, BINS + 1]          # x-bin, y-bin
    sizes.append(len(vocab.words) + 2)     # pad + unk + words
    return sizes


def _offsets(sizes) -> np.ndarray:
    return np.concatenate(([0], np.cumsum(sizes)[:-1]))


@dataclass
class TinyModel:
    vocab: Vocab
    embed: np.ndarray   # (total_tokens, embed_dim)
    w1: np.ndarray      # (N_SLOTS*embed_dim, hidden)
    b1: np.ndarray
    w2: np.ndarray      # (hidden, n_answers)
    b2: np.ndarray

    @classmethod
    def init(cls, vocab: Vocab, embed_dim: int = 8, hidden: int = 48, seed: int = 0):
        rng = np.random.default_rng(seed)
        sizes = _family_sizes(vocab)
        total = int(sum(sizes))
        flat = N_SLOTS * embed_dim
        scale = lambda fan_in: 1.0 / np.sqrt(fan_in)
        return cls(
            vocab=vocab,
            embed=rng.uniform(-0.5, 0.5, (total, embed_dim)),
            w1=rng.uniform(-scale(flat), scale(flat), (flat, hidden)),
            b1=np.zeros(hidden),
            w2=rng.uniform(-scale(hidden), scale(hidden), (hidden, len(vocab.answers))),
            b2=np.zeros(len(vocab.answers)),
        )

    # ----------------------------------------------------------------- tokens

    def global_tokens(self, scene_tokens: np.ndarray, question_tokens: np.ndarray) -> np.ndarray:
        """Map per-family local ids to rows of the shared embedding matrix."""
        sizes = _family_sizes(self.vocab)
        off = _offsets(sizes)
        parts = [scene_tokens[..., j] + off[j] for j in range(6)]
        obj = np.stack(parts, axis=-1).reshape(*scene_tokens.shape[:-2], MAX_OBJECTS * 6)
        words = question_tokens + off[6]
        return np.concatenate([obj, words], axis=-1)

    def encode(self, scene: dict, question) -> np.ndarray:
        st, qt = encode_example(scene, question, self.vocab)
        return self.global_tokens(st[None], qt[None])[0]

    # ---------------------------------------------------------------- forward

    def logits(self, tokens: np.ndarray) -> np.ndarray:
        x = self.embed[tokens].reshape(tokens.shape[0], -1)
        h = np.tanh(x @ self.w1 + self.b1)
        return h @ self.w2 + self.b2

    def answer(self, scene: dict, question) -> str:
        tokens = self.encode(scene, question)[None]
        return self.vocab.answers[int(np.argmax(self.logits(tokens)[0]))]

    def accuracy(self, tokens: np.ndarray, labels: np.ndarray) -> float:
        pred = np.argmax(self.logits(tokens), axis=1)
        return float(np.mean(pred == labels))

    # --------------------------------------------------------------- training

    def train_step(self, tokens: np.ndarray, labels: np.ndarray, lr: float) -> float:
        """One cross-entropy SGD step on a minibatch; returns the mean loss."""
        n = tokens.shape[0]
        x = self.embed[tokens].reshape(n, -1)
        h = np.tanh(x @ self.w1 + self.b1)
        logits = h @ self.w2 + self.b2
        shifted = logits - logits.max(axis=1, keepdims=True)
        log_z = np.log(np.exp(shifted).sum(axis=1))
        loss = float(np.mean(log_z - shifted[np.arange(n), labels]))

        probs = np.exp(shifted) / np.exp(shifted).sum(axis=1, keepdims=True)
        dlogits = probs
        dlogits[np.arange(n), labels] -= 1.0
        dlogits /= n
        dw2 = h.T @ dlogits
        db2 = dlogits.sum(axis=0)
        dh = dlogits @ self.w2.T
        dpre = dh * (1.0 - h * h)
        dw1 = x.T @ dpre
        db1 = dpre.sum(axis=0)
        dx = (dpre @ self.w1.T).reshape(n, N_SLOTS, -1)
        self.w2 -= lr * dw2
        self.b2 -= lr * db2
        self.w1 -= lr * dw1
        self.b1 -= lr * db1
        np.add.at(self.embed, tokens, -lr * dx)
        return loss

    # ------------------------------------------------------------ checkpoints

    def save(self, path) -> None:
        meta = json.dumps({"vocab": self.vocab.to_json()})
        np.savez(
            path, embed=self.embed, w1=self.w1, b1=self.b1,
            w2=self.w2, b2=self.b2, meta=np.frombuffer(meta.encode(), dtype=np.uint8),
        )

    @classmethod
    def load(cls, path) -> "TinyModel":
        with np.load(path) as z:
            meta = json.loads(z["meta"].tobytes().decode())
            return cls(
                vocab=Vocab.from_json(meta["vocab"]),
                embed=z["embed"], w1=z["w1"], b1=z["b1"], w2=z["w2"], b2=z["b2"],
            )
