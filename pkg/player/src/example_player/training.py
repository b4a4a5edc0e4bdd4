"""Seeded training runs over grid-lab datasets.

Splits are drawn over scenes (not questions) so held-out accuracy measures
generalization to object configurations the model never saw, in the style of
the X% train-split sweeps.
"""

from dataclasses import dataclass

import numpy as np

from .data import build_vocab, encode_question, encode_scene, load_dataset
from .model import TinyModel


@dataclass(frozen=True)
class TrainResult:
    model: TinyModel
    train_accuracy: float
    test_accuracy: float
    majority_baseline: float
    n_train: int
    n_test: int
    losses: tuple


def scene_split(n_scenes: int, split_percent: float, seed: int, trial: int):
    if not 0 < split_percent < 100:
        raise ValueError("split_percent must lie strictly between 0 and 100")
    rng = np.random.default_rng((seed, trial))
    perm = rng.permutation(n_scenes)
    n_train = int(round(n_scenes * split_percent / 100.0))
    n_train = min(max(n_train, 1), n_scenes - 1)
    return set(perm[:n_train].tolist()), set(perm[n_train:].tolist())


def _tokenize(examples, vocab, model):
    scene_cache = {}
    toks, labels = [], []
    answer_ids = {a: i for i, a in enumerate(vocab.answers)}
    for ex in examples:
        if ex.scene_index not in scene_cache:
            scene_cache[ex.scene_index] = encode_scene(ex.scene, vocab)
        st = scene_cache[ex.scene_index]
        qt = encode_question(ex.question, vocab)
        toks.append(model.global_tokens(st[None], qt[None])[0])
        labels.append(answer_ids[ex.answer])
    return np.asarray(toks), np.asarray(labels)


def train_tiny(
    dataset_dir,
    split_percent: float = 90.0,
    trial: int = 0,
    seed: int = 0,
    epochs: int = 2,
    batch_size: int = 64,
    learning_rate: float = 0.05,
    embed_dim: int = 4,
    hidden: int = 16,
) -> TrainResult:
    examples, _ = load_dataset(dataset_dir)
    vocab = build_vocab(examples)
    n_scenes = max(ex.scene_index for ex in examples) + 1
    train_scenes, test_scenes = scene_split(n_scenes, split_percent, seed, trial)
    train_ex = [ex for ex in examples if ex.scene_index in train_scenes]
    test_ex = [ex for ex in examples if ex.scene_index in test_scenes]
    if not train_ex or not test_ex:
        raise ValueError("split left an empty train or test side")

    model = TinyModel.init(vocab, embed_dim=embed_dim, hidden=hidden, seed=seed)
    train_tokens, train_labels = _tokenize(train_ex, vocab, model)
    test_tokens, test_labels = _tokenize(test_ex, vocab, model)

    rng = np.random.default_rng((seed, trial, 1))
    losses = []
    for _ in range(epochs):
        order = rng.permutation(len(train_ex))
        epoch_loss = 0.0
        for start in range(0, len(order), batch_size):
            idx = order[start:start + batch_size]
            epoch_loss += model.train_step(train_tokens[idx], train_labels[idx], learning_rate) * len(idx)
        losses.append(epoch_loss / len(order))

    counts = np.bincount(test_labels, minlength=len(vocab.answers))
    return TrainResult(
        model=model,
        train_accuracy=model.accuracy(train_tokens, train_labels),
        test_accuracy=model.accuracy(test_tokens, test_labels),
        majority_baseline=float(counts.max() / counts.sum()),
        n_train=len(train_ex),
        n_test=len(test_ex),
        losses=tuple(losses),
    )
