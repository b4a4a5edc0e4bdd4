"""The adversarial player's trainable brain.

A small token encoder (embedding sum + masked mean pooling + feed-forward
trunk), an actor with ten object-specific heads emitting two N-bin categorical
distributions each, and a bounded critic. All math is float64 numpy with
hand-written gradients, so gradient checks run against the exact forward pass.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .scene import (
    Displacement,
    GridSpec,
    MAX_OBJECTS,
    OBJECT_SLOTS,
    PAD,
    TokenSequence,
)
from .scene import AttributeVocab, DEFAULT_VOCAB

CRITIC_SCALE = 1.2

# object slot kinds in token order
SLOT_KINDS = ("pos_x", "pos_y", "shape", "color", "size", "material")


@dataclass(frozen=True)
class PolicyConfig:
    n_bins: int = 7
    embed_dim: int = 32
    trunk_hidden: int = 64
    actor_hidden: int = 64
    critic_hidden: int = 64
    question_vocab: tuple[str, ...] = ()
    vocab: AttributeVocab = DEFAULT_VOCAB

    @property
    def unk_id(self) -> int:
        return len(self.question_vocab)

    def encode_question(self, words: Sequence[str]) -> tuple[int, ...]:
        index = {w: i for i, w in enumerate(self.question_vocab)}
        return tuple(index.get(w, self.unk_id) for w in words)


@dataclass
class PolicyParameters:
    config: PolicyConfig
    tensors: dict[str, np.ndarray]

    def copy(self) -> "PolicyParameters":
        return PolicyParameters(self.config, {k: v.copy() for k, v in self.tensors.items()})


def init_policy(config: PolicyConfig, seed: int = 0) -> PolicyParameters:
    """Uniform ±1/sqrt(fan_in) init; the final actor layer starts at zero so
    the initial head distributions are uniform."""
    rng = np.random.default_rng(seed)
    d, h = config.embed_dim, config.trunk_hidden
    ha, hc = config.actor_hidden, config.critic_hidden
    n = config.n_bins
    vocab = config.vocab

    def table(rows: int) -> np.ndarray:
        return rng.uniform(-1, 1, size=(rows, d)) / np.sqrt(d)

    def linear(fan_in: int, fan_out: int) -> tuple[np.ndarray, np.ndarray]:
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=(fan_in, fan_out)), np.zeros(fan_out)

    tensors: dict[str, np.ndarray] = {
        "emb_pos_x": table(n),
        "emb_pos_y": table(n),
        "emb_shape": table(len(vocab.shapes)),
        "emb_color": table(len(vocab.colors)),
        "emb_size": table(len(vocab.sizes)),
        "emb_material": table(len(vocab.materials)),
        "emb_question": table(len(config.question_vocab) + 1),
        "type_object": rng.uniform(-1, 1, size=d) / np.sqrt(d),
        "type_question": rng.uniform(-1, 1, size=d) / np.sqrt(d),
    }
    tensors["trunk_w1"], tensors["trunk_b1"] = linear(2 * d, h)
    tensors["trunk_w2"], tensors["trunk_b2"] = linear(h, h)
    tensors["actor_w"], tensors["actor_b"] = linear(h, ha)
    tensors["heads_w"] = np.zeros((MAX_OBJECTS, ha, 2 * n))
    tensors["heads_b"] = np.zeros((MAX_OBJECTS, 2 * n))
    tensors["critic_w1"], tensors["critic_b1"] = linear(h, hc)
    tensors["critic_w2"], tensors["critic_b2"] = linear(hc, hc)
    tensors["critic_w3"], tensors["critic_b3"] = linear(hc, 1)
    return PolicyParameters(config, tensors)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max()
    e = np.exp(shifted)
    return e / e.sum()


def _gather_tokens(config: PolicyConfig, tokens: TokenSequence):
    """Yield (table name, token id) for every non-pad token."""
    out = []
    for slot, value in enumerate(tokens.object_tokens):
        if value == PAD:
            continue
        out.append((f"emb_{SLOT_KINDS[slot % OBJECT_SLOTS]}", value, "object"))
    for value in tokens.question_tokens:
        if value == PAD:
            continue
        out.append(("emb_question", value, "question"))
    return out


@dataclass
class ForwardCache:
    tokens: TokenSequence
    entries: list            # (table, id, group)
    pooled: np.ndarray       # (2d,)
    n_obj_tokens: int
    n_q_tokens: int
    t1: np.ndarray
    t2: np.ndarray
    a1: np.ndarray
    logits: np.ndarray       # (10, 2N)
    dists: np.ndarray        # (10, 2, N)
    c1: np.ndarray
    c2: np.ndarray
    v_pre: float
    state_value: float


def forward(params: PolicyParameters, tokens: TokenSequence) -> ForwardCache:
    cfg = params.config
    t = params.tensors
    d = cfg.embed_dim
    entries = _gather_tokens(cfg, tokens)

    pooled_obj = np.zeros(d)
    pooled_q = np.zeros(d)
    n_obj = n_q = 0
    for table, idx, group in entries:
        if group == "object":
            pooled_obj += t[table][idx]
            n_obj += 1
        else:
            pooled_q += t[table][idx]
            n_q += 1
    if n_obj:
        pooled_obj = pooled_obj / n_obj + t["type_object"]
    if n_q:
        pooled_q = pooled_q / n_q + t["type_question"]
    pooled = np.concatenate([pooled_obj, pooled_q])

    t1 = np.maximum(pooled @ t["trunk_w1"] + t["trunk_b1"], 0.0)
    t2 = np.maximum(t1 @ t["trunk_w2"] + t["trunk_b2"], 0.0)

    a1 = np.maximum(t2 @ t["actor_w"] + t["actor_b"], 0.0)
    logits = a1 @ t["heads_w"] + t["heads_b"]  # (10, 2N)
    n = cfg.n_bins
    dists = np.empty((MAX_OBJECTS, 2, n))
    for head in range(MAX_OBJECTS):
        dists[head, 0] = _softmax(logits[head, :n])
        dists[head, 1] = _softmax(logits[head, n:])

    c1 = np.maximum(t2 @ t["critic_w1"] + t["critic_b1"], 0.0)
    c2 = np.maximum(c1 @ t["critic_w2"] + t["critic_b2"], 0.0)
    v_pre = float((c2 @ t["critic_w3"])[0] + t["critic_b3"][0])
    state_value = CRITIC_SCALE * float(np.tanh(v_pre))

    if not np.all(np.isfinite(dists)):
        raise FloatingPointError("non-finite actor distribution")
    if not np.isfinite(state_value):
        raise FloatingPointError("non-finite critic output")
    return ForwardCache(
        tokens=tokens,
        entries=entries,
        pooled=pooled,
        n_obj_tokens=n_obj,
        n_q_tokens=n_q,
        t1=t1,
        t2=t2,
        a1=a1,
        logits=logits,
        dists=dists,
        c1=c1,
        c2=c2,
        v_pre=v_pre,
        state_value=state_value,
    )


@dataclass(frozen=True)
class ActionSample:
    displacement: Displacement
    # sampled (x-bin, y-bin) per head; None marks a masked (∅-object) head
    choices: tuple[tuple[int, int] | None, ...]
    log_prob: float


def sample(
    cache: ForwardCache,
    rng: np.random.Generator,
    grid: GridSpec | None = None,
    head_assignment: Sequence[int] | None = None,
    n_active: int = MAX_OBJECTS,
) -> ActionSample:
    """Draw dx/dy independently per active head; log_prob sums every sampled
    categorical (two per head).

    Heads past ``n_active`` drive ∅ object slots; they are masked out of the
    sample and the log-probability so absent objects add no gradient noise.
    ``head_assignment`` maps head index to object id (identity by default);
    bin index c becomes the signed offset c - N//2.
    """
    n = cache.dists.shape[2]
    offset = n // 2
    choices: list[tuple[int, int] | None] = []
    log_prob = 0.0
    for head in range(MAX_OBJECTS):
        if head >= n_active:
            choices.append(None)
            continue
        cx = int(rng.choice(n, p=cache.dists[head, 0]))
        cy = int(rng.choice(n, p=cache.dists[head, 1]))
        log_prob += float(np.log(cache.dists[head, 0, cx]))
        log_prob += float(np.log(cache.dists[head, 1, cy]))
        choices.append((cx, cy))
    moves: list[tuple[int, int] | None] = [None] * MAX_OBJECTS
    for head, choice in enumerate(choices):
        if choice is None:
            continue
        cx, cy = choice
        obj = head_assignment[head] if head_assignment is not None else head
        moves[obj] = (cx - offset, cy - offset)
    return ActionSample(Displacement(tuple(moves)), tuple(choices), log_prob)


@dataclass(frozen=True)
class A2CBatch:
    rewards: tuple[float, ...]
    state_values: tuple[float, ...]
    log_probs: tuple[float, ...]

    def __post_init__(self) -> None:
        if not len(self.rewards) == len(self.state_values) == len(self.log_probs):
            raise ValueError("batch fields must have equal length")


def a2c_losses(batch: A2CBatch) -> tuple[float, float, float]:
    """(policy_loss, value_loss, total); advantage is a constant in the
    policy-loss gradient, rewards are constants in the value loss."""
    n = len(batch.rewards)
    if n == 0:
        raise ValueError("empty batch")
    r = np.asarray(batch.rewards)
    v = np.asarray(batch.state_values)
    lp = np.asarray(batch.log_probs)
    advantage = r - v
    policy_loss = float(np.sum(-lp * advantage))
    value_loss = float(np.sum((v - r) ** 2) / n)
    return policy_loss, value_loss, policy_loss + value_loss


def zero_grads(params: PolicyParameters) -> dict[str, np.ndarray]:
    return {k: np.zeros_like(v) for k, v in params.tensors.items()}


def accumulate_gradients(
    params: PolicyParameters,
    cache: ForwardCache,
    action: ActionSample,
    advantage: float,
    reward: float,
    batch_size: int,
    grads: dict[str, np.ndarray],
    entropy_coef: float = 0.0,
    detach_critic_trunk: bool = False,
) -> None:
    """Add one record's contribution to d(total loss)/d(params).

    total = -log_prob * advantage + (v - reward)^2 / batch_size
            - entropy_coef * sum of head entropies
    with ``advantage`` and ``reward`` held constant.
    """
    cfg = params.config
    t = params.tensors
    n = cfg.n_bins

    # actor branch: d loss / d logits (masked heads carry no gradient)
    dlogits = np.zeros_like(cache.logits)
    for head in range(MAX_OBJECTS):
        if action.choices[head] is None:
            continue
        cx, cy = action.choices[head]
        for axis, choice in ((0, cx), (1, cy)):
            p = cache.dists[head, axis]
            onehot = np.zeros(n)
            onehot[choice] = 1.0
            g = -advantage * (onehot - p)
            if entropy_coef:
                logp = np.log(p)
                entropy = -float(p @ logp)
                g += entropy_coef * p * (logp + entropy)
            dlogits[head, axis * n : (axis + 1) * n] += g

    grads["heads_w"] += cache.a1[:, None] * dlogits[:, None, :]
    grads["heads_b"] += dlogits
    da1 = np.einsum("hio,ho->i", t["heads_w"], dlogits)
    da1 *= cache.a1 > 0
    grads["actor_w"] += np.outer(cache.t2, da1)
    grads["actor_b"] += da1
    dt2 = t["actor_w"] @ da1

    # critic branch
    dv = 2.0 * (cache.state_value - reward) / batch_size
    dv_pre = dv * CRITIC_SCALE * (1.0 - np.tanh(cache.v_pre) ** 2)
    dc2 = (t["critic_w3"][:, 0] * dv_pre) * (cache.c2 > 0)
    grads["critic_w3"] += np.outer(cache.c2, [dv_pre])
    grads["critic_b3"] += dv_pre
    grads["critic_w2"] += np.outer(cache.c1, dc2)
    grads["critic_b2"] += dc2
    dc1 = (t["critic_w2"] @ dc2) * (cache.c1 > 0)
    grads["critic_w1"] += np.outer(cache.t2, dc1)
    grads["critic_b1"] += dc1
    if not detach_critic_trunk:
        dt2 = dt2 + t["critic_w1"] @ dc1

    # shared trunk
    dt2 = dt2 * (cache.t2 > 0)
    grads["trunk_w2"] += np.outer(cache.t1, dt2)
    grads["trunk_b2"] += dt2
    dt1 = (t["trunk_w2"] @ dt2) * (cache.t1 > 0)
    grads["trunk_w1"] += np.outer(cache.pooled, dt1)
    grads["trunk_b1"] += dt1
    dpooled = t["trunk_w1"] @ dt1

    d = cfg.embed_dim
    d_obj, d_q = dpooled[:d], dpooled[d:]
    if cache.n_obj_tokens:
        grads["type_object"] += d_obj
    if cache.n_q_tokens:
        grads["type_question"] += d_q
    for table, idx, group in cache.entries:
        if group == "object":
            grads[table][idx] += d_obj / cache.n_obj_tokens
        else:
            grads[table][idx] += d_q / cache.n_q_tokens


def gradient_step(
    params: PolicyParameters, grads: dict[str, np.ndarray], learning_rate: float
) -> None:
    """Plain gradient descent, in place; refuses non-finite gradients."""
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient in {name}")
    for name, g in grads.items():
        params.tensors[name] -= learning_rate * g


def batch_gradients(
    params: PolicyParameters,
    records: Sequence[tuple[ForwardCache, ActionSample, float]],
    entropy_coef: float = 0.0,
    detach_critic_trunk: bool = False,
) -> tuple[dict[str, np.ndarray], tuple[float, float, float]]:
    """Gradients and losses for a batch of (cache, action, reward) records."""
    if not records:
        raise ValueError("empty batch")
    grads = zero_grads(params)
    n = len(records)
    for cache, action, reward in records:
        advantage = reward - cache.state_value
        accumulate_gradients(
            params, cache, action, advantage, reward, n, grads,
            entropy_coef=entropy_coef, detach_critic_trunk=detach_critic_trunk,
        )
    batch = A2CBatch(
        rewards=tuple(r for _, _, r in records),
        state_values=tuple(c.state_value for c, _, _ in records),
        log_probs=tuple(a.log_prob for _, a, _ in records),
    )
    return grads, a2c_losses(batch)


def backward_and_step(
    params: PolicyParameters,
    records: Sequence[tuple[ForwardCache, ActionSample, float]],
    learning_rate: float,
    entropy_coef: float = 0.0,
    detach_critic_trunk: bool = False,
) -> tuple[float, float, float]:
    grads, losses = batch_gradients(
        params, records, entropy_coef=entropy_coef,
        detach_critic_trunk=detach_critic_trunk,
    )
    gradient_step(params, grads, learning_rate)
    return losses


def action_space_size(n_objects: int, grid: GridSpec) -> int:
    """(N^2)^k joint displacement configurations for k movable objects."""
    if not 1 <= n_objects <= MAX_OBJECTS:
        raise ValueError("n_objects must be in 1..10")
    return (grid.bins_per_axis ** 2) ** n_objects


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

def save_checkpoint(params: PolicyParameters, path: str | Path) -> None:
    path = Path(path)
    cfg = params.config
    meta = {
        "version": 1,
        "n_bins": cfg.n_bins,
        "embed_dim": cfg.embed_dim,
        "trunk_hidden": cfg.trunk_hidden,
        "actor_hidden": cfg.actor_hidden,
        "critic_hidden": cfg.critic_hidden,
        "question_vocab": list(cfg.question_vocab),
        "vocab": {
            "shapes": list(cfg.vocab.shapes),
            "colors": list(cfg.vocab.colors),
            "sizes": list(cfg.vocab.sizes),
            "materials": list(cfg.vocab.materials),
        },
    }
    np.savez(path, __meta__=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8),
             **params.tensors)


def load_checkpoint(path: str | Path) -> PolicyParameters:
    data = np.load(Path(path) if str(path).endswith(".npz") else str(path) + ".npz")
    meta = json.loads(bytes(data["__meta__"]).decode())
    if meta.get("version") != 1:
        raise ValueError(f"unsupported checkpoint version: {meta.get('version')}")
    vocab = AttributeVocab(
        shapes=tuple(meta["vocab"]["shapes"]),
        colors=tuple(meta["vocab"]["colors"]),
        sizes=tuple(meta["vocab"]["sizes"]),
        materials=tuple(meta["vocab"]["materials"]),
    )
    config = PolicyConfig(
        n_bins=meta["n_bins"],
        embed_dim=meta["embed_dim"],
        trunk_hidden=meta["trunk_hidden"],
        actor_hidden=meta["actor_hidden"],
        critic_hidden=meta["critic_hidden"],
        question_vocab=tuple(meta["question_vocab"]),
        vocab=vocab,
    )
    tensors = {k: data[k] for k in data.files if k != "__meta__"}
    return PolicyParameters(config, tensors)
