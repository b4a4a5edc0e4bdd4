"""Reference external Visual-QA player: a tiny trainable scene-token
classifier that speaks the newline-delimited JSON protocol."""

from .data import Vocab, build_vocab, load_dataset
from .model import TinyModel
from .serving import handle_line, serve_stdio, serve_tcp
from .training import TrainResult, scene_split, train_tiny

__all__ = [
    "Vocab",
    "build_vocab",
    "load_dataset",
    "TinyModel",
    "handle_line",
    "serve_stdio",
    "serve_tcp",
    "TrainResult",
    "scene_split",
    "train_tiny",
]
