"""Black-box game against the example player over the wire protocol.

Trains the tiny external player on the bundled grid dataset, launches it as
a child process, drives a 100-round question/answer game through the
newline-delimited JSON protocol, and audits the transcript to show that no
ground-truth, program, or reward bytes ever crossed the boundary.
"""

import argparse
import subprocess
import sys
import tempfile
import time
from pathlib import Path

from scenegame.players import ExternalPlayerHandle, audit_transcript
from scenegame.programs import load_questions
from scenegame.scene import load_scenes


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dataset", default="data/grid-onehop-2obj")
    ap.add_argument("--rounds", type=int, default=100)
    ap.add_argument("--epochs", type=int, default=30)
    args = ap.parse_args()

    ckpt = Path(tempfile.mkdtemp()) / "player.npz"
    print("training the external player ...", flush=True)
    subprocess.run(
        [sys.executable, "-m", "example_player.cli", "train",
         "--dataset", args.dataset, "--checkpoint", str(ckpt),
         "--epochs", str(args.epochs)],
        check=True,
    )

    scenes = load_scenes(Path(args.dataset) / "scenes.json")
    questions = load_questions(Path(args.dataset) / "questions.json")
    transcript = []
    handle = ExternalPlayerHandle(
        command=[sys.executable, "-m", "example_player.cli", "serve",
                 "--checkpoint", str(ckpt)],
        transcript=transcript,
    )
    t0 = time.time()
    correct = 0
    for q in questions[: args.rounds]:
        answer = handle.answer(scenes[q.image_index], q.question)
        correct += str(answer) == q.answer
    print(f"{args.rounds} rounds in {time.time() - t0:.1f}s; "
          f"player answered {correct} correctly")
    problems = audit_transcript(transcript)
    print(f"transcript audit: {'clean' if not problems else problems}")


if __name__ == "__main__":
    main()
