"""Request/response loop over newline-delimited JSON.

One request per line: {"round_id": ..., "question": [words], "scene": {...}};
one response per line: {"round_id": ..., "answer": "..."}. Malformed input
produces an error record instead of an answer and the loop continues, so a
misbehaving peer can never crash the player. A closed input stream ends the
loop cleanly.
"""

import json
import socketserver

from .model import TinyModel


def handle_line(line, model: TinyModel) -> dict:
    try:
        request = json.loads(line)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        return {"round_id": None, "error": f"unparseable request: {exc}"}
    if not isinstance(request, dict):
        return {"round_id": None, "error": "request is not an object"}
    round_id = request.get("round_id")
    try:
        question = request["question"]
        scene = request["scene"]
        if not isinstance(scene, dict) or not isinstance(question, (list, tuple)):
            raise TypeError("bad field types")
        answer = model.answer(scene, question)
    except Exception as exc:  # any bad payload shape; never crash the loop
        return {"round_id": round_id, "error": f"bad request: {exc}"}
    return {"round_id": round_id, "answer": answer}


def serve_stream(reader, writer, model: TinyModel) -> None:
    for line in reader:
        if not line.strip():
            continue
        response = handle_line(line, model)
        writer.write((json.dumps(response, separators=(",", ":")) + "\n").encode())
        writer.flush()


def serve_stdio(model: TinyModel) -> None:
    import sys

    serve_stream(sys.stdin.buffer, sys.stdout.buffer, model)


def serve_tcp(model: TinyModel, host: str, port: int) -> None:
    class Handler(socketserver.StreamRequestHandler):
        def handle(self):
            serve_stream(self.rfile, self.wfile, model)

    with socketserver.TCPServer((host, port), Handler) as server:
        server.serve_forever()
