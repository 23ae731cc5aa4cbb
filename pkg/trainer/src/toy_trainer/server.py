"""Suspect-model HTTP server for a trained checkpoint.

Wire protocol: POST /respond with {"prompt": "<string>"} returns 200
{"response": "<string>"}; malformed requests get 400 with {"error": ...}.
Sampling is greedy at temperature 0 (the default); a positive
temperature samples from the softmax with a per-prompt deterministic
seed so benches are reproducible.
"""

from __future__ import annotations

import hashlib
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import torch

from .model import CondSeqModel, generate


class _Handler(BaseHTTPRequestHandler):
    model: CondSeqModel = None
    temperature: float = 0.0
    seed: int = 0

    def log_message(self, fmt, *args):
        pass

    def _send(self, code, payload):
        body = json.dumps(payload).encode("utf-8")
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_POST(self):
        if self.path != "/respond":
            self._send(404, {"error": "not found"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            body = json.loads(self.rfile.read(length))
            prompt = body["prompt"]
            if not isinstance(prompt, str) or not prompt:
                raise ValueError("prompt must be a non-empty string")
        except (ValueError, KeyError, json.JSONDecodeError) as exc:
            self._send(400, {"error": str(exc)})
            return
        rng = None
        if self.temperature > 0:
            material = f"{self.seed}|{prompt}".encode("utf-8")
            rng = torch.Generator().manual_seed(
                int.from_bytes(hashlib.sha256(material).digest()[:8], "big")
            )
        try:
            response = generate(self.model, prompt, temperature=self.temperature, rng=rng)
        except ValueError as exc:  # out-of-vocabulary prompt characters etc.
            self._send(400, {"error": str(exc)})
            return
        self._send(200, {"response": response})


class SuspectServer:
    def __init__(self, model: CondSeqModel, host="127.0.0.1", port=0,
                 temperature: float = 0.0, seed: int = 0):
        handler = type(
            "BoundHandler", (_Handler,),
            {"model": model, "temperature": temperature, "seed": seed},
        )
        self._httpd = ThreadingHTTPServer((host, port), handler)
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)

    @property
    def address(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def start(self):
        self._thread.start()
        return self

    def serve_forever(self):
        self._thread.start()
        self._thread.join()

    def stop(self):
        self._httpd.shutdown()
        self._httpd.server_close()


def serve(model: CondSeqModel, host="127.0.0.1", port=8200,
          temperature: float = 0.0, seed: int = 0) -> SuspectServer:
    return SuspectServer(model, host=host, port=port,
                         temperature=temperature, seed=seed).start()
