"""Registration authority: owner records, key issuance, challenge burning.

State is an append-only JSONL log replayed at startup; every mutation is
flushed and fsynced before its effect is visible to callers, so a crash
between burning challenge ids and returning them can never reissue an id.
Raw keys are returned exactly once and only their SHA-256 digest is kept.
"""

from __future__ import annotations

import hashlib
import io
import json
import os
import threading
import time
from dataclasses import asdict, dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .encoder import EncoderConfig, Plaintext
from .keymat import SecretKey, sample_key
from .rs_codec import RsParams


class RegistryError(RuntimeError):
    pass


class DuplicateOwnerError(RegistryError):
    pass


class DatasetExhaustedError(RegistryError):
    pass


@dataclass
class FingerprintRecord:
    owner_id: str
    key_digest: str
    encoder_config: EncoderConfig
    rs_params: RsParams
    dataset_id: str
    used_challenge_ids: set = field(default_factory=set)
    created_at: float = 0.0


@dataclass(frozen=True)
class ChallengeSet:
    dataset_id: str
    items: tuple  # of (id, Plaintext)

    def __post_init__(self):
        ids = [i for i, _ in self.items]
        if len(ids) != len(set(ids)):
            raise ValueError("challenge ids must be unique within a dataset")


def load_challenge_set(dataset_id: str, path, max_bytes: int = 512) -> ChallengeSet:
    items = []
    for i, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines()):
        line = line.strip()
        if not line:
            continue
        raw = line.encode("utf-8")[:max_bytes]
        items.append((i, Plaintext(raw.decode("utf-8", errors="ignore"))))
    if not items:
        raise ValueError(f"empty dataset file: {path}")
    return ChallengeSet(dataset_id=dataset_id, items=tuple(items))


class RegistryStore:
    """Crash-safe owner/challenge store over a single append-only log."""

    def __init__(self, log_path, entropy=None):
        self._path = Path(log_path)
        self._entropy = entropy
        self._lock = threading.Lock()
        self._records: dict[str, FingerprintRecord] = {}
        self._datasets: dict[str, ChallengeSet] = {}
        self._replay()
        self._log = open(self._path, "a", encoding="utf-8")

    def _replay(self):
        if not self._path.exists():
            return
        with open(self._path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                self._apply(json.loads(line))

    def _apply(self, event: dict):
        kind = event["event"]
        if kind == "dataset":
            items = tuple((i, Plaintext(t)) for i, t in event["items"])
            self._datasets[event["dataset_id"]] = ChallengeSet(
                dataset_id=event["dataset_id"], items=items
            )
        elif kind == "register":
            self._records[event["owner_id"]] = FingerprintRecord(
                owner_id=event["owner_id"],
                key_digest=event["key_digest"],
                encoder_config=EncoderConfig(**event["encoder_config"]),
                rs_params=RsParams(**event["rs_params"]),
                dataset_id=event["dataset_id"],
                created_at=event["created_at"],
            )
        elif kind == "burn":
            self._records[event["owner_id"]].used_challenge_ids.update(event["ids"])
        else:
            raise RegistryError(f"unknown log event {kind!r}")

    def _append(self, event: dict):
        self._log.write(json.dumps(event, sort_keys=True) + "\n")
        self._log.flush()
        os.fsync(self._log.fileno())

    def _entropy_source(self):
        if self._entropy is not None:
            return self._entropy
        return io.BytesIO(os.urandom(64))

    def add_dataset(self, dataset_id: str, challenge_set: ChallengeSet):
        with self._lock:
            if dataset_id in self._datasets:
                raise RegistryError(f"dataset {dataset_id!r} already loaded")
            self._append(
                {
                    "event": "dataset",
                    "dataset_id": dataset_id,
                    "items": [[i, pt.text] for i, pt in challenge_set.items],
                }
            )
            self._apply(
                {
                    "event": "dataset",
                    "dataset_id": dataset_id,
                    "items": [[i, pt.text] for i, pt in challenge_set.items],
                }
            )

    def register_owner(
        self,
        owner_id: str,
        encoder_config: EncoderConfig,
        rs_params: RsParams,
        dataset_id: str,
        key_length: int = 32,
    ):
        with self._lock:
            if owner_id in self._records:
                raise DuplicateOwnerError(f"owner {owner_id!r} already registered")
            if dataset_id not in self._datasets:
                raise RegistryError(f"unknown dataset {dataset_id!r}")
            key = sample_key(self._entropy_source(), key_length)
            digest = hashlib.sha256(key.key_bytes()).hexdigest()
            event = {
                "event": "register",
                "owner_id": owner_id,
                "key_digest": digest,
                "encoder_config": asdict(encoder_config),
                "rs_params": {"n_code": rs_params.n_code, "k_msg": rs_params.k_msg},
                "dataset_id": dataset_id,
                "created_at": time.time(),
            }
            self._append(event)
            self._apply(event)
            return key, self._records[owner_id]

    def next_challenges(self, owner_id: str, count: int, _crash_after_burn: bool = False):
        """Issue `count` fresh challenges; burned ids are logged before the
        items are returned, so reuse is impossible even across crashes."""
        if count < 1:
            raise ValueError("count must be >= 1")
        with self._lock:
            record = self._records.get(owner_id)
            if record is None:
                raise RegistryError(f"unknown owner {owner_id!r}")
            dataset = self._datasets[record.dataset_id]
            unused = [
                (i, pt) for i, pt in dataset.items if i not in record.used_challenge_ids
            ]
            if len(unused) < count:
                raise DatasetExhaustedError(
                    f"{len(unused)} challenges left, {count} requested; enlarge the dataset"
                )
            issued = unused[:count]
            self._append({"event": "burn", "owner_id": owner_id, "ids": [i for i, _ in issued]})
            if _crash_after_burn:  # fault-injection hook for the recovery test
                raise RuntimeError("simulated crash after burn record")
            record.used_challenge_ids.update(i for i, _ in issued)
            return issued

    def record(self, owner_id: str) -> FingerprintRecord:
        with self._lock:
            rec = self._records.get(owner_id)
            if rec is None:
                raise RegistryError(f"unknown owner {owner_id!r}")
            return rec

    def close(self):
        self._log.close()


class _Handler(BaseHTTPRequestHandler):
    store: RegistryStore = None

    def log_message(self, fmt, *args):
        pass

    def _send(self, code: int, payload: dict):
        body = json.dumps(payload).encode("utf-8")
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _read_json(self) -> dict:
        length = int(self.headers.get("Content-Length", "0"))
        return json.loads(self.rfile.read(length).decode("utf-8")) if length else {}

    def do_GET(self):
        if self.path == "/health":
            self._send(200, {"status": "ok"})
            return
        if self.path.startswith("/record/"):
            owner_id = self.path[len("/record/") :]
            try:
                rec = self.store.record(owner_id)
            except RegistryError as exc:
                self._send(404, {"error": str(exc)})
                return
            self._send(
                200,
                {
                    "owner_id": rec.owner_id,
                    "key_digest": rec.key_digest,
                    "encoder_config": asdict(rec.encoder_config),
                    "rs_params": {
                        "n_code": rec.rs_params.n_code,
                        "k_msg": rec.rs_params.k_msg,
                    },
                    "dataset_id": rec.dataset_id,
                    "used_challenge_ids": sorted(rec.used_challenge_ids),
                    "created_at": rec.created_at,
                },
            )
            return
        self._send(404, {"error": "not found"})

    def do_POST(self):
        try:
            body = self._read_json()
        except json.JSONDecodeError:
            self._send(400, {"error": "malformed JSON"})
            return
        try:
            if self.path == "/register":
                key, rec = self.store.register_owner(
                    owner_id=body["owner_id"],
                    encoder_config=EncoderConfig(**body.get("encoder_config", {})),
                    rs_params=RsParams(**body.get("rs_params", {})),
                    dataset_id=body["dataset_id"],
                    key_length=body.get("key_length", 32),
                )
                self._send(
                    200,
                    {
                        "owner_id": rec.owner_id,
                        "secret_key": key.hex_digits,
                        "key_digest": rec.key_digest,
                    },
                )
            elif self.path == "/challenges/next":
                issued = self.store.next_challenges(body["owner_id"], body["count"])
                self._send(
                    200, {"challenges": [{"id": i, "plaintext": pt.text} for i, pt in issued]}
                )
            else:
                self._send(404, {"error": "not found"})
        except DuplicateOwnerError as exc:
            self._send(409, {"error": str(exc)})
        except DatasetExhaustedError as exc:
            self._send(409, {"error": str(exc)})
        except (KeyError, ValueError, RegistryError) as exc:
            self._send(400, {"error": str(exc)})


class RegistryServer:
    """HTTP frontend over a RegistryStore; start() binds and serves on a
    daemon thread."""

    def __init__(self, store: RegistryStore, host: str = "127.0.0.1", port: int = 0):
        handler = type("BoundHandler", (_Handler,), {"store": store})
        self._httpd = ThreadingHTTPServer((host, port), handler)
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)

    @property
    def address(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def start(self):
        self._thread.start()
        return self

    def stop(self):
        self._httpd.shutdown()
        self._httpd.server_close()


def serve(store: RegistryStore, host: str = "127.0.0.1", port: int = 8070) -> RegistryServer:
    return RegistryServer(store, host=host, port=port).start()
