"""Registry tests: registration invariants, challenge burning, crash
recovery via log replay, concurrency, and the HTTP frontend."""

import io
import json
import threading
import urllib.error
import urllib.request

import pytest

from llmfp.encoder import EncoderConfig, Plaintext
from llmfp.registry import (
    ChallengeSet,
    DatasetExhaustedError,
    DuplicateOwnerError,
    RegistryError,
    RegistryServer,
    RegistryStore,
    load_challenge_set,
)
from llmfp.rs_codec import RsParams


def _dataset(n=40, dataset_id="ds"):
    return ChallengeSet(
        dataset_id=dataset_id,
        items=tuple((i, Plaintext(f"challenge line number {i}")) for i in range(n)),
    )


@pytest.fixture()
def store(tmp_path):
    s = RegistryStore(tmp_path / "registry.jsonl")
    s.add_dataset("ds", _dataset())
    yield s
    s.close()


class TestRegistration:
    def test_returns_key_once_and_stores_digest_only(self, store, tmp_path):
        key, rec = store.register_owner("alice", EncoderConfig(), RsParams(), "ds")
        assert len(key.hex_digits) == 32
        assert rec.key_digest != key.hex_digits
        log = (tmp_path / "registry.jsonl").read_text()
        assert key.hex_digits not in log

    def test_duplicate_owner_rejected(self, store):
        store.register_owner("alice", EncoderConfig(), RsParams(), "ds")
        with pytest.raises(DuplicateOwnerError):
            store.register_owner("alice", EncoderConfig(), RsParams(), "ds")

    def test_unknown_dataset_rejected(self, store):
        with pytest.raises(RegistryError):
            store.register_owner("bob", EncoderConfig(), RsParams(), "nope")

    def test_deterministic_entropy_source(self, tmp_path):
        s = RegistryStore(tmp_path / "r.jsonl", entropy=io.BytesIO(bytes(range(64))))
        s.add_dataset("ds", _dataset())
        key, _ = s.register_owner("alice", EncoderConfig(), RsParams(), "ds")
        assert key.hex_digits == bytes(range(16)).hex()
        s.close()

    def test_distinct_owners_distinct_keys(self, store):
        k1, _ = store.register_owner("alice", EncoderConfig(), RsParams(), "ds")
        k2, _ = store.register_owner("bob", EncoderConfig(), RsParams(), "ds")
        assert k1.hex_digits != k2.hex_digits


class TestChallenges:
    def test_disjoint_sets_across_requests(self, store):
        store.register_owner("alice", EncoderConfig(), RsParams(), "ds")
        first = store.next_challenges("alice", 10)
        second = store.next_challenges("alice", 10)
        ids1 = {i for i, _ in first}
        ids2 = {i for i, _ in second}
        assert not ids1 & ids2

    def test_exhaustion_raises(self, store):
        store.register_owner("alice", EncoderConfig(), RsParams(), "ds")
        store.next_challenges("alice", 35)
        with pytest.raises(DatasetExhaustedError):
            store.next_challenges("alice", 6)
        # the five remaining are still issuable
        assert len(store.next_challenges("alice", 5)) == 5

    def test_owners_burn_independently(self, store):
        store.register_owner("alice", EncoderConfig(), RsParams(), "ds")
        store.register_owner("bob", EncoderConfig(), RsParams(), "ds")
        a = {i for i, _ in store.next_challenges("alice", 40)}
        b = {i for i, _ in store.next_challenges("bob", 40)}
        assert a == b  # burn state is per owner, not per dataset

    def test_count_domain(self, store):
        store.register_owner("alice", EncoderConfig(), RsParams(), "ds")
        with pytest.raises(ValueError):
            store.next_challenges("alice", 0)
        with pytest.raises(RegistryError):
            store.next_challenges("carol", 1)


class TestCrashRecovery:
    def test_burned_ids_survive_crash_before_return(self, tmp_path):
        path = tmp_path / "r.jsonl"
        s = RegistryStore(path)
        s.add_dataset("ds", _dataset())
        s.register_owner("alice", EncoderConfig(), RsParams(), "ds")
        issued = {i for i, _ in s.next_challenges("alice", 10)}
        with pytest.raises(RuntimeError):
            s.next_challenges("alice", 10, _crash_after_burn=True)
        s.close()
        # reopen: the crashed request's ids must stay burned
        s2 = RegistryStore(path)
        remaining = {i for i, _ in s2.next_challenges("alice", 20)}
        assert len(remaining) == 20
        assert not remaining & issued
        assert len(s2.record("alice").used_challenge_ids) == 40
        s2.close()

    def test_full_state_replay(self, tmp_path):
        path = tmp_path / "r.jsonl"
        s = RegistryStore(path)
        s.add_dataset("ds", _dataset())
        _, rec = s.register_owner("alice", EncoderConfig(dim=16), RsParams(31, 19), "ds")
        s.next_challenges("alice", 7)
        s.close()
        s2 = RegistryStore(path)
        rec2 = s2.record("alice")
        assert rec2.key_digest == rec.key_digest
        assert rec2.encoder_config == EncoderConfig(dim=16)
        assert rec2.rs_params == RsParams(31, 19)
        assert len(rec2.used_challenge_ids) == 7
        s2.close()


def test_concurrent_issuance_no_duplicates(tmp_path):
    s = RegistryStore(tmp_path / "r.jsonl")
    s.add_dataset("big", _dataset(n=1000, dataset_id="big"))
    s.register_owner("alice", EncoderConfig(), RsParams(), "big")
    results, errors = [], []

    def worker():
        try:
            results.append(s.next_challenges("alice", 1))
        except Exception as exc:  # noqa: BLE001 - collected for the assertion
            errors.append(exc)

    threads = [threading.Thread(target=worker) for _ in range(1000)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors
    ids = [i for batch in results for i, _ in batch]
    assert len(ids) == 1000
    assert len(set(ids)) == 1000
    s.close()


def test_load_challenge_set(tmp_path):
    f = tmp_path / "ds.txt"
    f.write_text("first line\n\nsecond line\n")
    cs = load_challenge_set("ds", f)
    assert [pt.text for _, pt in cs.items] == ["first line", "second line"]
    empty = tmp_path / "empty.txt"
    empty.write_text("\n")
    with pytest.raises(ValueError):
        load_challenge_set("ds", empty)


def _post(url, payload):
    req = urllib.request.Request(
        url, data=json.dumps(payload).encode(), headers={"Content-Type": "application/json"}
    )
    try:
        with urllib.request.urlopen(req, timeout=5) as resp:
            return resp.status, json.loads(resp.read())
    except urllib.error.HTTPError as exc:
        return exc.code, json.loads(exc.read())


class TestHttpFrontend:
    @pytest.fixture()
    def server(self, store):
        srv = RegistryServer(store).start()
        yield srv
        srv.stop()

    def test_register_challenge_record_flow(self, server):
        status, body = _post(server.address + "/register", {"owner_id": "alice", "dataset_id": "ds"})
        assert status == 200
        assert len(body["secret_key"]) == 32

        status, body = _post(server.address + "/challenges/next", {"owner_id": "alice", "count": 3})
        assert status == 200
        assert len(body["challenges"]) == 3

        with urllib.request.urlopen(server.address + "/record/alice", timeout=5) as resp:
            record = json.loads(resp.read())
        assert record["used_challenge_ids"] == [0, 1, 2]
        assert "secret_key" not in record

    def test_conflict_statuses(self, server):
        _post(server.address + "/register", {"owner_id": "alice", "dataset_id": "ds"})
        status, _ = _post(server.address + "/register", {"owner_id": "alice", "dataset_id": "ds"})
        assert status == 409
        status, _ = _post(server.address + "/challenges/next", {"owner_id": "alice", "count": 999})
        assert status == 409

    def test_bad_requests(self, server):
        status, _ = _post(server.address + "/register", {"dataset_id": "ds"})
        assert status == 400
        status, _ = _post(server.address + "/nowhere", {})
        assert status == 404

    def test_health(self, server):
        with urllib.request.urlopen(server.address + "/health", timeout=5) as resp:
            assert json.loads(resp.read()) == {"status": "ok"}
