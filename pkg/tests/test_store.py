import json
import random
from datetime import date as Date

import pytest

from mobiliscope.privacy import KeyStore, decode_envelope, encode_envelope, encrypt_envelope
from mobiliscope.store import IngestionService, Store
from mobiliscope.traceio import encode_trace


@pytest.fixture(scope="module")
def keys():
    return KeyStore.generate()


@pytest.fixture
def service(tmp_path, keys, transit, emissions, zones):
    return IngestionService(Store(tmp_path / "data"), keys, transit, emissions, zones)


def seal(trace, keys):
    return encrypt_envelope(encode_trace(trace).encode(), keys.default_key_id(), keys)


class TestIngest:
    def test_valid_envelope_accepted(self, service, keys, fixture_corpus):
        e = next(x for x in fixture_corpus if x.scenario_id == "S-METRO")
        result = service.ingest(seal(e.trace, keys))
        assert result.accepted and not result.duplicate
        rows = service.store.scan()
        assert len(rows) == 1
        record, trips = rows[0]
        assert record.pseudonym == e.trace.pseudonym
        assert len(trips) == 1  # walk-metro-walk is one trip

    def test_duplicate_acknowledged_not_restored(self, service, keys, fixture_corpus):
        env = seal(fixture_corpus[0].trace, keys)
        first = service.ingest(env)
        second = service.ingest(env)
        assert second.accepted and second.duplicate
        assert second.envelope_id == first.envelope_id
        assert len(service.store.scan()) == 1

    def test_tampered_tag_rejected(self, service, keys, fixture_corpus):
        env = seal(fixture_corpus[0].trace, keys)
        tampered = type(env)(
            env.envelope_id, env.key_id, env.nonce, env.ciphertext,
            bytes([env.tag[0] ^ 1]) + env.tag[1:],
        )
        result = service.ingest(tampered)
        assert not result.accepted
        assert result.reason == "IntegrityError"
        assert service.store.scan() == []

    def test_garbage_payload_rejected(self, service, keys):
        env = encrypt_envelope(b"not a trace", keys.default_key_id(), keys)
        result = service.ingest(env)
        assert not result.accepted
        assert result.reason.startswith("ParseError")

    def test_bad_pseudonym_rejected(self, service, keys, fixture_corpus):
        from dataclasses import replace

        trace = replace(fixture_corpus[0].trace, pseudonym="IMEI-358240051111110")
        result = service.ingest(seal(trace, keys))
        assert not result.accepted
        assert result.reason.startswith("PolicyViolation")

    def test_stored_trace_redecodes(self, service, keys, fixture_corpus):
        from mobiliscope.traceio import decode_trace

        service.ingest(seal(fixture_corpus[0].trace, keys))
        record, _ = service.store.scan()[0]
        assert decode_trace(record.trace_blob) == fixture_corpus[0].trace


class TestScan:
    def test_empty_store(self, service):
        assert service.store.scan() == []

    def test_date_filter(self, service, keys, fixture_corpus):
        walks = [e for e in fixture_corpus if e.scenario_id == "S-WALK"][:3]
        for e in walks:
            service.ingest(seal(e.trace, keys))
        dates = sorted({e.trace.date for e in walks})
        day1 = service.store.scan(date_from=dates[0], date_to=dates[0])
        assert len(day1) == sum(1 for e in walks if e.trace.date == dates[0])

    def test_pseudonym_filter(self, service, keys, fixture_corpus):
        for e in fixture_corpus[:3]:
            service.ingest(seal(e.trace, keys))
        target = fixture_corpus[1].trace.pseudonym
        rows = service.store.scan(pseudonym=target)
        assert len(rows) == 1
        assert rows[0][0].pseudonym == target

    def test_nonexistent_pseudonym(self, service, keys, fixture_corpus):
        service.ingest(seal(fixture_corpus[0].trace, keys))
        assert service.store.scan(pseudonym="f" * 32) == []

    def test_order_independence(self, tmp_path, keys, transit, emissions, zones, fixture_corpus):
        subset = fixture_corpus[:8]
        envelopes = [seal(e.trace, keys) for e in subset]
        shuffled = list(envelopes)
        random.Random(5).shuffle(shuffled)
        orders = [list(envelopes), list(reversed(envelopes)), shuffled]
        outputs = []
        for i, order in enumerate(orders):
            svc = IngestionService(Store(tmp_path / f"data{i}"), keys, transit, emissions, zones)
            for env in order:
                svc.ingest(env)
            outputs.append([(r.pseudonym, r.date, r.trace_blob) for r, _ in svc.store.scan()])
        assert outputs[0] == outputs[1] == outputs[2]


class TestCrashAtomicity:
    def test_partial_append_invisible(self, service, keys, fixture_corpus):
        service.ingest(seal(fixture_corpus[0].trace, keys))
        rows_before = service.store.scan()
        # Simulate a crash mid-append: half a JSON record, no newline.
        day_file = next(service.store.root.glob("day-*.log"))
        with open(day_file, "a") as fh:
            fh.write('{"record": {"envelope_id": "dead')
        rows_after = service.store.scan()
        assert [r.envelope_id for r, _ in rows_after] == [r.envelope_id for r, _ in rows_before]

    def test_recovery_after_partial_write(self, service, keys, fixture_corpus):
        service.ingest(seal(fixture_corpus[0].trace, keys))
        day_file = next(service.store.root.glob("day-*.log"))
        with open(day_file, "a") as fh:
            fh.write('{"broken": tru')
        # A restarted store drops the torn tail and keeps committing.
        svc2 = IngestionService(
            Store(service.store.root), service.keys, service.transit, service.emissions, service.zones
        )
        same_day = [
            e for e in fixture_corpus
            if e.trace.date == fixture_corpus[0].trace.date and e is not fixture_corpus[0]
        ]
        result = svc2.ingest(seal(same_day[0].trace, service.keys))
        assert result.accepted
        assert len(svc2.store.scan()) == 2
