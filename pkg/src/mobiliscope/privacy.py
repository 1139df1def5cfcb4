"""Pseudonymization, PII stripping, and the authenticated upload envelope.

Mitigation map (each category ties to a concrete mechanism, exercised in
tests): collection -> optional profile stripped wholesale (`sanitize`);
processing -> daily-rotated keyed pseudonyms (`pseudonymize`);
dissemination -> authenticated encryption in transit (`encrypt_envelope`);
invasion -> analytics never expose a pseudonym unless explicitly filtered
for (enforced in the analytics layer).
"""

from __future__ import annotations

import hashlib
import hmac
import os
import re
import struct
from dataclasses import dataclass, field
from datetime import date as Date
from typing import Optional

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from .model import ActivitySample, DomainError, LocationFix, TraceDay

ENVELOPE_VERSION = 1
_HEADER = struct.Struct(">B4s16s12sI")
_TAG_LEN = 16
_PSEUDONYM_RE = re.compile(r"^[0-9a-f]{32}$")


class IntegrityError(ValueError):
    """Envelope failed authentication; the payload is never logged."""


class PolicyViolation(ValueError):
    """Input breaks the no-PII posture (e.g. a non-pseudonym identifier)."""


@dataclass(frozen=True)
class PseudonymKey:
    """Secret for the keyed pseudonym hash; rotated daily by construction."""

    secret: bytes

    def __post_init__(self) -> None:
        if len(self.secret) != 32:
            raise DomainError("pseudonym secret must be 32 bytes")

    def __repr__(self) -> str:  # keep the secret out of logs and tracebacks
        return "PseudonymKey(<redacted>)"


@dataclass(frozen=True)
class UploadEnvelope:
    envelope_id: bytes
    key_id: bytes
    nonce: bytes
    ciphertext: bytes
    tag: bytes


def pseudonymize(device_id: str, date: Date, key: PseudonymKey) -> str:
    """Keyed one-way token for one device-day, 32 lowercase hex chars.

    Deterministic within a day; tokens for different days are unlinkable
    without the key.
    """

    if not device_id:
        raise DomainError("empty device_id")
    msg = f"{device_id}|{date.isoformat()}".encode()
    return hmac.new(key.secret, msg, hashlib.sha256).hexdigest()[:32]


def is_valid_pseudonym(token: str) -> bool:
    return bool(_PSEUDONYM_RE.match(token))


@dataclass(frozen=True)
class RawClientTrace:
    """What a device uploads before sanitization: a trace plus optional profile."""

    pseudonym: str
    date: Date
    fixes: tuple[LocationFix, ...]
    samples: tuple[ActivitySample, ...]
    profile: dict[str, str] = field(default_factory=dict)


def sanitize(raw: RawClientTrace) -> TraceDay:
    """Strip every optional profile field; enforce the pseudonym shape.

    Sanitization never fails on extra data (it removes it), but a
    pseudonym field that is not a 32-hex token is rejected outright so raw
    device identifiers can never slip through.
    """

    if not is_valid_pseudonym(raw.pseudonym):
        raise PolicyViolation("pseudonym is not a 32-hex token")
    return TraceDay(raw.pseudonym, raw.date, tuple(raw.fixes), tuple(raw.samples))


class KeyStore:
    """Read-only key material loaded at startup.

    File format, one entry per line:
        pseudonym_secret <64 hex chars>
        envelope_key <key_id: 8 hex chars> <64 hex chars>
    """

    def __init__(self, pseudonym_key: PseudonymKey, envelope_keys: dict[bytes, bytes]) -> None:
        self.pseudonym_key = pseudonym_key
        self._envelope_keys = dict(envelope_keys)
        for kid, key in self._envelope_keys.items():
            if len(kid) != 4 or len(key) != 32:
                raise DomainError("envelope key_id must be 4 bytes, key 32 bytes")

    @classmethod
    def generate(cls) -> "KeyStore":
        return cls(PseudonymKey(os.urandom(32)), {os.urandom(4): os.urandom(32)})

    @classmethod
    def load(cls, text: str) -> "KeyStore":
        pseudonym_key = None
        envelope_keys: dict[bytes, bytes] = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(" ")
            if parts[0] == "pseudonym_secret":
                pseudonym_key = PseudonymKey(bytes.fromhex(parts[1]))
            elif parts[0] == "envelope_key":
                envelope_keys[bytes.fromhex(parts[1])] = bytes.fromhex(parts[2])
            else:
                raise DomainError(f"unknown key file entry: {parts[0]}")
        if pseudonym_key is None or not envelope_keys:
            raise DomainError("key file must define pseudonym_secret and an envelope_key")
        return cls(pseudonym_key, envelope_keys)

    def dump(self) -> str:
        lines = [f"pseudonym_secret {self.pseudonym_key.secret.hex()}"]
        for kid, key in self._envelope_keys.items():
            lines.append(f"envelope_key {kid.hex()} {key.hex()}")
        return "\n".join(lines) + "\n"

    def default_key_id(self) -> bytes:
        return next(iter(self._envelope_keys))

    def envelope_key(self, key_id: bytes) -> bytes:
        if key_id not in self._envelope_keys:
            raise KeyError(f"unknown key_id {key_id.hex()}")
        return self._envelope_keys[key_id]


def encrypt_envelope(payload: bytes, key_id: bytes, keys: KeyStore) -> UploadEnvelope:
    """AEAD-seal a payload; fresh random envelope_id and nonce every call."""

    key = keys.envelope_key(key_id)
    envelope_id = os.urandom(16)
    nonce = os.urandom(12)
    aad = bytes([ENVELOPE_VERSION]) + key_id + envelope_id
    sealed = AESGCM(key).encrypt(nonce, payload, aad)
    return UploadEnvelope(envelope_id, key_id, nonce, sealed[:-_TAG_LEN], sealed[-_TAG_LEN:])


def decrypt_envelope(env: UploadEnvelope, keys: KeyStore) -> bytes:
    """Open an envelope; any bit flip raises IntegrityError."""

    key = keys.envelope_key(env.key_id)
    aad = bytes([ENVELOPE_VERSION]) + env.key_id + env.envelope_id
    try:
        return AESGCM(key).decrypt(env.nonce, env.ciphertext + env.tag, aad)
    except InvalidTag:
        raise IntegrityError("envelope authentication failed") from None


def encode_envelope(env: UploadEnvelope) -> bytes:
    """Wire form: [version:1][key_id:4][envelope_id:16][nonce:12][u32 len][ct][tag:16]."""

    header = _HEADER.pack(
        ENVELOPE_VERSION, env.key_id, env.envelope_id, env.nonce, len(env.ciphertext)
    )
    return header + env.ciphertext + env.tag


def decode_envelope(blob: bytes) -> UploadEnvelope:
    if len(blob) < _HEADER.size + _TAG_LEN:
        raise IntegrityError("envelope truncated")
    version, key_id, envelope_id, nonce, ct_len = _HEADER.unpack_from(blob)
    if version != ENVELOPE_VERSION:
        raise IntegrityError(f"unsupported envelope version {version}")
    body = blob[_HEADER.size :]
    if len(body) != ct_len + _TAG_LEN:
        raise IntegrityError("envelope length mismatch")
    return UploadEnvelope(envelope_id, key_id, nonce, body[:ct_len], body[ct_len:])
