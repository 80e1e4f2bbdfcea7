"""Pluggable symmetric ciphers and decryption-call instrumentation.

Two implementations share the :class:`Cipher` interface:

- ``aesgcm``: AES-256-GCM from the ``cryptography`` package (authenticated).
- ``xor``: a keyed XOR stream whose keystream blocks are
  ``SHA-256(key || nonce || block_index)``.  NOT secure; it exists so tests
  can pin byte-exact vectors.

Every decryption goes through :meth:`Cipher.decrypt`, which ticks a
:class:`DecryptionCounter` owned by the caller's execution.
"""

from __future__ import annotations

import functools
import hashlib
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

from .errors import AuthFailure, InvalidKey, InvalidNonce

NONCE_SIZE = 12
MIN_KEY_SIZE = 16


@dataclass(frozen=True)
class CipherKey:
    material: bytes

    def __post_init__(self):
        if not isinstance(self.material, (bytes, bytearray)):
            raise InvalidKey("key material must be bytes")
        if len(self.material) < MIN_KEY_SIZE:
            raise InvalidKey(f"key material must be at least {MIN_KEY_SIZE} bytes")

    def __repr__(self):
        return f"CipherKey(<{len(self.material)} bytes>)"


@dataclass(frozen=True)
class CipherEnvelope:
    nonce: bytes
    body: bytes

    def hex(self) -> str:
        """24 hex chars of nonce followed by the body in hex."""
        return (self.nonce + self.body).hex()

    @classmethod
    def from_hex(cls, text: str) -> "CipherEnvelope":
        raw = bytes.fromhex(text)
        if len(raw) < NONCE_SIZE:
            raise ValueError("envelope shorter than its nonce")
        return cls(raw[:NONCE_SIZE], raw[NONCE_SIZE:])


@dataclass
class DecryptionCounter:
    """Per-execution tally of decrypt calls.  Never share one between threads."""

    scope: str = "default"
    count: int = 0

    def tick(self) -> None:
        self.count += 1


@dataclass(frozen=True)
class KeyRing:
    main: CipherKey
    search: CipherKey


def _spin(delay_ns: int) -> None:
    # busy-wait: sleep() cannot resolve single microseconds
    end = time.perf_counter_ns() + delay_ns
    while time.perf_counter_ns() < end:
        pass


class Cipher(ABC):
    name: str
    key_size: int

    def __init__(self, delay_us: float = 0.0):
        if delay_us < 0:
            raise ValueError("delay_us must be non-negative")
        self.delay_us = delay_us
        self._delay_ns = int(round(delay_us * 1000))

    def __repr__(self):
        return f"{type(self).__name__}(delay_us={self.delay_us})"

    def _check(self, key: CipherKey, nonce: bytes) -> None:
        if len(key.material) != self.key_size:
            raise InvalidKey(f"{self.name} needs a {self.key_size}-byte key, got {len(key.material)}")
        if len(nonce) != NONCE_SIZE:
            raise InvalidNonce(f"nonce must be {NONCE_SIZE} bytes, got {len(nonce)}")

    def encrypt(self, plaintext: bytes, key: CipherKey, nonce: bytes) -> CipherEnvelope:
        self._check(key, nonce)
        return CipherEnvelope(bytes(nonce), self._seal(bytes(plaintext), key.material, bytes(nonce)))

    def decrypt(self, envelope: CipherEnvelope, key: CipherKey, counter: DecryptionCounter | None = None) -> bytes:
        self._check(key, envelope.nonce)
        if counter is not None:
            counter.tick()
        if self._delay_ns:
            _spin(self._delay_ns)
        return self._open(envelope.body, key.material, envelope.nonce)

    @abstractmethod
    def _seal(self, plaintext: bytes, key: bytes, nonce: bytes) -> bytes: ...

    @abstractmethod
    def _open(self, body: bytes, key: bytes, nonce: bytes) -> bytes: ...


class XorStreamCipher(Cipher):
    """Deterministic keyed XOR stream for tests.  Provides no confidentiality guarantees."""

    name = "xor"
    key_size = 32
    block_size = hashlib.sha256().digest_size

    def keystream(self, key: bytes, nonce: bytes, length: int) -> bytes:
        blocks = []
        for index in range(-(-length // self.block_size)):
            blocks.append(hashlib.sha256(key + nonce + index.to_bytes(8, "big")).digest())
        return b"".join(blocks)[:length]

    def _xor(self, data: bytes, key: bytes, nonce: bytes) -> bytes:
        if not data:
            return b""
        stream = self.keystream(key, nonce, len(data))
        mixed = int.from_bytes(data, "big") ^ int.from_bytes(stream, "big")
        return mixed.to_bytes(len(data), "big")

    _seal = _xor
    _open = _xor


@functools.lru_cache(maxsize=64)
def _aesgcm(key: bytes) -> AESGCM:
    return AESGCM(key)


class AesGcmCipher(Cipher):
    name = "aesgcm"
    key_size = 32

    def _seal(self, plaintext, key, nonce):
        return _aesgcm(key).encrypt(nonce, plaintext, None)

    def _open(self, body, key, nonce):
        try:
            return _aesgcm(key).decrypt(nonce, body, None)
        except InvalidTag:
            raise AuthFailure("envelope failed authentication") from None


CIPHERS = {cls.name: cls for cls in (AesGcmCipher, XorStreamCipher)}


def get_cipher(name: str, delay_us: float = 0.0) -> Cipher:
    try:
        return CIPHERS[name](delay_us=delay_us)
    except KeyError:
        raise ValueError(f"unknown cipher {name!r}; choose from {sorted(CIPHERS)}") from None


def derive_keys(master: bytes, key_size: int = 32, shared: bool = False) -> KeyRing:
    """Derive the main-table and search-table keys from one master secret.

    With ``shared=True`` both tables use the same derived key.
    """
    if len(master) < MIN_KEY_SIZE:
        raise InvalidKey(f"master secret must be at least {MIN_KEY_SIZE} bytes")

    def hkdf(info: bytes) -> CipherKey:
        return CipherKey(HKDF(algorithm=hashes.SHA256(), length=key_size, salt=None, info=info).derive(master))

    main = hkdf(b"sealtable main")
    return KeyRing(main=main, search=main if shared else hkdf(b"sealtable search"))
