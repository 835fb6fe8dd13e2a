"""Signing, CID encryption, and bearer-token issuance.

Ed25519 for signatures, AES-256-GCM for encrypting content identifiers
before they go on-chain, and HMAC-SHA-256 tokens (unpadded base64url
``header.payload.mac`` wire form) for sessions. All key and digest
material renders as lowercase hex at external boundaries.
"""

from __future__ import annotations

import base64
import hashlib
import hmac
import json
import os
import time
from dataclasses import dataclass

from cryptography.exceptions import InvalidSignature, InvalidTag
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

DEFAULT_TOKEN_TTL = 3600  # seconds; sessions end by expiry, no revocation

TOKEN_HEADER = {"alg": "HS256", "typ": "token"}


class CryptoError(Exception):
    pass


class AuthFailure(CryptoError):
    """AEAD authentication failed: wrong key or tampered bytes."""


class BadSignature(CryptoError):
    pass


class Expired(CryptoError):
    pass


class Malformed(CryptoError):
    pass


def canonical_json(obj) -> bytes:
    """Sorted-key, no-whitespace UTF-8 JSON; the one text encoding used
    for hashing, signing, persistence, and API bodies."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


@dataclass(frozen=True)
class KeyPair:
    public_key: bytes   # 32 bytes
    secret_key: bytes   # 32-byte Ed25519 seed

    @property
    def public_hex(self) -> str:
        return self.public_key.hex()


def keygen(seed: bytes | None = None) -> KeyPair:
    """Generate (or deterministically re-derive from a seed) an Ed25519 keypair."""
    if seed is None:
        seed = os.urandom(32)
    if len(seed) != 32:
        raise CryptoError("Ed25519 seed must be 32 bytes")
    sk = Ed25519PrivateKey.from_private_bytes(seed)
    return KeyPair(public_key=sk.public_key().public_bytes_raw(), secret_key=seed)


def sign(secret_key: bytes, message: bytes) -> bytes:
    if len(secret_key) != 32:
        raise CryptoError("secret key must be a 32-byte seed")
    return Ed25519PrivateKey.from_private_bytes(secret_key).sign(message)


def verify_sig(public_key: bytes, message: bytes, signature: bytes) -> bool:
    if len(public_key) != 32:
        raise CryptoError("public key must be 32 bytes")
    if len(signature) != 64:
        raise CryptoError("signature must be 64 bytes")
    try:
        Ed25519PublicKey.from_public_bytes(public_key).verify(signature, message)
        return True
    except InvalidSignature:
        return False


@dataclass(frozen=True)
class SymmetricKey:
    key: bytes  # 32 bytes, AES-256-GCM

    def __post_init__(self):
        if len(self.key) != 32:
            raise ValueError("symmetric key must be 32 bytes")

    @classmethod
    def generate(cls) -> "SymmetricKey":
        return cls(os.urandom(32))


@dataclass(frozen=True)
class Ciphertext:
    nonce: bytes  # 12 bytes
    body: bytes   # ciphertext || 16-byte tag


def encrypt(key: SymmetricKey, plaintext: bytes) -> Ciphertext:
    nonce = os.urandom(12)
    body = AESGCM(key.key).encrypt(nonce, plaintext, None)
    return Ciphertext(nonce=nonce, body=body)


def decrypt(key: SymmetricKey, ct: Ciphertext) -> bytes:
    try:
        return AESGCM(key.key).decrypt(ct.nonce, ct.body, None)
    except InvalidTag:
        raise AuthFailure("ciphertext failed authentication") from None


def encrypt_cid(key: SymmetricKey, cid_digest: bytes) -> Ciphertext:
    if len(cid_digest) != 32:
        raise CryptoError("cid digest must be 32 bytes")
    return encrypt(key, cid_digest)


def decrypt_cid(key: SymmetricKey, ct: Ciphertext) -> bytes:
    digest = decrypt(key, ct)
    if len(digest) != 32:
        raise AuthFailure("decrypted cid has wrong length")
    return digest


def _b64url(data: bytes) -> str:
    return base64.urlsafe_b64encode(data).rstrip(b"=").decode("ascii")


def _unb64url(text: str) -> bytes:
    pad = "=" * (-len(text) % 4)
    return base64.urlsafe_b64decode(text + pad)


@dataclass(frozen=True)
class TokenClaims:
    sub: str
    role: str
    exp: int


def issue_token(signing_secret: bytes, sub: str, role: str,
                ttl_seconds: int = DEFAULT_TOKEN_TTL, now: float | None = None) -> str:
    """Issue the wire form ``b64url(header).b64url(payload).b64url(mac)``."""
    if ttl_seconds <= 0:
        raise CryptoError("ttl must be positive")
    if now is None:
        now = time.time()
    header = _b64url(canonical_json(TOKEN_HEADER))
    payload = _b64url(canonical_json({"exp": int(now) + int(ttl_seconds), "role": role, "sub": sub}))
    signing_input = f"{header}.{payload}".encode("ascii")
    mac = hmac.new(signing_secret, signing_input, hashlib.sha256).digest()
    return f"{header}.{payload}.{_b64url(mac)}"


def verify_token(signing_secret: bytes, wire: str, now: float | None = None) -> TokenClaims:
    if now is None:
        now = time.time()
    parts = wire.split(".")
    if len(parts) != 3:
        raise Malformed("token must have three segments")
    header_b64, payload_b64, mac_b64 = parts
    try:
        header = json.loads(_unb64url(header_b64))
        payload = json.loads(_unb64url(payload_b64))
        mac = _unb64url(mac_b64)
    except (ValueError, TypeError):
        raise Malformed("undecodable token segment") from None
    if header != TOKEN_HEADER:
        raise Malformed("unexpected token header")
    signing_input = f"{header_b64}.{payload_b64}".encode("ascii")
    expected = hmac.new(signing_secret, signing_input, hashlib.sha256).digest()
    if not hmac.compare_digest(mac, expected):
        raise BadSignature("token mac mismatch")
    if not isinstance(payload, dict) or not {"sub", "role", "exp"} <= set(payload):
        raise Malformed("token payload missing claims")
    exp = payload["exp"]
    if not isinstance(exp, int):
        raise Malformed("exp claim must be an integer")
    if now >= exp:
        raise Expired("token expired")
    return TokenClaims(sub=str(payload["sub"]), role=str(payload["role"]), exp=exp)
