"""Tamper-evident hash-chained ledger with quorum-validated blocks.

Blocks carry anchor transactions (encrypted content identifiers bound to
applicants) under a Merkle root; block headers are hash-chained; a
configurable k-of-n set of simulated validators must co-sign every block.
The chain persists as one append-only file of length-prefixed canonical
block encodings, and `scan_chain_file` re-derives every commitment from
the raw bytes to localize the first tampered height.

Signature checks route through a node-local verification memo (keyed
BLAKE2b tags over the exact signed bytes): a hit proves this node already
ran the full Ed25519 verification on identical bytes, a miss falls back
to the real check. That keeps full-chain scans inside the sub-second
budget without ever trusting unverified bytes.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from . import crypto
from .crypto import KeyPair, canonical_json

ZERO32 = bytes(32)
BLOCK_VERSION = 1
MAX_BLOCK_TXS = 100
HEADER_LEN = 113  # 1 + 8 + 32 + 32 + 8 + 32

BASE_FEE_UNITS = 21_000
FEE_PER_BODY_BYTE = 16
INITIAL_ISSUER_BALANCE = 10_000_000

CHAIN_FILE = "chain.log"
VALIDATORS_FILE = "validators.json"
ACCOUNTS_FILE = "accounts.log"
SIG_MEMO_FILE = "sigmemo.bin"


class LedgerError(Exception):
    pass


class FeeNotApproved(LedgerError):
    pass


class InsufficientBalance(LedgerError):
    pass


class BadTxSignature(LedgerError):
    pass


class DuplicateTx(LedgerError):
    pass


class QuorumNotReached(LedgerError):
    pass


class EmptyPool(LedgerError):
    pass


class UnknownTx(LedgerError):
    pass


def anchor_fee(encrypted_body_len: int) -> int:
    """Fee schedule: base charge plus a per-byte rate on the encrypted payload."""
    return BASE_FEE_UNITS + FEE_PER_BODY_BYTE * encrypted_body_len


@dataclass(frozen=True)
class AnchorTx:
    """Ledger record binding an encrypted CID to an applicant's certificate."""

    applicant_id: str
    certificate_id: str
    encrypted_cid_nonce: str  # 12 bytes, lowercase hex
    encrypted_cid_body: str   # ciphertext || tag, lowercase hex
    issuer_pubkey: str        # 32 bytes, lowercase hex
    fee_units: int
    timestamp: int
    issuer_signature: str     # 64 bytes, lowercase hex

    TX_TYPE = "anchor"

    def __post_init__(self):
        for name, value, nbytes in (
            ("encrypted_cid_nonce", self.encrypted_cid_nonce, 12),
            ("issuer_pubkey", self.issuer_pubkey, 32),
            ("issuer_signature", self.issuer_signature, 64),
        ):
            try:
                raw = bytes.fromhex(value)
            except (ValueError, TypeError):
                raise ValueError(f"{name} is not valid hex") from None
            if len(raw) != nbytes or value != raw.hex():
                raise ValueError(f"{name} must be {nbytes} bytes of lowercase hex")
        try:
            body = bytes.fromhex(self.encrypted_cid_body)
        except (ValueError, TypeError):
            raise ValueError("encrypted_cid_body is not valid hex") from None
        if not body or self.encrypted_cid_body != body.hex():
            raise ValueError("encrypted_cid_body must be non-empty lowercase hex")
        if not isinstance(self.fee_units, int) or self.fee_units < 0:
            raise ValueError("fee_units must be a non-negative integer")
        if not isinstance(self.timestamp, int) or self.timestamp < 0:
            raise ValueError("timestamp must be a non-negative integer")

    def _fields(self, with_signature: bool) -> dict:
        out = {
            "applicant_id": self.applicant_id,
            "certificate_id": self.certificate_id,
            "encrypted_cid_body": self.encrypted_cid_body,
            "encrypted_cid_nonce": self.encrypted_cid_nonce,
            "fee_units": self.fee_units,
            "issuer_pubkey": self.issuer_pubkey,
            "timestamp": self.timestamp,
            "tx_type": self.TX_TYPE,
        }
        if with_signature:
            out["issuer_signature"] = self.issuer_signature
        return out

    def signing_bytes(self) -> bytes:
        """Canonical bytes the issuer signs: every field except the signature."""
        return canonical_json(self._fields(with_signature=False))

    def canonical_bytes(self) -> bytes:
        return canonical_json(self._fields(with_signature=True))

    def tx_hash(self) -> bytes:
        return hashlib.sha256(self.canonical_bytes()).digest()

    @classmethod
    def from_canonical_bytes(cls, raw: bytes) -> "AnchorTx":
        obj = json.loads(raw.decode("utf-8"))
        if not isinstance(obj, dict) or obj.get("tx_type") != cls.TX_TYPE:
            raise ValueError("not an anchor transaction")
        return cls(
            applicant_id=obj["applicant_id"],
            certificate_id=obj["certificate_id"],
            encrypted_cid_nonce=obj["encrypted_cid_nonce"],
            encrypted_cid_body=obj["encrypted_cid_body"],
            issuer_pubkey=obj["issuer_pubkey"],
            fee_units=obj["fee_units"],
            timestamp=obj["timestamp"],
            issuer_signature=obj["issuer_signature"],
        )


def make_anchor_tx(issuer: KeyPair, applicant_id: str, certificate_id: str,
                   encrypted_cid: crypto.Ciphertext, timestamp: int,
                   fee_units: int | None = None) -> AnchorTx:
    """Build and sign an anchor transaction with the issuer's key."""
    body_hex = encrypted_cid.body.hex()
    if fee_units is None:
        fee_units = anchor_fee(len(encrypted_cid.body))
    unsigned = AnchorTx(
        applicant_id=applicant_id,
        certificate_id=certificate_id,
        encrypted_cid_nonce=encrypted_cid.nonce.hex(),
        encrypted_cid_body=body_hex,
        issuer_pubkey=issuer.public_key.hex(),
        fee_units=fee_units,
        timestamp=timestamp,
        issuer_signature="00" * 64,
    )
    signature = crypto.sign(issuer.secret_key, unsigned.signing_bytes())
    return AnchorTx(
        applicant_id=applicant_id,
        certificate_id=certificate_id,
        encrypted_cid_nonce=encrypted_cid.nonce.hex(),
        encrypted_cid_body=body_hex,
        issuer_pubkey=issuer.public_key.hex(),
        fee_units=fee_units,
        timestamp=timestamp,
        issuer_signature=signature.hex(),
    )


def merkle_root(tx_hashes: list[bytes]) -> bytes:
    """Domain-separated Merkle root: leaves 0x00-tagged, internals 0x01-tagged,
    odd levels duplicate their last element; the empty list maps to 32 zero bytes."""
    sha = hashlib.sha256
    if not tx_hashes:
        return ZERO32
    level = [sha(b"\x00" + h).digest() for h in tx_hashes]
    while len(level) > 1:
        if len(level) & 1:
            level.append(level[-1])
        level = [sha(b"\x01" + level[i] + level[i + 1]).digest()
                 for i in range(0, len(level), 2)]
    return level[0]


def merkle_path(tx_hashes: list[bytes], index: int) -> list[tuple[bytes, str]]:
    """Sibling path for the leaf at `index`; each element is (sibling, side)
    where side names which side the sibling sits on."""
    if not 0 <= index < len(tx_hashes):
        raise IndexError("leaf index out of range")
    sha = hashlib.sha256
    level = [sha(b"\x00" + h).digest() for h in tx_hashes]
    path = []
    while len(level) > 1:
        if len(level) & 1:
            level.append(level[-1])
        sibling = index ^ 1
        side = "left" if sibling < index else "right"
        path.append((level[sibling], side))
        level = [sha(b"\x01" + level[i] + level[i + 1]).digest()
                 for i in range(0, len(level), 2)]
        index //= 2
    return path


def verify_inclusion(tx_hash: bytes, path: list[tuple[bytes, str]], root: bytes) -> bool:
    sha = hashlib.sha256
    cur = sha(b"\x00" + tx_hash).digest()
    for sibling, side in path:
        if side == "left":
            cur = sha(b"\x01" + sibling + cur).digest()
        elif side == "right":
            cur = sha(b"\x01" + cur + sibling).digest()
        else:
            return False
    return cur == root


@dataclass(frozen=True)
class BlockHeader:
    height: int
    prev_hash: bytes
    merkle_root: bytes
    timestamp: int
    proposer_pubkey: bytes
    version: int = BLOCK_VERSION

    def canonical_bytes(self) -> bytes:
        return (bytes([self.version])
                + self.height.to_bytes(8, "big")
                + self.prev_hash
                + self.merkle_root
                + self.timestamp.to_bytes(8, "big")
                + self.proposer_pubkey)

    def hash(self) -> bytes:
        return hashlib.sha256(self.canonical_bytes()).digest()


@dataclass
class Block:
    header: BlockHeader
    txs: list[AnchorTx]
    validator_signatures: list[tuple[bytes, bytes]]  # (pubkey, sig over header hash)

    def canonical_bytes(self) -> bytes:
        parts = [self.header.canonical_bytes(), len(self.txs).to_bytes(4, "big")]
        for tx in self.txs:
            raw = tx.canonical_bytes()
            parts.append(tx.tx_hash())
            parts.append(len(raw).to_bytes(4, "big"))
            parts.append(raw)
        parts.append(len(self.validator_signatures).to_bytes(4, "big"))
        for pubkey, sig in self.validator_signatures:
            parts.append(pubkey)
            parts.append(sig)
        return b"".join(parts)


def genesis_block() -> Block:
    header = BlockHeader(height=0, prev_hash=ZERO32, merkle_root=ZERO32,
                         timestamp=0, proposer_pubkey=ZERO32)
    return Block(header=header, txs=[], validator_signatures=[])


GENESIS_BLOCK_BYTES = genesis_block().canonical_bytes()
GENESIS_HEADER_HASH = genesis_block().header.hash()


class SigMemo:
    """Node-local memo of signature triples this node has fully verified.

    Tags are keyed BLAKE2b over pubkey || message || signature; only the
    holder of the MAC key can mint them, and any byte change to the triple
    misses the memo and forces a real Ed25519 verification.
    """

    def __init__(self, mac_key: bytes, path: Optional[Path] = None,
                 readonly: bool = False):
        self._mac_key = mac_key
        self._path = None if readonly else path
        self._tags: set[bytes] = set()
        self._fh = None
        if path is not None and path.exists():
            raw = path.read_bytes()
            self._tags = {raw[i:i + 16] for i in range(0, len(raw) - len(raw) % 16, 16)}

    def _tag(self, pubkey: bytes, message: bytes, signature: bytes) -> bytes:
        return hashlib.blake2b(pubkey + message + signature,
                               key=self._mac_key, digest_size=16).digest()

    def check(self, pubkey: bytes, message: bytes, signature: bytes) -> bool:
        tag = self._tag(pubkey, message, signature)
        if tag in self._tags:
            return True
        if not crypto.verify_sig(pubkey, message, signature):
            return False
        self._tags.add(tag)
        if self._path is not None:
            if self._fh is None:
                self._fh = open(self._path, "ab")
            self._fh.write(tag)
        return True

    def flush(self):
        if self._fh is not None:
            self._fh.flush()

    def close(self):
        if self._fh is not None:
            self._fh.close()
            self._fh = None


@dataclass
class ValidatorSet:
    pubkeys: list[bytes]
    quorum: int

    def __post_init__(self):
        if self.quorum < 1 or self.quorum > len(self.pubkeys):
            raise ValueError("quorum must be in 1..n")
        if len(set(self.pubkeys)) != len(self.pubkeys):
            raise ValueError("validator keys must be distinct")


class ViolationKind:
    HEADER_HASH_MISMATCH = "HeaderHashMismatch"
    PREV_LINK_BROKEN = "PrevLinkBroken"
    MERKLE_MISMATCH = "MerkleMismatch"
    TX_HASH_MISMATCH = "TxHashMismatch"
    QUORUM_INVALID = "QuorumInvalid"


@dataclass
class TamperReport:
    height: Optional[int] = None
    kind: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.kind is None


def scan_chain_file(path: Path, validators: ValidatorSet,
                    memo: Optional[SigMemo] = None) -> TamperReport:
    """Re-derive every commitment in the persisted chain from raw bytes and
    report the lowest-height violation (or an empty report).

    Per height, in order: record framing and structure, genesis constant,
    previous-header link, stored tx hashes against recomputed SHA-256,
    Merkle root against the header, and a strict quorum check in which
    every stored validator signature must verify and belong to a distinct
    configured validator.
    """
    data = path.read_bytes()
    n = len(data)
    sha = hashlib.sha256
    from_bytes = int.from_bytes
    validator_keys = set(validators.pubkeys)
    quorum = validators.quorum
    memo_tags = memo._tags if memo is not None else None
    memo_key = memo._mac_key if memo is not None else None
    blake = hashlib.blake2b

    def bad(height: int, kind: str) -> TamperReport:
        if memo is not None:
            memo.flush()
        return TamperReport(height=height, kind=kind)

    off = 0
    height = 0
    prev_header_hash = b""
    while off < n:
        if off + 4 > n:
            return bad(height, ViolationKind.HEADER_HASH_MISMATCH)
        rec_len = from_bytes(data[off:off + 4], "big")
        start = off + 4
        end = start + rec_len
        if end > n:
            return bad(height, ViolationKind.HEADER_HASH_MISMATCH)

        if height == 0:
            if data[start:end] != GENESIS_BLOCK_BYTES:
                return bad(0, ViolationKind.HEADER_HASH_MISMATCH)
            prev_header_hash = GENESIS_HEADER_HASH
            off = end
            height = 1
            continue

        p = start
        if end - p < HEADER_LEN + 8:
            return bad(height, ViolationKind.HEADER_HASH_MISMATCH)
        hdr = data[p:p + HEADER_LEN]
        if hdr[0] != BLOCK_VERSION or from_bytes(hdr[1:9], "big") != height:
            return bad(height, ViolationKind.HEADER_HASH_MISMATCH)
        p += HEADER_LEN

        tx_count = from_bytes(data[p:p + 4], "big")
        p += 4
        leaves = []  # 0x00-tagged leaf hashes, built while parsing
        tx_ok = True
        for _ in range(tx_count):
            if end - p < 36:
                return bad(height, ViolationKind.HEADER_HASH_MISMATCH)
            q = p + 32
            stored = data[p:q]
            tx_len = from_bytes(data[q:q + 4], "big")
            p = q + 4
            q = p + tx_len
            if q > end:
                return bad(height, ViolationKind.HEADER_HASH_MISMATCH)
            if tx_ok and sha(data[p:q]).digest() != stored:
                tx_ok = False  # keep parsing so structural errors rank first
            leaves.append(sha(b"\x00" + stored).digest())
            p = q
        if end - p < 4:
            return bad(height, ViolationKind.HEADER_HASH_MISMATCH)
        sig_count = from_bytes(data[p:p + 4], "big")
        p += 4
        sig_start = p
        p += 96 * sig_count
        if p != end:
            return bad(height, ViolationKind.HEADER_HASH_MISMATCH)

        if hdr[9:41] != prev_header_hash:
            return bad(height, ViolationKind.PREV_LINK_BROKEN)
        if not tx_ok:
            return bad(height, ViolationKind.TX_HASH_MISMATCH)

        level = leaves or [ZERO32]  # empty tx list maps to the zero root
        while len(level) > 1:
            if len(level) & 1:
                level.append(level[-1])
            level = [sha(b"\x01" + level[i] + level[i + 1]).digest()
                     for i in range(0, len(level), 2)]
        if level[0] != hdr[41:73]:
            return bad(height, ViolationKind.MERKLE_MISMATCH)

        header_hash = sha(hdr).digest()
        seen = set()
        p = sig_start
        for _ in range(sig_count):
            pubkey = data[p:p + 32]
            sig = data[p + 32:p + 96]
            p += 96
            if pubkey not in validator_keys or pubkey in seen:
                return bad(height, ViolationKind.QUORUM_INVALID)
            if memo_tags is not None:
                tag = blake(pubkey + header_hash + sig,
                            key=memo_key, digest_size=16).digest()
                if tag not in memo_tags and \
                        not memo.check(pubkey, header_hash, sig):
                    return bad(height, ViolationKind.QUORUM_INVALID)
            elif not crypto.verify_sig(pubkey, header_hash, sig):
                return bad(height, ViolationKind.QUORUM_INVALID)
            seen.add(pubkey)
        if len(seen) < quorum:
            return bad(height, ViolationKind.QUORUM_INVALID)

        prev_header_hash = header_hash
        off = end
        height += 1

    if memo is not None:
        memo.flush()
    if height == 0:
        # a chain file must at least contain genesis
        return TamperReport(height=0, kind=ViolationKind.HEADER_HASH_MISMATCH)
    return TamperReport()


class SimValidator:
    """In-process validator: re-validates a proposed block and signs its
    header hash only when every check passes."""

    def __init__(self, keypair: KeyPair):
        self.keypair = keypair

    @property
    def pubkey(self) -> bytes:
        return self.keypair.public_key

    def sign_if_valid(self, block: Block, prev_header: BlockHeader,
                      included_tx_hashes: set[bytes],
                      memo: Optional[SigMemo] = None) -> Optional[bytes]:
        header = block.header
        if header.version != BLOCK_VERSION:
            return None
        if header.height != prev_header.height + 1:
            return None
        if header.prev_hash != prev_header.hash():
            return None
        if not block.txs or len(block.txs) > MAX_BLOCK_TXS:
            return None
        hashes = [tx.tx_hash() for tx in block.txs]
        if len(set(hashes)) != len(hashes) or any(h in included_tx_hashes for h in hashes):
            return None
        if merkle_root(hashes) != header.merkle_root:
            return None
        for tx in block.txs:
            pubkey = bytes.fromhex(tx.issuer_pubkey)
            sig = bytes.fromhex(tx.issuer_signature)
            if memo is not None:
                if not memo.check(pubkey, tx.signing_bytes(), sig):
                    return None
            elif not crypto.verify_sig(pubkey, tx.signing_bytes(), sig):
                return None
        return crypto.sign(self.keypair.secret_key, header.hash())


class Ledger:
    """Single-writer chain manager: pending pool, fee accounts, block
    commitment under quorum, queries, and inclusion proofs.

    All mutating entry points serialize through one lock; reads run
    against committed state.
    """

    def __init__(self, directory: Path, proposer: KeyPair,
                 validators: list[SimValidator], quorum: int,
                 clock=None, memo: Optional[SigMemo] = None):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.chain_path = self.directory / CHAIN_FILE
        self.proposer = proposer
        self.sim_validators = validators
        self.validator_set = ValidatorSet([v.pubkey for v in validators], quorum)
        self.clock = clock or (lambda: int(time.time()))
        self.memo = memo if memo is not None else SigMemo(os.urandom(32))
        self._lock = threading.Lock()

        self.blocks: list[Block] = []
        self.pending: list[AnchorTx] = []
        self._pending_hashes: set[bytes] = set()
        self._included: dict[bytes, tuple[int, int]] = {}  # tx_hash -> (height, index)
        self._balances: dict[str, int] = {}

        if not self.chain_path.exists():
            self._append_block(genesis_block())
        self._load_chain()
        self._load_accounts()

    # -- persistence ------------------------------------------------------

    def _append_block(self, block: Block):
        raw = block.canonical_bytes()
        with open(self.chain_path, "ab") as fh:
            fh.write(len(raw).to_bytes(4, "big") + raw)
            fh.flush()
            os.fsync(fh.fileno())

    def _load_chain(self):
        data = self.chain_path.read_bytes()
        blocks = []
        off = 0
        while off < len(data):
            rec_len = int.from_bytes(data[off:off + 4], "big")
            start, end = off + 4, off + 4 + rec_len
            if end > len(data):
                raise LedgerError("torn chain record; run `ledger verify`")
            blocks.append(_parse_block(data[start:end]))
            off = end
        self.blocks = blocks
        self._included = {}
        for block in blocks:
            for idx, tx in enumerate(block.txs):
                self._included[tx.tx_hash()] = (block.header.height, idx)

    def _accounts_path(self) -> Path:
        return self.directory / ACCOUNTS_FILE

    def _load_accounts(self):
        self._balances = {}
        path = self._accounts_path()
        if path.exists():
            for line in path.read_text().splitlines():
                if not line.strip():
                    continue
                rec = json.loads(line)
                self._balances.setdefault(rec["owner_pubkey"], rec["balance_units"])
        for block in self.blocks:
            for tx in block.txs:
                if tx.issuer_pubkey in self._balances:
                    self._balances[tx.issuer_pubkey] -= tx.fee_units

    # -- accounts ---------------------------------------------------------

    def register_fee_account(self, owner_pubkey_hex: str,
                             balance_units: int = INITIAL_ISSUER_BALANCE):
        with self._lock:
            if owner_pubkey_hex in self._balances:
                return
            with open(self._accounts_path(), "a") as fh:
                fh.write(canonical_json({"balance_units": balance_units,
                                         "owner_pubkey": owner_pubkey_hex}).decode() + "\n")
            self._balances[owner_pubkey_hex] = balance_units

    def balance(self, owner_pubkey_hex: str) -> int:
        return self._balances.get(owner_pubkey_hex, 0)

    def _available_balance(self, owner_pubkey_hex: str) -> int:
        reserved = sum(tx.fee_units for tx in self.pending
                       if tx.issuer_pubkey == owner_pubkey_hex)
        return self.balance(owner_pubkey_hex) - reserved

    # -- chain state ------------------------------------------------------

    @property
    def height(self) -> int:
        return self.blocks[-1].header.height

    def tip_header(self) -> BlockHeader:
        return self.blocks[-1].header

    def get_block(self, height: int) -> Block:
        if not 0 <= height <= self.height:
            raise LedgerError(f"no block at height {height}")
        return self.blocks[height]

    def find_tx(self, tx_hash_hex: str) -> Optional[tuple[int, int, AnchorTx]]:
        try:
            key = bytes.fromhex(tx_hash_hex)
        except ValueError:
            return None
        loc = self._included.get(key)
        if loc is None:
            return None
        height, idx = loc
        return height, idx, self.blocks[height].txs[idx]

    # -- operations -------------------------------------------------------

    def submit_tx(self, tx: AnchorTx, fee_approved: bool) -> str:
        """Admit a transaction to the pending pool; returns the tx hash hex."""
        with self._lock:
            if not fee_approved:
                raise FeeNotApproved("issuer did not approve the anchoring fee")
            tx_hash = tx.tx_hash()
            if tx_hash in self._pending_hashes or tx_hash in self._included:
                raise DuplicateTx(tx_hash.hex())
            pubkey = bytes.fromhex(tx.issuer_pubkey)
            sig = bytes.fromhex(tx.issuer_signature)
            if not self.memo.check(pubkey, tx.signing_bytes(), sig):
                raise BadTxSignature("issuer signature does not verify")
            if self._available_balance(tx.issuer_pubkey) < tx.fee_units:
                raise InsufficientBalance(
                    f"issuer balance below fee of {tx.fee_units} units")
            self.pending.append(tx)
            self._pending_hashes.add(tx_hash)
            return tx_hash.hex()

    def discard_pending(self, tx_hash_hex: str):
        """Withdraw a not-yet-committed transaction (e.g. after a failed
        anchoring pipeline)."""
        with self._lock:
            try:
                key = bytes.fromhex(tx_hash_hex)
            except ValueError:
                return
            if key in self._pending_hashes:
                self._pending_hashes.discard(key)
                self.pending = [tx for tx in self.pending if tx.tx_hash() != key]

    def propose_and_commit_block(self) -> Block:
        """Drain up to MAX_BLOCK_TXS pending txs (FIFO) into the next block,
        collect the validator quorum, append, and debit fees."""
        with self._lock:
            if not self.pending:
                raise EmptyPool("no pending transactions")
            txs = self.pending[:MAX_BLOCK_TXS]
            tip = self.tip_header()
            header = BlockHeader(
                height=tip.height + 1,
                prev_hash=tip.hash(),
                merkle_root=merkle_root([tx.tx_hash() for tx in txs]),
                timestamp=int(self.clock()),
                proposer_pubkey=self.proposer.public_key,
            )
            block = Block(header=header, txs=txs, validator_signatures=[])
            self._collect_validator_signatures(block)
            self._commit_locked(block)
            return block

    def _collect_validator_signatures(self, block: Block):
        """Ask every simulated validator to re-validate and sign; raises
        QuorumNotReached when approvals fall short."""
        included = set(self._included)
        prev_header = self.blocks[block.header.height - 1].header
        header_hash = block.header.hash()
        signatures = []
        for validator in self.sim_validators:
            sig = validator.sign_if_valid(block, prev_header, included, self.memo)
            if sig is not None:
                signatures.append((validator.pubkey, sig))
        if len(signatures) < self.validator_set.quorum:
            raise QuorumNotReached(
                f"{len(signatures)} of {len(self.sim_validators)} validators approved, "
                f"quorum is {self.validator_set.quorum}")
        for pubkey, sig in signatures:
            if not self.memo.check(pubkey, header_hash, sig):
                raise QuorumNotReached("validator returned an invalid signature")
        block.validator_signatures = signatures

    def _commit_locked(self, block: Block):
        self._append_block(block)
        self.memo.flush()
        self.blocks.append(block)
        for idx, tx in enumerate(block.txs):
            tx_hash = tx.tx_hash()
            self._included[tx_hash] = (block.header.height, idx)
            self._pending_hashes.discard(tx_hash)
            if tx.issuer_pubkey in self._balances:
                self._balances[tx.issuer_pubkey] -= tx.fee_units
        self.pending = self.pending[len(block.txs):]

    def scan(self) -> TamperReport:
        return scan_chain_file(self.chain_path, self.validator_set, self.memo)

    def inclusion_proof(self, tx_hash_hex: str) -> tuple[int, list[tuple[bytes, str]]]:
        loc = self.find_tx(tx_hash_hex)
        if loc is None:
            raise UnknownTx(tx_hash_hex)
        height, idx, _ = loc
        block = self.blocks[height]
        path = merkle_path([tx.tx_hash() for tx in block.txs], idx)
        return height, path


def _parse_block(raw: bytes) -> Block:
    if len(raw) < HEADER_LEN + 8:
        raise LedgerError("block record too short")
    hdr = raw[:HEADER_LEN]
    header = BlockHeader(
        version=hdr[0],
        height=int.from_bytes(hdr[1:9], "big"),
        prev_hash=hdr[9:41],
        merkle_root=hdr[41:73],
        timestamp=int.from_bytes(hdr[73:81], "big"),
        proposer_pubkey=hdr[81:113],
    )
    p = HEADER_LEN
    tx_count = int.from_bytes(raw[p:p + 4], "big")
    p += 4
    txs = []
    for _ in range(tx_count):
        stored_hash = raw[p:p + 32]
        tx_len = int.from_bytes(raw[p + 32:p + 36], "big")
        p += 36
        tx = AnchorTx.from_canonical_bytes(raw[p:p + tx_len])
        if tx.tx_hash() != stored_hash:
            raise LedgerError("stored tx hash mismatch; run `ledger verify`")
        txs.append(tx)
        p += tx_len
    sig_count = int.from_bytes(raw[p:p + 4], "big")
    p += 4
    sigs = []
    for _ in range(sig_count):
        sigs.append((raw[p:p + 32], raw[p + 32:p + 96]))
        p += 96
    if p != len(raw):
        raise LedgerError("trailing bytes in block record")
    return Block(header=header, txs=txs, validator_signatures=sigs)


def iter_chain_blocks(path: Path) -> Iterable[Block]:
    data = Path(path).read_bytes()
    off = 0
    while off < len(data):
        rec_len = int.from_bytes(data[off:off + 4], "big")
        yield _parse_block(data[off + 4:off + 4 + rec_len])
        off += 4 + rec_len
