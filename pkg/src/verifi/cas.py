"""Content-addressed object store.

Files are chunked into fixed-size leaves, assembled bottom-up into a
balanced DAG (fanout 32), and every node is stored under the SHA-256 of
its canonical encoding. The root digest is the content identifier (CID):
identical bytes always map to the identical CID, and any retrieval
re-hashes every node it touches.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Union

CHUNK_SIZE = 262_144  # 256 KiB leaf payload cap
FANOUT = 32           # max children per internal node
CID_PREFIX = "vc1:"

_LEAF_TAG = 0x00
_INTERNAL_TAG = 0x01


class CasError(Exception):
    """Base error for object-store operations."""


class NotFound(CasError):
    def __init__(self, cid: "Cid"):
        super().__init__(f"object not found: {cid}")
        self.cid = cid


class CorruptObject(CasError):
    """Stored bytes no longer hash to the object's CID."""

    def __init__(self, cid: "Cid", detail: str = "digest mismatch"):
        super().__init__(f"corrupt object {cid}: {detail}")
        self.cid = cid


@dataclass(frozen=True)
class Cid:
    """32-byte digest of one canonical DAG-node encoding."""

    digest: bytes

    def __post_init__(self):
        if len(self.digest) != 32:
            raise ValueError("Cid digest must be exactly 32 bytes")

    @property
    def hex(self) -> str:
        return self.digest.hex()

    @property
    def text(self) -> str:
        """External rendering: ``vc1:`` + 64 lowercase hex chars."""
        return CID_PREFIX + self.digest.hex()

    @classmethod
    def from_text(cls, text: str) -> "Cid":
        body = text[len(CID_PREFIX):] if text.startswith(CID_PREFIX) else text
        if len(body) != 64:
            raise ValueError(f"malformed CID text: {text!r}")
        try:
            return cls(bytes.fromhex(body))
        except ValueError:
            raise ValueError(f"malformed CID text: {text!r}") from None

    def __str__(self) -> str:
        return self.text


@dataclass(frozen=True)
class LeafNode:
    payload: bytes

    def __post_init__(self):
        if len(self.payload) > CHUNK_SIZE:
            raise ValueError(f"leaf payload exceeds {CHUNK_SIZE} bytes")

    @property
    def subtree_size(self) -> int:
        return len(self.payload)


@dataclass(frozen=True)
class InternalNode:
    # ordered (child cid, child subtree byte count)
    children: tuple[tuple[Cid, int], ...]

    def __post_init__(self):
        if not 2 <= len(self.children) <= FANOUT:
            raise ValueError(f"internal node needs 2..{FANOUT} children, got {len(self.children)}")

    @property
    def subtree_size(self) -> int:
        return sum(size for _, size in self.children)


DagNode = Union[LeafNode, InternalNode]


def chunk_bytes(data: bytes, chunk_size: int = CHUNK_SIZE) -> list[LeafNode]:
    """Split data into fixed-size leaves; empty input yields one empty leaf."""
    if chunk_size < 1:
        raise ValueError("chunk_size must be >= 1")
    if not data:
        return [LeafNode(b"")]
    return [LeafNode(bytes(data[i:i + chunk_size])) for i in range(0, len(data), chunk_size)]


def encode_node(node: DagNode) -> bytes:
    """Canonical node encoding (injective over valid nodes).

    Leaf:     0x00 | u32be payload length | payload
    Internal: 0x01 | u32be child count | per child: 32-byte digest | u64be size
    """
    if isinstance(node, LeafNode):
        return bytes([_LEAF_TAG]) + len(node.payload).to_bytes(4, "big") + node.payload
    parts = [bytes([_INTERNAL_TAG]), len(node.children).to_bytes(4, "big")]
    for cid, size in node.children:
        parts.append(cid.digest)
        parts.append(size.to_bytes(8, "big"))
    return b"".join(parts)


def decode_node(raw: bytes) -> DagNode:
    if not raw:
        raise ValueError("empty node encoding")
    tag = raw[0]
    if tag == _LEAF_TAG:
        if len(raw) < 5:
            raise ValueError("truncated leaf encoding")
        n = int.from_bytes(raw[1:5], "big")
        if len(raw) != 5 + n:
            raise ValueError("leaf length field does not match payload")
        return LeafNode(raw[5:])
    if tag == _INTERNAL_TAG:
        if len(raw) < 5:
            raise ValueError("truncated internal encoding")
        count = int.from_bytes(raw[1:5], "big")
        if len(raw) != 5 + count * 40:
            raise ValueError("internal child section length mismatch")
        children = []
        off = 5
        for _ in range(count):
            digest = raw[off:off + 32]
            size = int.from_bytes(raw[off + 32:off + 40], "big")
            children.append((Cid(digest), size))
            off += 40
        return InternalNode(tuple(children))
    raise ValueError(f"unknown node tag 0x{tag:02x}")


def cid_of(node: DagNode) -> Cid:
    return Cid(hashlib.sha256(encode_node(node)).digest())


def _build_dag(data: bytes, sink) -> Cid:
    """Fold leaves into internal nodes (32 at a time, bottom-up) until one
    root remains; `sink` receives every node and returns its Cid. A lone
    trailing node rides up to the next level unchanged."""
    level: list[tuple[Cid, int]] = [(sink(leaf), leaf.subtree_size)
                                    for leaf in chunk_bytes(data)]
    while len(level) > 1:
        grouped = []
        for i in range(0, len(level), FANOUT):
            group = level[i:i + FANOUT]
            if len(group) == 1:
                grouped.append(group[0])
                continue
            node = InternalNode(tuple(group))
            grouped.append((sink(node), node.subtree_size))
        level = grouped
    return level[0][0]


def root_cid(data: bytes) -> Cid:
    """CID the data would get from `ObjectStore.put`, without storing."""
    return _build_dag(data, cid_of)


@dataclass
class IntegrityReport:
    corrupt: list[Cid] = field(default_factory=list)
    missing: list[Cid] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.corrupt and not self.missing


class ObjectStore:
    """Filesystem object store keyed by CID under two-level hex fanout.

    Layout: ``<root>/<hex[0:2]>/<hex[2:4]>/<hex>`` where each file holds
    exactly the canonical node encoding. Writes are temp+rename atomic, so
    concurrent readers never see partial objects; re-putting existing
    content is a no-op.
    """

    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, cid: Cid) -> Path:
        h = cid.hex
        return self.root / h[:2] / h[2:4] / h

    def put_node(self, node: DagNode) -> Cid:
        raw = encode_node(node)
        cid = Cid(hashlib.sha256(raw).digest())
        path = self._path(cid)
        if path.exists():
            return cid
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(f".tmp-{os.getpid()}-{os.urandom(6).hex()}")
        tmp.write_bytes(raw)
        os.replace(tmp, path)
        return cid

    def put(self, data: bytes) -> Cid:
        """Store data and return its root CID.

        Leaves are grouped 32 at a time into internal nodes, level by
        level, until a single root remains; a single-chunk input returns
        the bare leaf CID with no internal wrapper.
        """
        return _build_dag(data, self.put_node)

    def _read_node(self, cid: Cid) -> DagNode:
        path = self._path(cid)
        try:
            raw = path.read_bytes()
        except FileNotFoundError:
            raise NotFound(cid) from None
        if hashlib.sha256(raw).digest() != cid.digest:
            raise CorruptObject(cid)
        try:
            return decode_node(raw)
        except ValueError as exc:
            raise CorruptObject(cid, f"undecodable encoding: {exc}") from None

    def get(self, cid: Cid) -> bytes:
        """Retrieve and verify the full byte sequence under a root CID."""
        node = self._read_node(cid)
        if isinstance(node, LeafNode):
            return node.payload
        out = []
        for child_cid, size in node.children:
            part = self.get(child_cid)
            if len(part) != size:
                raise CorruptObject(child_cid, "subtree size mismatch")
            out.append(part)
        return b"".join(out)

    def __contains__(self, cid: Cid) -> bool:
        return self._path(cid).exists()

    def iter_cids(self) -> Iterable[Cid]:
        if not self.root.exists():
            return
        for first in sorted(self.root.iterdir()):
            if not first.is_dir():
                continue
            for second in sorted(first.iterdir()):
                if not second.is_dir():
                    continue
                for obj in sorted(second.iterdir()):
                    if len(obj.name) == 64:
                        yield Cid(bytes.fromhex(obj.name))

    def object_count(self) -> int:
        return sum(1 for _ in self.iter_cids())

    def verify(self) -> IntegrityReport:
        """Exhaustively re-hash every object and check child presence."""
        report = IntegrityReport()
        internals: list[InternalNode] = []
        for cid in self.iter_cids():
            raw = self._path(cid).read_bytes()
            if hashlib.sha256(raw).digest() != cid.digest:
                report.corrupt.append(cid)
                continue
            try:
                node = decode_node(raw)
            except ValueError:
                report.corrupt.append(cid)
                continue
            if isinstance(node, InternalNode):
                internals.append(node)
        seen_missing = set()
        for node in internals:
            for child_cid, _ in node.children:
                if child_cid.digest not in seen_missing and child_cid not in self:
                    seen_missing.add(child_cid.digest)
                    report.missing.append(child_cid)
        return report


def verify_object_store(store: ObjectStore) -> IntegrityReport:
    return store.verify()
