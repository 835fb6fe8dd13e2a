"""Role-based certificate lifecycle: upload, admin verification, anchoring,
access grants, company viewing with full proof re-verification, and
notifications.

Certificates wait as plaintext files in a pending area until an admin
decides; approval runs the anchoring pipeline (store in CAS, encrypt the
CID with the applicant's vault key, sign and submit the anchor tx, commit
a block) and erases the plaintext, so after a decision the only byte copy
lives in the object store.
"""

from __future__ import annotations

import hashlib
import hmac
import os
import threading
import time
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

from . import cas, config, crypto, ledger
from .cas import Cid, ObjectStore
from .crypto import KeyPair, SymmetricKey, TokenClaims
from .storage import RecordLog

MAX_FILE_BYTES = 16 * 1024 * 1024
PBKDF2_ITERATIONS = 100_000


class Role:
    APPLICANT = "Applicant"
    COMPANY = "Company"
    ADMIN = "Admin"


class CertState:
    PENDING = "PendingVerification"
    UNDER_REVIEW = "UnderReview"
    VERIFIED = "Verified"
    REJECTED = "Rejected"


class RequestState:
    PENDING = "Pending"
    GRANTED = "Granted"
    DENIED = "Denied"


class NotificationKind:
    VERIFICATION_REQUESTED = "VerificationRequested"
    VERIFICATION_DECIDED = "VerificationDecided"
    ACCESS_REQUESTED = "AccessRequested"
    ACCESS_DECIDED = "AccessDecided"
    TAMPER_ALERT = "TamperAlert"


class WorkflowError(Exception):
    pass


class DuplicateUser(WorkflowError):
    pass


class BadCredentials(WorkflowError):
    pass


class Unauthorized(WorkflowError):
    """Caller's role or identity does not permit the operation."""


class Forbidden(WorkflowError):
    """Company has no grant for the certificate."""


class EmptyFile(WorkflowError):
    pass


class TooLarge(WorkflowError):
    pass


class WrongState(WorkflowError):
    pass


class NotFound(WorkflowError):
    pass


class DuplicatePending(WorkflowError):
    pass


class AnchorFailed(WorkflowError):
    """Ledger rejected the anchoring pipeline; certificate stays UnderReview."""


class TamperDetected(WorkflowError):
    """Verification of stored bytes or chain commitments failed during a view."""


def _hash_password(password: str, salt: bytes) -> bytes:
    return hashlib.pbkdf2_hmac("sha256", password.encode("utf-8"), salt, PBKDF2_ITERATIONS)


@dataclass
class ProofBundle:
    tx: ledger.AnchorTx
    tx_hash: str
    height: int
    merkle_path: list[tuple[bytes, str]]
    header: ledger.BlockHeader
    validator_signatures: list[tuple[bytes, bytes]]
    quorum: int

    def to_response(self) -> dict:
        return {
            "tx": self.tx._fields(with_signature=True),
            "tx_hash": self.tx_hash,
            "height": self.height,
            "merkle_path": [{"sibling": sib.hex(), "side": side}
                            for sib, side in self.merkle_path],
            "header": {
                "version": self.header.version,
                "height": self.header.height,
                "prev_hash": self.header.prev_hash.hex(),
                "merkle_root": self.header.merkle_root.hex(),
                "timestamp": self.header.timestamp,
                "proposer_pubkey": self.header.proposer_pubkey.hex(),
                "block_hash": self.header.hash().hex(),
            },
            "validator_signatures": [{"validator_pubkey": pk.hex(), "signature": sig.hex()}
                                     for pk, sig in self.validator_signatures],
            "quorum": self.quorum,
            "verified": True,
        }


class CredentialService:
    """Single orchestrator over the user vault, pending store, object store,
    and ledger. Mutations serialize through one lock; the approve pipeline
    holds it across all steps so observers see UnderReview or Verified,
    never an intermediate."""

    def __init__(self, paths: config.Paths, token_secret: bytes,
                 object_store: ObjectStore, chain: ledger.Ledger,
                 clock: Optional[Callable[[], float]] = None,
                 id_factory: Optional[Callable[[], str]] = None,
                 rng: Optional[Callable[[int], bytes]] = None,
                 token_ttl: int = crypto.DEFAULT_TOKEN_TTL):
        self.paths = paths
        self.token_secret = token_secret
        self.store = object_store
        self.chain = chain
        self.clock = clock or time.time
        self.id_factory = id_factory or (lambda: uuid.uuid4().hex)
        self.rng = rng or os.urandom
        self.token_ttl = token_ttl
        self._lock = threading.RLock()

        db = paths.db_dir
        self.users = RecordLog(db / "users.log", "user_id")
        self.certs = RecordLog(db / "certificates.log", "certificate_id")
        self.requests = RecordLog(db / "access_requests.log", "request_id")
        self.notifications = RecordLog(db / "notifications.log", "notification_id")
        paths.pending_dir.mkdir(parents=True, exist_ok=True)

    # -- accounts ---------------------------------------------------------

    def register_user(self, user_id: str, role: str, display_name: str,
                      password: str) -> dict:
        if role not in (Role.APPLICANT, Role.COMPANY):
            raise WorkflowError(
                f"self-registration is limited to Applicant and Company, not {role!r}")
        return self._create_account(user_id, role, display_name, password)

    def create_admin(self, user_id: str, display_name: str, password: str) -> dict:
        """Admin bootstrap path (CLI only); seeds the issuer fee account."""
        account = self._create_account(user_id, Role.ADMIN, display_name, password)
        self.chain.register_fee_account(account["signing_pubkey"])
        return account

    def _create_account(self, user_id: str, role: str, display_name: str,
                        password: str) -> dict:
        with self._lock:
            if not user_id or not user_id.strip():
                raise WorkflowError("user_id must be non-empty")
            if user_id in self.users:
                raise DuplicateUser(user_id)
            salt = self.rng(16)
            record = {
                "user_id": user_id,
                "role": role,
                "display_name": display_name,
                "password_salt": salt.hex(),
                "password_hash": _hash_password(password, salt).hex(),
            }
            if role in (Role.APPLICANT, Role.ADMIN):
                keypair = crypto.keygen(self.rng(32))
                record["signing_seed"] = keypair.secret_key.hex()
                record["signing_pubkey"] = keypair.public_key.hex()
            if role == Role.APPLICANT:
                record["vault_key"] = self.rng(32).hex()
            self.users.append(record)
            return record

    def authenticate(self, user_id: str, password: str) -> str:
        user = self.users.get(user_id)
        if user is None:
            raise BadCredentials("unknown user or wrong password")
        expected = bytes.fromhex(user["password_hash"])
        candidate = _hash_password(password, bytes.fromhex(user["password_salt"]))
        if not hmac.compare_digest(candidate, expected):
            raise BadCredentials("unknown user or wrong password")
        return crypto.issue_token(self.token_secret, sub=user_id, role=user["role"],
                                  ttl_seconds=self.token_ttl, now=self.clock())

    def verify_token(self, wire: str) -> TokenClaims:
        return crypto.verify_token(self.token_secret, wire, now=self.clock())

    def _require_role(self, claims: TokenClaims, *roles: str) -> dict:
        if claims.role not in roles:
            raise Unauthorized(f"requires role in {roles}, token carries {claims.role!r}")
        user = self.users.get(claims.sub)
        if user is None or user["role"] != claims.role:
            raise Unauthorized("token subject no longer matches an account")
        return user

    def _user_keypair(self, user: dict) -> KeyPair:
        return crypto.keygen(bytes.fromhex(user["signing_seed"]))

    def _vault_key(self, user: dict) -> SymmetricKey:
        return SymmetricKey(bytes.fromhex(user["vault_key"]))

    # -- notifications ----------------------------------------------------

    def _notify(self, recipient_id: str, kind: str, payload: str):
        self.notifications.append({
            "notification_id": self.id_factory(),
            "recipient_id": recipient_id,
            "kind": kind,
            "payload": payload,
            "created_at": int(self.clock()),
            "read": False,
        })

    def _notify_admins(self, kind: str, payload: str):
        for user in self.users.values():
            if user["role"] == Role.ADMIN:
                self._notify(user["user_id"], kind, payload)

    def list_notifications(self, claims: TokenClaims) -> list[dict]:
        self._require_role(claims, Role.APPLICANT, Role.COMPANY, Role.ADMIN)
        mine = [n for n in self.notifications.values() if n["recipient_id"] == claims.sub]
        mine.sort(key=lambda n: (-n["created_at"], n["notification_id"]))
        return mine

    def mark_read(self, claims: TokenClaims, notification_id: str) -> dict:
        self._require_role(claims, Role.APPLICANT, Role.COMPANY, Role.ADMIN)
        with self._lock:
            record = self.notifications.get(notification_id)
            if record is None or record["recipient_id"] != claims.sub:
                raise NotFound(f"no notification {notification_id}")
            if not record["read"]:
                record = dict(record, read=True)
                self.notifications.append(record)
            return record

    # -- certificate lifecycle --------------------------------------------

    def _pending_path(self, certificate_id: str) -> Path:
        return self.paths.pending_dir / f"{certificate_id}.bin"

    def upload_certificate(self, claims: TokenClaims, title: str,
                           issuer_name: str, file_bytes: bytes) -> dict:
        self._require_role(claims, Role.APPLICANT)
        if len(file_bytes) == 0:
            raise EmptyFile("certificate file is empty")
        if len(file_bytes) > MAX_FILE_BYTES:
            raise TooLarge(f"certificate exceeds {MAX_FILE_BYTES} bytes")
        with self._lock:
            certificate_id = self.id_factory()
            receipt_id = self.id_factory()
            self._pending_path(certificate_id).write_bytes(file_bytes)
            record = {
                "certificate_id": certificate_id,
                "applicant_id": claims.sub,
                "title": title,
                "issuer_name": issuer_name,
                "state": CertState.PENDING,
                "cid": None,
                "anchor_tx_hash": None,
                "share_code": None,
                "upload_receipt_id": receipt_id,
                "decision_note": None,
            }
            self.certs.append(record)
            self._notify_admins(NotificationKind.VERIFICATION_REQUESTED,
                                f"certificate {certificate_id} ({title}) awaits verification")
            return record

    def list_certificates(self, claims: TokenClaims) -> list[dict]:
        self._require_role(claims, Role.APPLICANT)
        return sorted((c for c in self.certs.values() if c["applicant_id"] == claims.sub),
                      key=lambda c: c["certificate_id"])

    def admin_queue(self, claims: TokenClaims) -> list[dict]:
        self._require_role(claims, Role.ADMIN)
        queue = [c for c in self.certs.values()
                 if c["state"] in (CertState.PENDING, CertState.UNDER_REVIEW)]
        return sorted(queue, key=lambda c: c["certificate_id"])

    def admin_claim(self, claims: TokenClaims, certificate_id: str) -> dict:
        self._require_role(claims, Role.ADMIN)
        with self._lock:
            record = self.certs.get(certificate_id)
            if record is None:
                raise NotFound(f"no certificate {certificate_id}")
            if record["state"] != CertState.PENDING:
                raise WrongState(f"claim requires PendingVerification, found {record['state']}")
            record = dict(record, state=CertState.UNDER_REVIEW)
            self.certs.append(record)
            return record

    def admin_decide(self, claims: TokenClaims, certificate_id: str, decision: str,
                     note: str = "", fee_approved: bool = False) -> dict:
        admin = self._require_role(claims, Role.ADMIN)
        if decision not in ("Approve", "Reject"):
            raise WorkflowError(f"decision must be Approve or Reject, got {decision!r}")
        with self._lock:
            record = self.certs.get(certificate_id)
            if record is None:
                raise NotFound(f"no certificate {certificate_id}")
            if record["state"] != CertState.UNDER_REVIEW:
                raise WrongState(f"decision requires UnderReview, found {record['state']}")
            if decision == "Reject":
                record = dict(record, state=CertState.REJECTED, decision_note=note)
                self.certs.append(record)
                self._pending_path(certificate_id).unlink(missing_ok=True)
                self._notify(record["applicant_id"], NotificationKind.VERIFICATION_DECIDED,
                             f"certificate {certificate_id} was rejected")
                return record
            # Approve: the fee confirmation is an explicit admin action
            if not fee_approved:
                raise ledger.FeeNotApproved("admin did not confirm the anchoring fee")
            return self._approve_locked(admin, record, note)

    def _approve_locked(self, admin: dict, record: dict, note: str) -> dict:
        certificate_id = record["certificate_id"]
        applicant = self.users.get(record["applicant_id"])
        file_bytes = self._pending_path(certificate_id).read_bytes()
        tx_hash: Optional[str] = None
        try:
            cid = self.store.put(file_bytes)
            encrypted = crypto.encrypt_cid(self._vault_key(applicant), cid.digest)
            tx = ledger.make_anchor_tx(self._user_keypair(admin),
                                       applicant_id=record["applicant_id"],
                                       certificate_id=certificate_id,
                                       encrypted_cid=encrypted,
                                       timestamp=int(self.clock()))
            tx_hash = self.chain.submit_tx(tx, fee_approved=True)
            self.chain.propose_and_commit_block()
        except ledger.LedgerError as exc:
            if tx_hash is not None:
                self.chain.discard_pending(tx_hash)
            raise AnchorFailed(str(exc)) from exc
        record = dict(record, state=CertState.VERIFIED, cid=cid.text,
                      anchor_tx_hash=tx_hash, share_code=tx_hash, decision_note=note)
        self.certs.append(record)
        self._pending_path(certificate_id).unlink(missing_ok=True)
        self._notify(record["applicant_id"], NotificationKind.VERIFICATION_DECIDED,
                     f"certificate {certificate_id} verified; share code {tx_hash}")
        return record

    # -- company-side flows -------------------------------------------------

    def _find_by_share_code(self, share_code: str) -> Optional[dict]:
        for record in self.certs.values():
            if record["share_code"] == share_code and record["state"] == CertState.VERIFIED:
                return record
        return None

    def search_by_share_code(self, claims: TokenClaims, share_code: str) -> dict:
        self._require_role(claims, Role.COMPANY)
        record = self._find_by_share_code(share_code)
        if record is None:
            raise NotFound("no anchored certificate under that share code")
        applicant = self.users.get(record["applicant_id"])
        located = self.chain.find_tx(record["anchor_tx_hash"])
        if located is None:
            raise NotFound("no anchored certificate under that share code")
        height, _, _ = located
        return {
            "applicant_display_name": applicant["display_name"],
            "title": record["title"],
            "issuer_name": record["issuer_name"],
            "state": record["state"],
            "anchored_height": height,
        }

    def request_access(self, claims: TokenClaims, share_code: str) -> dict:
        self._require_role(claims, Role.COMPANY)
        with self._lock:
            record = self._find_by_share_code(share_code)
            if record is None:
                raise NotFound("no anchored certificate under that share code")
            for existing in self.requests.values():
                if (existing["company_id"] == claims.sub
                        and existing["certificate_id"] == record["certificate_id"]
                        and existing["state"] == RequestState.PENDING):
                    raise DuplicatePending(existing["request_id"])
            request = {
                "request_id": self.id_factory(),
                "company_id": claims.sub,
                "applicant_id": record["applicant_id"],
                "certificate_id": record["certificate_id"],
                "state": RequestState.PENDING,
                "created_at": int(self.clock()),
                "decided_at": None,
            }
            self.requests.append(request)
            company = self.users.get(claims.sub)
            self._notify(record["applicant_id"], NotificationKind.ACCESS_REQUESTED,
                         f"{company['display_name']} requests access to certificate "
                         f"{record['certificate_id']}")
            return request

    def list_access_requests(self, claims: TokenClaims) -> list[dict]:
        self._require_role(claims, Role.APPLICANT, Role.COMPANY)
        field = "applicant_id" if claims.role == Role.APPLICANT else "company_id"
        mine = [r for r in self.requests.values() if r[field] == claims.sub]
        return sorted(mine, key=lambda r: (r["created_at"], r["request_id"]))

    def decide_access(self, claims: TokenClaims, request_id: str, decision: str) -> dict:
        self._require_role(claims, Role.APPLICANT)
        if decision not in ("Grant", "Deny"):
            raise WorkflowError(f"decision must be Grant or Deny, got {decision!r}")
        with self._lock:
            request = self.requests.get(request_id)
            if request is None:
                raise NotFound(f"no access request {request_id}")
            if request["applicant_id"] != claims.sub:
                raise Unauthorized("only the certificate's applicant may decide this request")
            if request["state"] != RequestState.PENDING:
                raise WrongState(f"decision requires Pending, found {request['state']}")
            new_state = RequestState.GRANTED if decision == "Grant" else RequestState.DENIED
            request = dict(request, state=new_state, decided_at=int(self.clock()))
            self.requests.append(request)
            self._notify(request["company_id"], NotificationKind.ACCESS_DECIDED,
                         f"access {new_state.lower()} for certificate {request['certificate_id']}")
            return request

    def _has_grant(self, company_id: str, certificate_id: str) -> bool:
        return any(r["company_id"] == company_id
                   and r["certificate_id"] == certificate_id
                   and r["state"] == RequestState.GRANTED
                   for r in self.requests.values())

    def view_certificate(self, claims: TokenClaims, share_code: str) -> tuple[bytes, ProofBundle]:
        """Return the original bytes plus a proof bundle, re-verifying the
        whole path: anchor tx signature, merkle inclusion, header hash,
        quorum signatures, and the object store's own hashes."""
        self._require_role(claims, Role.COMPANY)
        record = self._find_by_share_code(share_code)
        if record is None:
            raise NotFound("no anchored certificate under that share code")
        if not self._has_grant(claims.sub, record["certificate_id"]):
            raise Forbidden("the applicant has not granted access to this certificate")

        applicant = self.users.get(record["applicant_id"])
        try:
            located = self.chain.find_tx(record["anchor_tx_hash"])
            if located is None:
                raise TamperDetected("anchor transaction missing from the chain")
            height, _, tx = located
            if not crypto.verify_sig(bytes.fromhex(tx.issuer_pubkey),
                                     tx.signing_bytes(),
                                     bytes.fromhex(tx.issuer_signature)):
                raise TamperDetected("anchor transaction signature does not verify")
            block = self.chain.get_block(height)
            header = block.header
            _, path = self.chain.inclusion_proof(record["anchor_tx_hash"])
            if not ledger.verify_inclusion(tx.tx_hash(), path, header.merkle_root):
                raise TamperDetected("merkle inclusion proof does not verify")
            header_hash = header.hash()
            known = set(self.chain.validator_set.pubkeys)
            seen = set()
            for pubkey, sig in block.validator_signatures:
                if (pubkey not in known or pubkey in seen
                        or not crypto.verify_sig(pubkey, header_hash, sig)):
                    raise TamperDetected("validator quorum does not verify")
                seen.add(pubkey)
            if len(seen) < self.chain.validator_set.quorum:
                raise TamperDetected("validator quorum does not verify")

            encrypted = crypto.Ciphertext(nonce=bytes.fromhex(tx.encrypted_cid_nonce),
                                          body=bytes.fromhex(tx.encrypted_cid_body))
            cid = Cid(crypto.decrypt_cid(self._vault_key(applicant), encrypted))
            file_bytes = self.store.get(cid)
        except (TamperDetected, cas.CasError, crypto.AuthFailure) as exc:
            self._notify_admins(NotificationKind.TAMPER_ALERT,
                                f"verification failed while serving certificate "
                                f"{record['certificate_id']}: {exc}")
            raise TamperDetected(str(exc)) from exc

        bundle = ProofBundle(tx=tx, tx_hash=record["anchor_tx_hash"], height=height,
                             merkle_path=path, header=header,
                             validator_signatures=block.validator_signatures,
                             quorum=self.chain.validator_set.quorum)
        return file_bytes, bundle

    # -- ledger integration -------------------------------------------------

    def scan_ledger(self) -> ledger.TamperReport:
        report = self.chain.scan()
        if not report.ok:
            self._notify_admins(NotificationKind.TAMPER_ALERT,
                                f"ledger scan found {report.kind} at height {report.height}")
        return report


def open_service(data_dir: Path, *, clock=None, id_factory=None, rng=None,
                 token_ttl: int = crypto.DEFAULT_TOKEN_TTL) -> CredentialService:
    """Assemble a service over an initialized data directory."""
    paths = config.require_initialized(Path(data_dir))
    token_secret = config.load_token_secret(paths)
    chain = config.open_ledger(paths, clock=clock)
    store = ObjectStore(paths.cas_dir)
    return CredentialService(paths, token_secret, store, chain,
                             clock=clock, id_factory=id_factory, rng=rng,
                             token_ttl=token_ttl)
