"""REST boundary: auth, certificate workflow, access grants, ledger reads.

Responses use one canonical text form (sorted-key JSON, bytes as base64).
Status mapping: 401 missing/invalid token, 403 wrong role or no grant,
404 unknown entity, 409 state conflict, 422 validation; integrity
failures surface as 500 with stable codes.
"""

from __future__ import annotations

import base64
import json
from pathlib import Path
from typing import Any, Optional

from fastapi import Depends, FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import crypto, ledger, workflow
from .workflow import CredentialService


class CanonicalJSONResponse(JSONResponse):
    def render(self, content: Any) -> bytes:
        return json.dumps(content, sort_keys=True, separators=(",", ":"),
                          ensure_ascii=False).encode("utf-8")


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


# most-specific first; the handler walks this list with isinstance
ERROR_MAP: list[tuple[type, int, str]] = [
    (workflow.DuplicateUser, 409, "DUPLICATE_USER"),
    (workflow.BadCredentials, 401, "BAD_CREDENTIALS"),
    (workflow.Unauthorized, 403, "FORBIDDEN_ROLE"),
    (workflow.Forbidden, 403, "FORBIDDEN"),
    (workflow.EmptyFile, 422, "EMPTY_FILE"),
    (workflow.TooLarge, 422, "TOO_LARGE"),
    (workflow.WrongState, 409, "WRONG_STATE"),
    (workflow.NotFound, 404, "NOT_FOUND"),
    (workflow.DuplicatePending, 409, "DUPLICATE_PENDING"),
    (workflow.AnchorFailed, 500, "ANCHOR_FAILED"),
    (workflow.TamperDetected, 500, "TAMPER_DETECTED"),
    (ledger.FeeNotApproved, 422, "FEE_NOT_APPROVED"),
    (ledger.InsufficientBalance, 409, "INSUFFICIENT_BALANCE"),
    (ledger.BadTxSignature, 422, "BAD_TX_SIGNATURE"),
    (ledger.DuplicateTx, 409, "DUPLICATE_TX"),
    (ledger.UnknownTx, 404, "UNKNOWN_TX"),
    (ledger.QuorumNotReached, 500, "QUORUM_NOT_REACHED"),
    (workflow.WorkflowError, 422, "INVALID_REQUEST"),
    (ledger.LedgerError, 500, "LEDGER_ERROR"),
]


class RegisterBody(BaseModel):
    user_id: str
    role: str
    display_name: str
    password: str


class LoginBody(BaseModel):
    user_id: str
    password: str


class UploadBody(BaseModel):
    title: str
    issuer_name: str
    file_b64: str


class AdminDecisionBody(BaseModel):
    decision: str
    note: str = ""
    fee_approved: bool = False


class AccessRequestBody(BaseModel):
    share_code: str


class AccessDecisionBody(BaseModel):
    decision: str


def get_service(request: Request) -> CredentialService:
    return request.app.state.service


def get_claims(request: Request) -> crypto.TokenClaims:
    header = request.headers.get("Authorization", "")
    if not header.startswith("Bearer "):
        raise ApiError(401, "MISSING_TOKEN", "Authorization: Bearer token required")
    wire = header[len("Bearer "):].strip()
    service = get_service(request)
    try:
        return service.verify_token(wire)
    except crypto.Expired:
        raise ApiError(401, "TOKEN_EXPIRED", "token expired") from None
    except crypto.BadSignature:
        raise ApiError(401, "BAD_TOKEN_SIGNATURE", "token signature invalid") from None
    except crypto.CryptoError:
        raise ApiError(401, "MALFORMED_TOKEN", "token unreadable") from None


def _decode_b64(field: str, value: str) -> bytes:
    try:
        return base64.b64decode(value, validate=True)
    except Exception:
        raise ApiError(422, "INVALID_BASE64", f"{field} is not valid base64") from None


def _page(items: list, offset: int, limit: int) -> dict:
    return {"items": items[offset:offset + limit], "total": len(items)}


def _public_user(record: dict) -> dict:
    return {"user_id": record["user_id"], "role": record["role"],
            "display_name": record["display_name"]}


def _cert_view(record: dict) -> dict:
    return {
        "certificate_id": record["certificate_id"],
        "title": record["title"],
        "issuer_name": record["issuer_name"],
        "state": record["state"],
        "share_code": record["share_code"],
        "upload_receipt_id": record["upload_receipt_id"],
        "decision_note": record["decision_note"],
    }


def create_app(service: CredentialService,
               static_dir: Optional[Path] = None) -> FastAPI:
    app = FastAPI(title="verifi", default_response_class=CanonicalJSONResponse)
    app.state.service = service

    app.add_middleware(
        CORSMiddleware,
        allow_origin_regex=r"^https?://(localhost|127\.0\.0\.1)(:\d+)?$",
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(ApiError)
    async def handle_api_error(request: Request, exc: ApiError):
        return CanonicalJSONResponse({"code": exc.code, "message": exc.message},
                                     status_code=exc.status)

    async def handle_domain_error(request: Request, exc: Exception):
        for klass, status, code in ERROR_MAP:
            if isinstance(exc, klass):
                return CanonicalJSONResponse({"code": code, "message": str(exc)},
                                             status_code=status)
        raise exc

    app.add_exception_handler(workflow.WorkflowError, handle_domain_error)
    app.add_exception_handler(ledger.LedgerError, handle_domain_error)

    @app.exception_handler(RequestValidationError)
    async def handle_validation(request: Request, exc: RequestValidationError):
        return CanonicalJSONResponse({"code": "VALIDATION", "message": str(exc)},
                                     status_code=422)

    # -- auth ------------------------------------------------------------

    @app.post("/auth/register")
    def register(body: RegisterBody):
        record = service.register_user(body.user_id, body.role,
                                       body.display_name, body.password)
        return _public_user(record)

    @app.post("/auth/login")
    def login(body: LoginBody):
        token = service.authenticate(body.user_id, body.password)
        user = service.users.get(body.user_id)
        return {"token": token, **_public_user(user)}

    # -- applicant -------------------------------------------------------

    @app.post("/certificates")
    def upload(body: UploadBody, claims=Depends(get_claims)):
        file_bytes = _decode_b64("file_b64", body.file_b64)
        record = service.upload_certificate(claims, body.title,
                                            body.issuer_name, file_bytes)
        return {"certificate_id": record["certificate_id"],
                "upload_receipt_id": record["upload_receipt_id"]}

    @app.get("/certificates")
    def own_certificates(claims=Depends(get_claims),
                         offset: int = Query(0, ge=0),
                         limit: int = Query(50, ge=1, le=100)):
        items = [_cert_view(c) for c in service.list_certificates(claims)]
        return _page(items, offset, limit)

    # -- admin -----------------------------------------------------------

    @app.get("/admin/queue")
    def admin_queue(claims=Depends(get_claims),
                    offset: int = Query(0, ge=0),
                    limit: int = Query(50, ge=1, le=100)):
        items = []
        for record in service.admin_queue(claims):
            applicant = service.users.get(record["applicant_id"])
            items.append({
                "certificate_id": record["certificate_id"],
                "applicant_id": record["applicant_id"],
                "applicant_display_name": applicant["display_name"],
                "title": record["title"],
                "issuer_name": record["issuer_name"],
                "state": record["state"],
            })
        return _page(items, offset, limit)

    @app.post("/admin/queue/{certificate_id}/claim")
    def admin_claim(certificate_id: str, claims=Depends(get_claims)):
        record = service.admin_claim(claims, certificate_id)
        return {"certificate_id": record["certificate_id"], "state": record["state"]}

    @app.post("/admin/queue/{certificate_id}/decision")
    def admin_decide(certificate_id: str, body: AdminDecisionBody,
                     claims=Depends(get_claims)):
        record = service.admin_decide(claims, certificate_id, body.decision,
                                      note=body.note, fee_approved=body.fee_approved)
        return _cert_view(record)

    # -- company ---------------------------------------------------------

    @app.get("/search/{share_code}")
    def search(share_code: str, claims=Depends(get_claims)):
        return service.search_by_share_code(claims, share_code)

    @app.get("/certificates/{share_code}/content")
    def view_content(share_code: str, claims=Depends(get_claims)):
        file_bytes, bundle = service.view_certificate(claims, share_code)
        return {"file_b64": base64.b64encode(file_bytes).decode("ascii"),
                "proof": bundle.to_response()}

    # -- access requests ---------------------------------------------------

    def _request_view(record: dict) -> dict:
        cert = service.certs.get(record["certificate_id"])
        company = service.users.get(record["company_id"])
        return {
            "request_id": record["request_id"],
            "state": record["state"],
            "created_at": record["created_at"],
            "decided_at": record["decided_at"],
            "company_display_name": company["display_name"],
            "certificate_title": cert["title"],
            "share_code": cert["share_code"],
        }

    @app.post("/access-requests")
    def request_access(body: AccessRequestBody, claims=Depends(get_claims)):
        record = service.request_access(claims, body.share_code)
        return _request_view(record)

    @app.get("/access-requests")
    def list_access_requests(claims=Depends(get_claims),
                             offset: int = Query(0, ge=0),
                             limit: int = Query(50, ge=1, le=100)):
        items = [_request_view(r) for r in service.list_access_requests(claims)]
        return _page(items, offset, limit)

    @app.post("/access-requests/{request_id}/decision")
    def decide_access(request_id: str, body: AccessDecisionBody,
                      claims=Depends(get_claims)):
        record = service.decide_access(claims, request_id, body.decision)
        return _request_view(record)

    # -- notifications -----------------------------------------------------

    @app.get("/notifications")
    def notifications(claims=Depends(get_claims),
                      offset: int = Query(0, ge=0),
                      limit: int = Query(50, ge=1, le=100)):
        items = service.list_notifications(claims)
        return _page(items, offset, limit)

    @app.post("/notifications/{notification_id}/read")
    def mark_read(notification_id: str, claims=Depends(get_claims)):
        record = service.mark_read(claims, notification_id)
        return {"notification_id": record["notification_id"], "read": record["read"]}

    # -- public ledger reads ------------------------------------------------

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "chain_height": service.chain.height}

    @app.get("/ledger/blocks")
    def blocks(from_: Optional[int] = Query(None, alias="from", ge=0),
               to: Optional[int] = Query(None, ge=0)):
        height = service.chain.height
        hi = min(to if to is not None else height, height)
        lo = max(from_ if from_ is not None else hi - 9, 0)
        if lo > hi:
            raise ApiError(422, "BAD_RANGE", "from exceeds to")
        if hi - lo + 1 > 100:
            raise ApiError(422, "BAD_RANGE", "range spans more than 100 blocks")
        items = []
        for h in range(lo, hi + 1):
            block = service.chain.get_block(h)
            items.append({
                "height": h,
                "block_hash": block.header.hash().hex(),
                "prev_hash": block.header.prev_hash.hex(),
                "merkle_root": block.header.merkle_root.hex(),
                "timestamp": block.header.timestamp,
                "proposer_pubkey": block.header.proposer_pubkey.hex(),
                "tx_hashes": [tx.tx_hash().hex() for tx in block.txs],
                "validator_count": len(block.validator_signatures),
            })
        return {"items": items, "chain_height": height}

    @app.get("/ledger/tx/{tx_hash}")
    def ledger_tx(tx_hash: str):
        located = service.chain.find_tx(tx_hash)
        if located is None:
            raise ApiError(404, "UNKNOWN_TX", "transaction not on chain")
        height, idx, tx = located
        return {"height": height, "tx_index": idx, "tx_hash": tx_hash,
                "tx": tx._fields(with_signature=True)}

    @app.get("/ledger/scan")
    def ledger_scan():
        report = service.scan_ledger()
        if report.ok:
            return {"tampered": False}
        return {"tampered": True, "height": report.height, "kind": report.kind}

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="webui")
    else:
        @app.get("/")
        def index():
            return {"service": "verifi", "chain_height": service.chain.height}

    return app
