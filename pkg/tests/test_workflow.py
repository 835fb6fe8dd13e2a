import pytest

from verifi import crypto, ledger, workflow
from verifi.cas import Cid
from verifi.workflow import (
    AnchorFailed,
    BadCredentials,
    CertState,
    DuplicatePending,
    DuplicateUser,
    EmptyFile,
    Forbidden,
    NotFound,
    NotificationKind,
    RequestState,
    Role,
    TamperDetected,
    TooLarge,
    Unauthorized,
    WorkflowError,
    WrongState,
)

FILE = b"OFFICIAL TRANSCRIPT\n" * 120


def upload(seeded, data=FILE, title="BSc", issuer="State University"):
    svc = seeded["service"]
    return svc.upload_certificate(seeded["applicant"], title, issuer, data)


def approve(seeded, cert_id, note="checked with issuer"):
    svc = seeded["service"]
    svc.admin_claim(seeded["admin"], cert_id)
    return svc.admin_decide(seeded["admin"], cert_id, "Approve",
                            note=note, fee_approved=True)


def granted_view_setup(seeded):
    svc = seeded["service"]
    cert = upload(seeded)
    record = approve(seeded, cert["certificate_id"])
    request = svc.request_access(seeded["company"], record["share_code"])
    svc.decide_access(seeded["applicant"], request["request_id"], "Grant")
    return record


class TestAccounts:
    def test_register_then_authenticate_role_claim(self, service):
        service.register_user("eve", Role.COMPANY, "Eve Corp", "pw")
        claims = service.verify_token(service.authenticate("eve", "pw"))
        assert claims.sub == "eve"
        assert claims.role == Role.COMPANY

    def test_wrong_password(self, service):
        service.register_user("eve", Role.COMPANY, "Eve Corp", "pw")
        with pytest.raises(BadCredentials):
            service.authenticate("eve", "nope")

    def test_unknown_user(self, service):
        with pytest.raises(BadCredentials):
            service.authenticate("ghost", "pw")

    def test_duplicate_user(self, service):
        service.register_user("eve", Role.COMPANY, "Eve Corp", "pw")
        with pytest.raises(DuplicateUser):
            service.register_user("eve", Role.APPLICANT, "Other", "pw2")

    def test_admin_role_not_self_registrable(self, service):
        with pytest.raises(WorkflowError):
            service.register_user("mallory", Role.ADMIN, "Mallory", "pw")

    def test_applicant_gets_keys_company_does_not(self, service):
        service.register_user("a", Role.APPLICANT, "A", "pw")
        service.register_user("c", Role.COMPANY, "C", "pw")
        assert "vault_key" in service.users.get("a")
        assert "signing_seed" in service.users.get("a")
        assert "vault_key" not in service.users.get("c")

    def test_admin_creation_seeds_fee_account(self, service):
        record = service.create_admin("root", "Root", "pw")
        assert service.chain.balance(record["signing_pubkey"]) == \
            ledger.INITIAL_ISSUER_BALANCE

    def test_token_expiry_honors_clock(self, data_dir):
        now = [1_700_000_000]
        svc = workflow.open_service(data_dir, clock=lambda: now[0], token_ttl=10)
        svc.register_user("a", Role.APPLICANT, "A", "pw")
        wire = svc.authenticate("a", "pw")
        assert svc.verify_token(wire).sub == "a"
        now[0] += 11
        with pytest.raises(crypto.Expired):
            svc.verify_token(wire)


class TestUpload:
    def test_upload_creates_pending_and_notifies_admins(self, seeded):
        svc = seeded["service"]
        svc.create_admin("root2", "Second Registrar", "pw")
        admin2 = svc.verify_token(svc.authenticate("root2", "pw"))
        cert = upload(seeded)
        assert cert["state"] == CertState.PENDING
        assert svc._pending_path(cert["certificate_id"]).read_bytes() == FILE
        for claims in (seeded["admin"], admin2):
            kinds = [n["kind"] for n in svc.list_notifications(claims)]
            assert kinds.count(NotificationKind.VERIFICATION_REQUESTED) == 1

    def test_same_bytes_distinct_receipts(self, seeded):
        first = upload(seeded)
        second = upload(seeded)
        assert first["certificate_id"] != second["certificate_id"]
        assert first["upload_receipt_id"] != second["upload_receipt_id"]

    def test_company_cannot_upload(self, seeded):
        svc = seeded["service"]
        with pytest.raises(Unauthorized):
            svc.upload_certificate(seeded["company"], "t", "i", FILE)

    def test_empty_file(self, seeded):
        with pytest.raises(EmptyFile):
            upload(seeded, data=b"")

    def test_too_large(self, seeded):
        with pytest.raises(TooLarge):
            upload(seeded, data=b"x" * (workflow.MAX_FILE_BYTES + 1))


class TestAdminDecision:
    def test_claim_moves_to_under_review(self, seeded):
        svc = seeded["service"]
        cert = upload(seeded)
        record = svc.admin_claim(seeded["admin"], cert["certificate_id"])
        assert record["state"] == CertState.UNDER_REVIEW

    def test_decide_requires_claim(self, seeded):
        svc = seeded["service"]
        cert = upload(seeded)
        with pytest.raises(WrongState):
            svc.admin_decide(seeded["admin"], cert["certificate_id"], "Approve",
                             fee_approved=True)

    def test_claim_twice_rejected(self, seeded):
        svc = seeded["service"]
        cert = upload(seeded)
        svc.admin_claim(seeded["admin"], cert["certificate_id"])
        with pytest.raises(WrongState):
            svc.admin_claim(seeded["admin"], cert["certificate_id"])

    def test_reject_erases_bytes_and_notifies(self, seeded):
        svc = seeded["service"]
        cert = upload(seeded)
        svc.admin_claim(seeded["admin"], cert["certificate_id"])
        record = svc.admin_decide(seeded["admin"], cert["certificate_id"],
                                  "Reject", note="issuer denies record")
        assert record["state"] == CertState.REJECTED
        assert record["share_code"] is None
        assert not svc._pending_path(cert["certificate_id"]).exists()
        kinds = [n["kind"] for n in svc.list_notifications(seeded["applicant"])]
        assert NotificationKind.VERIFICATION_DECIDED in kinds

    def test_approve_anchors_and_erases_plaintext(self, seeded):
        svc = seeded["service"]
        cert = upload(seeded)
        before = svc.chain.height
        record = approve(seeded, cert["certificate_id"])
        assert record["state"] == CertState.VERIFIED
        assert record["share_code"] == record["anchor_tx_hash"]
        assert svc.chain.height == before + 1
        located = svc.chain.find_tx(record["anchor_tx_hash"])
        assert located is not None
        height, _, tx = located
        assert tx.certificate_id == cert["certificate_id"]
        assert tx.applicant_id == "ann"
        assert not svc._pending_path(cert["certificate_id"]).exists()
        # the only byte copy lives in the object store
        assert svc.store.get(Cid.from_text(record["cid"])) == FILE

    def test_approve_without_fee_confirmation(self, seeded):
        svc = seeded["service"]
        cert = upload(seeded)
        svc.admin_claim(seeded["admin"], cert["certificate_id"])
        with pytest.raises(ledger.FeeNotApproved):
            svc.admin_decide(seeded["admin"], cert["certificate_id"], "Approve")
        assert svc.certs.get(cert["certificate_id"])["state"] == CertState.UNDER_REVIEW

    def test_anchor_failure_reverts_to_under_review(self, seeded):
        svc = seeded["service"]
        cert = upload(seeded)
        svc.admin_claim(seeded["admin"], cert["certificate_id"])
        admin_pk = svc.users.get("root")["signing_pubkey"]
        svc.chain._balances[admin_pk] = 0
        with pytest.raises(AnchorFailed):
            svc.admin_decide(seeded["admin"], cert["certificate_id"], "Approve",
                             fee_approved=True)
        record = svc.certs.get(cert["certificate_id"])
        assert record["state"] == CertState.UNDER_REVIEW
        assert svc._pending_path(cert["certificate_id"]).exists()
        assert svc.chain.pending == []
        # refund and retry succeeds, still exactly one anchor
        svc.chain._balances[admin_pk] = ledger.INITIAL_ISSUER_BALANCE
        record = svc.admin_decide(seeded["admin"], cert["certificate_id"], "Approve",
                                  fee_approved=True)
        assert record["state"] == CertState.VERIFIED
        anchors = [tx for block in svc.chain.blocks for tx in block.txs
                   if tx.certificate_id == cert["certificate_id"]]
        assert len(anchors) == 1

    def test_non_admin_cannot_decide(self, seeded):
        svc = seeded["service"]
        cert = upload(seeded)
        with pytest.raises(Unauthorized):
            svc.admin_claim(seeded["applicant"], cert["certificate_id"])


class TestSearch:
    def test_summary_fields_only(self, seeded):
        svc = seeded["service"]
        cert = upload(seeded)
        record = approve(seeded, cert["certificate_id"])
        summary = svc.search_by_share_code(seeded["company"], record["share_code"])
        assert summary == {
            "applicant_display_name": "Ann Applicant",
            "title": "BSc",
            "issuer_name": "State University",
            "state": CertState.VERIFIED,
            "anchored_height": 1,
        }

    def test_unknown_code(self, seeded):
        with pytest.raises(NotFound):
            seeded["service"].search_by_share_code(seeded["company"], "ab" * 32)

    def test_rejected_certificate_not_searchable(self, seeded):
        svc = seeded["service"]
        cert = upload(seeded)
        svc.admin_claim(seeded["admin"], cert["certificate_id"])
        svc.admin_decide(seeded["admin"], cert["certificate_id"], "Reject")
        record = svc.certs.get(cert["certificate_id"])
        assert record["share_code"] is None

    def test_applicant_cannot_search(self, seeded):
        with pytest.raises(Unauthorized):
            seeded["service"].search_by_share_code(seeded["applicant"], "ab" * 32)


class TestAccessRequests:
    def test_request_then_grant(self, seeded):
        svc = seeded["service"]
        cert = upload(seeded)
        record = approve(seeded, cert["certificate_id"])
        request = svc.request_access(seeded["company"], record["share_code"])
        assert request["state"] == RequestState.PENDING
        kinds = [n["kind"] for n in svc.list_notifications(seeded["applicant"])]
        assert NotificationKind.ACCESS_REQUESTED in kinds
        decided = svc.decide_access(seeded["applicant"], request["request_id"], "Grant")
        assert decided["state"] == RequestState.GRANTED
        assert decided["decided_at"] is not None
        kinds = [n["kind"] for n in svc.list_notifications(seeded["company"])]
        assert NotificationKind.ACCESS_DECIDED in kinds

    def test_duplicate_pending(self, seeded):
        svc = seeded["service"]
        cert = upload(seeded)
        record = approve(seeded, cert["certificate_id"])
        svc.request_access(seeded["company"], record["share_code"])
        with pytest.raises(DuplicatePending):
            svc.request_access(seeded["company"], record["share_code"])

    def test_re_request_after_denial(self, seeded):
        svc = seeded["service"]
        cert = upload(seeded)
        record = approve(seeded, cert["certificate_id"])
        first = svc.request_access(seeded["company"], record["share_code"])
        svc.decide_access(seeded["applicant"], first["request_id"], "Deny")
        second = svc.request_access(seeded["company"], record["share_code"])
        assert second["request_id"] != first["request_id"]

    def test_other_applicant_cannot_decide(self, seeded):
        svc = seeded["service"]
        svc.register_user("other", Role.APPLICANT, "Other", "pw")
        other = svc.verify_token(svc.authenticate("other", "pw"))
        cert = upload(seeded)
        record = approve(seeded, cert["certificate_id"])
        request = svc.request_access(seeded["company"], record["share_code"])
        with pytest.raises(Unauthorized):
            svc.decide_access(other, request["request_id"], "Grant")

    def test_decide_twice_rejected(self, seeded):
        svc = seeded["service"]
        cert = upload(seeded)
        record = approve(seeded, cert["certificate_id"])
        request = svc.request_access(seeded["company"], record["share_code"])
        svc.decide_access(seeded["applicant"], request["request_id"], "Grant")
        with pytest.raises(WrongState):
            svc.decide_access(seeded["applicant"], request["request_id"], "Deny")

    def test_unanchored_certificate_not_requestable(self, seeded):
        svc = seeded["service"]
        upload(seeded)
        with pytest.raises(NotFound):
            svc.request_access(seeded["company"], "ab" * 32)


class TestView:
    def test_granted_view_returns_bytes_and_proof(self, seeded):
        svc = seeded["service"]
        record = granted_view_setup(seeded)
        data, bundle = svc.view_certificate(seeded["company"], record["share_code"])
        assert data == FILE
        assert bundle.tx_hash == record["share_code"]
        assert ledger.verify_inclusion(bundle.tx.tx_hash(), bundle.merkle_path,
                                       bundle.header.merkle_root)
        assert len(bundle.validator_signatures) >= bundle.quorum
        response = bundle.to_response()
        assert response["verified"] is True
        assert response["height"] == 1

    def test_view_without_grant(self, seeded):
        svc = seeded["service"]
        cert = upload(seeded)
        record = approve(seeded, cert["certificate_id"])
        with pytest.raises(Forbidden):
            svc.view_certificate(seeded["company"], record["share_code"])

    def test_view_after_denial(self, seeded):
        svc = seeded["service"]
        cert = upload(seeded)
        record = approve(seeded, cert["certificate_id"])
        request = svc.request_access(seeded["company"], record["share_code"])
        svc.decide_access(seeded["applicant"], request["request_id"], "Deny")
        with pytest.raises(Forbidden):
            svc.view_certificate(seeded["company"], record["share_code"])

    def test_mutated_cas_object_raises_tamper_and_alerts_admins(self, seeded):
        svc = seeded["service"]
        record = granted_view_setup(seeded)
        cid = Cid.from_text(record["cid"])
        path = svc.store._path(cid)
        raw = bytearray(path.read_bytes())
        raw[7] ^= 0x01
        path.write_bytes(bytes(raw))
        with pytest.raises(TamperDetected):
            svc.view_certificate(seeded["company"], record["share_code"])
        kinds = [n["kind"] for n in svc.list_notifications(seeded["admin"])]
        assert NotificationKind.TAMPER_ALERT in kinds

    def test_applicant_cannot_view_via_company_route(self, seeded):
        svc = seeded["service"]
        record = granted_view_setup(seeded)
        with pytest.raises(Unauthorized):
            svc.view_certificate(seeded["applicant"], record["share_code"])


class TestNotifications:
    def test_newest_first_and_mark_read_idempotent(self, seeded):
        svc = seeded["service"]
        upload(seeded)
        upload(seeded)
        items = svc.list_notifications(seeded["admin"])
        assert len(items) == 2
        assert items[0]["created_at"] >= items[1]["created_at"]
        target = items[0]["notification_id"]
        first = svc.mark_read(seeded["admin"], target)
        second = svc.mark_read(seeded["admin"], target)
        assert first["read"] is True and second["read"] is True
        assert [n["read"] for n in svc.list_notifications(seeded["admin"])
                if n["notification_id"] == target] == [True]

    def test_foreign_notification_invisible(self, seeded):
        svc = seeded["service"]
        upload(seeded)
        admin_note = svc.list_notifications(seeded["admin"])[0]
        with pytest.raises(NotFound):
            svc.mark_read(seeded["applicant"], admin_note["notification_id"])

    def test_every_transition_notifies(self, seeded):
        svc = seeded["service"]
        record = granted_view_setup(seeded)
        admin_kinds = [n["kind"] for n in svc.list_notifications(seeded["admin"])]
        applicant_kinds = [n["kind"] for n in svc.list_notifications(seeded["applicant"])]
        company_kinds = [n["kind"] for n in svc.list_notifications(seeded["company"])]
        assert admin_kinds.count(NotificationKind.VERIFICATION_REQUESTED) == 1
        assert applicant_kinds.count(NotificationKind.VERIFICATION_DECIDED) == 1
        assert applicant_kinds.count(NotificationKind.ACCESS_REQUESTED) == 1
        assert company_kinds.count(NotificationKind.ACCESS_DECIDED) == 1
        assert record["state"] == CertState.VERIFIED


class TestPersistence:
    def test_state_rebuilds_after_reopen(self, seeded, data_dir):
        svc = seeded["service"]
        record = granted_view_setup(seeded)
        reopened = workflow.open_service(data_dir)
        claims = reopened.verify_token(reopened.authenticate("corp", "corp-pw"))
        data, bundle = reopened.view_certificate(claims, record["share_code"])
        assert data == FILE
        assert reopened.chain.height == svc.chain.height

    def test_scan_ledger_emits_alert_on_tamper(self, seeded):
        svc = seeded["service"]
        cert = upload(seeded)
        approve(seeded, cert["certificate_id"])
        assert svc.scan_ledger().ok
        raw = bytearray(svc.chain.chain_path.read_bytes())
        raw[-40] ^= 0x01
        svc.chain.chain_path.write_bytes(bytes(raw))
        report = svc.scan_ledger()
        assert not report.ok
        kinds = [n["kind"] for n in svc.list_notifications(seeded["admin"])]
        assert NotificationKind.TAMPER_ALERT in kinds
