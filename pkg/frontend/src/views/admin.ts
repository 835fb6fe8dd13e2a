// Admin dashboard: verification queue with claim, evidence note, and an
// explicit anchoring-fee confirmation before approval.

import { ApiClient, ApiError, QueueEntry } from "../api.js";
import { clear, h, statusBadge, wireAction } from "../dom.js";

export function renderAdmin(api: ApiClient): HTMLElement {
  const queueEl = h("div", { class: "cards", "data-testid": "queue" });
  const error = h("p", { class: "error", "data-testid": "admin-error" });

  function entryCard(entry: QueueEntry): HTMLElement {
    const card = h("div", { class: "card", "data-certificate": entry.certificate_id },
      h("h3", {}, entry.title),
      h("p", {}, `${entry.applicant_display_name} · ${entry.issuer_name}`),
      statusBadge(entry.state));

    if (entry.state === "PendingVerification") {
      const claim = h("button", { "data-testid": "claim-btn" }, "Claim for review");
      wireAction(claim as HTMLButtonElement, async () => {
        await api.claim(entry.certificate_id);
        await refresh();
      });
      card.append(claim);
      return card;
    }

    // UnderReview: decision controls
    const note = h("textarea", {
      placeholder: "evidence note (who confirmed this certificate?)",
      "data-testid": "note-input",
    });
    const fee = h("input", { type: "checkbox", "data-testid": "fee-checkbox" });
    const feeLabel = h("label", { class: "fee" }, fee,
      " I approve the anchoring fee charged to my issuer account");
    const approve = h("button", { class: "approve", "data-testid": "approve-btn" }, "Approve & anchor");
    const reject = h("button", { class: "reject", "data-testid": "reject-btn" }, "Reject");

    wireAction(approve as HTMLButtonElement, async () => {
      error.textContent = "";
      try {
        await api.decide(entry.certificate_id, "Approve", note.value, fee.checked);
        await refresh();
      } catch (err) {
        error.textContent =
          err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
      }
    });
    wireAction(reject as HTMLButtonElement, async () => {
      error.textContent = "";
      try {
        await api.decide(entry.certificate_id, "Reject", note.value, false);
        await refresh();
      } catch (err) {
        error.textContent =
          err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
      }
    });

    card.append(note, feeLabel, h("div", { class: "actions" }, approve, reject));
    return card;
  }

  async function refresh(): Promise<void> {
    const queue = await api.adminQueue();
    clear(queueEl);
    if (queue.items.length === 0) {
      queueEl.append(h("p", { class: "empty" }, "Verification queue is empty."));
    }
    for (const entry of queue.items) queueEl.append(entryCard(entry));
  }

  void refresh();

  const root = h("section", { class: "dashboard admin" },
    h("h1", {}, "Verification queue"),
    error,
    queueEl);
  (root as any).refresh = refresh;
  return root;
}
