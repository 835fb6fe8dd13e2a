// Company dashboard: share-code search, access requests, and the granted
// certificate viewer with its proof panel. Certificate bytes render only
// after the server authorizes the content request (grant in place).

import { ApiClient, ApiError, ContentResult, SearchSummary } from "../api.js";
import { clear, h, shortHex, statusBadge, wireAction } from "../dom.js";

export function renderCompany(api: ApiClient): HTMLElement {
  const resultEl = h("div", { class: "search-result", "data-testid": "search-result" });
  const viewerEl = h("div", { class: "viewer", "data-testid": "viewer" });
  const requestsEl = h("div", { class: "cards", "data-testid": "sent-requests" });

  const codeInput = h("input", {
    name: "share_code",
    placeholder: "paste the applicant's share code",
    "data-testid": "search-input",
  });
  const searchBtn = h("button", { type: "submit", "data-testid": "search-btn" }, "Search");

  const form = h("form", {
    onSubmit: (event: Event) => {
      event.preventDefault();
      if (searchBtn.disabled) return;
      searchBtn.disabled = true;
      void (async () => {
        try {
          await showSummary(codeInput.value.trim());
        } finally {
          searchBtn.disabled = false;
        }
      })();
    },
  }, codeInput, searchBtn);

  async function showSummary(shareCode: string): Promise<void> {
    clear(resultEl);
    clear(viewerEl);
    let summary: SearchSummary;
    try {
      summary = await api.search(shareCode);
    } catch (err) {
      resultEl.append(h("p", { class: "error" },
        err instanceof ApiError && err.status === 404
          ? "No anchored certificate under that share code."
          : "Search failed."));
      return;
    }
    const requestBtn = h("button", { "data-testid": "request-btn" }, "Request access");
    wireAction(requestBtn as HTMLButtonElement, async () => {
      try {
        await api.requestAccess(shareCode);
      } catch (err) {
        if (!(err instanceof ApiError && err.code === "DUPLICATE_PENDING")) throw err;
      }
      await refreshRequests();
    });
    const viewBtn = h("button", { "data-testid": "view-btn" }, "View certificate");
    wireAction(viewBtn as HTMLButtonElement, async () => {
      await showContent(shareCode);
    });
    resultEl.append(h("div", { class: "card" },
      h("h3", {}, summary.title),
      h("p", {}, `${summary.applicant_display_name} · ${summary.issuer_name}`),
      h("p", {}, `anchored at height ${summary.anchored_height}`),
      statusBadge(summary.state),
      h("div", { class: "actions" }, requestBtn, viewBtn)));
  }

  async function showContent(shareCode: string): Promise<void> {
    clear(viewerEl);
    let content: ContentResult;
    try {
      content = await api.content(shareCode);
    } catch (err) {
      if (err instanceof ApiError && err.status === 403) {
        viewerEl.append(h("p", { class: "pending-access", "data-testid": "access-pending" },
          "Access pending: the applicant has not granted viewing yet."));
      } else if (err instanceof ApiError && err.code === "TAMPER_DETECTED") {
        viewerEl.append(h("p", { class: "error", "data-testid": "tamper-error" },
          "Verification failed: stored data no longer matches the chain."));
      } else {
        viewerEl.append(h("p", { class: "error" }, "Could not load certificate."));
      }
      return;
    }

    const proof = content.proof;
    const docUrl = `data:application/octet-stream;base64,${content.file_b64}`;
    viewerEl.append(
      h("h3", {}, "Certificate document"),
      h("iframe", {
        class: "doc",
        "data-testid": "doc-frame",
        src: docUrl,
        title: "certificate document",
      }),
      h("div", { class: "proof-panel", "data-testid": "proof-panel" },
        h("h4", {}, "Proof of anchoring"),
        h("dl", {},
          h("dt", {}, "Transaction"),
          h("dd", { class: "mono" }, shortHex(proof.tx_hash)),
          h("dt", {}, "Block height"),
          h("dd", {}, String(proof.height)),
          h("dt", {}, "Validator signatures"),
          h("dd", {}, `${proof.validator_signatures.length} (quorum ${proof.quorum})`),
          h("dt", {}, "Inclusion proof"),
          h("dd", { "data-testid": "proof-verified" },
            proof.verified ? "verified" : "NOT VERIFIED"))));
  }

  async function refreshRequests(): Promise<void> {
    const page = await api.accessRequests();
    clear(requestsEl);
    for (const request of page.items) {
      requestsEl.append(h("div", { class: "card", "data-request": request.request_id },
        h("p", {}, h("strong", {}, request.certificate_title)),
        statusBadge(request.state)));
    }
  }

  void refreshRequests();

  const root = h("section", { class: "dashboard company" },
    h("h1", {}, "Find an applicant's certificate"),
    form,
    resultEl,
    viewerEl,
    h("h2", {}, "My access requests"),
    requestsEl);
  (root as any).refresh = refreshRequests;
  return root;
}
