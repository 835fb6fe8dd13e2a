// Applicant dashboard: upload form, certificate list with live state
// badges and share-code copy, pending access requests with Grant/Deny.

import { ApiClient, ApiError, AccessRequestView, CertificateView } from "../api.js";
import { clear, fileToBase64, h, statusBadge, wireAction } from "../dom.js";

export function renderApplicant(api: ApiClient): HTMLElement {
  const certList = h("div", { class: "cards", "data-testid": "cert-list" });
  const requestList = h("div", { class: "cards", "data-testid": "request-list" });
  const uploadError = h("p", { class: "error", "data-testid": "upload-error" });

  const titleInput = h("input", { name: "title", placeholder: "certificate title", "data-testid": "upload-title" });
  const issuerInput = h("input", { name: "issuer", placeholder: "issuing institution", "data-testid": "upload-issuer" });
  const fileInput = h("input", { name: "file", type: "file", "data-testid": "upload-file" });
  const submit = h("button", { type: "submit", "data-testid": "upload-submit" }, "Upload for verification");

  const form = h("form", {
    onSubmit: (event: Event) => {
      event.preventDefault();
      if (submit.disabled) return;
      submit.disabled = true;
      void (async () => {
        uploadError.textContent = "";
        try {
          const file = fileInput.files?.[0];
          if (!file) throw new Error("choose a file first");
          const body = await fileToBase64(file);
          await api.uploadCertificate(titleInput.value.trim(),
            issuerInput.value.trim(), body);
          titleInput.value = issuerInput.value = fileInput.value = "";
          await refresh();
        } catch (err) {
          uploadError.textContent =
            err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
        } finally {
          submit.disabled = false;
        }
      })();
    },
  }, titleInput, issuerInput, fileInput, submit, uploadError);

  function certCard(cert: CertificateView): HTMLElement {
    const card = h("div", { class: "card", "data-certificate": cert.certificate_id },
      h("h3", {}, cert.title),
      h("p", {}, cert.issuer_name),
      statusBadge(cert.state));
    if (cert.decision_note) {
      card.append(h("p", { class: "note-text" }, cert.decision_note));
    }
    if (cert.share_code) {
      const code = h("code", { class: "share-code", "data-testid": "share-code" },
        cert.share_code);
      const copy = h("button", { class: "copy" }, "copy share code");
      wireAction(copy as HTMLButtonElement, async () => {
        await navigator.clipboard?.writeText(cert.share_code!);
      });
      card.append(h("div", { class: "share" }, code, copy));
    }
    return card;
  }

  function requestCard(request: AccessRequestView): HTMLElement {
    const card = h("div", { class: "card", "data-request": request.request_id },
      h("p", {}, `${request.company_display_name} asks to view `,
        h("strong", {}, request.certificate_title)),
      statusBadge(request.state));
    if (request.state === "Pending") {
      const grant = h("button", { class: "grant", "data-testid": "grant-btn" }, "Grant");
      const deny = h("button", { class: "deny", "data-testid": "deny-btn" }, "Deny");
      wireAction(grant as HTMLButtonElement, async () => {
        await api.decideAccess(request.request_id, "Grant");
        await refresh();
      });
      wireAction(deny as HTMLButtonElement, async () => {
        await api.decideAccess(request.request_id, "Deny");
        await refresh();
      });
      card.append(h("div", { class: "actions" }, grant, deny));
    }
    return card;
  }

  async function refresh(): Promise<void> {
    const [certs, requests] = await Promise.all([
      api.myCertificates(), api.accessRequests()]);
    clear(certList);
    for (const cert of certs.items) certList.append(certCard(cert));
    clear(requestList);
    for (const request of requests.items) requestList.append(requestCard(request));
  }

  void refresh();

  const root = h("section", { class: "dashboard applicant" },
    h("h1", {}, "My certificates"),
    form,
    certList,
    h("h2", {}, "Access requests"),
    requestList);
  (root as any).refresh = refresh; // notification poll hook
  return root;
}
