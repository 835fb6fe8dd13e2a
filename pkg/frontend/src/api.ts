// Typed client for the credential service REST API. All state lives on the
// server; this layer only shapes requests and decodes sorted-key JSON.

export interface PublicUser {
  user_id: string;
  role: string;
  display_name: string;
}

export interface LoginResult extends PublicUser {
  token: string;
}

export interface CertificateView {
  certificate_id: string;
  title: string;
  issuer_name: string;
  state: string;
  share_code: string | null;
  upload_receipt_id: string;
  decision_note: string | null;
}

export interface QueueEntry {
  certificate_id: string;
  applicant_id: string;
  applicant_display_name: string;
  title: string;
  issuer_name: string;
  state: string;
}

export interface SearchSummary {
  applicant_display_name: string;
  title: string;
  issuer_name: string;
  state: string;
  anchored_height: number;
}

export interface AccessRequestView {
  request_id: string;
  state: string;
  created_at: number;
  decided_at: number | null;
  company_display_name: string;
  certificate_title: string;
  share_code: string | null;
}

export interface NotificationView {
  notification_id: string;
  kind: string;
  payload: string;
  created_at: number;
  read: boolean;
}

export interface ProofBundle {
  tx: Record<string, unknown>;
  tx_hash: string;
  height: number;
  merkle_path: { sibling: string; side: string }[];
  header: Record<string, unknown> & { block_hash: string; merkle_root: string };
  validator_signatures: { validator_pubkey: string; signature: string }[];
  quorum: number;
  verified: boolean;
}

export interface ContentResult {
  file_b64: string;
  proof: ProofBundle;
}

export interface BlockSummary {
  height: number;
  block_hash: string;
  prev_hash: string;
  merkle_root: string;
  timestamp: number;
  proposer_pubkey: string;
  tx_hashes: string[];
  validator_count: number;
}

export interface ScanResult {
  tampered: boolean;
  height?: number;
  kind?: string;
}

export interface Page<T> {
  items: T[];
  total: number;
}

export class ApiError extends Error {
  constructor(public status: number, public code: string, message: string) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private base = "",
    private getToken: () => string | null = () => null,
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = {};
    const token = this.getToken();
    if (token) headers["Authorization"] = `Bearer ${token}`;
    if (body !== undefined) headers["Content-Type"] = "application/json";
    const response = await this.fetchFn(this.base + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    let parsed: any = null;
    try {
      parsed = text ? JSON.parse(text) : null;
    } catch {
      parsed = null;
    }
    if (!response.ok) {
      const code = parsed?.code ?? `HTTP_${response.status}`;
      const message = parsed?.message ?? response.statusText;
      throw new ApiError(response.status, code, message);
    }
    return parsed as T;
  }

  register(user_id: string, role: string, display_name: string, password: string) {
    return this.request<PublicUser>("POST", "/auth/register",
      { user_id, role, display_name, password });
  }

  login(user_id: string, password: string) {
    return this.request<LoginResult>("POST", "/auth/login", { user_id, password });
  }

  uploadCertificate(title: string, issuer_name: string, file_b64: string) {
    return this.request<{ certificate_id: string; upload_receipt_id: string }>(
      "POST", "/certificates", { title, issuer_name, file_b64 });
  }

  myCertificates() {
    return this.request<Page<CertificateView>>("GET", "/certificates?limit=100");
  }

  adminQueue() {
    return this.request<Page<QueueEntry>>("GET", "/admin/queue?limit=100");
  }

  claim(certificate_id: string) {
    return this.request<{ certificate_id: string; state: string }>(
      "POST", `/admin/queue/${certificate_id}/claim`);
  }

  decide(certificate_id: string, decision: "Approve" | "Reject",
         note: string, fee_approved: boolean) {
    return this.request<CertificateView>(
      "POST", `/admin/queue/${certificate_id}/decision`,
      { decision, note, fee_approved });
  }

  search(share_code: string) {
    return this.request<SearchSummary>("GET", `/search/${share_code}`);
  }

  requestAccess(share_code: string) {
    return this.request<AccessRequestView>("POST", "/access-requests", { share_code });
  }

  accessRequests() {
    return this.request<Page<AccessRequestView>>("GET", "/access-requests?limit=100");
  }

  decideAccess(request_id: string, decision: "Grant" | "Deny") {
    return this.request<AccessRequestView>(
      "POST", `/access-requests/${request_id}/decision`, { decision });
  }

  content(share_code: string) {
    return this.request<ContentResult>("GET", `/certificates/${share_code}/content`);
  }

  notifications() {
    return this.request<Page<NotificationView>>("GET", "/notifications?limit=100");
  }

  markRead(notification_id: string) {
    return this.request<{ notification_id: string; read: boolean }>(
      "POST", `/notifications/${notification_id}/read`);
  }

  blocks(from?: number, to?: number) {
    const params = new URLSearchParams();
    if (from !== undefined) params.set("from", String(from));
    if (to !== undefined) params.set("to", String(to));
    const query = params.toString();
    return this.request<{ items: BlockSummary[]; chain_height: number }>(
      "GET", `/ledger/blocks${query ? "?" + query : ""}`);
  }

  scan() {
    return this.request<ScanResult>("GET", "/ledger/scan");
  }

  health() {
    return this.request<{ status: string; chain_height: number }>("GET", "/healthz");
  }
}
