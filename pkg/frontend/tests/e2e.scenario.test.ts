// UI scenario against a real demo-seeded server: the full upload → verify →
// search → request → grant → view flow driven through the rendered UI.
// Asserts certificate bytes never render before the grant and the landing
// tamper badge flips after a chain mutation.

import { spawn, spawnSync, ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { createApp, App } from "../src/main.js";

const PORT = 8900 + (process.pid % 600);
const BASE = `http://127.0.0.1:${PORT}`;
const FILE_TEXT = "%PDF-1.4 ui-scenario transcript body ".repeat(20);

let dataDir: string;
let server: ChildProcess | null = null;
let app: App | null = null;

function py(args: string[], env: Record<string, string>): void {
  const result = spawnSync("python3", ["-m", "verifi", ...args], {
    env: { ...process.env, ...env },
    encoding: "utf-8",
  });
  if (result.status !== 0) {
    throw new Error(`verifi ${args.join(" ")} failed:\n${result.stdout}\n${result.stderr}`);
  }
}

async function waitFor<T>(probe: () => T | null | undefined | false,
                          timeoutMs = 10_000, what = "condition"): Promise<T> {
  const start = Date.now();
  for (;;) {
    const value = probe();
    if (value) return value;
    if (Date.now() - start > timeoutMs) {
      throw new Error(`timed out waiting for ${what}\n${document.body.innerHTML.slice(0, 2000)}`);
    }
    await new Promise((resolve) => setTimeout(resolve, 60));
  }
}

function q<T extends Element>(selector: string): T | null {
  return document.querySelector(selector) as T | null;
}

function freshApp(route: string): App {
  app?.dispose();
  sessionStorage.clear();
  document.body.innerHTML = '<div id="app"></div>';
  location.hash = route;
  app = createApp(document.getElementById("app")!, BASE);
  app.render(route);
  return app;
}

async function loginAs(userId: string, password: string, expectedRoute: string): Promise<App> {
  const current = freshApp("#/login");
  await waitFor(() => q('[data-testid="login-user"]'), 5000, "login form");
  (q('[data-testid="login-user"]') as HTMLInputElement).value = userId;
  (q('[data-testid="login-password"]') as HTMLInputElement).value = password;
  q<HTMLFormElement>("form")!.dispatchEvent(
    new Event("submit", { bubbles: true, cancelable: true }));
  await waitFor(() => location.hash === expectedRoute, 10_000,
    `login of ${userId} reaching ${expectedRoute}`);
  await waitFor(() => q('[data-testid="whoami"]'), 5000, "header identity");
  return current;
}

beforeAll(async () => {
  dataDir = mkdtempSync(join(tmpdir(), "verifi-ui-"));
  const env = { VERIFI_DATA_DIR: dataDir };
  py(["init"], env);
  py(["demo", "seed"], env);
  server = spawn("python3", ["-m", "verifi", "serve", "--bind", `127.0.0.1:${PORT}`], {
    env: { ...process.env, ...env },
    stdio: ["ignore", "pipe", "pipe"],
  });
  let exited = false;
  server.on("exit", () => { exited = true; });
  const started = Date.now();
  for (;;) {
    try {
      const response = await fetch(`${BASE}/healthz`);
      if (response.ok) break;
    } catch {
      // not up yet
    }
    if (exited) throw new Error("server process exited during startup");
    if (Date.now() - started > 60_000) throw new Error("server did not come up");
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
}, 120_000);

afterAll(() => {
  app?.dispose();
  server?.kill("SIGINT");
});

describe("web UI end-to-end scenario", () => {
  let shareCode = "";

  it("landing explorer shows an intact chain from the demo seed", async () => {
    freshApp("#/");
    const badge = await waitFor(
      () => {
        const el = q('[data-testid="tamper-badge"]');
        return el && el.textContent !== "checking…" ? el : null;
      }, 10_000, "tamper badge");
    expect(badge!.textContent).toBe("chain intact");
    expect(q('[data-testid="chain-height"]')!.textContent).toBe("3");
  });

  it("a new applicant registers through the UI and uploads a certificate", async () => {
    freshApp("#/register");
    await waitFor(() => q('[data-testid="reg-user"]'), 5000, "register form");
    (q('[data-testid="reg-user"]') as HTMLInputElement).value = "uiapplicant";
    (q('[data-testid="reg-name"]') as HTMLInputElement).value = "UI Applicant";
    (q('[data-testid="reg-password"]') as HTMLInputElement).value = "ui-pw";
    (q('[data-testid="reg-role"]') as HTMLSelectElement).value = "Applicant";
    q<HTMLFormElement>("form")!.dispatchEvent(
      new Event("submit", { bubbles: true, cancelable: true }));
    await waitFor(() => location.hash === "#/applicant", 10_000, "applicant dashboard");

    await waitFor(() => q('[data-testid="upload-title"]'), 5000, "upload form");
    (q('[data-testid="upload-title"]') as HTMLInputElement).value = "MSc Systems";
    (q('[data-testid="upload-issuer"]') as HTMLInputElement).value = "UI University";
    const fileInput = q('[data-testid="upload-file"]') as HTMLInputElement;
    const file = new File([FILE_TEXT], "transcript.pdf", { type: "application/pdf" });
    Object.defineProperty(fileInput, "files", { value: [file] });
    (q('[data-testid="upload-submit"]') as HTMLButtonElement)
      .closest("form")!
      .dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));

    const card = await waitFor(
      () => q('[data-testid="cert-list"] .card'), 10_000, "uploaded certificate card");
    expect(card!.textContent).toContain("MSc Systems");
    expect(card!.textContent).toContain("PendingVerification");
  });

  it("the admin claims and approves with the explicit fee confirmation", async () => {
    await loginAs("admin", "admin-pw", "#/admin");
    const claimBtn = await waitFor(
      () => q('[data-testid="claim-btn"]'), 10_000, "claim button");
    (claimBtn as HTMLButtonElement).click();

    const approveBtn = await waitFor(
      () => q('[data-testid="approve-btn"]'), 10_000, "decision controls");
    (q('[data-testid="note-input"]') as HTMLTextAreaElement).value =
      "confirmed with UI University registrar";

    // without the fee confirmation the service refuses
    (approveBtn as HTMLButtonElement).click();
    await waitFor(
      () => q('[data-testid="admin-error"]')?.textContent?.includes("FEE_NOT_APPROVED"),
      10_000, "fee-not-approved error");

    (q('[data-testid="fee-checkbox"]') as HTMLInputElement).checked = true;
    (q('[data-testid="approve-btn"]') as HTMLButtonElement).click();
    await waitFor(() => !q('[data-testid="approve-btn"]'), 10_000, "queue to drain");
  });

  it("the applicant sees the verified badge and the share code", async () => {
    await loginAs("uiapplicant", "ui-pw", "#/applicant");
    const code = await waitFor(
      () => q('[data-testid="share-code"]'), 10_000, "share code");
    shareCode = code!.textContent!.trim();
    expect(shareCode).toMatch(/^[0-9a-f]{64}$/);
    const card = code!.closest(".card")!;
    expect(card.textContent).toContain("Verified");
  });

  it("a company cannot see bytes before the grant", async () => {
    freshApp("#/register");
    await waitFor(() => q('[data-testid="reg-user"]'), 5000, "register form");
    (q('[data-testid="reg-user"]') as HTMLInputElement).value = "uicompany";
    (q('[data-testid="reg-name"]') as HTMLInputElement).value = "UI Hiring Co";
    (q('[data-testid="reg-password"]') as HTMLInputElement).value = "co-pw";
    (q('[data-testid="reg-role"]') as HTMLSelectElement).value = "Company";
    q<HTMLFormElement>("form")!.dispatchEvent(
      new Event("submit", { bubbles: true, cancelable: true }));
    await waitFor(() => location.hash === "#/company", 10_000, "company dashboard");

    (q('[data-testid="search-input"]') as HTMLInputElement).value = shareCode;
    q<HTMLFormElement>("form")!.dispatchEvent(
      new Event("submit", { bubbles: true, cancelable: true }));
    const viewBtn = await waitFor(
      () => q('[data-testid="view-btn"]'), 10_000, "search result");

    (viewBtn as HTMLButtonElement).click();
    await waitFor(() => q('[data-testid="access-pending"]'), 10_000, "access pending state");
    expect(q('[data-testid="doc-frame"]')).toBeNull();
    expect(document.body.innerHTML).not.toContain(btoa(FILE_TEXT));

    (q('[data-testid="request-btn"]') as HTMLButtonElement).click();
    await waitFor(
      () => q('[data-testid="sent-requests"] .card'), 10_000, "sent request card");
  });

  it("the applicant grants access from the dashboard", async () => {
    await loginAs("uiapplicant", "ui-pw", "#/applicant");
    const grantBtn = await waitFor(
      () => q('[data-testid="grant-btn"]'), 10_000, "grant button");
    (grantBtn as HTMLButtonElement).click();
    await waitFor(
      () => q('[data-testid="request-list"]')?.textContent?.includes("Granted"),
      10_000, "granted state");
  });

  it("the company now views the byte-identical document with its proof", async () => {
    await loginAs("uicompany", "co-pw", "#/company");
    (q('[data-testid="search-input"]') as HTMLInputElement).value = shareCode;
    q<HTMLFormElement>("form")!.dispatchEvent(
      new Event("submit", { bubbles: true, cancelable: true }));
    const viewBtn = await waitFor(
      () => q('[data-testid="view-btn"]'), 10_000, "search result");
    (viewBtn as HTMLButtonElement).click();

    const frame = await waitFor(
      () => q('[data-testid="doc-frame"]'), 15_000, "document frame");
    const src = frame!.getAttribute("src")!;
    const b64 = src.slice(src.indexOf("base64,") + "base64,".length);
    expect(atob(b64)).toBe(FILE_TEXT);

    const panel = q('[data-testid="proof-panel"]')!;
    expect(panel.textContent).toContain("Block height");
    expect(panel.textContent).toMatch(/quorum 2/);
    expect(q('[data-testid="proof-verified"]')!.textContent).toBe("verified");
  });

  it("the landing tamper badge flips red after a chain mutation", async () => {
    const chainPath = join(dataDir, "ledger", "chain.log");
    const original = readFileSync(chainPath);
    const mutated = Buffer.from(original);
    mutated[Math.floor(mutated.length / 2)] ^= 0x01;
    writeFileSync(chainPath, mutated);
    try {
      freshApp("#/");
      const badge = await waitFor(
        () => {
          const el = q('[data-testid="tamper-badge"]');
          return el && el.textContent !== "checking…" ? el : null;
        }, 10_000, "tamper badge");
      expect(badge!.textContent).toContain("TAMPERED at height");
      expect(badge!.className).toContain("badge-tampered");
    } finally {
      writeFileSync(chainPath, original);
    }

    freshApp("#/");
    const healthy = await waitFor(
      () => {
        const el = q('[data-testid="tamper-badge"]');
        return el && el.textContent === "chain intact" ? el : null;
      }, 10_000, "badge back to intact");
    expect(healthy).not.toBeNull();
  });

  it("role routes stay unreachable without a matching token", async () => {
    freshApp("#/admin");
    await waitFor(() => location.hash === "#/login", 5000, "redirect to login");
    expect(q('[data-testid="queue"]')).toBeNull();
  });
});
