// Public explorer: chain height, tamper badge, recent blocks. No account
// needed; everything shown comes straight from the public ledger routes.

import { ApiClient } from "../api.js";
import { clear, h, shortHex } from "../dom.js";

export function renderLanding(api: ApiClient): HTMLElement {
  const badge = h("span", { class: "badge", "data-testid": "tamper-badge" }, "checking…");
  const height = h("span", { "data-testid": "chain-height" }, "…");
  const blocksTable = h("tbody", { "data-testid": "blocks-body" });

  const root = h("section", { class: "landing" },
    h("h1", {}, "Credential chain explorer"),
    h("p", { class: "tagline" },
      "Verified academic certificates, anchored on a quorum-validated ledger. ",
      "Browse freely; register to upload or verify."),
    h("div", { class: "statusline" },
      h("span", {}, "Chain height: "), height,
      h("span", { class: "spacer" }, " "),
      h("span", {}, "Integrity: "), badge),
    h("table", { class: "blocks" },
      h("thead", {},
        h("tr", {},
          h("th", {}, "Height"), h("th", {}, "Block hash"),
          h("th", {}, "Txs"), h("th", {}, "Validators"))),
      blocksTable),
  );

  void (async () => {
    try {
      const scan = await api.scan();
      badge.textContent = scan.tampered
        ? `TAMPERED at height ${scan.height} (${scan.kind})`
        : "chain intact";
      badge.className = scan.tampered ? "badge badge-tampered" : "badge badge-ok";
    } catch {
      badge.textContent = "unreachable";
    }
    try {
      const res = await api.blocks();
      height.textContent = String(res.chain_height);
      clear(blocksTable);
      for (const block of [...res.items].reverse()) {
        blocksTable.append(h("tr", {},
          h("td", {}, String(block.height)),
          h("td", { class: "mono" }, shortHex(block.block_hash)),
          h("td", {}, String(block.tx_hashes.length)),
          h("td", {}, String(block.validator_count))));
      }
    } catch {
      height.textContent = "?";
    }
  })();

  return root;
}
