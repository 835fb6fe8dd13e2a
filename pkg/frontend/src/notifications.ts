// Notification bell shared by all authenticated views: polls the API every
// five seconds, shows an unread count, marks items read on click.

import { ApiClient, NotificationView } from "./api.js";
import { clear, h } from "./dom.js";

export const POLL_INTERVAL_MS = 5000;

export class NotificationBell {
  readonly element: HTMLElement;
  private listEl: HTMLElement;
  private countEl: HTMLElement;
  private timer: ReturnType<typeof setInterval> | null = null;
  private open = false;

  constructor(private api: ApiClient,
              private onChange: (items: NotificationView[]) => void = () => {}) {
    this.countEl = h("span", { class: "bell-count", "data-testid": "bell-count" }, "0");
    this.listEl = h("div", { class: "bell-list hidden", "data-testid": "bell-list" });
    const button = h("button", {
      class: "bell",
      "data-testid": "bell-toggle",
      onClick: () => this.toggle(),
    }, "Notifications ", this.countEl);
    this.element = h("div", { class: "bell-wrap" }, button, this.listEl);
  }

  start(): void {
    void this.poll();
    this.timer = setInterval(() => void this.poll(), POLL_INTERVAL_MS);
  }

  stop(): void {
    if (this.timer !== null) clearInterval(this.timer);
    this.timer = null;
  }

  private toggle(): void {
    this.open = !this.open;
    this.listEl.classList.toggle("hidden", !this.open);
  }

  async poll(): Promise<void> {
    let items: NotificationView[];
    try {
      items = (await this.api.notifications()).items;
    } catch {
      return; // transient polling failure; next tick retries
    }
    const unread = items.filter((n) => !n.read);
    this.countEl.textContent = String(unread.length);
    clear(this.listEl);
    for (const item of items.slice(0, 15)) {
      const row = h("div", { class: item.read ? "note read" : "note unread" },
        h("span", { class: "note-kind" }, item.kind),
        h("span", { class: "note-payload" }, item.payload));
      if (!item.read) {
        row.append(h("button", {
          class: "note-mark",
          onClick: async () => {
            await this.api.markRead(item.notification_id);
            await this.poll();
          },
        }, "mark read"));
      }
      this.listEl.append(row);
    }
    this.onChange(items);
  }
}
