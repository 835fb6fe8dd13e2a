// Application shell: hash router + role guards + notification bell.

import { ApiClient } from "./api.js";
import { clear, h } from "./dom.js";
import { NotificationBell } from "./notifications.js";
import { Session, guardRoute, homeRoute } from "./session.js";
import { renderAdmin } from "./views/admin.js";
import { renderApplicant } from "./views/applicant.js";
import { renderCompany } from "./views/company.js";
import { renderLanding } from "./views/landing.js";
import { renderLogin, renderRegister } from "./views/login.js";

export interface App {
  render: (route?: string) => void;
  dispose: () => void;
  session: Session;
  api: ApiClient;
  bell: NotificationBell | null;
}

export function createApp(root: HTMLElement, apiBase = ""): App {
  const session = new Session();
  const api = new ApiClient(apiBase, () => session.token);
  let bell: NotificationBell | null = null;
  let currentView: HTMLElement | null = null;

  function navigate(route: string): void {
    if (location.hash !== route) {
      location.hash = route;  // hashchange listener re-renders
    } else {
      render(route);
    }
  }

  function header(): HTMLElement {
    const nav = h("nav", {},
      h("a", { href: "#/", class: "brand" }, "verifi"),
      h("span", { class: "spacer" }, " "));
    if (session.authenticated) {
      nav.append(
        h("span", { class: "whoami", "data-testid": "whoami" },
          `${session.displayName} (${session.role})`),
        h("a", { href: homeRoute(session), class: "dash-link" }, "dashboard"),
        h("button", {
          class: "logout", "data-testid": "logout",
          onClick: () => {
            session.end();
            app.bell?.stop();
            app.bell = null;
            navigate("#/");
          },
        }, "log out"));
    } else {
      nav.append(h("a", { href: "#/login" }, "log in"),
        h("a", { href: "#/register" }, "register"));
    }
    return nav;
  }

  function render(route = location.hash || "#/"): void {
    const target = guardRoute(route, session);
    if (target !== route) {
      location.hash = target;
      return;
    }
    bell?.stop();
    bell = null;
    clear(root);

    const ctx = { api, session, navigate };
    switch (route) {
      case "#/login":
        currentView = renderLogin(ctx);
        break;
      case "#/register":
        currentView = renderRegister(ctx);
        break;
      case "#/applicant":
        currentView = renderApplicant(api);
        break;
      case "#/admin":
        currentView = renderAdmin(api);
        break;
      case "#/company":
        currentView = renderCompany(api);
        break;
      default:
        currentView = renderLanding(api);
    }

    const head = header();
    if (session.authenticated) {
      bell = new NotificationBell(api, () => {
        const refresh = (currentView as any)?.refresh;
        if (typeof refresh === "function") void refresh();
      });
      head.append(bell.element);
      bell.start();
    }
    app.bell = bell;
    root.append(head, currentView);
  }

  const onHashChange = () => render();
  window.addEventListener("hashchange", onHashChange);

  const app: App = {
    render,
    session,
    api,
    bell,
    dispose: () => {
      window.removeEventListener("hashchange", onHashChange);
      bell?.stop();
    },
  };
  return app;
}

export function bootstrap(): App {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app mount point");
  const app = createApp(root);
  app.render();
  return app;
}
