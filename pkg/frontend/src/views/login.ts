// Login and registration forms.

import { ApiClient, ApiError } from "../api.js";
import { h } from "../dom.js";
import { ROLE_ROUTES, Session } from "../session.js";

interface Ctx {
  api: ApiClient;
  session: Session;
  navigate: (route: string) => void;
}

export function renderLogin(ctx: Ctx): HTMLElement {
  const userInput = h("input", { name: "user_id", placeholder: "user id", "data-testid": "login-user" });
  const passInput = h("input", { name: "password", type: "password", placeholder: "password", "data-testid": "login-password" });
  const error = h("p", { class: "error", "data-testid": "login-error" });

  const submit = h("button", { type: "submit", "data-testid": "login-submit" }, "Log in");
  const form = h("form", {
    onSubmit: (event: Event) => {
      event.preventDefault();
      if (submit.disabled) return;
      submit.disabled = true;
      void (async () => {
        try {
          const result = await ctx.api.login(userInput.value.trim(), passInput.value);
          ctx.session.start({
            token: result.token, role: result.role,
            user_id: result.user_id, display_name: result.display_name,
          });
          ctx.navigate(ROLE_ROUTES[result.role] ?? "#/");
        } catch (err) {
          error.textContent = err instanceof ApiError ? err.message : "login failed";
        } finally {
          submit.disabled = false;
        }
      })();
    },
  }, userInput, passInput, submit, error);

  return h("section", { class: "auth" },
    h("h1", {}, "Log in"),
    form,
    h("p", {}, "No account? ",
      h("a", { href: "#/register" }, "Register as applicant or company")));
}

export function renderRegister(ctx: Ctx): HTMLElement {
  const userInput = h("input", { name: "user_id", placeholder: "user id", "data-testid": "reg-user" });
  const nameInput = h("input", { name: "display_name", placeholder: "display name", "data-testid": "reg-name" });
  const passInput = h("input", { name: "password", type: "password", placeholder: "password", "data-testid": "reg-password" });
  const roleSelect = h("select", { name: "role", "data-testid": "reg-role" },
    h("option", { value: "Applicant" }, "Applicant"),
    h("option", { value: "Company" }, "Company"));
  const error = h("p", { class: "error", "data-testid": "reg-error" });

  const submit = h("button", { type: "submit", "data-testid": "reg-submit" }, "Register");
  const form = h("form", {
    onSubmit: (event: Event) => {
      event.preventDefault();
      if (submit.disabled) return;
      submit.disabled = true;
      void (async () => {
        try {
          await ctx.api.register(userInput.value.trim(), roleSelect.value,
            nameInput.value.trim(), passInput.value);
          const result = await ctx.api.login(userInput.value.trim(), passInput.value);
          ctx.session.start({
            token: result.token, role: result.role,
            user_id: result.user_id, display_name: result.display_name,
          });
          ctx.navigate(ROLE_ROUTES[result.role] ?? "#/");
        } catch (err) {
          error.textContent = err instanceof ApiError ? err.message : "registration failed";
        } finally {
          submit.disabled = false;
        }
      })();
    },
  }, userInput, nameInput, roleSelect, passInput, submit, error);

  return h("section", { class: "auth" }, h("h1", {}, "Register"), form);
}
