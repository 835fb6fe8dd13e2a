// Session state: the bearer token and the role derived from it, kept only
// in memory / sessionStorage. Role-gated routes consult guardRoute.

const STORAGE_KEY = "verifi.session";

export interface SessionData {
  token: string;
  role: string;
  user_id: string;
  display_name: string;
}

export class Session {
  private data: SessionData | null = null;

  constructor(private storage: Storage | null = defaultStorage()) {
    const raw = this.storage?.getItem(STORAGE_KEY);
    if (raw) {
      try {
        this.data = JSON.parse(raw);
      } catch {
        this.storage?.removeItem(STORAGE_KEY);
      }
    }
  }

  get token(): string | null {
    return this.data?.token ?? null;
  }

  get role(): string | null {
    return this.data?.role ?? null;
  }

  get userId(): string | null {
    return this.data?.user_id ?? null;
  }

  get displayName(): string | null {
    return this.data?.display_name ?? null;
  }

  get authenticated(): boolean {
    return this.data !== null;
  }

  start(data: SessionData): void {
    this.data = data;
    this.storage?.setItem(STORAGE_KEY, JSON.stringify(data));
  }

  end(): void {
    this.data = null;
    this.storage?.removeItem(STORAGE_KEY);
  }
}

function defaultStorage(): Storage | null {
  try {
    return typeof sessionStorage !== "undefined" ? sessionStorage : null;
  } catch {
    return null;
  }
}

export const ROLE_ROUTES: Record<string, string> = {
  Applicant: "#/applicant",
  Admin: "#/admin",
  Company: "#/company",
};

const ROUTE_ROLES: Record<string, string> = {
  "#/applicant": "Applicant",
  "#/admin": "Admin",
  "#/company": "Company",
};

/** Returns the route to render: role-gated routes fall back to #/login
 * unless the session carries exactly the required role. */
export function guardRoute(route: string, session: Session): string {
  const required = ROUTE_ROLES[route];
  if (!required) return route;
  if (!session.authenticated) return "#/login";
  if (session.role !== required) return ROLE_ROUTES[session.role ?? ""] ?? "#/";
  return route;
}

export function homeRoute(session: Session): string {
  return session.authenticated ? (ROLE_ROUTES[session.role ?? ""] ?? "#/") : "#/";
}
