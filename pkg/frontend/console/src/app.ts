/**
 * Console state and API client. No DOM in this module, and deliberately
 * no verdict logic: which cards are answerable, how answers merge, and
 * every outcome shown all come from the server. After a successful POST
 * the store re-fetches; the UI never mutates verdicts locally.
 */

export interface SiteSummary {
  site_id: string;
  url: string;
  pending_count: number;
  violation_count: number;
}

export interface EvidenceJson {
  kind: string;
  payload: Record<string, unknown>;
  session_ref: [string, number] | null;
}

export interface VerdictJson {
  requirement_id: string;
  outcome: string;
  provenance: string;
  confidence_note: string;
  evidence: EvidenceJson[];
  operator?: string | null;
  operator_note?: string | null;
  answered_at?: string | null;
}

export interface FindingJson {
  kind: string;
  message: string;
  requirement_id: string | null;
  evidence: EvidenceJson[];
}

export interface ChecklistInfo {
  title: string;
  group: string;
  assessment: string;
  assessment_text: string;
  prompt: string;
  violation_text: string;
  legal_basis: string;
  dpa_positions: Record<string, string>;
}

export interface SiteDetail {
  site_id: string;
  url: string;
  verdicts: VerdictJson[];
  findings: FindingJson[];
  evidence_index: Record<string, EvidenceJson>;
  checklist: Record<string, ChecklistInfo>;
}

export type AnswerResult = "ok" | "conflict" | "invalid" | "not_found" | "network";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Pending outcomes are the server's signal that a card accepts answers. */
const ANSWERABLE_OUTCOMES = new Set(["manual_pending", "user_study_pending"]);

export function canAnswer(verdict: VerdictJson): boolean {
  return ANSWERABLE_OUTCOMES.has(verdict.outcome);
}

export function requirementNumber(requirementId: string): number {
  return Number(requirementId.replace(/^R/, "")) || 0;
}

/** Cards pending first (the operator's work queue), then everything else. */
export function orderCards(verdicts: VerdictJson[]): VerdictJson[] {
  return [...verdicts].sort((a, b) => {
    const pendingDelta = Number(canAnswer(b)) - Number(canAnswer(a));
    if (pendingDelta !== 0) return pendingDelta;
    return requirementNumber(a.requirement_id) - requirementNumber(b.requirement_id);
  });
}

export const GROUP_ORDER = [
  "Prior", "Free", "Specific", "Informed", "Unambiguous",
  "Readable and accessible", "Revocable",
];

export class ReviewApi {
  constructor(readonly baseUrl: string, readonly fetchFn: FetchLike) {}

  private async getJson<T>(pathname: string): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + pathname);
    if (!response.ok) {
      throw new Error(`GET ${pathname} failed: ${response.status}`);
    }
    return (await response.json()) as T;
  }

  listSites(): Promise<SiteSummary[]> {
    return this.getJson("/sites");
  }

  siteDetail(siteId: string): Promise<SiteDetail> {
    return this.getJson(`/sites/${encodeURIComponent(siteId)}`);
  }

  report(): Promise<Record<string, unknown>> {
    return this.getJson("/report");
  }

  evidenceUrl(siteId: string, ref: string): string {
    return `${this.baseUrl}/sites/${encodeURIComponent(siteId)}/evidence/${ref}`;
  }

  async submitAnswer(siteId: string, body: {
    requirement_id: string;
    outcome: string;
    operator: string;
    note?: string;
  }): Promise<{ status: number; body: unknown }> {
    const response = await this.fetchFn(
      `${this.baseUrl}/sites/${encodeURIComponent(siteId)}/answers`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(body),
      });
    let payload: unknown = null;
    try {
      payload = await response.json();
    } catch {
      payload = null;
    }
    return { status: response.status, body: payload };
  }
}

export class ConsoleStore {
  sites: SiteSummary[] = [];
  currentSite: SiteDetail | null = null;
  lastError: string | null = null;

  constructor(readonly api: ReviewApi) {}

  async loadSites(): Promise<void> {
    this.sites = await this.api.listSites();
  }

  async openSite(siteId: string): Promise<void> {
    this.currentSite = await this.api.siteDetail(siteId);
  }

  /**
   * Submit one answer. On success the store re-fetches both the site
   * detail and the site list, so the UI state is exactly what the server
   * now says; 409/422 surface as results, never swallowed.
   */
  async answer(requirementId: string, outcome: string, operator: string,
               note: string): Promise<AnswerResult> {
    if (!this.currentSite) return "invalid";
    const siteId = this.currentSite.site_id;
    let status: number;
    try {
      const result = await this.api.submitAnswer(siteId, {
        requirement_id: requirementId, outcome, operator, note,
      });
      status = result.status;
      this.lastError = status >= 400
        ? String((result.body as { error?: string })?.error ?? status)
        : null;
    } catch (error) {
      this.lastError = String(error);
      return "network";
    }
    if (status === 201) {
      await this.openSite(siteId);
      await this.loadSites();
      return "ok";
    }
    if (status === 409) return "conflict";
    if (status === 422) return "invalid";
    if (status === 404) return "not_found";
    return "network";
  }
}
