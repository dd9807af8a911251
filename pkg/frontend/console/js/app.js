/**
 * Console state and API client. No DOM in this module, and deliberately
 * no verdict logic: which cards are answerable, how answers merge, and
 * every outcome shown all come from the server. After a successful POST
 * the store re-fetches; the UI never mutates verdicts locally.
 */
/** Pending outcomes are the server's signal that a card accepts answers. */
const ANSWERABLE_OUTCOMES = new Set(["manual_pending", "user_study_pending"]);
export function canAnswer(verdict) {
    return ANSWERABLE_OUTCOMES.has(verdict.outcome);
}
export function requirementNumber(requirementId) {
    return Number(requirementId.replace(/^R/, "")) || 0;
}
/** Cards pending first (the operator's work queue), then everything else. */
export function orderCards(verdicts) {
    return [...verdicts].sort((a, b) => {
        const pendingDelta = Number(canAnswer(b)) - Number(canAnswer(a));
        if (pendingDelta !== 0)
            return pendingDelta;
        return requirementNumber(a.requirement_id) - requirementNumber(b.requirement_id);
    });
}
export const GROUP_ORDER = [
    "Prior", "Free", "Specific", "Informed", "Unambiguous",
    "Readable and accessible", "Revocable",
];
export class ReviewApi {
    baseUrl;
    fetchFn;
    constructor(baseUrl, fetchFn) {
        this.baseUrl = baseUrl;
        this.fetchFn = fetchFn;
    }
    async getJson(pathname) {
        const response = await this.fetchFn(this.baseUrl + pathname);
        if (!response.ok) {
            throw new Error(`GET ${pathname} failed: ${response.status}`);
        }
        return (await response.json());
    }
    listSites() {
        return this.getJson("/sites");
    }
    siteDetail(siteId) {
        return this.getJson(`/sites/${encodeURIComponent(siteId)}`);
    }
    report() {
        return this.getJson("/report");
    }
    evidenceUrl(siteId, ref) {
        return `${this.baseUrl}/sites/${encodeURIComponent(siteId)}/evidence/${ref}`;
    }
    async submitAnswer(siteId, body) {
        const response = await this.fetchFn(`${this.baseUrl}/sites/${encodeURIComponent(siteId)}/answers`, {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify(body),
        });
        let payload = null;
        try {
            payload = await response.json();
        }
        catch {
            payload = null;
        }
        return { status: response.status, body: payload };
    }
}
export class ConsoleStore {
    api;
    sites = [];
    currentSite = null;
    lastError = null;
    constructor(api) {
        this.api = api;
    }
    async loadSites() {
        this.sites = await this.api.listSites();
    }
    async openSite(siteId) {
        this.currentSite = await this.api.siteDetail(siteId);
    }
    /**
     * Submit one answer. On success the store re-fetches both the site
     * detail and the site list, so the UI state is exactly what the server
     * now says; 409/422 surface as results, never swallowed.
     */
    async answer(requirementId, outcome, operator, note) {
        if (!this.currentSite)
            return "invalid";
        const siteId = this.currentSite.site_id;
        let status;
        try {
            const result = await this.api.submitAnswer(siteId, {
                requirement_id: requirementId, outcome, operator, note,
            });
            status = result.status;
            this.lastError = status >= 400
                ? String(result.body?.error ?? status)
                : null;
        }
        catch (error) {
            this.lastError = String(error);
            return "network";
        }
        if (status === 201) {
            await this.openSite(siteId);
            await this.loadSites();
            return "ok";
        }
        if (status === 409)
            return "conflict";
        if (status === 422)
            return "invalid";
        if (status === 404)
            return "not_found";
        return "network";
    }
}
