/**
 * DOM glue for the review console. Renders exactly what the server
 * reports (see app.ts); the only state transitions are fetch + re-render.
 */
import { canAnswer, ConsoleStore, GROUP_ORDER, orderCards, ReviewApi, } from "./app.js";
const api = new ReviewApi("", (input, init) => fetch(input, init));
const store = new ConsoleStore(api);
const root = document.getElementById("app");
function el(tag, className, text) {
    const node = document.createElement(tag);
    if (className)
        node.className = className;
    if (text !== undefined)
        node.textContent = text;
    return node;
}
function outcomeBadge(outcome) {
    const badge = el("span", `badge badge-${outcome}`, outcome.replace(/_/g, " "));
    return badge;
}
function renderEvidence(site, evidence) {
    const box = el("div", "evidence");
    box.appendChild(el("span", "evidence-kind", evidence.kind));
    const payload = evidence.payload;
    if (evidence.kind === "screenshot_ref") {
        const img = el("img", "screenshot");
        const wanted = JSON.stringify(evidence);
        const ref = Object.entries(site.evidence_index)
            .find(([, e]) => JSON.stringify(e) === wanted)?.[0];
        img.src = ref ? api.evidenceUrl(site.site_id, ref) : String(payload.path ?? "");
        img.addEventListener("error", () => {
            // missing assets surface as an inline error, never silently
            img.replaceWith(el("div", "form-error", `evidence asset not available: ${payload.path ?? img.src}`));
        });
        box.appendChild(img);
        return box;
    }
    const table = el("table", "payload");
    for (const [key, value] of Object.entries(payload)) {
        const row = el("tr");
        row.appendChild(el("th", undefined, key));
        row.appendChild(el("td", undefined, typeof value === "object" ? JSON.stringify(value) : String(value)));
        table.appendChild(row);
    }
    box.appendChild(table);
    if (evidence.session_ref) {
        box.appendChild(el("div", "session-ref", `from ${evidence.session_ref[0]} @ ${evidence.session_ref[1]}ms`));
    }
    return box;
}
function answerForm(card) {
    const form = el("form", "answer-form");
    const select = el("select");
    for (const outcome of ["compliant", "violation", "inconclusive"]) {
        const option = el("option", undefined, outcome);
        option.setAttribute("value", outcome);
        select.appendChild(option);
    }
    const operator = el("input");
    operator.placeholder = "operator id";
    operator.required = true;
    const note = el("input");
    note.placeholder = "note (optional)";
    const submit = el("button", undefined, "Record answer");
    submit.setAttribute("type", "submit");
    const error = el("div", "form-error");
    form.append(select, operator, note, submit, error);
    form.addEventListener("submit", async (event) => {
        event.preventDefault();
        submit.setAttribute("disabled", "1");
        const result = await store.answer(card.requirement_id, select.value, operator.value, note.value);
        submit.removeAttribute("disabled");
        if (result === "ok") {
            render(); // server-confirmed state only
        }
        else {
            error.textContent = `${result}: ${store.lastError ?? ""}`;
        }
    });
    return form;
}
function renderCard(site, card) {
    const info = site.checklist[card.requirement_id];
    const node = el("section", canAnswer(card) ? "card card-pending" : "card");
    const head = el("header");
    head.appendChild(el("strong", undefined, `${card.requirement_id} ${info.title}`));
    head.appendChild(outcomeBadge(card.outcome));
    if (card.provenance !== "auto") {
        head.appendChild(el("span", "provenance", `${card.provenance}: ${card.operator ?? ""}`));
    }
    if (info.assessment === "UserStudy") {
        head.appendChild(el("span", "flag-u", "U — properly needs a user study; answers are proxy answers"));
    }
    node.appendChild(head);
    node.appendChild(el("p", "prompt", info.prompt));
    node.appendChild(el("p", "meta", `assessment: ${info.assessment_text} — legal basis: ${info.legal_basis}`));
    if (card.confidence_note) {
        node.appendChild(el("p", "note", card.confidence_note));
    }
    if (card.operator_note) {
        node.appendChild(el("p", "note", `operator note: ${card.operator_note}`));
    }
    for (const evidence of card.evidence) {
        node.appendChild(renderEvidence(site, evidence));
    }
    if (canAnswer(card)) {
        node.appendChild(answerForm(card));
    }
    return node;
}
function renderSite(site) {
    root.replaceChildren();
    const back = el("a", "back", "< all sites");
    back.setAttribute("href", "#/");
    root.appendChild(back);
    root.appendChild(el("h1", undefined, site.url));
    if (site.findings.length) {
        const box = el("div", "findings");
        box.appendChild(el("h2", undefined, "Findings"));
        for (const finding of site.findings) {
            const tagged = finding.requirement_id ? `[${finding.requirement_id}] ` : "";
            box.appendChild(el("p", undefined, `${tagged}${finding.kind}: ${finding.message}`));
        }
        root.appendChild(box);
    }
    const byGroup = new Map();
    for (const verdict of orderCards(site.verdicts)) {
        const group = site.checklist[verdict.requirement_id]?.group ?? "Other";
        if (!byGroup.has(group))
            byGroup.set(group, []);
        byGroup.get(group).push(verdict);
    }
    for (const group of GROUP_ORDER) {
        const cards = byGroup.get(group);
        if (!cards)
            continue;
        root.appendChild(el("h2", "group", group));
        for (const card of cards) {
            root.appendChild(renderCard(site, card));
        }
    }
}
function renderSiteList() {
    root.replaceChildren();
    root.appendChild(el("h1", undefined, "Cookie consent audit review"));
    const table = el("table", "sites");
    const head = el("tr");
    for (const column of ["site", "pending", "violations"]) {
        head.appendChild(el("th", undefined, column));
    }
    table.appendChild(head);
    for (const site of store.sites) {
        const row = el("tr");
        const link = el("a", undefined, site.url);
        link.setAttribute("href", `#/site/${site.site_id}`);
        const cell = el("td");
        cell.appendChild(link);
        row.appendChild(cell);
        row.appendChild(el("td", undefined, String(site.pending_count)));
        row.appendChild(el("td", undefined, String(site.violation_count)));
        table.appendChild(row);
    }
    root.appendChild(table);
}
function render() {
    if (store.currentSite) {
        renderSite(store.currentSite);
    }
    else {
        renderSiteList();
    }
}
async function route() {
    const match = /^#\/site\/(.+)$/.exec(location.hash);
    try {
        if (match) {
            await store.openSite(decodeURIComponent(match[1]));
        }
        else {
            store.currentSite = null;
            await store.loadSites();
        }
        render();
    }
    catch (error) {
        root.replaceChildren(el("p", "form-error", `cannot reach the service: ${error}`));
    }
}
window.addEventListener("hashchange", () => { void route(); });
void route();
