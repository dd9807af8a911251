// @vitest-environment jsdom
/**
 * DOM smoke test: the console renders the server's cards and submits
 * answers through the real form wiring, against a scripted fetch.
 */

import { beforeAll, describe, expect, it, vi } from "vitest";

const detail: any = {
  site_id: "s1",
  url: "https://www.a.example/",
  verdicts: [
    { requirement_id: "R1", outcome: "violation", provenance: "auto",
      confidence_note: "heuristic", evidence: [
        { kind: "cookie", payload: { key: "IDE", domain: "ads.x.example" },
          session_ref: ["no_action.session.json", 1500] }] },
    { requirement_id: "R13", outcome: "manual_pending", provenance: "auto",
      confidence_note: "", evidence: [] },
    { requirement_id: "R17", outcome: "user_study_pending", provenance: "auto",
      confidence_note: "", evidence: [] },
  ],
  findings: [
    { kind: "consent_wall", message: "banner blocks the page",
      requirement_id: "R20", evidence: [] },
  ],
  evidence_index: {},
  checklist: {
    R1: { title: "Prior to storing an identifier", group: "Prior",
          assessment: "Mixed", assessment_text: "M or T",
          prompt: "Consent must be obtained before a user identifier is stored.",
          violation_text: "", legal_basis: "basis", dpa_positions: {} },
    R13: { title: "Balanced choice", group: "Unambiguous",
           assessment: "Manual", assessment_text: "M (fully)",
           prompt: "A banner must present a fair or balanced design choice.",
           violation_text: "", legal_basis: "basis", dpa_positions: {} },
    R17: { title: "Intelligible", group: "Readable and accessible",
           assessment: "UserStudy", assessment_text: "U",
           prompt: "The consent request should be understood.",
           violation_text: "", legal_basis: "basis", dpa_positions: {} },
  },
};

const posts: any[] = [];

function scriptedFetch(input: string, init?: RequestInit): Promise<Response> {
  if (input.endsWith("/sites") && !init) {
    return Promise.resolve(Response.json([
      { site_id: "s1", url: detail.url, pending_count: 2, violation_count: 1 }]));
  }
  if (input.endsWith("/sites/s1")) {
    return Promise.resolve(Response.json(detail));
  }
  if (input.endsWith("/answers") && init?.method === "POST") {
    const body = JSON.parse(String(init.body));
    posts.push(body);
    const card = detail.verdicts.find(
      (v: any) => v.requirement_id === body.requirement_id);
    card.outcome = body.outcome;
    card.provenance = "operator";
    card.operator = body.operator;
    return Promise.resolve(Response.json(body, { status: 201 }));
  }
  return Promise.resolve(Response.json({ error: "no route" }, { status: 404 }));
}

async function settled(): Promise<void> {
  await new Promise((resolve) => setTimeout(resolve, 20));
}

beforeAll(async () => {
  document.body.innerHTML = '<div id="app">Loading…</div>';
  vi.stubGlobal("fetch", scriptedFetch);
  await import("../console/js/main.js");
  await settled();
});

describe("console DOM", () => {
  it("renders the site list from the server", () => {
    const link = document.querySelector("table.sites a") as HTMLAnchorElement;
    expect(link.textContent).toBe("https://www.a.example/");
    expect(link.getAttribute("href")).toBe("#/site/s1");
  });

  it("renders cards grouped with pending first and findings on top", async () => {
    location.hash = "#/site/s1";
    window.dispatchEvent(new Event("hashchange"));
    await settled();

    const groups = [...document.querySelectorAll("h2.group")].map(
      (h) => h.textContent);
    expect(groups).toEqual(["Prior", "Unambiguous", "Readable and accessible"]);
    expect(document.querySelector(".findings")?.textContent).toContain("consent_wall");

    const cards = [...document.querySelectorAll(".card")];
    expect(cards).toHaveLength(3);
    // answer forms only on the pending cards
    const withForms = cards.filter((c) => c.querySelector("form"));
    expect(withForms).toHaveLength(2);
    // evidence table rendered for the decided technical card
    expect(document.querySelector(".evidence table.payload")?.textContent)
      .toContain("IDE");
    // user-study cards carry the proxy-answer flag
    expect(document.body.textContent).toContain("proxy answers");
  });

  it("submits an answer through the form and re-renders server state", async () => {
    const pendingCard = [...document.querySelectorAll(".card")].find(
      (c) => c.textContent?.includes("R13"))!;
    const form = pendingCard.querySelector("form")!;
    (form.querySelector("select") as HTMLSelectElement).value = "violation";
    (form.querySelector("input") as HTMLInputElement).value = "dom-op";
    form.dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));
    await settled();

    expect(posts).toHaveLength(1);
    expect(posts[0]).toMatchObject(
      { requirement_id: "R13", outcome: "violation", operator: "dom-op" });
    // re-render shows the server's merged card, no local merging
    const rerendered = [...document.querySelectorAll(".card")].find(
      (c) => c.textContent?.includes("R13"))!;
    expect(rerendered.querySelector(".badge")?.textContent).toBe("violation");
    expect(rerendered.querySelector(".provenance")?.textContent)
      .toContain("operator: dom-op");
    expect(rerendered.querySelector("form")).toBeNull();
  });
});
