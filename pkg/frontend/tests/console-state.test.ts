/**
 * Console store logic against a scripted in-memory service: answerability
 * and ordering come from server outcomes alone, and submitting an answer
 * re-fetches instead of mutating anything locally.
 */

import { describe, expect, it } from "vitest";

import {
  canAnswer,
  ConsoleStore,
  orderCards,
  ReviewApi,
  type SiteDetail,
  type VerdictJson,
} from "../console/js/app.js";

function verdict(requirementId: string, outcome: string): VerdictJson {
  return {
    requirement_id: requirementId,
    outcome,
    provenance: "auto",
    confidence_note: "",
    evidence: [],
  };
}

function makeDetail(): SiteDetail {
  return {
    site_id: "s1",
    url: "https://www.a.example/",
    verdicts: [
      verdict("R1", "compliant"),
      verdict("R13", "manual_pending"),
      verdict("R14", "violation"),
      verdict("R17", "user_study_pending"),
    ],
    findings: [],
    evidence_index: {},
    checklist: {},
  };
}

/** Tiny scripted server: one site, answers flip the pending card. */
class FakeServer {
  detail = makeDetail();
  postCount = 0;

  fetch = async (input: string, init?: RequestInit): Promise<Response> => {
    if (input.endsWith("/sites") && !init) {
      return Response.json([{ site_id: "s1", url: this.detail.url,
        pending_count: 2, violation_count: 1 }]);
    }
    if (input.endsWith("/sites/s1") && !init) {
      return Response.json(this.detail);
    }
    if (input.endsWith("/sites/s1/answers") && init?.method === "POST") {
      this.postCount += 1;
      const body = JSON.parse(String(init.body));
      const target = this.detail.verdicts.find(
        (v) => v.requirement_id === body.requirement_id);
      if (!target) return Response.json({ error: "unknown" }, { status: 422 });
      if (!canAnswer(target)) {
        return Response.json({ error: "decided technically" }, { status: 409 });
      }
      // the *server* merges; the client only ever re-fetches this state
      target.outcome = body.outcome;
      target.provenance = "operator";
      target.operator = body.operator;
      return Response.json(body, { status: 201 });
    }
    if (input.endsWith("/report")) {
      return Response.json({ sites: [this.detail] });
    }
    return Response.json({ error: "no route" }, { status: 404 });
  };
}

describe("card rules mirror the server", () => {
  it("only pending outcomes are answerable", () => {
    const detail = makeDetail();
    const answerable = detail.verdicts.filter(canAnswer).map((v) => v.requirement_id);
    expect(answerable).toEqual(["R13", "R17"]);
  });

  it("orders pending cards first, each block by requirement number", () => {
    const ordered = orderCards(makeDetail().verdicts).map((v) => v.requirement_id);
    expect(ordered).toEqual(["R13", "R17", "R1", "R14"]);
  });
});

describe("answer flow", () => {
  it("successful answer re-fetches server state verbatim", async () => {
    const server = new FakeServer();
    const store = new ConsoleStore(new ReviewApi("", server.fetch));
    await store.loadSites();
    await store.openSite("s1");

    const result = await store.answer("R13", "violation", "op1", "looked unfair");
    expect(result).toBe("ok");
    // the store's card is exactly the server's card, not a local edit
    const direct = await new ReviewApi("", server.fetch).siteDetail("s1");
    expect(store.currentSite).toEqual(direct);
    const r13 = store.currentSite!.verdicts.find((v) => v.requirement_id === "R13")!;
    expect(r13.provenance).toBe("operator");
  });

  it("conflict surfaces as conflict and changes nothing", async () => {
    const server = new FakeServer();
    const store = new ConsoleStore(new ReviewApi("", server.fetch));
    await store.loadSites();
    await store.openSite("s1");
    const before = JSON.stringify(store.currentSite);

    const result = await store.answer("R14", "compliant", "op1", "");
    expect(result).toBe("conflict");
    expect(store.lastError).toContain("decided technically");
    expect(JSON.stringify(store.currentSite)).toBe(before);
  });

  it("unknown requirement surfaces as invalid", async () => {
    const server = new FakeServer();
    const store = new ConsoleStore(new ReviewApi("", server.fetch));
    await store.openSite("s1");
    expect(await store.answer("R99", "compliant", "op1", "")).toBe("invalid");
  });
});
