/**
 * Capture driver: visits a target URL under each consent scenario in a
 * fresh profile and emits session files in the engine's format.
 *
 * The DOM and page scripts run inside jsdom; the network layer is the
 * driver's own (routes.ts), so every request, response and Set-Cookie is
 * recorded deterministically. jsdom does no layout, hence banner geometry
 * comes from inline styles (geometry.ts) — a documented limitation that
 * the bundled fixture site and typical banner overlays satisfy.
 *
 * Two clean-profile no-action visits are always produced (for the
 * engine's cross-profile identifier comparison), plus a small-viewport
 * variant for banner geometry.
 */
import { mkdirSync, writeFileSync, readFileSync } from "node:fs";
import path from "node:path";
import { fileURLToPath } from "node:url";
import { CookieJar, JSDOM, VirtualConsole } from "jsdom";
import { coversCenter, isHidden, isPositioned, resolveBox } from "./geometry.js";
import { fetchRoute } from "./routes.js";
import { serializeSession, } from "./session-format.js";
const HERE = path.dirname(fileURLToPath(import.meta.url));
export const DEFAULT_SCENARIOS = [
    "no_action", "close_banner", "scroll", "accept_all", "reject_all",
];
export function defaultJob(url, outDir) {
    return {
        url,
        outDir,
        scenarios: [...DEFAULT_SCENARIOS],
        desktopViewport: { width: 1366, height: 768 },
        mobileViewport: { width: 375, height: 667 },
        waitBudgetMs: 10_000,
    };
}
export function loadSelectorRules(file) {
    const rulesPath = file ?? path.join(HERE, "..", "selector-rules.txt");
    return readFileSync(rulesPath, "utf-8")
        .split("\n")
        .map((line) => line.trim())
        .filter((line) => line.startsWith("##"))
        .map((line) => line.slice(2));
}
function loadClickRules() {
    return JSON.parse(readFileSync(path.join(HERE, "..", "click-rules.json"), "utf-8"));
}
function isoOrNull(epochMs) {
    return epochMs === null ? null : new Date(epochMs).toISOString();
}
function cookieExpiryMs(cookie) {
    if (cookie.maxAge !== undefined && typeof cookie.maxAge === "number") {
        const created = cookie.creation ? Date.parse(String(cookie.creation)) : Date.now();
        return created + cookie.maxAge * 1000;
    }
    if (cookie.expires && String(cookie.expires) !== "Infinity") {
        const parsed = Date.parse(String(cookie.expires));
        return Number.isFinite(parsed) ? parsed : null;
    }
    return null;
}
function collapse(text) {
    return (text ?? "").replace(/\s+/g, " ").trim();
}
class ScenarioRun {
    job;
    viewport;
    jar = new CookieJar();
    events = [];
    headerSet = new Set();
    fetched = new Set();
    capturedAt = new Date();
    t = 0;
    requestSeq = 0;
    constructor(job, viewport) {
        this.job = job;
        this.viewport = viewport;
    }
    cookieJson(cookie) {
        const domain = (cookie.domain ?? "").toLowerCase();
        const keyId = `${domain}|${cookie.key}`;
        const created = cookie.creation
            ? new Date(String(cookie.creation)).toISOString()
            : this.capturedAt.toISOString();
        return {
            name: cookie.key,
            value: cookie.value,
            domain,
            path: cookie.path ?? "/",
            expiry: isoOrNull(cookieExpiryMs(cookie)),
            set_time: created,
            source: this.headerSet.has(keyId) ? "header" : "script",
        };
    }
    jarCookiesFor(url) {
        return this.jar
            .getCookiesSync(url.href)
            .map((c) => this.cookieJson(c));
    }
    async request(url) {
        const id = `r${++this.requestSeq}`;
        this.t += 120;
        this.events.push({
            t: this.t,
            kind: "request",
            id,
            url: url.href,
            method: "GET",
            headers: {},
            cookies_sent: this.jarCookiesFor(url),
            query_params: [...url.searchParams.entries()],
        });
        const response = await fetchRoute(url, this.jar.getCookieStringSync(url.href), this.job.waitBudgetMs);
        const setNames = [];
        for (const header of response.setCookies) {
            this.jar.setCookieSync(header, url.href, { ignoreError: true });
            setNames.push(header.split("=", 1)[0].trim());
        }
        const applied = this.jar
            .getCookiesSync(url.href)
            .filter((c) => setNames.includes(c.key))
            .map((c) => {
            const raw = c;
            this.headerSet.add(`${(raw.domain ?? "").toLowerCase()}|${raw.key}`);
            return this.cookieJson(raw);
        });
        this.t += 120;
        this.events.push({
            t: this.t,
            kind: "response",
            request_id: id,
            status: response.status,
            set_cookies: applied,
        });
        return { status: response.status, body: response.body };
    }
    storageSnapshot(dom) {
        const serialized = this.jar.serializeSync();
        const cookies = (serialized?.cookies ?? [])
            .map((c) => this.cookieJson(c))
            .sort((a, b) => (a.domain + a.name).localeCompare(b.domain + b.name));
        const localStorageEntries = [];
        if (dom) {
            const ls = dom.window.localStorage;
            const origin = new URL(dom.window.location.href).hostname;
            for (let i = 0; i < ls.length; i += 1) {
                const key = ls.key(i);
                if (key !== null) {
                    localStorageEntries.push({ origin, key, value: ls.getItem(key) ?? "" });
                }
            }
        }
        this.events.push({
            t: this.t,
            kind: "storage_snapshot",
            cookies,
            local_storage: localStorageEntries,
        });
    }
    async scanSubresources(dom) {
        const doc = dom.window.document;
        const urls = [];
        const push = (value) => {
            if (!value)
                return;
            try {
                const abs = new URL(value, dom.window.location.href);
                if (abs.protocol === "http:" || abs.protocol === "https:")
                    urls.push(abs);
            }
            catch {
                /* unparseable src: ignore */
            }
        };
        doc.querySelectorAll("img[src]").forEach((el) => push(el.getAttribute("src")));
        doc.querySelectorAll("script[src]").forEach((el) => push(el.getAttribute("src")));
        doc.querySelectorAll('link[rel="stylesheet"][href]')
            .forEach((el) => push(el.getAttribute("href")));
        for (const url of urls) {
            if (url.href === dom.window.location.href || this.fetched.has(url.href))
                continue;
            this.fetched.add(url.href);
            await this.request(url);
        }
    }
    bannerCandidates(dom, rules) {
        const out = [];
        const doc = dom.window.document;
        for (const selector of rules) {
            let matches;
            try {
                matches = [...doc.querySelectorAll(selector)];
            }
            catch {
                continue; // selector syntax jsdom does not support
            }
            for (const el of matches) {
                const style = el.getAttribute("style");
                if (isHidden(style))
                    continue;
                const box = resolveBox(style, this.viewport);
                out.push({
                    selector,
                    bounding_box: box,
                    is_overlay_blocking: isPositioned(style) && coversCenter(box, this.viewport),
                    text: collapse(el.textContent),
                });
            }
        }
        return out;
    }
    async infoPageText(dom, candidates) {
        if (!candidates.length)
            return null;
        const doc = dom.window.document;
        for (const candidate of candidates) {
            let banner = null;
            try {
                banner = doc.querySelector(candidate.selector);
            }
            catch {
                continue;
            }
            const link = banner?.querySelector("a[href]");
            const href = link?.getAttribute("href");
            if (!href)
                continue;
            const target = new URL(href, dom.window.location.href);
            const response = await this.request(target);
            if (response.status !== 200)
                continue;
            const page = new JSDOM(response.body);
            return collapse(page.window.document.body.textContent);
        }
        return null;
    }
}
function clickFirst(dom, selectors) {
    const doc = dom.window.document;
    for (const selector of selectors) {
        const el = doc.querySelector(selector);
        if (el && typeof el.click === "function") {
            el.click();
            return true;
        }
    }
    return false;
}
export async function runScenario(job, scenario, viewport, profileId, selectorRules) {
    const run = new ScenarioRun(job, viewport);
    const clickRules = loadClickRules();
    run.storageSnapshot(null); // t0: empty profile
    const session = {
        format_version: 1,
        site_url: job.url,
        scenario,
        viewport: { width_px: viewport.width, height_px: viewport.height },
        profile_id: profileId,
        captured_at: run.capturedAt.toISOString(),
        events: run.events,
    };
    let dom;
    try {
        const pageUrl = new URL(job.url);
        const main = await run.request(pageUrl);
        const virtualConsole = new VirtualConsole();
        virtualConsole.on("jsdomError", () => { });
        dom = new JSDOM(main.body, {
            url: pageUrl.href,
            runScripts: "dangerously",
            cookieJar: run.jar,
            virtualConsole,
        });
        await run.scanSubresources(dom);
    }
    catch (error) {
        process.stderr.write(`capture: navigation failed for ${job.url}: ${error}\n`);
        session.incomplete = true; // strict audits reject flagged captures
        return session;
    }
    const candidates = run.bannerCandidates(dom, selectorRules);
    const infoText = await run.infoPageText(dom, candidates);
    run.t = Math.max(run.t + 100, 900);
    run.events.push({
        t: run.t,
        kind: "dom_snapshot",
        banner_candidates: candidates,
        page_interactive: !candidates.some((c) => c.is_overlay_blocking),
        info_page_text: infoText,
        screenshot_ref: null,
    });
    if (scenario !== "no_action") {
        run.t = Math.max(run.t + 500, 3000);
        run.events.push({ t: run.t, kind: "user_action", action: scenario });
        if (scenario === "scroll") {
            dom.window.dispatchEvent(new dom.window.Event("scroll"));
        }
        else if (scenario !== "custom") {
            const clicked = clickFirst(dom, clickRules[scenario]);
            if (!clicked) {
                process.stderr.write(`capture: no click target for ${scenario} on ${job.url}\n`);
            }
        }
        await run.scanSubresources(dom); // pixels added by the handler
        run.t = Math.max(run.t + 200, 3600);
    }
    else {
        run.t = Math.max(run.t + 200, 1500);
    }
    run.storageSnapshot(dom);
    return session;
}
function hostSlug(url) {
    return new URL(url).hostname.toLowerCase().replace(/[^a-z0-9]+/g, "-");
}
/** Capture all scenarios for one site; returns the written file paths. */
export async function captureSite(job) {
    const selectorRules = loadSelectorRules();
    const siteDir = path.join(job.outDir, hostSlug(job.url));
    mkdirSync(siteDir, { recursive: true });
    const written = [];
    const emit = async (scenario, viewport, profile, file) => {
        const session = await runScenario(job, scenario, viewport, profile, selectorRules);
        const target = path.join(siteDir, file);
        writeFileSync(target, serializeSession(session));
        written.push(target);
    };
    for (const scenario of job.scenarios) {
        await emit(scenario, job.desktopViewport, "profile-a", `${scenario}.session.json`);
    }
    if (job.scenarios.includes("no_action")) {
        await emit("no_action", job.desktopViewport, "profile-b", "no_action_twin.session.json");
        if (job.mobileViewport) {
            await emit("no_action", job.mobileViewport, "profile-m", "no_action_mobile.session.json");
        }
    }
    return written;
}
