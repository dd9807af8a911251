/**
 * Network routing for the capture driver.
 *
 * Hosts under the reserved `.example` TLD are served in-process: the
 * bundled fixture site from `fixture-site/`, and a stand-in ad tracker
 * that answers pixel requests with an identifier cookie. Anything else
 * is fetched for real (when the sandbox allows), so the same driver can
 * point at live targets.
 */

import { randomBytes } from "node:crypto";
import { readFileSync } from "node:fs";
import path from "node:path";
import { fileURLToPath } from "node:url";

export interface RoutedResponse {
  status: number;
  body: string;
  contentType: string;
  setCookies: string[];
}

const FIXTURE_ROOT = path.resolve(
  path.dirname(fileURLToPath(import.meta.url)), "..", "..", "fixture-site");

const TWO_YEARS_S = 730 * 24 * 3600;

function fixtureFile(relative: string): string {
  return readFileSync(path.join(FIXTURE_ROOT, relative), "utf-8");
}

function trackerPixel(): RoutedResponse {
  const id = randomBytes(32).toString("base64url").slice(0, 64);
  const expires = new Date(Date.now() + TWO_YEARS_S * 1000).toUTCString();
  return {
    status: 200,
    body: "GIF89a",
    contentType: "image/gif",
    setCookies: [`IDE=${id}; Expires=${expires}; Path=/; SameSite=None`],
  };
}

const GONE: RoutedResponse = {
  status: 404, body: "not found", contentType: "text/plain", setCookies: [],
};

export function routeLocal(url: URL): RoutedResponse | null {
  switch (url.hostname) {
    case "www.fixture.example":
      if (url.pathname === "/" || url.pathname === "/index.html") {
        return { status: 200, body: fixtureFile("index.html"),
                 contentType: "text/html", setCookies: [] };
      }
      if (url.pathname === "/cookies.html") {
        return { status: 200, body: fixtureFile("cookies.html"),
                 contentType: "text/html", setCookies: [] };
      }
      return GONE;
    case "www.tracky.example":
      if (url.pathname === "/" || url.pathname === "/index.html") {
        return { status: 200, body: fixtureFile(path.join("tracky", "index.html")),
                 contentType: "text/html", setCookies: [] };
      }
      if (url.pathname === "/cookies.html") {
        return { status: 200, body: fixtureFile("cookies.html"),
                 contentType: "text/html", setCookies: [] };
      }
      return GONE;
    case "ads.trackerhub.example":
      return trackerPixel();
    default:
      return url.hostname.endsWith(".example") ? GONE : null;
  }
}

export async function fetchRoute(url: URL, cookieHeader: string,
                                 timeoutMs: number): Promise<RoutedResponse> {
  const local = routeLocal(url);
  if (local) return local;

  const response = await fetch(url, {
    redirect: "follow",
    headers: cookieHeader ? { cookie: cookieHeader } : {},
    signal: AbortSignal.timeout(timeoutMs),
  });
  const setCookies: string[] =
    typeof (response.headers as any).getSetCookie === "function"
      ? (response.headers as any).getSetCookie()
      : [];
  return {
    status: response.status,
    body: await response.text(),
    contentType: response.headers.get("content-type") ?? "text/html",
    setCookies,
  };
}
