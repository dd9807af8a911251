/**
 * Session file format (version 1) as consumed by the audit engine.
 * Mirrors docs/session-format.md in the engine repository; the engine's
 * parser is strict, so emit exactly these shapes and nothing else.
 */

export type ScenarioKind =
  | "no_action"
  | "close_banner"
  | "scroll"
  | "accept_all"
  | "reject_all"
  | "custom";

export interface CookieJson {
  name: string;
  value: string;
  domain: string;
  path: string;
  expiry: string | null;
  set_time: string;
  source: "header" | "script" | "unknown";
}

export interface StorageEntryJson {
  origin: string;
  key: string;
  value: string;
}

export interface BannerCandidateJson {
  selector: string;
  bounding_box: { x: number; y: number; w: number; h: number };
  is_overlay_blocking: boolean;
  text: string;
}

export type SessionEventJson =
  | {
      t: number;
      kind: "request";
      id: string;
      url: string;
      method: string;
      headers: Record<string, string>;
      cookies_sent: CookieJson[];
      query_params: [string, string][];
    }
  | {
      t: number;
      kind: "response";
      request_id: string;
      status: number;
      set_cookies: CookieJson[];
    }
  | {
      t: number;
      kind: "storage_snapshot";
      cookies: CookieJson[];
      local_storage: StorageEntryJson[];
    }
  | { t: number; kind: "user_action"; action: Exclude<ScenarioKind, "no_action"> }
  | {
      t: number;
      kind: "dom_snapshot";
      banner_candidates: BannerCandidateJson[];
      page_interactive: boolean;
      info_page_text: string | null;
      screenshot_ref: string | null;
    };

export interface SessionJson {
  format_version: 1;
  site_url: string;
  scenario: ScenarioKind;
  viewport: { width_px: number; height_px: number };
  profile_id: string;
  captured_at: string;
  events: SessionEventJson[];
  /** Present only on aborted captures; the engine's strict parser rejects it. */
  incomplete?: true;
}

export function serializeSession(session: SessionJson): string {
  return JSON.stringify(session, null, 2) + "\n";
}
