/**
 * Session file format (version 1) as consumed by the audit engine.
 * Mirrors docs/session-format.md in the engine repository; the engine's
 * parser is strict, so emit exactly these shapes and nothing else.
 */
export function serializeSession(session) {
    return JSON.stringify(session, null, 2) + "\n";
}
