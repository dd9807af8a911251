/**
 * capture --url U --out DIR [--scenarios LIST] [--viewport WxH]
 *         [--mobile-viewport WxH|none] [--wait-budget MS]
 */

import { captureSite, defaultJob, DEFAULT_SCENARIOS } from "./driver.js";
import type { ScenarioKind } from "./session-format.js";

function parseViewport(raw: string): { width: number; height: number } {
  const match = /^(\d+)x(\d+)$/.exec(raw);
  if (!match) throw new Error(`bad viewport ${raw}; expected WxH`);
  return { width: Number(match[1]), height: Number(match[2]) };
}

async function main(argv: string[]): Promise<number> {
  const args = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    if (!argv[i].startsWith("--") || argv[i + 1] === undefined) {
      process.stderr.write(`capture: cannot parse arguments near ${argv[i]}\n`);
      return 1;
    }
    args.set(argv[i].slice(2), argv[i + 1]);
  }
  const url = args.get("url");
  const out = args.get("out");
  if (!url || !out) {
    process.stderr.write(
      "usage: capture --url U --out DIR [--scenarios a,b] [--viewport WxH]\n");
    return 1;
  }

  const job = defaultJob(url, out);
  if (args.has("scenarios")) {
    const tokens = args.get("scenarios")!.split(",").map((s) => s.trim());
    const bad = tokens.filter((t) => !DEFAULT_SCENARIOS.includes(t as ScenarioKind));
    if (bad.length) {
      process.stderr.write(`capture: unknown scenario(s): ${bad.join(", ")}\n`);
      return 1;
    }
    job.scenarios = tokens as ScenarioKind[];
  }
  if (args.has("viewport")) job.desktopViewport = parseViewport(args.get("viewport")!);
  if (args.has("mobile-viewport")) {
    const raw = args.get("mobile-viewport")!;
    job.mobileViewport = raw === "none" ? null : parseViewport(raw);
  }
  if (args.has("wait-budget")) job.waitBudgetMs = Number(args.get("wait-budget"));

  const written = await captureSite(job);
  process.stderr.write(`capture: wrote ${written.length} session file(s)\n`);
  return 0;
}

main(process.argv.slice(2)).then(
  (code) => process.exit(code),
  (error) => {
    process.stderr.write(`capture: ${error}\n`);
    process.exit(1);
  },
);
