/** Boots one limetree service for the whole test run and tears it down
 * afterwards. The base URL reaches the tests through an env var, which
 * vitest workers inherit from this process.
 */

import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

const PORT = 8731 + Math.floor(Math.random() * 200);
const BASE = `http://127.0.0.1:${PORT}`;

let proc: ChildProcess | undefined;

async function waitUntilReady(): Promise<void> {
  const deadline = Date.now() + 30000;
  while (Date.now() < deadline) {
    try {
      // any HTTP answer (404 included) means uvicorn is up
      await fetch(`${BASE}/sessions/probe`);
      return;
    } catch {
      await new Promise((resolve) => setTimeout(resolve, 200));
    }
  }
  throw new Error("limetree service did not come up on " + BASE);
}

export async function setup(): Promise<void> {
  const sessions = mkdtempSync(join(tmpdir(), "limetree-ui-test-"));
  const code =
    "import uvicorn; from limetree.service import create_app; " +
    `uvicorn.run(create_app(${JSON.stringify(sessions)}), ` +
    `host='127.0.0.1', port=${PORT}, log_level='warning')`;
  proc = spawn("python3", ["-c", code], { stdio: "inherit" });
  process.env.LIMETREE_SERVICE_URL = BASE;
  await waitUntilReady();
}

export async function teardown(): Promise<void> {
  proc?.kill("SIGTERM");
}
