// Static file server for the console. No proxying: the page talks to the
// scoring service directly (it sends CORS headers), so this only hands out
// index.html and the compiled modules.

import { createServer } from "node:http";
import { readFile } from "node:fs/promises";
import { extname, join, normalize } from "node:path";
import { fileURLToPath } from "node:url";

const root = join(fileURLToPath(new URL(".", import.meta.url)), "..");

const MIME: Record<string, string> = {
  ".html": "text/html; charset=utf-8",
  ".js": "text/javascript; charset=utf-8",
  ".css": "text/css; charset=utf-8",
  ".svg": "image/svg+xml",
  ".json": "application/json",
};

function portFromArgv(): number {
  const i = process.argv.indexOf("--port");
  if (i === -1) return 5173;
  const p = Number(process.argv[i + 1]);
  if (!Number.isInteger(p) || p < 1 || p > 65535) {
    console.error("--port wants an integer in [1, 65535]");
    process.exit(2);
  }
  return p;
}

const server = createServer(async (req, res) => {
  const url = (req.url ?? "/").split("?")[0] ?? "/";
  const rel = url === "/" ? "/index.html" : url;
  const path = normalize(join(root, rel));
  if (!path.startsWith(root)) {
    res.writeHead(403).end("forbidden");
    return;
  }
  try {
    const body = await readFile(path);
    res.writeHead(200, {
      "Content-Type": MIME[extname(path)] ?? "application/octet-stream",
      "Cache-Control": "no-store",
    });
    res.end(body);
  } catch {
    res.writeHead(404, { "Content-Type": "text/plain" }).end("not found");
  }
});

const port = portFromArgv();
server.listen(port, "127.0.0.1", () => {
  console.log(`console on http://127.0.0.1:${port}/ (append ?api=http://host:port&token=... to point it)`);
});
