/**
 * Request loop for the prediction protocol. One reply per request line, in
 * request order; every response line is flushed immediately. The loop is
 * stateless between predict requests.
 */

import * as readline from "node:readline";
import * as net from "node:net";
import type { Model } from "./models.js";
import { errorReply, validateRequest, type Reply } from "./protocol.js";

export interface AdapterConfig {
  model: Model;
  /** Declared arity; a hello with a different n_features is refused. */
  nFeatures: number;
}

export function handleLine(line: string, config: AdapterConfig): Reply | null {
  const trimmed = line.trim();
  if (trimmed === "") {
    return null;
  }
  let decoded: unknown;
  try {
    decoded = JSON.parse(trimmed);
  } catch {
    return errorReply(null, "malformed JSON");
  }
  const request = validateRequest(decoded);
  if (typeof request === "string") {
    const id = (decoded as Record<string, unknown>)?.id;
    return errorReply(typeof id === "number" ? id : null, request);
  }
  if (request.type === "hello") {
    if (request.n_features !== config.nFeatures) {
      return errorReply(null,
        `model serves ${config.nFeatures} features, client declared ${request.n_features}`);
    }
    return { type: "ready" };
  }
  const scores: number[] = [];
  for (const row of request.rows) {
    const score = config.model(row);
    if (typeof score !== "number" || !Number.isFinite(score)) {
      return errorReply(request.id, "model produced a non-finite score");
    }
    scores.push(score);
  }
  return { type: "scores", id: request.id, scores };
}

export async function serveStdio(config: AdapterConfig): Promise<void> {
  const rl = readline.createInterface({ input: process.stdin, terminal: false });
  for await (const line of rl) {
    const reply = handleLine(line, config);
    if (reply !== null) {
      process.stdout.write(JSON.stringify(reply) + "\n");
    }
  }
}

export function serveTcp(config: AdapterConfig, port: number): net.Server {
  const server = net.createServer((socket) => {
    const rl = readline.createInterface({ input: socket, terminal: false });
    rl.on("line", (line) => {
      const reply = handleLine(line, config);
      if (reply !== null) {
        socket.write(JSON.stringify(reply) + "\n");
      }
    });
    socket.on("error", () => socket.destroy());
  });
  server.listen(port, "127.0.0.1");
  return server;
}
