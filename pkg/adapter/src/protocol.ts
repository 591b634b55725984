/**
 * Prediction protocol: one UTF-8 JSON object per line.
 *
 *   client -> {"type": "hello", "n_features": N}
 *   server -> {"type": "ready"}
 *   client -> {"type": "predict", "id": k, "rows": [[v1, ..., vN], ...]}
 *   server -> {"type": "scores", "id": k, "scores": [s1, ...]}
 *
 * Malformed or unknown messages are answered with
 * {"type": "error", "id": ..., "message": ...} and the connection stays open.
 */

export type CellValue = number | string;

export interface HelloMessage {
  type: "hello";
  n_features: number;
}

export interface PredictMessage {
  type: "predict";
  id: number;
  rows: CellValue[][];
}

export type Request = HelloMessage | PredictMessage;

export interface ReadyReply {
  type: "ready";
}

export interface ScoresReply {
  type: "scores";
  id: number;
  scores: number[];
}

export interface ErrorReply {
  type: "error";
  id: number | null;
  message: string;
}

export type Reply = ReadyReply | ScoresReply | ErrorReply;

export function errorReply(id: number | null, message: string): ErrorReply {
  return { type: "error", id, message };
}

function isCellValue(v: unknown): v is CellValue {
  return typeof v === "string" || (typeof v === "number" && Number.isFinite(v));
}

/** Validate a decoded JSON value as a protocol request. Returns an error
 * string when the message is not a well-formed request. */
export function validateRequest(value: unknown): Request | string {
  if (typeof value !== "object" || value === null || Array.isArray(value)) {
    return "message must be a JSON object";
  }
  const msg = value as Record<string, unknown>;
  if (msg.type === "hello") {
    if (typeof msg.n_features !== "number" || !Number.isInteger(msg.n_features) || msg.n_features < 1) {
      return "hello needs a positive integer n_features";
    }
    return { type: "hello", n_features: msg.n_features };
  }
  if (msg.type === "predict") {
    if (typeof msg.id !== "number" || !Number.isInteger(msg.id)) {
      return "predict needs an integer id";
    }
    if (!Array.isArray(msg.rows) || !msg.rows.every((row) => Array.isArray(row) && row.every(isCellValue))) {
      return "predict rows must be arrays of numbers or strings";
    }
    return { type: "predict", id: msg.id, rows: msg.rows as CellValue[][] };
  }
  return `unknown message type ${JSON.stringify(msg.type ?? null)}`;
}
