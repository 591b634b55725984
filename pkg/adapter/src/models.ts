/**
 * Scoring models served by the adapter. Two built-in demos need no training
 * code; a user model is any module whose default export is
 * (nFeatures: number) => (row: CellValue[]) => number.
 */

import { pathToFileURL } from "node:url";
import { readFile } from "node:fs/promises";
import type { CellValue } from "./protocol.js";

export type Model = (row: CellValue[]) => number;

export interface ColumnSchema {
  kind: "binary" | "ordinal" | "categorical";
  levels?: string[];
}

export type Schema = Record<string, ColumnSchema>;

/** Numeric view of a cell: categorical labels map to their level code when a
 * schema is supplied, otherwise strings count as 0. */
export function numericValue(value: CellValue, column?: ColumnSchema): number {
  if (typeof value === "number") {
    return value;
  }
  if (column?.levels) {
    const code = column.levels.indexOf(value);
    return code >= 0 ? code : 0;
  }
  return 0;
}

/** Demo linear scorer: weight i+1 on column i plus a 0.25 bias. */
export function linearModel(nFeatures: number, columns?: ColumnSchema[]): Model {
  const weights = Array.from({ length: nFeatures }, (_, i) => i + 1);
  return (row) => {
    let total = 0.25;
    for (let i = 0; i < Math.min(row.length, nFeatures); i++) {
      total += weights[i] * numericValue(row[i], columns?.[i]);
    }
    return total;
  };
}

/** Demo decision-stump ensemble: each column votes +-0.5/(i+1) around a 0.5
 * threshold. */
export function stumpModel(nFeatures: number, columns?: ColumnSchema[]): Model {
  return (row) => {
    let total = 0;
    for (let i = 0; i < Math.min(row.length, nFeatures); i++) {
      const vote = numericValue(row[i], columns?.[i]) >= 0.5 ? 1 : -1;
      total += (0.5 / (i + 1)) * vote;
    }
    return total;
  };
}

export async function loadSchema(path: string): Promise<Schema> {
  const raw = JSON.parse(await readFile(path, "utf-8")) as Schema;
  return raw;
}

/** Resolve --model: a built-in name or a path to a user module. */
export async function loadModel(
  spec: string,
  nFeatures: number,
  schema?: Schema,
): Promise<Model> {
  const columns = schema ? Object.values(schema) : undefined;
  if (spec === "linear") {
    return linearModel(nFeatures, columns);
  }
  if (spec === "stumps") {
    return stumpModel(nFeatures, columns);
  }
  const module = await import(pathToFileURL(spec).href);
  const factory = module.default;
  if (typeof factory !== "function") {
    throw new Error(`model module ${spec} must default-export a factory function`);
  }
  const model = factory(nFeatures, columns);
  if (typeof model !== "function") {
    throw new Error(`model factory in ${spec} must return a scoring function`);
  }
  return model as Model;
}
