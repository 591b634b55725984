import { describe, expect, it } from "vitest";
import { handleLine } from "../src/server.js";
import { linearModel, stumpModel, numericValue } from "../src/models.js";
import { validateRequest } from "../src/protocol.js";

const config = { model: linearModel(3), nFeatures: 3 };

describe("handleLine", () => {
  it("answers the handshake", () => {
    const reply = handleLine('{"type":"hello","n_features":3}', config);
    expect(reply).toEqual({ type: "ready" });
  });

  it("refuses a mismatched handshake", () => {
    const reply = handleLine('{"type":"hello","n_features":5}', config);
    expect(reply).toMatchObject({ type: "error" });
  });

  it("scores rows in order", () => {
    const reply = handleLine(
      '{"type":"predict","id":7,"rows":[[1,0,0],[0,1,1]]}',
      config,
    );
    // weights 1,2,3 and bias 0.25
    expect(reply).toEqual({ type: "scores", id: 7, scores: [1.25, 5.25] });
  });

  it("answers malformed JSON with an error and keeps going", () => {
    expect(handleLine("{nope", config)).toMatchObject({
      type: "error",
      message: "malformed JSON",
    });
    expect(handleLine('{"type":"hello","n_features":3}', config)).toEqual({
      type: "ready",
    });
  });

  it("answers unknown message types with an error", () => {
    const reply = handleLine('{"type":"shutdown","id":4}', config);
    expect(reply).toMatchObject({ type: "error", id: 4 });
  });

  it("ignores blank lines", () => {
    expect(handleLine("   ", config)).toBeNull();
  });

  it("is stateless across predicts", () => {
    const line = '{"type":"predict","id":1,"rows":[[1,1,1]]}';
    const first = handleLine(line, config);
    const second = handleLine(line, config);
    expect(first).toEqual(second);
  });
});

describe("models", () => {
  it("linear demo uses ramp weights and a 0.25 bias", () => {
    const model = linearModel(4);
    expect(model([1, 1, 1, 1])).toBe(0.25 + 1 + 2 + 3 + 4);
    expect(model([0, 0, 0, 0])).toBe(0.25);
  });

  it("stump demo votes around 0.5 per column", () => {
    const model = stumpModel(2);
    expect(model([1, 0])).toBe(0.5 - 0.25);
    expect(model([0, 1])).toBe(-0.5 + 0.25);
  });

  it("maps categorical labels through the schema", () => {
    const column = { kind: "categorical" as const, levels: ["lo", "hi"] };
    expect(numericValue("hi", column)).toBe(1);
    expect(numericValue("lo", column)).toBe(0);
    expect(numericValue("unseen", column)).toBe(0);
    expect(numericValue("anything")).toBe(0);
    expect(numericValue(2.5)).toBe(2.5);
  });
});

describe("validateRequest", () => {
  it("rejects non-objects and bad fields", () => {
    expect(typeof validateRequest([1, 2])).toBe("string");
    expect(typeof validateRequest({ type: "hello" })).toBe("string");
    expect(typeof validateRequest({ type: "predict", id: "x", rows: [] })).toBe("string");
    expect(typeof validateRequest({ type: "predict", id: 1, rows: [[null]] })).toBe("string");
  });

  it("accepts mixed numeric and string cells", () => {
    const request = validateRequest({ type: "predict", id: 1, rows: [[1, "red"]] });
    expect(request).toMatchObject({ type: "predict", id: 1 });
  });
});
