import { describe, expect, it } from "vitest";

import {
  CHECKLIST_ITEMS,
  validateChecklist,
  validateEnvReading,
  validateNote,
} from "../src/validation.js";
import type { Checklist } from "../src/types.js";

const allTrue = Object.fromEntries(
  CHECKLIST_ITEMS.map((item) => [item, true]),
) as unknown as Checklist;

describe("environment reading validation", () => {
  it("accepts an ordinary lab reading", () => {
    expect(validateEnvReading(20.4, 36.8).valid).toBe(true);
  });

  it("rejects 95 % humidity before sending", () => {
    const verdict = validateEnvReading(21.0, 95.0);
    expect(verdict.valid).toBe(false);
    expect(verdict.message).toContain("[10, 90]");
  });

  it("rejects out-of-band temperature with the band named", () => {
    const verdict = validateEnvReading(36.5, 40.0);
    expect(verdict.valid).toBe(false);
    expect(verdict.message).toContain("[10, 35]");
  });

  it("accepts readings on the band edges", () => {
    expect(validateEnvReading(10, 10).valid).toBe(true);
    expect(validateEnvReading(35, 90).valid).toBe(true);
  });

  it("rejects non-numeric input", () => {
    expect(validateEnvReading(Number("x"), 40).valid).toBe(false);
  });
});

describe("checklist validation", () => {
  it("accepts a fully confirmed checklist", () => {
    expect(validateChecklist(allTrue).valid).toBe(true);
  });

  it("names the missing items", () => {
    const verdict = validateChecklist({ ...allTrue, no_stimulants_last_hour: false });
    expect(verdict.valid).toBe(false);
    expect(verdict.message).toContain("no_stimulants_last_hour");
  });
});

describe("note validation", () => {
  it("rejects empty notes", () => {
    expect(validateNote("   ").valid).toBe(false);
    expect(validateNote("subject sneezed").valid).toBe(true);
  });
});
