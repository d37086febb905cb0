// Client-side copies of the server's validation rules. These exist for
// responsiveness only; the server remains authoritative.

import type { Checklist } from "./types.js";

export const ENV_TEMP_BAND_C: readonly [number, number] = [10, 35];
export const ENV_HUMIDITY_BAND_PCT: readonly [number, number] = [10, 90];
export const STIMULUS_WINDOW_S: readonly [number, number] = [120, 600];
export const ACCLIM_MIN_S = 600;

export const CHECKLIST_ITEMS: readonly (keyof Checklist)[] = [
  "hair_tied_back",
  "no_makeup",
  "no_face_cream",
  "no_recent_exercise",
  "no_stimulants_last_hour",
  "informed_consent_signed",
];

export interface ValidationResult {
  valid: boolean;
  message?: string;
}

export function validateEnvReading(tempC: number, humidityPct: number): ValidationResult {
  if (!Number.isFinite(tempC) || !Number.isFinite(humidityPct)) {
    return { valid: false, message: "temperature and humidity must be numbers" };
  }
  const [tLo, tHi] = ENV_TEMP_BAND_C;
  if (tempC < tLo || tempC > tHi) {
    return {
      valid: false,
      message: `room temperature ${tempC} C outside plausibility band [${tLo}, ${tHi}] C`,
    };
  }
  const [hLo, hHi] = ENV_HUMIDITY_BAND_PCT;
  if (humidityPct < hLo || humidityPct > hHi) {
    return {
      valid: false,
      message: `relative humidity ${humidityPct} % outside plausibility band [${hLo}, ${hHi}] %`,
    };
  }
  return { valid: true };
}

export function validateChecklist(checklist: Checklist): ValidationResult {
  const missing = CHECKLIST_ITEMS.filter((item) => !checklist[item]);
  if (missing.length) {
    return { valid: false, message: `subject checklist not satisfied: ${missing.join(", ")}` };
  }
  return { valid: true };
}

export function validateNote(text: string): ValidationResult {
  return text.trim()
    ? { valid: true }
    : { valid: false, message: "note text is empty" };
}
