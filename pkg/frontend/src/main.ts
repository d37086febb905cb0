// Browser entry point: session picker, live conduct console, and the
// end-of-session review. All state shown is server-acknowledged.

import { ServiceApi, newRequestId } from "./api.js";
import { ConductController } from "./conduct.js";
import { formatCountdown } from "./countdown.js";
import { parsePpm } from "./ppm.js";
import { ReviewController, type ReviewData } from "./review.js";
import { sparklinePath } from "./sparkline.js";
import type { Checklist, SessionListEntry } from "./types.js";
import { CHECKLIST_ITEMS, validateChecklist, validateEnvReading } from "./validation.js";

const api = new ServiceApi("");
const root = document.getElementById("app")!;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, attrs: Record<string, string> = {}, text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  if (text) node.textContent = text;
  return node;
}

async function showSessionList(): Promise<void> {
  root.replaceChildren(el("h1", {}, "thermolab conductor"));
  const list = await api.sessions();
  const table = el("table", { class: "sessions" });
  table.append(...list.map((s: SessionListEntry) => {
    const row = el("tr");
    const link = el("a", { href: `#${s.session_id}` },
      `${s.session_id} ${s.emotion}/${s.stimulus.kind}`);
    const cell = el("td");
    cell.append(link);
    row.append(cell, el("td", {}, s.status), el("td", {}, s.date));
    return row;
  }));
  root.append(table, startForm());
}

function startForm(): HTMLElement {
  const box = el("fieldset");
  box.append(el("legend", {}, "start a session"));
  const emotion = el("select");
  for (const e of ["joy", "love", "happiness", "sadness", "fear", "anger"]) {
    emotion.append(el("option", { value: e }, e));
  }
  const kind = el("select");
  for (const k of ["video", "music"]) kind.append(el("option", { value: k }, k));
  const descriptor = el("input", { placeholder: "stimulus descriptor" });
  const checks = new Map<string, HTMLInputElement>();
  const checklistBox = el("div", { class: "checklist" });
  for (const item of CHECKLIST_ITEMS) {
    const label = el("label");
    const input = el("input", { type: "checkbox" });
    checks.set(item, input);
    label.append(input, document.createTextNode(" " + item.replaceAll("_", " ")));
    checklistBox.append(label);
  }
  const message = el("p", { class: "error" });
  const button = el("button", {}, "start");
  button.addEventListener("click", async () => {
    const checklist = Object.fromEntries(
      [...checks.entries()].map(([k, input]) => [k, input.checked]),
    ) as unknown as Checklist;
    const verdict = validateChecklist(checklist);
    if (!verdict.valid) {
      message.textContent = verdict.message!;
      return;
    }
    try {
      const outcome = await api.startSession({
        request_id: newRequestId(),
        emotion: emotion.value,
        stimulus_kind: kind.value,
        stimulus_descriptor: descriptor.value,
        checklist,
      });
      location.hash = outcome.session_id;
    } catch (error) {
      message.textContent = String(error);
    }
  });
  box.append(emotion, kind, descriptor, checklistBox, button, message);
  return box;
}

async function showSession(sessionId: string): Promise<void> {
  const controller = new ConductController(api, sessionId);
  await controller.refresh();
  if (controller.state!.status !== "running") {
    await showReview(sessionId);
    return;
  }

  root.replaceChildren(el("h1", {}, `session ${sessionId}`));
  const status = el("div", { class: "status" });
  const banner = el("div", { class: "banner" });
  const readouts = el("div", { class: "readouts" });
  const controls = el("div", { class: "controls" });

  const captureBtn = el("button", {}, "confirm capture");
  const endBtn = el("button", {}, "record stimulus end");
  const advanceBtn = el("button", {}, "advance phase");
  const noteInput = el("input", { placeholder: "note" });
  const noteBtn = el("button", {}, "add note");
  const abortBtn = el("button", { class: "danger" }, "abort");

  const envTemp = el("input", { placeholder: "room C", size: "6" });
  const envHum = el("input", { placeholder: "RH %", size: "6" });
  const envBtn = el("button", {}, "record env");
  const envMsg = el("span", { class: "error" });

  captureBtn.addEventListener("click", () => controller.confirmCapture().catch(() => undefined));
  endBtn.addEventListener("click", () => controller.recordStimulusEnd().catch(() => undefined));
  advanceBtn.addEventListener("click", () => controller.advancePhase().catch(() => undefined));
  noteBtn.addEventListener("click", () => {
    controller.addNote(noteInput.value).then(() => { noteInput.value = ""; }).catch(() => undefined);
  });
  abortBtn.addEventListener("click", () => controller.abort("operator abort").catch(() => undefined));
  envBtn.addEventListener("click", () => {
    const verdict = validateEnvReading(Number(envTemp.value), Number(envHum.value));
    if (!verdict.valid) {
      envMsg.textContent = verdict.message!; // rejected before send
      return;
    }
    envMsg.textContent = "";
    controller.recordEnv(Number(envTemp.value), Number(envHum.value)).catch(() => undefined);
  });

  controls.append(captureBtn, endBtn, advanceBtn, envTemp, envHum, envBtn, envMsg,
    noteInput, noteBtn, abortBtn);
  root.append(status, banner, readouts, controls);

  const paint = () => {
    const view = controller.view();
    const capture = view.captureDueInS === null
      ? "waiting for phase transition"
      : `next capture ${formatCountdown(view.captureDueInS)}`;
    status.textContent =
      `${view.phase ?? "-"} | elapsed ${formatCountdown(view.phaseElapsedS ?? 0)} | ` +
      `${capture} | captures ${view.totalCaptures} | v${view.version}`;
    status.classList.toggle("capture-due", view.captureDue);
    status.classList.toggle("min-reached", view.phaseMinReached);
    status.classList.toggle("over-max", view.overMaximum);
    banner.textContent = [
      view.overMaximum ? "phase maximum exceeded" : "",
      view.pendingCheckpoint ? `environment reading due: ${view.pendingCheckpoint}` : "",
      view.deviations.length ? `deviations: ${view.deviations.length}` : "",
      controller.lastError ? `${controller.lastError.code}: ${controller.lastError.message}` : "",
    ].filter(Boolean).join(" | ");
    advanceBtn.toggleAttribute("disabled", !view.advanceEnabled);
    endBtn.toggleAttribute("disabled", view.phase !== "stimulus");
    if (view.latestRegions) {
      readouts.replaceChildren(...Object.entries(view.latestRegions).map(
        ([roi, stats]) => el("span", { class: "readout" },
          `${roi}: ${stats.mean_c.toFixed(1)} C`)));
    }
  };

  paint();
  const ticker = setInterval(paint, 250);
  const poller = setInterval(async () => {
    try {
      await controller.refresh();
      if (controller.state!.status !== "running") {
        clearInterval(ticker);
        clearInterval(poller);
        await showReview(sessionId);
        return;
      }
      paint();
    } catch {
      banner.textContent = "connection lost; showing stale state";
    }
  }, 2000);
}

async function showReview(sessionId: string): Promise<void> {
  const review = await new ReviewController(api).load(sessionId);
  root.replaceChildren(el("h1", {}, `session ${sessionId} review`));
  const summary = review.summary;
  root.append(el("p", {},
    `${summary.emotion}/${summary.stimulus.kind} stimulus ${summary.stimulus_duration} ` +
    `(${summary.stimulus_captures} stimulus images, ${summary.total_captures} total)` +
    (summary.capture_count_mismatch
      ? ` | expected ${summary.expected_stimulus_captures} stimulus images`
      : "")));

  root.append(el("p", { class: "legend" },
    `scale ${review.scale.minC.toFixed(1)} C (purple) to ${review.scale.maxC.toFixed(1)} C (yellow)`));

  const strip = el("div", { class: "filmstrip" });
  const overlayToggle = el("label");
  const overlayBox = el("input", { type: "checkbox" });
  overlayToggle.append(overlayBox, document.createTextNode(" region overlay"));
  root.append(overlayToggle, strip);
  await paintFilmstrip(review, strip, false);
  overlayBox.addEventListener("change", () => paintFilmstrip(review, strip, overlayBox.checked));

  const sparks = el("div", { class: "sparklines" });
  for (const series of review.sparklines) {
    const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
    svg.setAttribute("width", "160");
    svg.setAttribute("height", "40");
    const path = document.createElementNS("http://www.w3.org/2000/svg", "path");
    path.setAttribute("d", sparklinePath(series.values, 160, 40,
      review.scale.minC, review.scale.maxC));
    path.setAttribute("fill", "none");
    path.setAttribute("stroke", "#2c7");
    svg.append(path);
    const cell = el("div", { class: "spark" });
    cell.append(el("span", {}, `${series.roi} / ${series.phase}`), svg);
    sparks.append(cell);
  }
  root.append(sparks);

  for (const table of [review.deltas, review.trends, review.noseDivergence]) {
    const node = el("table", { class: "data" });
    const head = el("tr");
    head.append(...table.header.map((h) => el("th", {}, h)));
    node.append(head);
    for (const row of table.rows) {
      const tr = el("tr");
      tr.append(...row.map((cell) => el("td", {}, cell)));
      node.append(tr);
    }
    root.append(node);
  }

  const exportLink = el("a", { href: review.exportUrl, download: "" }, "download bundle");
  root.append(el("p"), exportLink);
}

async function paintFilmstrip(review: ReviewData, strip: HTMLElement,
                              overlay: boolean): Promise<void> {
  strip.replaceChildren();
  for (const entry of review.renderIndex.renders) {
    const bytes = await api.fetchRender(review.sessionId, entry.seq);
    const parsed = parsePpm(bytes);
    if (parsed.scaleMinC !== review.scale.minC || parsed.scaleMaxC !== review.scale.maxC) {
      throw new Error(`render ${entry.seq} carries a different scale than the session`);
    }
    const canvas = el("canvas", {
      width: String(parsed.width), height: String(parsed.height),
      title: `${entry.phase} ${entry.time}`,
    });
    const ctx = canvas.getContext("2d")!;
    ctx.putImageData(new ImageData(parsed.rgba, parsed.width, parsed.height), 0, 0);
    if (overlay) {
      ctx.strokeStyle = "#fff";
      for (const box of review.renderIndex.roi_layout) {
        ctx.strokeRect(box.x, box.y, box.w, box.h);
      }
    }
    strip.append(canvas);
  }
}

async function route(): Promise<void> {
  const sessionId = location.hash.replace("#", "");
  try {
    if (sessionId) {
      await showSession(sessionId);
    } else {
      await showSessionList();
    }
  } catch (error) {
    root.replaceChildren(el("p", { class: "error" }, String(error)));
  }
}

window.addEventListener("hashchange", route);
void route();
