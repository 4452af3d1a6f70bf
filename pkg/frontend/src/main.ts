/** Page wiring: DOM events in, canvas frames out. */

import { ApiClient, SessionView, TrajectorySummary } from "./api.js";
import { buildBoard, statusBanner } from "./board.js";
import { BannerOptions, SessionController } from "./controller.js";
import { keyEventAction } from "./keys.js";
import { framesFromRecord, ReplayCursor, snapshotForFrame } from "./replay.js";
import { drawBoard, sizeCanvas } from "./render.js";

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing element #${id}`);
  return found as T;
}

const canvas = el<HTMLCanvasElement>("board");
const ctx = canvas.getContext("2d");
if (!ctx) throw new Error("canvas 2d context unavailable");

const scoreEl = el<HTMLSpanElement>("score");
const keyEl = el<HTMLSpanElement>("key-indicator");
const statusEl = el<HTMLSpanElement>("status-line");
const bannersEl = el<HTMLDivElement>("banners");
const mapSelect = el<HTMLSelectElement>("map-select");
const newGameBtn = el<HTMLButtonElement>("new-game");
const labelInput = el<HTMLInputElement>("label");
const saveBtn = el<HTMLButtonElement>("save");
const saveResultEl = el<HTMLSpanElement>("save-result");
const speedInput = el<HTMLInputElement>("speed");
const refreshBtn = el<HTMLButtonElement>("refresh-list");
const trajListEl = el<HTMLUListElement>("traj-list");
const backBtn = el<HTMLButtonElement>("back-to-live");

const api = new ApiClient("");
let mode: "live" | "replay" = "live";
let replayTimer: number | null = null;

function showBanner(message: string, opts: BannerOptions = {}): void {
  const note = document.createElement("div");
  note.className = opts.transient ? "banner flash" : "banner";
  note.textContent = message;
  if (opts.retry) {
    const retryBtn = document.createElement("button");
    retryBtn.textContent = "Retry";
    retryBtn.addEventListener("click", () => {
      note.remove();
      opts.retry?.();
    });
    note.appendChild(retryBtn);
  }
  const dismiss = document.createElement("button");
  dismiss.textContent = "×";
  dismiss.className = "dismiss";
  dismiss.addEventListener("click", () => note.remove());
  note.appendChild(dismiss);
  bannersEl.appendChild(note);
  if (opts.transient) setTimeout(() => note.remove(), 1200);
}

function paintLive(view: SessionView, rows: string[]): void {
  if (mode !== "live") return;
  const board = buildBoard(rows, {
    agent: view.agent,
    enemy: view.enemy,
    hasKey: view.has_key,
    score: view.score,
    banner: statusBanner(view.status, view.score),
  });
  sizeCanvas(canvas, board);
  drawBoard(ctx!, board);
  scoreEl.textContent = `score ${view.score}`;
  keyEl.textContent = view.has_key ? "\u{1F5DD} key" : "";
  statusEl.textContent = board.banner ?? `${view.steps_taken} steps`;
  saveBtn.disabled = !controller.canSave || view.saved_as !== null;
  saveResultEl.textContent = view.saved_as ? `saved as ${view.saved_as}` : "";
}

const controller = new SessionController(api, { onView: paintLive, onBanner: showBanner });

function stopReplay(): void {
  if (replayTimer !== null) {
    clearInterval(replayTimer);
    replayTimer = null;
  }
}

function leaveReplay(): void {
  stopReplay();
  mode = "live";
  backBtn.hidden = true;
  const view = controller.view;
  if (view) paintLive(view, controller.rows);
}

async function startReplay(id: string): Promise<void> {
  try {
    const detail = await api.getTrajectory(id);
    const maps = await api.listMaps();
    const rows = maps.find((m) => m.map_id === detail.map_id)?.rows;
    if (!rows) {
      showBanner("map for this trajectory is not loaded");
      return;
    }
    stopReplay();
    mode = "replay";
    backBtn.hidden = false;
    const cursor = new ReplayCursor(framesFromRecord(detail, rows));
    const paintFrame = (): void => {
      const board = buildBoard(rows, snapshotForFrame(cursor.frame));
      sizeCanvas(canvas, board);
      drawBoard(ctx!, board);
      scoreEl.textContent = "";
      keyEl.textContent = cursor.frame.hasKey ? "\u{1F5DD} key" : "";
      statusEl.textContent =
        cursor.frame.caption ?? `replay ${cursor.position + 1}/${cursor.length} — ${detail.id}`;
    };
    paintFrame();
    const stepsPerSecond = Number(speedInput.value) || 4;
    replayTimer = window.setInterval(() => {
      if (cursor.advance()) paintFrame();
      else stopReplay();
    }, 1000 / stepsPerSecond);
  } catch (err) {
    showBanner(err instanceof Error ? err.message : String(err));
  }
}

async function refreshTrajectories(): Promise<void> {
  try {
    const stored = await api.listTrajectories();
    trajListEl.replaceChildren(
      ...stored.map((t: TrajectorySummary) => {
        const item = document.createElement("li");
        const play = document.createElement("button");
        play.textContent = "▶";
        play.addEventListener("click", () => void startReplay(t.id));
        item.appendChild(play);
        item.appendChild(
          document.createTextNode(` ${t.id} (${t.source}, ${t.steps} steps, ${t.outcome})`),
        );
        return item;
      }),
    );
  } catch {
    showBanner("network failure", { retry: () => void refreshTrajectories() });
  }
}

async function populateMaps(): Promise<void> {
  try {
    const maps = await api.listMaps();
    mapSelect.replaceChildren(
      ...maps.map((m) => {
        const opt = document.createElement("option");
        opt.value = m.name;
        opt.textContent = `${m.name} (${m.game_kind} ${m.width}×${m.height})`;
        return opt;
      }),
    );
  } catch {
    showBanner("network failure", { retry: () => void populateMaps() });
  }
}

document.addEventListener("keydown", (ev) => {
  if (mode !== "live") return;
  if (keyEventAction(ev.key, ev.repeat) === null) return;
  ev.preventDefault(); // keep arrows from scrolling the page
  void controller.handleKey(ev.key, ev.repeat);
});

newGameBtn.addEventListener("click", () => {
  leaveReplay();
  saveResultEl.textContent = "";
  void controller.start(mapSelect.value);
});

saveBtn.addEventListener("click", () => {
  void controller.finishAndSave(labelInput.value || "anonymous").then((saved) => {
    if (saved) void refreshTrajectories();
  });
});

refreshBtn.addEventListener("click", () => void refreshTrajectories());
backBtn.addEventListener("click", leaveReplay);

void populateMaps().then(() => refreshTrajectories());
