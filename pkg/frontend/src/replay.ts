/**
 * Client-side playback of a stored trajectory.
 *
 * Playback steps the stored record only: it never posts actions and
 * never simulates game dynamics.  Each recorded step already carries
 * the agent position observed before its action, so the frames are a
 * pure transcription.  The record does not include enemy positions, so
 * replay shows the patrol route as static shading instead of a moving
 * enemy.
 */

import { TrajectoryDetail } from "./api.js";
import { BoardSnapshot } from "./board.js";

export interface ReplayFrame {
  row: number;
  col: number;
  hasKey: boolean;
  /** Outcome text on the final frame, null before that. */
  caption: string | null;
}

const OUTCOME_CAPTION: Readonly<Record<string, string>> = {
  goal_reached: "goal reached",
  captured: "captured",
  timed_out: "out of time",
};

/**
 * Frames for a stored record: one per recorded step, then one outcome
 * frame.  When the outcome is goal_reached the final frame sits on the
 * map's goal cell (a server-provided map fact); otherwise the agent is
 * left on its last recorded cell.
 */
export function framesFromRecord(detail: TrajectoryDetail, rows: string[]): ReplayFrame[] {
  if (detail.steps.length === 0) {
    throw new Error("stored record has no steps");
  }
  const frames: ReplayFrame[] = detail.steps.map((s) => ({
    row: s.row,
    col: s.col,
    hasKey: s.has_key,
    caption: null,
  }));
  const last = frames[frames.length - 1]!;
  let end = { row: last.row, col: last.col };
  if (detail.outcome === "goal_reached") {
    const goal = findChar(rows, "G");
    if (goal) end = goal;
  }
  frames.push({
    row: end.row,
    col: end.col,
    hasKey: last.hasKey,
    caption: OUTCOME_CAPTION[detail.outcome] ?? detail.outcome,
  });
  return frames;
}

function findChar(rows: string[], ch: string): { row: number; col: number } | null {
  for (let r = 0; r < rows.length; r++) {
    const c = rows[r]!.indexOf(ch);
    if (c >= 0) return { row: r, col: c };
  }
  return null;
}

/** Board overlay for one replay frame (no live enemy, no score). */
export function snapshotForFrame(frame: ReplayFrame): BoardSnapshot {
  return {
    agent: { row: frame.row, col: frame.col },
    enemy: null,
    hasKey: frame.hasKey,
    score: null,
    banner: frame.caption,
  };
}

/** Steps through frames; a timer or click drives `advance`. */
export class ReplayCursor {
  private index = 0;

  constructor(private readonly frames: ReplayFrame[]) {
    if (frames.length === 0) throw new Error("empty replay");
  }

  get frame(): ReplayFrame {
    return this.frames[this.index]!;
  }

  get position(): number {
    return this.index;
  }

  get length(): number {
    return this.frames.length;
  }

  get done(): boolean {
    return this.index >= this.frames.length - 1;
  }

  /** Move to the next frame; false once the outcome frame is showing. */
  advance(): boolean {
    if (this.done) return false;
    this.index += 1;
    return true;
  }

  seek(index: number): void {
    this.index = Math.max(0, Math.min(index, this.frames.length - 1));
  }
}
