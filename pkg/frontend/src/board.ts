/**
 * Board view-model: what to draw in each cell, plus the HUD fields.
 *
 * Built purely from the server's map rows and a position snapshot (live
 * session view or stored replay frame); the client adds no dynamics.
 */

export type Glyph =
  | "obstacle"
  | "floor"
  | "start"
  | "goal"
  | "key"
  | "patrol"
  | "agent"
  | "enemy";

export interface BoardViewModel {
  width: number;
  height: number;
  cells: Glyph[][];
  score: number | null;
  hasKey: boolean;
  banner: string | null;
}

/** Positions to overlay on the static map. */
export interface BoardSnapshot {
  agent: { row: number; col: number };
  enemy: { row: number; col: number } | null;
  hasKey: boolean;
  score: number | null;
  /** Session status or replay caption; null while simply playing. */
  banner: string | null;
}

const GLYPH_FOR_CHAR: Readonly<Record<string, Glyph>> = {
  "#": "obstacle",
  ".": "floor",
  S: "start",
  G: "goal",
  K: "key",
  E: "patrol",
};

export function buildBoard(rows: string[], snap: BoardSnapshot): BoardViewModel {
  const height = rows.length;
  const width = height > 0 ? rows[0]!.length : 0;
  const cells: Glyph[][] = [];
  for (let r = 0; r < height; r++) {
    const row: Glyph[] = [];
    for (let c = 0; c < width; c++) {
      let glyph = GLYPH_FOR_CHAR[rows[r]!.charAt(c)] ?? "floor";
      if (glyph === "key" && snap.hasKey) glyph = "floor"; // picked up
      if (snap.enemy && snap.enemy.row === r && snap.enemy.col === c) glyph = "enemy";
      if (snap.agent.row === r && snap.agent.col === c) glyph = "agent";
      row.push(glyph);
    }
    cells.push(row);
  }
  return {
    width,
    height,
    cells,
    score: snap.score,
    hasKey: snap.hasKey,
    banner: snap.banner,
  };
}

/** Human-readable banner for a session status, null while the game runs. */
export function statusBanner(status: string, score: number): string | null {
  switch (status) {
    case "active":
      return null;
    case "goal_reached":
      return `Goal reached — score ${score}`;
    case "captured":
      return `Captured — score ${score}`;
    case "timed_out":
      return `Out of time — score ${score}`;
    default:
      return status;
  }
}
