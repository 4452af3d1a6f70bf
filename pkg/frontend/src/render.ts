/**
 * Canvas painting of a board view-model: fixed-size cells, dark
 * obstacles, light floor, a lock on the goal and a key where one waits.
 */

import { BoardViewModel, Glyph } from "./board.js";

export const CELL = 32;

const BASE_FILL: Readonly<Record<Glyph, string>> = {
  obstacle: "#2f2f3a",
  floor: "#f2efe6",
  start: "#dceadc",
  goal: "#f5e6b8",
  key: "#f2efe6",
  patrol: "#f6e3e0",
  agent: "#f2efe6",
  enemy: "#f6e3e0",
};

export function sizeCanvas(canvas: HTMLCanvasElement, board: BoardViewModel): void {
  canvas.width = board.width * CELL;
  canvas.height = board.height * CELL;
}

export function drawBoard(ctx: CanvasRenderingContext2D, board: BoardViewModel): void {
  ctx.clearRect(0, 0, board.width * CELL, board.height * CELL);
  ctx.font = `${CELL - 10}px serif`;
  ctx.textAlign = "center";
  ctx.textBaseline = "middle";
  for (let r = 0; r < board.height; r++) {
    for (let c = 0; c < board.width; c++) {
      const glyph = board.cells[r]![c]!;
      const x = c * CELL;
      const y = r * CELL;
      ctx.fillStyle = BASE_FILL[glyph];
      ctx.fillRect(x, y, CELL, CELL);
      ctx.strokeStyle = "#d8d4c8";
      ctx.strokeRect(x + 0.5, y + 0.5, CELL - 1, CELL - 1);
      drawSprite(ctx, glyph, x, y);
    }
  }
}

function drawSprite(ctx: CanvasRenderingContext2D, glyph: Glyph, x: number, y: number): void {
  const cx = x + CELL / 2;
  const cy = y + CELL / 2;
  switch (glyph) {
    case "goal":
      ctx.fillText("\u{1F512}", cx, cy + 1); // lock
      break;
    case "key":
      ctx.fillText("\u{1F5DD}", cx, cy + 1); // key
      break;
    case "agent":
      ctx.fillStyle = "#2b6cb0";
      ctx.beginPath();
      ctx.arc(cx, cy, CELL * 0.34, 0, 2 * Math.PI);
      ctx.fill();
      break;
    case "enemy":
      ctx.fillStyle = "#c0392b";
      ctx.beginPath();
      ctx.moveTo(cx, y + CELL * 0.16);
      ctx.lineTo(x + CELL * 0.84, cy);
      ctx.lineTo(cx, y + CELL * 0.84);
      ctx.lineTo(x + CELL * 0.16, cy);
      ctx.closePath();
      ctx.fill();
      break;
    default:
      break;
  }
}
