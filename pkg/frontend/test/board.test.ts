import { describe, expect, it } from "vitest";

import { buildBoard, statusBanner } from "../src/board.js";

const ROWS = ["S.K", "#E.", "..G"];

function snap(overrides: Partial<Parameters<typeof buildBoard>[1]> = {}) {
  return {
    agent: { row: 0, col: 1 },
    enemy: null,
    hasKey: false,
    score: 0,
    banner: null,
    ...overrides,
  };
}

describe("board view-model", () => {
  it("transcribes map characters into glyphs", () => {
    const board = buildBoard(ROWS, snap({ agent: { row: 2, col: 0 } }));
    expect(board.width).toBe(3);
    expect(board.height).toBe(3);
    expect(board.cells[0]).toEqual(["start", "floor", "key"]);
    expect(board.cells[1]).toEqual(["obstacle", "patrol", "floor"]);
    expect(board.cells[2]).toEqual(["agent", "floor", "goal"]);
  });

  it("draws the agent over whatever cell it stands on", () => {
    const board = buildBoard(ROWS, snap({ agent: { row: 2, col: 2 } }));
    expect(board.cells[2]![2]).toBe("agent");
  });

  it("places the enemy only where the server says it is", () => {
    const withEnemy = buildBoard(ROWS, snap({ enemy: { row: 1, col: 2 } }));
    expect(withEnemy.cells[1]![2]).toBe("enemy");
    expect(withEnemy.cells[1]![1]).toBe("patrol"); // route shading stays
    const noEnemy = buildBoard(ROWS, snap());
    expect(noEnemy.cells.flat()).not.toContain("enemy");
  });

  it("agent wins over an enemy sharing the cell", () => {
    const board = buildBoard(ROWS, snap({ agent: { row: 1, col: 1 }, enemy: { row: 1, col: 1 } }));
    expect(board.cells[1]![1]).toBe("agent");
  });

  it("hides the key once it has been picked up", () => {
    const before = buildBoard(ROWS, snap());
    expect(before.cells[0]![2]).toBe("key");
    const after = buildBoard(ROWS, snap({ hasKey: true }));
    expect(after.cells[0]![2]).toBe("floor");
    expect(after.hasKey).toBe(true);
  });

  it("carries score and banner through unchanged", () => {
    const board = buildBoard(ROWS, snap({ score: 1100, banner: "Goal reached — score 1100" }));
    expect(board.score).toBe(1100);
    expect(board.banner).toBe("Goal reached — score 1100");
  });
});

describe("status banner", () => {
  it("stays quiet during play", () => {
    expect(statusBanner("active", 0)).toBeNull();
  });

  it("announces a finished key game with its score", () => {
    expect(statusBanner("goal_reached", 1100)).toContain("1100");
  });

  it("covers the losing outcomes", () => {
    expect(statusBanner("captured", 0)).toMatch(/captured/i);
    expect(statusBanner("timed_out", 100)).toMatch(/time/i);
  });
});
