/** Keyboard-to-action mapping: a fixed bijection onto the four move ids. */

export const ACTION_FOR_KEY: Readonly<Record<string, number>> = {
  ArrowUp: 0,
  ArrowRight: 1,
  ArrowDown: 2,
  ArrowLeft: 3,
};

/**
 * Action id for a keydown, or null when the key is not an arrow or the
 * event comes from auto-repeat.  One deliberate press, one action.
 */
export function keyEventAction(key: string, repeat = false): number | null {
  if (repeat) return null;
  return ACTION_FOR_KEY[key] ?? null;
}
