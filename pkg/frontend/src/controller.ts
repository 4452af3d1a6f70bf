/**
 * Session lifecycle for live play.
 *
 * Holds the latest server view and nothing else: a key press becomes a
 * POST, and the screen re-renders from whatever the server returns.
 * At most one action request is in flight; keys arriving meanwhile are
 * dropped, not queued, so the record reflects deliberate choices.
 * Errors surface as banners and never mutate the held view.
 */

import { Api, ApiError, SaveResult, SessionView } from "./api.js";
import { keyEventAction } from "./keys.js";

export interface BannerOptions {
  /** Re-attempt the failed call (used for network failures). */
  retry?: () => void;
  /** Short flash (e.g. a blocked move) rather than a sticky notice. */
  transient?: boolean;
}

export interface ControllerHooks {
  onView?: (view: SessionView, rows: string[]) => void;
  onBanner?: (message: string, opts?: BannerOptions) => void;
}

export type KeyResult = "applied" | "failed" | "dropped" | "ignored" | null;

export class SessionController {
  private _view: SessionView | null = null;
  private _rows: string[] = [];
  private inFlight = false;
  private expired = false;

  constructor(
    private readonly api: Api,
    private readonly hooks: ControllerHooks = {},
  ) {}

  get view(): SessionView | null {
    return this._view;
  }

  get rows(): string[] {
    return this._rows;
  }

  /** Saving is only offered once the game has ended. */
  get canSave(): boolean {
    return this._view !== null && !this.expired && this._view.status !== "active";
  }

  /** Start a new session on a named map. */
  start(mapName: string): Promise<SessionView | null> {
    return this.begin({ map_name: mapName });
  }

  /** Start a new session on the default map for a game kind. */
  startKind(gameKind: string): Promise<SessionView | null> {
    return this.begin({ game_kind: gameKind });
  }

  private async begin(req: { map_name?: string; game_kind?: string }): Promise<SessionView | null> {
    try {
      const view = await this.api.createSession(req);
      this.expired = false;
      this._rows = view.map_rows ?? [];
      this.adopt(view);
      return view;
    } catch (err) {
      this.report(err, () => void this.begin(req));
      return null;
    }
  }

  /** Adopt an existing session (e.g. one opened in another tab). */
  async attach(sessionId: string): Promise<SessionView | null> {
    try {
      const view = await this.api.getState(sessionId);
      const maps = await this.api.listMaps();
      this._rows = maps.find((m) => m.name === view.map_name)?.rows ?? [];
      this.expired = false;
      this.adopt(view);
      return view;
    } catch (err) {
      this.report(err);
      return null;
    }
  }

  /**
   * Handle one keydown.  Non-arrow keys and auto-repeats are null;
   * keys on a finished or expired session are ignored; keys while a
   * request is in flight are dropped.
   */
  async handleKey(key: string, repeat = false): Promise<KeyResult> {
    const actionId = keyEventAction(key, repeat);
    if (actionId === null) return null;
    if (this._view === null || this.expired || this._view.status !== "active") return "ignored";
    if (this.inFlight) return "dropped";
    this.inFlight = true;
    try {
      const view = await this.api.postAction(this._view.session_id, actionId);
      this.adopt(view);
      if (view.last_event === "blocked") this.banner("blocked", { transient: true });
      return "applied";
    } catch (err) {
      this.report(err, () => void this.refresh());
      return "failed";
    } finally {
      this.inFlight = false;
    }
  }

  /** Re-fetch the authoritative state (the safe retry after a network error). */
  async refresh(): Promise<void> {
    if (this._view === null) return;
    try {
      this.adopt(await this.api.getState(this._view.session_id));
    } catch (err) {
      this.report(err, () => void this.refresh());
    }
  }

  /** Save the finished game as a demonstration under the given label. */
  async finishAndSave(label: string): Promise<SaveResult | null> {
    if (!this.canSave) {
      this.banner("finish the game before saving");
      return null;
    }
    const view = this._view!;
    try {
      const result = await this.api.saveTrajectory(view.session_id, label);
      this._view = { ...view, saved_as: result.trajectory_id };
      this.emitView();
      return result;
    } catch (err) {
      this.report(err, () => void this.finishAndSave(label));
      return null;
    }
  }

  private adopt(view: SessionView): void {
    this._view = view;
    this.emitView();
  }

  private emitView(): void {
    if (this._view !== null) this.hooks.onView?.(this._view, this._rows);
  }

  private banner(message: string, opts?: BannerOptions): void {
    this.hooks.onBanner?.(message, opts);
  }

  private report(err: unknown, retry?: () => void): void {
    if (err instanceof ApiError) {
      if (err.status === 410) {
        // The server has dropped the session; lock out further input.
        this.expired = true;
        this.banner("session expired — start a new game");
      } else {
        // Includes 409 for an already-finished session: banner only,
        // the held view stays exactly as it was.
        this.banner(err.detail);
      }
    } else {
      this.banner("network failure", retry ? { retry } : undefined);
    }
  }
}
