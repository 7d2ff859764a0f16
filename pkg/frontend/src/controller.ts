/** DOM-free session state machine.
 *
 * Owns the polling loop and the exactly-once submission guards; the view
 * layer subscribes to state changes and calls submitVote / submitSatisfaction
 * exactly as the operator clicks. At most one API request is in flight per
 * controller at any time.
 */

import { ApiClient, ApiError, PendingSpectrum, SessionSnapshot } from "./api.js";

export type ConsolePhase =
  | "idle"
  | "awaiting_vote"
  | "awaiting_satisfaction"
  | "watching"
  | "finished"
  | "aborted";

export interface ControllerState {
  phase: ConsolePhase;
  snapshot: SessionSnapshot | null;
  spectrum: PendingSpectrum | null;
  /** true while a vote/satisfaction POST is in flight; the view must keep
   * its buttons disabled for the duration */
  submitting: boolean;
  lastError: string | null;
}

type Listener = (state: ControllerState) => void;

export class SessionController {
  private state: ControllerState = {
    phase: "idle",
    snapshot: null,
    spectrum: null,
    submitting: false,
    lastError: null,
  };
  private listeners: Listener[] = [];
  private sessionId: string | null = null;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private inFlight = false;

  constructor(
    private api: ApiClient,
    private pollIntervalMs = 1000,
  ) {}

  getState(): ControllerState {
    return this.state;
  }

  onChange(fn: Listener): void {
    this.listeners.push(fn);
  }

  private setState(patch: Partial<ControllerState>): void {
    this.state = { ...this.state, ...patch };
    for (const fn of this.listeners) fn(this.state);
  }

  async attach(sessionId: string): Promise<void> {
    this.sessionId = sessionId;
    await this.refresh();
  }

  /** Single poll step; never mutates session state server-side. */
  async refresh(): Promise<void> {
    if (!this.sessionId || this.inFlight) return;
    this.inFlight = true;
    try {
      const snapshot = await this.api.getSession(this.sessionId);
      await this.applySnapshot(snapshot);
    } catch (err) {
      this.setState({ lastError: String(err) });
    } finally {
      this.inFlight = false;
    }
  }

  private async applySnapshot(snapshot: SessionSnapshot): Promise<void> {
    let phase: ConsolePhase;
    let spectrum: PendingSpectrum | null = null;
    if (snapshot.status === "finished") {
      phase = "finished";
    } else if (snapshot.status === "aborted") {
      phase = "aborted";
    } else if (snapshot.pending?.kind === "vote") {
      phase = "awaiting_vote";
      spectrum = await this.api.getSpectrum(snapshot.id);
    } else if (snapshot.pending?.kind === "satisfaction") {
      phase = "awaiting_satisfaction";
    } else {
      phase = "watching";
    }
    this.setState({ phase, snapshot, spectrum, lastError: null });
  }

  startPolling(): void {
    if (this.timer !== null) return;
    const tick = async () => {
      await this.refresh();
      const done = this.state.phase === "finished" || this.state.phase === "aborted";
      this.timer = done ? null : setTimeout(tick, this.pollIntervalMs);
    };
    this.timer = setTimeout(tick, this.pollIntervalMs);
  }

  stopPolling(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
  }

  /** Submit the pending vote. Repeat calls while a submission is in flight
   * (or when no vote is pending) are ignored, so a double-click cannot
   * produce two votes. */
  async submitVote(vote: 0 | 1 | 2, preference: number): Promise<boolean> {
    if (!this.sessionId || this.state.submitting) return false;
    if (this.state.phase !== "awaiting_vote") return false;
    this.setState({ submitting: true });
    try {
      const snapshot = await this.api.vote(this.sessionId, vote, preference);
      await this.applySnapshot(snapshot);
      return true;
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // someone else advanced the session; resync silently
        await this.refresh();
        return false;
      }
      this.setState({ lastError: String(err) });
      return false;
    } finally {
      this.setState({ submitting: false });
    }
  }

  async submitSatisfaction(satisfied: boolean): Promise<boolean> {
    if (!this.sessionId || this.state.submitting) return false;
    if (this.state.phase !== "awaiting_satisfaction") return false;
    this.setState({ submitting: true });
    try {
      const snapshot = await this.api.satisfaction(this.sessionId, satisfied);
      await this.applySnapshot(snapshot);
      return true;
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        await this.refresh();
        return false;
      }
      this.setState({ lastError: String(err) });
      return false;
    } finally {
      this.setState({ submitting: false });
    }
  }
}
