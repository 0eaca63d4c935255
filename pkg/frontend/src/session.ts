/** Session state machine, independent of the DOM.
 *
 * Items play strictly in order, exactly once each; the voting screen
 * follows playback and the next item only starts after the vote is
 * acknowledged by the server. Reload resumes at the server-reported
 * position. A training list (operator-supplied, before a participant's
 * first session only) runs through the same flow but its scores are
 * discarded locally.
 */

import { ApiClient, PlaylistItem } from "./api.js";
import { quantize } from "./slider.js";

export type Phase = "idle" | "playing" | "voting" | "done";

export class SessionRunner {
  phase: Phase = "idle";
  items: PlaylistItem[] = [];
  index = 0;
  inTraining = false;
  private trainingQueue: PlaylistItem[] = [];
  private votedIds = new Set<string>();

  constructor(
    private client: ApiClient,
    public participant: number,
    public session: number,
    private training: PlaylistItem[] = [],
  ) {}

  /** Fetch the playlist and resume at the server-reported position. */
  async start(): Promise<void> {
    const playlist = await this.client.getPlaylist(this.participant, this.session);
    this.items = playlist.items;
    this.index = playlist.position;
    // training precedes the first session only, and only from a cold start
    if (this.session === 1 && this.index === 0 && this.training.length > 0) {
      this.inTraining = true;
      this.trainingQueue = [...this.training];
    }
    this.phase = this.index >= this.items.length ? "done" : "playing";
  }

  /** The item currently on screen (training or actual). */
  current(): PlaylistItem | null {
    if (this.phase === "done") return null;
    if (this.inTraining) return this.trainingQueue[0] ?? null;
    return this.items[this.index] ?? null;
  }

  /** 1-based progress through the actual session, for the progress label. */
  progress(): { done: number; total: number } {
    return { done: this.index, total: this.items.length };
  }

  /** Playback finished; show the voting screen. No replay is possible. */
  playbackEnded(): void {
    if (this.phase !== "playing") {
      throw new Error(`playbackEnded in phase ${this.phase}`);
    }
    this.phase = "voting";
  }

  /**
   * Quantize and submit the vote for the current item, then advance.
   * Exactly one vote per item: a second submission for the same item is
   * rejected before it reaches the server.
   */
  async submit(position: number): Promise<void> {
    if (this.phase !== "voting") {
      throw new Error(`submit in phase ${this.phase}`);
    }
    const item = this.current();
    if (item === null) {
      throw new Error("no current item");
    }
    if (this.inTraining) {
      this.trainingQueue.shift(); // training scores are discarded
      if (this.trainingQueue.length === 0) {
        this.inTraining = false;
      }
      this.phase = "playing";
      return;
    }
    if (this.votedIds.has(item.stimulus_id)) {
      throw new Error(`already voted on ${item.stimulus_id}`);
    }
    await this.client.submitVote({
      participant: this.participant,
      session: this.session,
      stimulus_id: item.stimulus_id,
      raw_score: quantize(position),
    });
    this.votedIds.add(item.stimulus_id);
    this.index += 1;
    this.phase = this.index >= this.items.length ? "done" : "playing";
  }
}
