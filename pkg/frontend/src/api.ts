/** Typed client for the session-server HTTP API with buffered retries. */

export interface PlaylistItem {
  stimulus_id: string;
  media_path: string | null;
}

export interface Playlist {
  participant: number;
  session: number;
  position: number;
  items: PlaylistItem[];
}

export interface VotePayload {
  participant: number;
  session: number;
  stimulus_id: string;
  raw_score: number;
}

export class ApiError extends Error {
  constructor(public status: number, public detail: string) {
    super(`HTTP ${status}: ${detail}`);
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

const wait = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

export class ApiClient {
  constructor(
    private base: string = "",
    private fetchFn: FetchLike = (...args) => fetch(...args),
    private retries: number = 5,
    private backoffMs: number = 400,
  ) {}

  async getPlaylist(participant: number, session: number): Promise<Playlist> {
    const res = await this.fetchFn(
      `${this.base}/api/participants/${participant}/sessions/${session}/playlist`,
    );
    if (!res.ok) {
      throw new ApiError(res.status, await res.text());
    }
    return (await res.json()) as Playlist;
  }

  /**
   * Submit one vote. Network failures retry with backoff so an item is
   * never skipped; a duplicate conflict means the vote already landed
   * (e.g. an ack lost to a dropped connection) and resolves as recorded.
   */
  async submitVote(payload: VotePayload): Promise<void> {
    let lastError: unknown = null;
    for (let attempt = 0; attempt <= this.retries; attempt++) {
      let res: Response;
      try {
        res = await this.fetchFn(`${this.base}/api/votes`, {
          method: "POST",
          headers: { "Content-Type": "application/json" },
          body: JSON.stringify(payload),
        });
      } catch (err) {
        lastError = err;
        await wait(this.backoffMs * 2 ** attempt);
        continue;
      }
      if (res.ok) return;
      const detail = await res.text();
      if (res.status === 409 && detail.includes("duplicate")) return;
      throw new ApiError(res.status, detail);
    }
    throw new Error(`vote submission failed after ${this.retries + 1} attempts: ${lastError}`);
  }
}
