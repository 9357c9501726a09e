/**
 * Transformation-event feed poller. Every couple of seconds it asks the
 * management API for events newer than the newest row it holds and merges
 * them in at the front. A failed poll flags the view as stale instead of
 * clearing rows; the next good poll both recovers and backfills, because
 * the cursor only advances on success.
 */

import { EventDoc } from './api.js';

/** The slice of the API the poller needs; AdminApi satisfies it. */
export interface EventsApi {
  listEvents(opts?: { limit?: number; since?: number }): Promise<EventDoc[]>;
}

export interface FeedState {
  rows: EventDoc[];
  stale: boolean;
}

export interface PollerOptions {
  intervalMs?: number;
  /** Rows requested per poll; also bounds a catch-up batch. */
  limit?: number;
  /** Rows kept in memory; the oldest fall off. */
  maxRows?: number;
  onChange: (state: FeedState) => void;
}

export class EventFeedPoller {
  private readonly api: EventsApi;
  private readonly intervalMs: number;
  private readonly limit: number;
  private readonly maxRows: number;
  private readonly onChange: (state: FeedState) => void;

  private rows: EventDoc[] = [];
  private stale = false;
  private running = false;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(api: EventsApi, options: PollerOptions) {
    this.api = api;
    this.intervalMs = options.intervalMs ?? 2000;
    this.limit = options.limit ?? 50;
    this.maxRows = options.maxRows ?? 200;
    this.onChange = options.onChange;
  }

  state(): FeedState {
    return { rows: this.rows, stale: this.stale };
  }

  start(): void {
    if (this.running) {
      return;
    }
    this.running = true;
    void this.tick();
  }

  stop(): void {
    this.running = false;
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
  }

  /** One fetch-and-merge round. Exposed so tests can drive polls directly. */
  async pollOnce(): Promise<void> {
    const newest = this.rows[0];
    try {
      // The server's since filter is strictly greater-than, so rows already
      // held never come back and duplicates cannot enter the feed.
      const batch = await this.api.listEvents(
        newest === undefined
          ? { limit: this.limit }
          : { limit: this.limit, since: newest.timestamp },
      );
      const changed = batch.length > 0 || this.stale;
      this.stale = false;
      if (batch.length > 0) {
        this.rows = batch.concat(this.rows).slice(0, this.maxRows);
      }
      if (changed) {
        this.notify();
      }
    } catch {
      if (!this.stale) {
        this.stale = true;
        this.notify();
      }
    }
  }

  private async tick(): Promise<void> {
    await this.pollOnce();
    if (this.running) {
      this.timer = setTimeout(() => void this.tick(), this.intervalMs);
    }
  }

  private notify(): void {
    this.onChange(this.state());
  }
}
