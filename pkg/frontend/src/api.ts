/**
 * Typed client for the proxy's management REST API (/api/*).
 *
 * Mirrors the wire contract exactly: bare JSON arrays for listings,
 * {"error": code, "detail": text} for failures, and per-profile version
 * tokens that every mutation must echo back.
 */

export interface TransformationDoc {
  id: string;
  description: string;
  source: string;
  target: string;
  translator: string;
}

export interface ProfileDoc {
  id: string;
  version: number;
  rules: string[];
}

export interface EventDoc {
  timestamp: number;
  url: string;
  profile_id: string;
  chain_ids: string[];
  initial_mime: string;
  final_mime: string;
  input_bytes: number;
  output_bytes: number;
  duration_ms: number;
  cache_hit: boolean;
  outcome: string;
  reason: string | null;
}

export interface ReloadSummary {
  transformations: number;
  profiles: number;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** A non-2xx answer from the API, carrying its machine-readable code. */
export class ApiError extends Error {
  readonly status: number;
  readonly code: string;
  readonly detail: string;
  /** Current server-side version, present on 409 conflict bodies. */
  readonly version?: number;

  constructor(status: number, code: string, detail: string, version?: number) {
    super(`${code}: ${detail}`);
    this.name = 'ApiError';
    this.status = status;
    this.code = code;
    this.detail = detail;
    this.version = version;
  }
}

export class AdminApi {
  private readonly baseUrl: string;
  private readonly fetchFn: FetchLike;

  /** baseUrl '' targets the page's own origin, where /ui/ and /api/ share
   * the management listener. */
  constructor(baseUrl = '', fetchFn?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/$/, '');
    this.fetchFn = fetchFn ?? ((url, init) => globalThis.fetch(url, init));
  }

  listTransformations(): Promise<TransformationDoc[]> {
    return this.request<TransformationDoc[]>('GET', '/api/transformations');
  }

  listProfiles(): Promise<ProfileDoc[]> {
    return this.request<ProfileDoc[]>('GET', '/api/profiles');
  }

  getProfile(id: string): Promise<ProfileDoc> {
    return this.request<ProfileDoc>('GET', `/api/profiles/${encodeURIComponent(id)}`);
  }

  /** Create or replace a profile. Replacing requires the version token from
   * the last read; creation ignores it. */
  putProfile(id: string, rules: string[], version?: number): Promise<ProfileDoc> {
    const body: Record<string, unknown> = { rules };
    if (version !== undefined) {
      body.version = version;
    }
    return this.request<ProfileDoc>('PUT', `/api/profiles/${encodeURIComponent(id)}`, body);
  }

  patchProfile(
    id: string,
    edit: { add?: string[]; remove?: string[]; version: number },
  ): Promise<ProfileDoc> {
    return this.request<ProfileDoc>('PATCH', `/api/profiles/${encodeURIComponent(id)}`, edit);
  }

  async deleteProfile(id: string, version?: number): Promise<void> {
    const suffix = version === undefined ? '' : `?version=${version}`;
    await this.request('DELETE', `/api/profiles/${encodeURIComponent(id)}${suffix}`);
  }

  /** Newest first; since filters to events strictly after that timestamp. */
  listEvents(opts: { limit?: number; since?: number } = {}): Promise<EventDoc[]> {
    const params = new URLSearchParams();
    if (opts.limit !== undefined) {
      params.set('limit', String(opts.limit));
    }
    if (opts.since !== undefined) {
      params.set('since', String(opts.since));
    }
    const query = params.toString();
    return this.request<EventDoc[]>('GET', query ? `/api/events?${query}` : '/api/events');
  }

  reload(): Promise<ReloadSummary> {
    return this.request<ReloadSummary>('POST', '/api/reload');
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { 'Content-Type': 'application/json' };
      init.body = JSON.stringify(body);
    }
    const res = await this.fetchFn(this.baseUrl + path, init);
    const text = await res.text();
    let doc: unknown = null;
    if (text) {
      try {
        doc = JSON.parse(text);
      } catch {
        doc = null;
      }
    }
    if (!res.ok) {
      const err = (doc ?? {}) as { error?: string; detail?: string; version?: number };
      throw new ApiError(
        res.status,
        err.error ?? 'unknown',
        err.detail ?? res.statusText,
        err.version,
      );
    }
    return doc as T;
  }
}
