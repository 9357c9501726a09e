/**
 * Profile editor state. Holds the last server-acknowledged rule set per the
 * loaded profile plus any in-flight optimistic toggles, and funnels every
 * mutation through the management API. The enabled flags shown to the user
 * are never fabricated: each one either came back from the server or is
 * explicitly marked pending.
 */

import { ApiError, ProfileDoc, TransformationDoc } from './api.js';

/** The slice of the API the editor needs; AdminApi satisfies it. */
export interface ProfileApi {
  listTransformations(): Promise<TransformationDoc[]>;
  getProfile(id: string): Promise<ProfileDoc>;
  patchProfile(
    id: string,
    edit: { add?: string[]; remove?: string[]; version: number },
  ): Promise<ProfileDoc>;
}

export type BannerKind = 'rejected' | 'conflict' | 'network';

export interface Banner {
  kind: BannerKind;
  /** Machine-readable reason code when the server sent one. */
  code: string | null;
  text: string;
}

export interface RuleRow {
  id: string;
  source: string;
  target: string;
  description: string;
  enabled: boolean;
  pending: boolean;
}

export interface EditorState {
  profileId: string | null;
  version: number | null;
  catalog: TransformationDoc[];
  /** Rule ids the server last acknowledged for this profile. */
  acked: ReadonlySet<string>;
  /** Rule id -> desired enabled flag, while a toggle is in flight. */
  pending: ReadonlyMap<string, boolean>;
  banner: Banner | null;
  loaded: boolean;
}

export class ProfileEditor {
  private readonly api: ProfileApi;
  private readonly onChange: (state: EditorState) => void;

  private profileId: string | null = null;
  private version: number | null = null;
  private catalog: TransformationDoc[] = [];
  private acked = new Set<string>();
  private pending = new Map<string, boolean>();
  private banner: Banner | null = null;
  private loaded = false;
  // Toggles serialize through this chain so each PATCH carries the version
  // the previous one was acknowledged with.
  private queue: Promise<void> = Promise.resolve();
  private inflightLoad: Promise<void> = Promise.resolve();

  constructor(api: ProfileApi, onChange: (state: EditorState) => void) {
    this.api = api;
    this.onChange = onChange;
  }

  /** Resolves once every mutation and load in flight has settled. */
  async settled(): Promise<void> {
    await Promise.all([this.queue, this.inflightLoad]);
  }

  state(): EditorState {
    return {
      profileId: this.profileId,
      version: this.version,
      catalog: this.catalog,
      acked: this.acked,
      pending: this.pending,
      banner: this.banner,
      loaded: this.loaded,
    };
  }

  /** Catalog joined with the profile's enabled and in-flight flags. */
  ruleRows(): RuleRow[] {
    return this.catalog.map((def) => {
      const pending = this.pending.has(def.id);
      const enabled = pending ? this.pending.get(def.id)! : this.acked.has(def.id);
      return {
        id: def.id,
        source: def.source,
        target: def.target,
        description: def.description,
        enabled,
        pending,
      };
    });
  }

  load(profileId: string): Promise<void> {
    this.inflightLoad = this.performLoad(profileId);
    return this.inflightLoad;
  }

  private async performLoad(profileId: string): Promise<void> {
    this.profileId = profileId;
    this.loaded = false;
    this.pending = new Map();
    this.banner = null;
    this.notify();
    try {
      const [catalog, doc] = await Promise.all([
        this.api.listTransformations(),
        this.api.getProfile(profileId),
      ]);
      this.catalog = catalog;
      this.accept(doc.version, doc.rules);
    } catch (error) {
      this.fail(error);
    }
  }

  /** Re-read the profile from the server, dropping local state. The banner
   * for a version conflict points here. */
  async refresh(): Promise<void> {
    if (this.profileId !== null) {
      await this.load(this.profileId);
    }
  }

  /** Optimistically flip one rule and patch the profile. Repeat toggles of
   * a rule already in flight are ignored. */
  toggle(ruleId: string, enabled: boolean): Promise<void> {
    if (this.profileId === null || this.pending.has(ruleId)) {
      return this.queue;
    }
    // Copy-on-write keeps earlier onChange snapshots valid.
    this.pending = new Map(this.pending).set(ruleId, enabled);
    this.banner = null;
    this.notify();
    this.queue = this.queue.then(() => this.performToggle(ruleId, enabled));
    return this.queue;
  }

  private async performToggle(ruleId: string, enabled: boolean): Promise<void> {
    const profileId = this.profileId;
    if (profileId === null || this.version === null) {
      this.dropPending(ruleId);
      this.notify();
      return;
    }
    const edit = enabled
      ? { add: [ruleId], version: this.version }
      : { remove: [ruleId], version: this.version };
    try {
      const doc = await this.api.patchProfile(profileId, edit);
      this.dropPending(ruleId);
      this.accept(doc.version, doc.rules);
    } catch (error) {
      this.dropPending(ruleId);
      this.fail(error);
    }
  }

  private dropPending(ruleId: string): void {
    const next = new Map(this.pending);
    next.delete(ruleId);
    this.pending = next;
  }

  private accept(version: number, rules: string[]): void {
    this.version = version;
    this.acked = new Set(rules);
    this.loaded = true;
    this.notify();
  }

  private fail(error: unknown): void {
    if (error instanceof ApiError && error.status === 409) {
      this.banner = {
        kind: 'conflict',
        code: error.code,
        text: 'profile changed elsewhere, reload to continue',
      };
    } else if (error instanceof ApiError) {
      this.banner = { kind: 'rejected', code: error.code, text: error.detail };
    } else {
      this.banner = {
        kind: 'network',
        code: null,
        text: 'cannot reach the management API',
      };
    }
    this.notify();
  }

  private notify(): void {
    this.onChange(this.state());
  }
}
