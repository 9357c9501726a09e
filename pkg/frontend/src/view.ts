/**
 * DOM rendering for the console. Everything is built through createElement
 * so response fields land as text nodes, never as markup. mountConsole wires
 * the profile editor and the event feed poller onto a bare container.
 */

import { EventDoc, ProfileDoc } from './api.js';
import { EventFeedPoller, EventsApi, FeedState } from './poller.js';
import { Banner, EditorState, ProfileApi, ProfileEditor, RuleRow } from './store.js';

/** Everything the console touches; AdminApi satisfies it. */
export type ConsoleApi = ProfileApi &
  EventsApi & {
    listProfiles(): Promise<ProfileDoc[]>;
  };

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

export type ToggleHandler = (ruleId: string, enabled: boolean) => void;

/** Catalog rows with per-rule checkboxes. A row whose toggle is still in
 * flight is marked pending and locked until the server answers. */
export function renderRuleList(
  container: HTMLElement,
  rows: RuleRow[],
  onToggle: ToggleHandler,
): void {
  container.textContent = '';
  if (rows.length === 0) {
    container.appendChild(el('p', 'empty', 'No transformations in the catalog.'));
    return;
  }
  const list = el('ul', 'rules');
  for (const row of rows) {
    const item = el('li', row.pending ? 'rule pending' : 'rule');
    item.dataset.ruleId = row.id;

    const label = el('label');
    const box = el('input');
    box.type = 'checkbox';
    box.checked = row.enabled;
    box.disabled = row.pending;
    box.addEventListener('change', () => onToggle(row.id, box.checked));
    label.appendChild(box);
    label.appendChild(el('span', 'rule-id', row.id));
    label.appendChild(el('span', 'rule-mimes', `${row.source} to ${row.target}`));
    item.appendChild(label);
    item.appendChild(el('span', 'rule-desc', row.description));
    if (row.pending) {
      item.appendChild(el('span', 'rule-state', 'saving'));
    }
    list.appendChild(item);
  }
  container.appendChild(list);
}

export interface BannerHandlers {
  onReload: () => void;
  onRetry: () => void;
}

/** Error strip above the rule list. Conflicts offer a reload, network
 * failures a retry; rejected edits show their machine-readable reason. */
export function renderBanner(
  container: HTMLElement,
  banner: Banner | null,
  handlers: BannerHandlers,
): void {
  container.textContent = '';
  if (banner === null) {
    return;
  }
  const strip = el('div', `banner ${banner.kind}`);
  if (banner.code !== null) {
    strip.appendChild(el('span', 'banner-code', banner.code));
  }
  strip.appendChild(el('span', 'banner-text', banner.text));
  if (banner.kind === 'conflict') {
    const button = el('button', 'banner-action', 'Reload profile');
    button.addEventListener('click', handlers.onReload);
    strip.appendChild(button);
  } else if (banner.kind === 'network') {
    const button = el('button', 'banner-action', 'Retry');
    button.addEventListener('click', handlers.onRetry);
    strip.appendChild(button);
  }
  container.appendChild(strip);
}

export function renderProfilePicker(
  select: HTMLSelectElement,
  ids: string[],
  selected: string | null,
  onSelect: (id: string) => void,
): void {
  select.textContent = '';
  for (const id of ids) {
    const option = el('option', undefined, id);
    option.value = id;
    option.selected = id === selected;
    select.appendChild(option);
  }
  select.onchange = () => onSelect(select.value);
}

function formatTime(timestamp: number): string {
  return new Date(timestamp * 1000).toLocaleTimeString();
}

function formatBytes(n: number): string {
  if (n >= 1024 * 1024) {
    return `${(n / (1024 * 1024)).toFixed(1)} MiB`;
  }
  if (n >= 1024) {
    return `${(n / 1024).toFixed(1)} KiB`;
  }
  return `${n} B`;
}

function feedRow(event: EventDoc): HTMLTableRowElement {
  const tr = el('tr', event.outcome === 'success' ? undefined : `outcome-${event.outcome}`);
  tr.appendChild(el('td', 'col-time', formatTime(event.timestamp)));
  tr.appendChild(el('td', 'col-url', event.url));
  tr.appendChild(el('td', 'col-chain', event.chain_ids.join(', ') || '(none)'));
  tr.appendChild(
    el('td', 'col-bytes', `${formatBytes(event.input_bytes)} to ${formatBytes(event.output_bytes)}`),
  );
  tr.appendChild(el('td', 'col-duration', `${event.duration_ms} ms`));
  tr.appendChild(el('td', 'col-cache', event.cache_hit ? 'hit' : ''));
  tr.appendChild(el('td', 'col-outcome', event.reason ?? event.outcome));
  return tr;
}

/** Newest-first table of transformation events, with a stale marker while
 * polls are failing. */
export function renderEventFeed(container: HTMLElement, state: FeedState): void {
  container.textContent = '';
  if (state.stale) {
    container.appendChild(
      el('div', 'feed-stale', 'Feed unreachable, showing the last known events.'),
    );
  }
  if (state.rows.length === 0) {
    container.appendChild(el('p', 'empty', 'No transformations yet.'));
    return;
  }
  const table = el('table', 'feed');
  const head = el('thead');
  const headRow = el('tr');
  for (const title of ['Time', 'URL', 'Chain', 'Bytes', 'Duration', 'Cache', 'Outcome']) {
    headRow.appendChild(el('th', undefined, title));
  }
  head.appendChild(headRow);
  table.appendChild(head);
  const body = el('tbody');
  for (const event of state.rows) {
    body.appendChild(feedRow(event));
  }
  table.appendChild(body);
  container.appendChild(table);
}

export interface ConsoleHandles {
  editor: ProfileEditor;
  poller: EventFeedPoller;
  /** Resolves after the first profile load completes (or fails visibly). */
  ready: Promise<void>;
  refs: {
    picker: HTMLSelectElement;
    banner: HTMLElement;
    rules: HTMLElement;
    feed: HTMLElement;
  };
}

/** Build the whole console inside root and start its polling loop. */
export function mountConsole(
  root: HTMLElement,
  api: ConsoleApi,
  options: { pollIntervalMs?: number } = {},
): ConsoleHandles {
  root.textContent = '';

  const editorSection = el('section', 'panel');
  editorSection.appendChild(el('h2', undefined, 'Translation rules'));
  const pickerLabel = el('label', 'picker-label', 'Profile ');
  const picker = el('select', 'profile-picker');
  pickerLabel.appendChild(picker);
  editorSection.appendChild(pickerLabel);
  const banner = el('div', 'banner-slot');
  editorSection.appendChild(banner);
  const rules = el('div', 'rules-slot');
  editorSection.appendChild(rules);
  root.appendChild(editorSection);

  const feedSection = el('section', 'panel');
  feedSection.appendChild(el('h2', undefined, 'Recent transformations'));
  const feed = el('div', 'feed-slot');
  feedSection.appendChild(feed);
  root.appendChild(feedSection);

  const editor = new ProfileEditor(api, (state: EditorState) => {
    renderBanner(banner, state.banner, {
      onReload: () => void editor.refresh(),
      onRetry: () => void editor.refresh(),
    });
    renderRuleList(rules, editor.ruleRows(), (ruleId, enabled) => {
      void editor.toggle(ruleId, enabled);
    });
  });

  const poller = new EventFeedPoller(api, {
    intervalMs: options.pollIntervalMs,
    onChange: (state) => renderEventFeed(feed, state),
  });

  renderEventFeed(feed, poller.state());

  const ready = api
    .listProfiles()
    .then((profiles) => {
      const ids = profiles.map((p) => p.id);
      const first = ids[0] ?? null;
      renderProfilePicker(picker, ids, first, (id) => void editor.load(id));
      if (first !== null) {
        return editor.load(first);
      }
      rules.textContent = '';
      rules.appendChild(el('p', 'empty', 'No profiles configured.'));
      return undefined;
    })
    .catch((error) => {
      console.error('Failed to load profiles:', error);
      renderBanner(
        banner,
        { kind: 'network', code: null, text: 'cannot reach the management API' },
        { onReload: () => undefined, onRetry: () => window.location.reload() },
      );
    });

  poller.start();
  return { editor, poller, ready, refs: { picker, banner, rules, feed } };
}
