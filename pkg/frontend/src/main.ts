// Moderator console entry point: a single-page app over the service API.
// Keyboard review: "a" marks the top candidate a true positive, "x" a
// false positive. Poll-based refresh keeps every number server-sourced.

import { ApiError, ServiceClient } from './api.js';
import { Poller } from './poller.js';
import { ReviewQueue, type LabelVerdict } from './queue.js';
import { detectConflict, validateTierEdit } from './thresholds.js';
import type { Candidate, TierBound, TrendDetail } from './types.js';
import { trendView } from './views.js';

const client = new ServiceClient('');
const queue = new ReviewQueue();

let selectedTrend: string | null = null;
let lastSeenTiers: TierBound[] = [];
let labeler = 'console';

const el = (id: string) => document.getElementById(id)!;

function toast(message: string, kind: 'info' | 'error' = 'info'): void {
  const box = el('toasts');
  const node = document.createElement('div');
  node.className = `toast ${kind}`;
  node.textContent = message;
  box.appendChild(node);
  setTimeout(() => node.remove(), 5000);
}

function surface(err: unknown): void {
  if (err instanceof ApiError) {
    toast(`${err.code}: ${err.message}`, 'error');
  } else {
    toast(String(err), 'error');
  }
}

async function refreshTrendList(): Promise<void> {
  const trends = await client.listTrends();
  const list = el('trend-list');
  list.innerHTML = '';
  for (const t of trends) {
    const row = document.createElement('button');
    row.className = `trend-row ${t.trend_id === selectedTrend ? 'selected' : ''} state-${t.state}`;
    row.textContent = `${t.name} (${t.seed_count} seeds, ${t.state})`;
    row.onclick = () => selectTrend(t.trend_id);
    list.appendChild(row);
  }
}

function renderSeeds(detail: TrendDetail): void {
  const view = trendView(detail);
  const body = el('seed-rows');
  body.innerHTML = '';
  for (const seed of view.seeds) {
    const tr = document.createElement('tr');
    tr.innerHTML = `<td>${seed.itemId}</td><td>${seed.provenance}</td>` +
      `<td>${seed.n}</td><td>${seed.r}</td><td>${seed.precisionText}</td>`;
    const cell = document.createElement('td');
    const remove = document.createElement('button');
    remove.textContent = 'remove';
    remove.onclick = () => removeSeed(detail, seed.itemId);
    cell.appendChild(remove);
    tr.appendChild(cell);
    body.appendChild(tr);
  }
  el('trend-title').textContent = `${view.name} [${view.state}] (${view.modality})`;
}

async function removeSeed(detail: TrendDetail, seedId: string): Promise<void> {
  if (detail.seeds.length === 1) {
    const sure = window.confirm('Removing the last seed will pause this trend for review. Continue?');
    if (!sure) return;
  }
  try {
    await client.removeSeed(detail.trend_id, seedId);
  } catch (err) {
    if (err instanceof ApiError && err.code === 'would_empty_seed_set') {
      toast('last seed kept; trend paused for review', 'info');
    } else {
      surface(err);
    }
  }
  await refreshDetail();
}

function renderTiers(detail: TrendDetail): void {
  lastSeenTiers = detail.tiers.map((t) => ({ ...t }));
  const box = el('tier-editor');
  box.innerHTML = '';
  for (const tier of detail.tiers) {
    const row = document.createElement('div');
    row.className = 'tier-row';
    const label = document.createElement('label');
    label.textContent = `${tier.name} >= `;
    const input = document.createElement('input');
    input.type = 'number';
    input.step = '0.01';
    input.min = '-1';
    input.max = '1';
    input.value = String(tier.lower_bound);
    input.dataset.tier = tier.name;
    row.append(label, input);
    box.appendChild(row);
  }
  const submit = document.createElement('button');
  submit.textContent = 'apply thresholds';
  submit.onclick = () => submitTiers(detail);
  box.appendChild(submit);
}

async function submitTiers(detail: TrendDetail): Promise<void> {
  const inputs = Array.from(el('tier-editor').querySelectorAll('input'));
  const edited: TierBound[] = inputs.map((input) => ({
    name: input.dataset.tier as TierBound['name'],
    lower_bound: Number(input.value),
  }));
  const verdict = validateTierEdit(edited);
  if (!verdict.ok) {
    toast(`blocked: ${verdict.reason}`, 'error');
    return;
  }
  try {
    const fresh = await client.getTrend(detail.trend_id);
    if (detectConflict(lastSeenTiers, fresh.tiers)) {
      toast(
        `superseded by another editor: ${fresh.tiers.map((t) => `${t.name}=${t.lower_bound}`).join(', ')}`,
        'info',
      );
    }
    await client.setTiers(detail.trend_id, edited);
    toast('thresholds applied');
  } catch (err) {
    surface(err);
  }
  await refreshDetail();
}

function renderQueue(): void {
  const body = el('queue-rows');
  body.innerHTML = '';
  for (const item of queue.pending.slice(0, 25)) {
    const tr = document.createElement('tr');
    tr.innerHTML =
      `<td>${item.video_id}</td><td>${item.score.toFixed(4)}</td>` +
      `<td>${item.best_seed_id}</td><td>${item.tier ?? '-'}</td>`;
    const cell = document.createElement('td');
    for (const [text, verdict] of [['accept', 'true_positive'], ['reject', 'false_positive']] as const) {
      const btn = document.createElement('button');
      btn.textContent = text;
      btn.onclick = () => submitLabel(item.video_id, verdict);
      cell.appendChild(btn);
    }
    tr.appendChild(cell);
    body.appendChild(tr);
  }
  el('queue-count').textContent = `${queue.length} pending`;
  const stale = queue.staleItems;
  el('stale-note').textContent = stale.length
    ? `${stale.length} stale (decision gone server-side)`
    : '';
}

async function submitLabel(videoId: string, verdict: LabelVerdict): Promise<void> {
  if (!selectedTrend) return;
  const trendId = selectedTrend;
  const outcome = await queue.submit(videoId, verdict, (vid, v) =>
    client.submitLabel(trendId, vid, v, labeler),
  );
  if (outcome.status === 'rolled_back') {
    toast(`label failed, restored to queue: ${outcome.error}`, 'error');
  } else if (outcome.status === 'stale') {
    toast(`decision for ${videoId} is stale; skipped`, 'error');
  }
  renderQueue();
  await refreshDetail(); // seed precision updates on the next fetch
}

async function renderSuggestions(detail: TrendDetail): Promise<void> {
  const box = el('suggestions');
  box.innerHTML = '';
  for (const strategy of ['cluster', 'historical'] as const) {
    try {
      const result = await client.suggestions(detail.trend_id, strategy);
      for (const s of result.suggestions.slice(0, 8)) {
        const row = document.createElement('div');
        row.className = 'suggestion';
        const add = document.createElement('button');
        add.textContent = 'add';
        add.onclick = async () => {
          try {
            await client.addSeed(detail.trend_id, s.item_id, labeler);
            toast(`seed ${s.item_id} added`);
          } catch (err) {
            surface(err);
          }
          await refreshDetail();
        };
        const text = document.createElement('span');
        text.textContent = ` ${s.item_id} [${s.provenance}]`;
        row.append(add, text);
        box.appendChild(row);
      }
    } catch {
      // suggestion strategies are best-effort in the UI
    }
  }
}

async function refreshDetail(): Promise<void> {
  if (!selectedTrend) return;
  try {
    const detail = await client.getTrend(selectedTrend);
    renderSeeds(detail);
    renderTiers(detail);
    if (detail.seeds.length > 0) {
      const page = await client.candidates(selectedTrend, 200, 0, 200);
      queue.load(page.candidates as Candidate[]);
    } else {
      queue.load([]);
    }
    renderQueue();
    await renderSuggestions(detail);
  } catch (err) {
    surface(err);
  }
}

async function selectTrend(trendId: string): Promise<void> {
  selectedTrend = trendId;
  await refreshTrendList();
  await refreshDetail();
}

async function createTrendFromForm(): Promise<void> {
  const name = (el('new-trend-name') as HTMLInputElement).value.trim();
  const modality = (el('new-trend-modality') as HTMLSelectElement).value;
  if (!name) {
    toast('trend name required', 'error');
    return;
  }
  try {
    const detail = await client.createTrend(name, modality);
    toast(`created ${detail.trend_id}`);
    await selectTrend(detail.trend_id);
  } catch (err) {
    surface(err);
  }
}

async function addSeedFromForm(): Promise<void> {
  if (!selectedTrend) return;
  const itemId = (el('new-seed-id') as HTMLInputElement).value.trim();
  if (!itemId) return;
  try {
    await client.addSeed(selectedTrend, itemId, labeler);
    await client.evaluateTrend(selectedTrend, Date.now() / 1000);
    toast(`seed ${itemId} added and candidates evaluated`);
  } catch (err) {
    surface(err);
  }
  await refreshDetail();
}

function bindKeyboard(): void {
  document.addEventListener('keydown', (event) => {
    if (event.target instanceof HTMLInputElement) return;
    const top = queue.peek();
    if (!top) return;
    if (event.key === 'a') void submitLabel(top.video_id, 'true_positive');
    if (event.key === 'x') void submitLabel(top.video_id, 'false_positive');
  });
}

export function boot(): void {
  labeler = window.prompt('moderator name?', 'console') ?? 'console';
  el('create-trend').onclick = () => void createTrendFromForm();
  el('add-seed').onclick = () => void addSeedFromForm();
  bindKeyboard();
  const poller = new Poller(async () => {
    await refreshTrendList();
    await refreshDetail();
  });
  poller.start();
  void refreshTrendList();
}

if (typeof document !== 'undefined' && document.getElementById('trend-list')) {
  boot();
}
