import { ApiClient } from './api.js';
import { parseHeatmapCsv } from './csv.js';
import { buildHeatmapModel, hoverInfo, type HeatmapModel } from './heatmap.js';
import { adjustSp, applyAngles, initialState, rotateAll, runPrediction, type UiScenarioState } from './state.js';
import type { HazardReport, ResultSummary } from './types.js';
import { buildVotingTables, flaggedSps, votingBanner } from './voting.js';

/** Browser wiring for the operator workbench; all math stays server-side. */

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

let api: ApiClient;
let state: UiScenarioState | null = null;
let model: HeatmapModel | null = null;
let summary: ResultSummary | null = null;
let previousSummary: ResultSummary | null = null;
let report: HazardReport | null = null;
let dragging: number | null = null;

const canvas = $('map') as unknown as HTMLCanvasElement;
const ctx = canvas.getContext('2d')!;

function worldToCanvas(x: number, y: number, reach: number): [number, number] {
  const half = canvas.width / 2;
  return [half + (x / reach) * (half - 20), half - (y / reach) * (half - 20)];
}

function canvasToAngleDeg(px: number, py: number): number {
  const half = canvas.width / 2;
  return (Math.atan2(half - py, px - half) * 180) / Math.PI;
}

function reach(): number {
  const dMin = state?.scenario.scenario?.d_min ?? 400;
  return dMin * 1.15;
}

function draw(): void {
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.fillStyle = '#10141a';
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  const r = reach();
  const spacing = state?.scenario.scenario?.spacing ?? 10;
  const cellPx = Math.max(((spacing / r) * (canvas.width / 2 - 20)) * 0.95, 2);

  if (model) {
    for (const cell of model.cells) {
      const [cx, cy] = worldToCanvas(cell.x, cell.y, r);
      ctx.fillStyle = cell.fill;
      ctx.fillRect(cx - cellPx / 2, cy - cellPx / 2, cellPx, cellPx);
      if (cell.special === 'unavailable') {
        ctx.strokeStyle = '#888';
        ctx.beginPath();
        ctx.moveTo(cx - cellPx / 2, cy - cellPx / 2);
        ctx.lineTo(cx + cellPx / 2, cy + cellPx / 2);
        ctx.stroke();
      } else if (cell.special === 'unbounded') {
        ctx.fillStyle = '#fff';
        ctx.fillText('∞', cx - 3, cy + 3);
      }
      if (cell.outline !== 'none' || cell.hazardAreaId !== null) {
        ctx.strokeStyle = cell.hazardAreaId !== null ? '#ff5050' : cell.outline === 'requirement' ? '#ff9030' : '#ffd24d';
        ctx.lineWidth = cell.hazardAreaId !== null ? 2 : 1;
        ctx.strokeRect(cx - cellPx / 2, cy - cellPx / 2, cellPx, cellPx);
        ctx.lineWidth = 1;
      }
    }
  }

  // SP ring and markers.
  const dMin = state?.scenario.scenario?.d_min ?? 400;
  const [ox, oy] = worldToCanvas(0, 0, r);
  const ringPx = (dMin / r) * (canvas.width / 2 - 20);
  ctx.strokeStyle = '#3a4a5a';
  ctx.setLineDash([4, 4]);
  ctx.beginPath();
  ctx.arc(ox, oy, ringPx, 0, 2 * Math.PI);
  ctx.stroke();
  ctx.setLineDash([]);

  const flagged = report ? new Set([...flaggedSps(report).values()].flat().map((f) => f.sp)) : new Set<number>();
  state?.spAnglesDeg.forEach((angle, i) => {
    const rad = (angle * Math.PI) / 180;
    const [mx, my] = worldToCanvas(dMin * Math.cos(rad), dMin * Math.sin(rad), r);
    ctx.fillStyle = flagged.has(i) ? '#ff5050' : '#59d98c';
    ctx.beginPath();
    ctx.arc(mx, my, 8, 0, 2 * Math.PI);
    ctx.fill();
    ctx.fillStyle = '#0c0f13';
    ctx.fillText(String(i + 1), mx - 3, my + 3);
  });
}

function renderSummary(): void {
  const el = $('summary');
  if (!summary) {
    el.textContent = 'no prediction yet';
    return;
  }
  const fmt = (s: ResultSummary | null) =>
    s ? `${s.eta_star === null ? 'unbounded/unavailable' : s.eta_star.toFixed(2) + ' m'} (meets req: ${s.meets_requirement})` : '—';
  const badge = state?.pendingPrediction ? ' [prediction pending]' : '';
  el.textContent = `current η*: ${fmt(summary)} | previous η*: ${fmt(previousSummary)}${badge}`;
}

function renderVoting(): void {
  const host = $('voting');
  host.innerHTML = '';
  if (!report) return;
  const banner = votingBanner(report);
  if (banner) {
    host.textContent = banner;
    return;
  }
  for (const table of buildVotingTables(report)) {
    const t = document.createElement('table');
    const head = t.insertRow();
    for (const h of table.header) {
      const cell = document.createElement('th');
      cell.textContent = h;
      head.appendChild(cell);
    }
    for (const row of table.rows) {
      const tr = t.insertRow();
      tr.insertCell().textContent = row.label;
      for (const v of row.values) {
        const td = tr.insertCell();
        td.textContent = String(v);
        if (v === 1) td.className = 'flagged';
      }
    }
    host.appendChild(t);
  }
  const pre = document.createElement('pre');
  pre.textContent = report.guidance;
  host.appendChild(pre);
}

async function refreshResult(): Promise<void> {
  if (!state?.latestResultId) return;
  summary = await api.getResult(state.latestResultId);
  previousSummary = state.previousResultId ? await api.getResult(state.previousResultId) : null;
  const csv = await api.getHeatmapCsv(state.latestResultId);
  report = await api.vote(state.latestResultId);
  const points = parseHeatmapCsv(csv);
  model = buildHeatmapModel(points, summary.eta_t, summary.eta_req, report.areas);
  renderSummary();
  renderVoting();
  draw();
}

function nearestSp(px: number, py: number): number | null {
  if (!state) return null;
  const dMin = state.scenario.scenario?.d_min ?? 400;
  let best: number | null = null;
  let bestDist = 144; // 12 px grab radius, squared
  state.spAnglesDeg.forEach((angle, i) => {
    const rad = (angle * Math.PI) / 180;
    const [mx, my] = worldToCanvas(dMin * Math.cos(rad), dMin * Math.sin(rad), reach());
    const d = (mx - px) ** 2 + (my - py) ** 2;
    if (d < bestDist) {
      bestDist = d;
      best = i;
    }
  });
  return best;
}

function wireCanvas(): void {
  canvas.addEventListener('mousedown', (ev) => {
    dragging = nearestSp(ev.offsetX, ev.offsetY);
  });
  canvas.addEventListener('mousemove', (ev) => {
    if (dragging !== null && state) {
      state = adjustSp(state, dragging, canvasToAngleDeg(ev.offsetX, ev.offsetY));
      renderSummary();
      draw();
      return;
    }
    if (model && state) {
      const spacing = state.scenario.scenario?.spacing ?? 10;
      let nearest: { m: number; d: number } | null = null;
      for (const cell of model.cells) {
        const [cx, cy] = worldToCanvas(cell.x, cell.y, reach());
        const d = (cx - ev.offsetX) ** 2 + (cy - ev.offsetY) ** 2;
        if (d < (nearest?.d ?? spacing * spacing) ) nearest = { m: cell.m, d };
      }
      const info = nearest ? hoverInfo(model, nearest.m) : null;
      $('hover').textContent = info ? `m=${nearest!.m}  eta_x=${info.etaX}  eta_y=${info.etaY}` : '';
    }
  });
  canvas.addEventListener('mouseup', async () => {
    if (dragging !== null && state) {
      dragging = null;
      state = await applyAngles(api, state);
      renderSummary();
    }
  });
}

async function connect(): Promise<void> {
  api = new ApiClient(($('base-url') as HTMLInputElement).value.replace(/\/$/, ''));
  const doc = JSON.parse(($('scenario-json') as HTMLTextAreaElement).value || '{}');
  const { id } = await api.postScenario(doc);
  state = initialState(id, await api.getScenario(id));
  $('status').textContent = `scenario ${id}`;
  draw();
}

async function uploadDem(ev: Event): Promise<void> {
  const input = ev.target as HTMLInputElement;
  const file = input.files?.[0];
  if (!file || !state) return;
  const { id } = await api.postDem(await file.text());
  state = { ...state, demId: id };
  $('status').textContent = `scenario ${state.scenarioId} + dem ${id}`;
}

async function predictNow(): Promise<void> {
  if (!state) return;
  $('status').textContent = 'predicting…';
  state = await runPrediction(api, state);
  $('status').textContent = `result ${state.latestResultId}`;
  await refreshResult();
}

window.addEventListener('DOMContentLoaded', () => {
  $('connect').addEventListener('click', () => void connect());
  $('dem-file').addEventListener('change', (ev) => void uploadDem(ev));
  $('predict').addEventListener('click', () => void predictNow());
  $('rotate-left').addEventListener('click', () => {
    if (state) {
      state = rotateAll(state, -5);
      draw();
      renderSummary();
    }
  });
  $('rotate-right').addEventListener('click', () => {
    if (state) {
      state = rotateAll(state, 5);
      draw();
      renderSummary();
    }
  });
  $('apply-angles').addEventListener('click', async () => {
    if (state) {
      state = await applyAngles(api, state);
      $('status').textContent = `scenario ${state.scenarioId}`;
    }
  });
  wireCanvas();
  draw();
});
