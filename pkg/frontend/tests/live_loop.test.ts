/**
 * Full predict -> adjust -> re-predict loop against a live local service.
 *
 * Spawns the Python service as a child process on a scratch store, runs
 * the operator workflow through the typed client, and checks the
 * results byte-match the recorded fixtures (the engine is deterministic
 * for identical inputs).
 */

import { spawn, type ChildProcess } from 'node:child_process';
import { mkdtempSync, readFileSync, rmSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { ApiClient } from '../src/api.js';
import { parseHeatmapCsv } from '../src/csv.js';
import { applyAngles, initialState, rotateAll, runPrediction } from '../src/state.js';
import type { ScenarioDoc } from '../src/types.js';

const PORT = 8731;
const BASE = `http://127.0.0.1:${PORT}`;
const FIXTURES = join(__dirname, 'fixtures');
const REPO_ROOT = join(__dirname, '..', '..');

let proc: ChildProcess | null = null;
let storeDir = '';

async function serviceUp(timeoutMs = 30_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    try {
      const res = await fetch(`${BASE}/api/jobs/probe`);
      if (res.status === 404) return; // responding means up
    } catch {
      // not yet listening
    }
    if (Date.now() > deadline) throw new Error('service did not come up');
    await new Promise((r) => setTimeout(r, 200));
  }
}

function demText(): string {
  // Same valley the fixtures were recorded on, regenerated via the CLI's
  // synth-dem would also work; the recorded text is authoritative here.
  return readFileSync(join(FIXTURES, 'dem.asc'), 'utf-8');
}

beforeAll(async () => {
  storeDir = mkdtempSync(join(tmpdir(), 'uavrel-store-'));
  proc = spawn(
    'python3',
    ['-m', 'uavrel.cli', 'serve', '--bind', `127.0.0.1:${PORT}`, '--store', storeDir],
    { cwd: REPO_ROOT, stdio: 'ignore' },
  );
  await serviceUp();
}, 60_000);

afterAll(() => {
  proc?.kill();
  if (storeDir) rmSync(storeDir, { recursive: true, force: true });
});

describe('live adjustment loop', () => {
  it('predicts, adjusts the ring, re-predicts, and compares', async () => {
    const api = new ApiClient(BASE);
    const scenarioDoc = JSON.parse(readFileSync(join(FIXTURES, 'scenario.json'), 'utf-8')) as ScenarioDoc;

    const { id } = await api.postScenario(scenarioDoc);
    let state = initialState(id, await api.getScenario(id));
    expect(state.spAnglesDeg).toHaveLength(8);

    const dem = await api.postDem(demText());
    state = { ...state, demId: dem.id };

    // First prediction: must byte-match the recorded fixture payloads.
    state = await runPrediction(api, state);
    expect(state.latestResultId).not.toBeNull();
    const heatmap = await api.getHeatmapCsv(state.latestResultId!);
    expect(heatmap).toBe(readFileSync(join(FIXTURES, 'heatmap.csv'), 'utf-8'));
    const summary = await api.getResult(state.latestResultId!);
    expect(summary.scenario_hash).toBe(id);

    // Adjust: rotate the whole ring, push, re-predict.
    state = rotateAll(state, 15);
    state = await applyAngles(api, state);
    expect(state.scenarioId).not.toBe(id);
    const previous = state.latestResultId;
    state = await runPrediction(api, state);
    expect(state.previousResultId).toBe(previous);
    expect(state.latestResultId).not.toBe(previous);
    expect(state.pendingPrediction).toBe(false);

    const after = await api.getResult(state.latestResultId!);
    expect(after.scenario_hash).toBe(state.scenarioId);
    // Different geometry, different map.
    const heatmapAfter = await api.getHeatmapCsv(state.latestResultId!);
    expect(heatmapAfter).not.toBe(heatmap);
    expect(parseHeatmapCsv(heatmapAfter)).toHaveLength(summary.n_points);

    // Voting report round-trip on the new result.
    const report = await api.vote(state.latestResultId!);
    expect(report.k).toBe(8);
    expect(report.scenario_hash).toBe(state.scenarioId);
  }, 120_000);
});
