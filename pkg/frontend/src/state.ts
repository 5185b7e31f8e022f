import type { ApiClient } from './api.js';
import type { ScenarioDoc } from './types.js';

/**
 * Client-side session state for the adjustment loop.
 *
 * The UI edits only the SP angles (and hazard threshold); every number
 * it displays comes from the service.  The store is content-addressed,
 * so each applied edit yields a fresh scenario id; the previous result
 * is kept for before/after comparison.
 */
export interface UiScenarioState {
  scenarioId: string;
  scenario: ScenarioDoc;
  spAnglesDeg: number[];
  demId: string | null;
  latestResultId: string | null;
  previousResultId: string | null;
  pendingPrediction: boolean;
}

export function initialState(scenarioId: string, scenario: ScenarioDoc): UiScenarioState {
  return {
    scenarioId,
    scenario,
    spAnglesDeg: [...(scenario.scenario?.sp_angles_deg ?? [])],
    demId: null,
    latestResultId: null,
    previousResultId: null,
    pendingPrediction: false,
  };
}

/** Move one SP to a new ring angle (degrees); pure client-side edit. */
export function adjustSp(state: UiScenarioState, spIndex: number, newAngleDeg: number): UiScenarioState {
  if (!Number.isFinite(newAngleDeg)) {
    throw new Error(`angle must be finite, got ${newAngleDeg}`);
  }
  if (spIndex < 0 || spIndex >= state.spAnglesDeg.length) {
    throw new Error(`SP index ${spIndex} out of range`);
  }
  const spAnglesDeg = [...state.spAnglesDeg];
  spAnglesDeg[spIndex] = newAngleDeg;
  return { ...state, spAnglesDeg, pendingPrediction: true };
}

/** Rotate the whole ring by a delta (degrees). */
export function rotateAll(state: UiScenarioState, deltaDeg: number): UiScenarioState {
  return {
    ...state,
    spAnglesDeg: state.spAnglesDeg.map((a) => a + deltaDeg),
    pendingPrediction: true,
  };
}

/** Push the edited angles to the service; returns state under the new id. */
export async function applyAngles(api: ApiClient, state: UiScenarioState): Promise<UiScenarioState> {
  const { id } = await api.putSpAngles(state.scenarioId, state.spAnglesDeg);
  const scenario = await api.getScenario(id);
  return { ...state, scenarioId: id, scenario };
}

/** Run a prediction and shift the comparison slots. */
export async function runPrediction(api: ApiClient, state: UiScenarioState): Promise<UiScenarioState> {
  if (state.demId === null) throw new Error('no DEM uploaded');
  const { job_id, result_id } = await api.predict(state.scenarioId, state.demId);
  await api.pollJob(job_id);
  return {
    ...state,
    previousResultId: state.latestResultId,
    latestResultId: result_id,
    pendingPrediction: false,
  };
}
