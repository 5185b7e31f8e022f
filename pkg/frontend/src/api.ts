import type { HazardReport, Job, ResultSummary, ScenarioDoc } from './types.js';

/** Thin typed client for the prediction service; no model math here. */
export class ApiClient {
  constructor(private readonly baseUrl: string) {}

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await fetch(this.baseUrl + path, init);
    if (!res.ok) {
      const body = await res.text();
      throw new Error(`${init?.method ?? 'GET'} ${path} -> ${res.status}: ${body}`);
    }
    return (await res.json()) as T;
  }

  postScenario(doc: ScenarioDoc): Promise<{ id: string }> {
    return this.json('/api/scenarios', {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(doc),
    });
  }

  getScenario(id: string): Promise<ScenarioDoc> {
    return this.json(`/api/scenarios/${id}`);
  }

  putSpAngles(id: string, anglesDeg: number[]): Promise<{ id: string }> {
    return this.json(`/api/scenarios/${id}/sp_angles`, {
      method: 'PUT',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({ sp_angles_deg: anglesDeg }),
    });
  }

  async postDem(text: string): Promise<{ id: string }> {
    return this.json('/api/dems', {
      method: 'POST',
      headers: { 'content-type': 'text/plain' },
      body: text,
    });
  }

  predict(scenarioId: string, demId: string): Promise<{ job_id: string; result_id: string }> {
    return this.json('/api/predict', {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({ scenario_id: scenarioId, dem_id: demId }),
    });
  }

  getJob(id: string): Promise<Job> {
    return this.json(`/api/jobs/${id}`);
  }

  /** Poll until the job ends; resolves with the finished job. */
  async pollJob(id: string, intervalMs = 150, timeoutMs = 300_000): Promise<Job> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const job = await this.getJob(id);
      if (job.state === 'done') return job;
      if (job.state === 'failed') throw new Error(`job ${id} failed: ${job.error}`);
      if (Date.now() > deadline) throw new Error(`job ${id} timed out`);
      await new Promise((r) => setTimeout(r, intervalMs));
    }
  }

  getResult(id: string): Promise<ResultSummary> {
    return this.json(`/api/results/${id}`);
  }

  async getHeatmapCsv(id: string): Promise<string> {
    const res = await fetch(`${this.baseUrl}/api/results/${id}/heatmap`);
    if (!res.ok) throw new Error(`heatmap ${id} -> ${res.status}`);
    return await res.text();
  }

  vote(resultId: string, etaT?: number): Promise<HazardReport> {
    const body: Record<string, unknown> = { result_id: resultId };
    if (etaT !== undefined) body.eta_t = etaT;
    return this.json('/api/vote', {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(body),
    });
  }
}
