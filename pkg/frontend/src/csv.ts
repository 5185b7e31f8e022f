import type { HeatmapPoint, PointStatus } from './types.js';

/**
 * Parse the service's heatmap CSV (m,x,y,eta_x,eta_y,eta,status).
 *
 * Numeric fields are parsed for layout math, but the original strings
 * are preserved so the UI can show exactly what the service sent.
 */
export function parseHeatmapCsv(text: string): HeatmapPoint[] {
  const lines = text.split('\n').filter((line) => line.length > 0);
  const header = lines[0];
  if (header !== 'm,x,y,eta_x,eta_y,eta,status') {
    throw new Error(`unexpected heatmap header: ${header}`);
  }
  return lines.slice(1).map((line) => {
    const cols = line.split(',');
    if (cols.length !== 7) {
      throw new Error(`bad heatmap row: ${line}`);
    }
    const [m, x, y, etaX, etaY, eta, status] = cols as [
      string, string, string, string, string, string, string,
    ];
    return {
      m: Number(m),
      x: Number(x),
      y: Number(y),
      eta: Number(eta),
      status: status as PointStatus,
      raw: { etaX, etaY, eta },
    };
  });
}
