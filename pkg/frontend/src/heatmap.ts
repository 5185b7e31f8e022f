import type { HeatmapPoint } from './types.js';

/**
 * Paint model for the reliability heatmap.
 *
 * Pure view-model construction: colors encode eta, outline classes mark
 * the hazard-threshold and requirement isolines, special markers flag
 * points without a finite MDE.  Rendering to canvas happens elsewhere.
 */
export interface HeatmapCell {
  m: number;
  x: number;
  y: number;
  fill: string;
  outline: 'none' | 'hazard' | 'requirement';
  special: 'unavailable' | 'unbounded' | null;
  hazardAreaId: number | null;
  raw: { etaX: string; etaY: string; eta: string };
}

export interface HeatmapModel {
  cells: HeatmapCell[];
  etaMin: number;
  etaMax: number;
  etaT: number;
  etaReq: number;
}

function colorFor(eta: number, lo: number, hi: number): string {
  // Blue (reliable) to red (poor), single hue ramp.
  const t = hi > lo ? Math.min(Math.max((eta - lo) / (hi - lo), 0), 1) : 0;
  const hue = 210 - 210 * t;
  return `hsl(${hue.toFixed(0)}, 80%, 55%)`;
}

export function buildHeatmapModel(
  points: HeatmapPoint[],
  etaT: number,
  etaReq: number,
  hazardAreas: { id: number; members: number[] }[] = [],
): HeatmapModel {
  const finite = points.filter((p) => Number.isFinite(p.eta)).map((p) => p.eta);
  const lo = finite.length ? Math.min(...finite) : 0;
  const hi = finite.length ? Math.max(...finite) : 1;
  const areaOf = new Map<number, number>();
  for (const area of hazardAreas) {
    for (const m of area.members) areaOf.set(m, area.id);
  }
  const cells = points.map((p): HeatmapCell => {
    let special: HeatmapCell['special'] = null;
    if (p.status === 'unavailable') special = 'unavailable';
    else if (p.status === 'unbounded' || !Number.isFinite(p.eta)) special = 'unbounded';
    let outline: HeatmapCell['outline'] = 'none';
    if (special !== null || p.eta > etaReq) outline = 'requirement';
    else if (p.eta > etaT) outline = 'hazard';
    return {
      m: p.m,
      x: p.x,
      y: p.y,
      fill: special === null ? colorFor(p.eta, lo, hi) : 'hsl(0, 0%, 25%)',
      outline,
      special,
      hazardAreaId: areaOf.get(p.m) ?? null,
      raw: p.raw,
    };
  });
  return { cells, etaMin: lo, etaMax: hi, etaT, etaReq };
}

/** Values shown when hovering a cell: verbatim service strings. */
export function hoverInfo(model: HeatmapModel, m: number): { etaX: string; etaY: string } | null {
  const cell = model.cells.find((c) => c.m === m);
  return cell ? { etaX: cell.raw.etaX, etaY: cell.raw.etaY } : null;
}
