import type { HazardReport, VoteVectors } from './types.js';

/** Table view of an area's four binary voting vectors. */
export interface VotingTable {
  areaId: number;
  header: string[];
  rows: { label: string; values: number[] }[];
}

export interface FlaggedSp {
  sp: number; // zero-based index
  causes: { kind: 'visibility' | 'failure-rate'; direction: 'x' | 'y' }[];
}

const ROW_ORDER: { key: keyof VoteVectors; label: (i: number) => string }[] = [
  { key: 'v_u_x', label: (i) => `v_H${i}_U_x` },
  { key: 'v_fo_x', label: (i) => `v_H${i}_F|O_x` },
  { key: 'v_u_y', label: (i) => `v_H${i}_U_y` },
  { key: 'v_fo_y', label: (i) => `v_H${i}_F|O_y` },
];

/** Build per-area tables; values are the API payload verbatim. */
export function buildVotingTables(report: HazardReport): VotingTable[] {
  const header = ['vector', ...Array.from({ length: report.k }, (_, k) => `SP${k + 1}`)];
  return report.areas.map((area) => ({
    areaId: area.id,
    header,
    rows: ROW_ORDER.map(({ key, label }) => ({
      label: label(area.id),
      values: [...area.votes[key]],
    })),
  }));
}

/** SPs flagged by any vector, with their cause and direction. */
export function flaggedSps(report: HazardReport): Map<number, FlaggedSp[]> {
  const byArea = new Map<number, FlaggedSp[]>();
  for (const area of report.areas) {
    const flags = new Map<number, FlaggedSp>();
    const mark = (
      vec: number[],
      kind: 'visibility' | 'failure-rate',
      direction: 'x' | 'y',
    ) => {
      vec.forEach((v, sp) => {
        if (v === 1) {
          const entry = flags.get(sp) ?? { sp, causes: [] };
          entry.causes.push({ kind, direction });
          flags.set(sp, entry);
        }
      });
    };
    mark(area.votes.v_u_x, 'visibility', 'x');
    mark(area.votes.v_u_y, 'visibility', 'y');
    mark(area.votes.v_fo_x, 'failure-rate', 'x');
    mark(area.votes.v_fo_y, 'failure-rate', 'y');
    byArea.set(area.id, [...flags.values()].sort((a, b) => a.sp - b.sp));
  }
  return byArea;
}

/** Empty-state banner text when the report carries no areas. */
export function votingBanner(report: HazardReport): string | null {
  return report.areas.length === 0 ? 'no hazardous areas' : null;
}
