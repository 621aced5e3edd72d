// Human-readable rendering of one verdict: what each detector saw and how
// the 2-of-3 vote falls out of it.

import type { AlgorithmVerdictWire, VerdictWire } from "./types.js";

export interface VoteLine {
  algorithm: string;
  flagged: boolean;
  detail: string;
}

function num(v: unknown): string {
  if (typeof v !== "number") return String(v);
  if (Number.isInteger(v)) return String(v);
  return v.toFixed(2).replace(/0$/, "");
}

function describeEvidence(v: AlgorithmVerdictWire): string {
  const e = v.evidence;
  if (e["warm_up"]) return "window below minimum history";
  switch (v.algorithm) {
    case "kmeans":
      return `cluster size ${num(e["cluster_size"])} vs threshold ${num(e["threshold"])}`;
    case "dbscan":
      return e["noise"]
        ? "density noise point"
        : `LOF ${num(e["lof"])} vs threshold ${num(e["lof_threshold"])}`;
    case "agglomerative":
      return `cluster size ${num(e["cluster_size"])} at cut ${num(e["cut_clusters"])}`;
    default:
      return JSON.stringify(e);
  }
}

export function voteLines(verdict: VerdictWire): VoteLine[] {
  return Object.values(verdict.verdicts).map((v) => ({
    algorithm: v.algorithm,
    flagged: v.flag,
    detail: describeEvidence(v),
  }));
}

/** The vote spelled out, e.g. "nF = 2-of-3 over (nK=1, nD=1, nA=0) = 1". */
export function voteDerivation(verdict: VerdictWire): string {
  if (verdict.warm_up) {
    return `warm-up window (${verdict.window_size} transactions): always passes`;
  }
  const bit = (b: boolean) => (b ? "1" : "0");
  return (
    `nF = 2-of-3 over (nK=${bit(verdict.nK)}, nD=${bit(verdict.nD)}, ` +
    `nA=${bit(verdict.nA)}) = ${bit(verdict.nF)} (${verdict.action})`
  );
}
