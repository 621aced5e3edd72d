// Shared builders for wire objects.

import type { AlertWire, TransactionWire, VerdictWire } from "../src/types.js";

export function verdict(overrides: Partial<VerdictWire> = {}): VerdictWire {
  return {
    transaction_id: 31,
    nK: true,
    nD: true,
    nA: false,
    nF: true,
    action: "alert",
    window_size: 31,
    warm_up: false,
    verdicts: {
      kmeans: {
        algorithm: "kmeans",
        flag: true,
        evidence: { cluster: 5, cluster_size: 1, threshold: 2 },
      },
      dbscan: {
        algorithm: "dbscan",
        flag: true,
        evidence: { label: 1, noise: false, lof: 40660.7, lof_threshold: 1.5 },
      },
      agglomerative: {
        algorithm: "agglomerative",
        flag: false,
        evidence: { cluster: 11, cluster_size: 4, cut_clusters: 12 },
      },
    },
    ...overrides,
  };
}

export function alert(overrides: Partial<AlertWire> = {}): AlertWire {
  return {
    alert_id: 1,
    transaction_id: 31,
    pan: "PAN7",
    created_at: "2026-08-19T10:00:00+00:00",
    verdict: verdict(),
    status: "open",
    decided_by: null,
    decided_at: null,
    ...overrides,
  };
}

export function tx(overrides: Partial<TransactionWire> = {}): TransactionWire {
  return {
    id: 1,
    pr_code: 0,
    pan: "PAN7",
    term_id: "T00001",
    merchant_id: "M000001",
    pos_condition: 0,
    affective_amount: 50_000,
    trx_date: "2026-01-10",
    trx_time: 11,
    ...overrides,
  };
}
