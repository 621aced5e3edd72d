// Wire shapes, mirrored from the service's JSON responses.

export interface TransactionWire {
  id: number;
  pr_code: number;
  pan: string;
  term_id: string;
  merchant_id: string;
  pos_condition: number;
  affective_amount: number;
  trx_date: string; // YYYY-MM-DD
  trx_time: number; // hour 0-23
}

export interface AlgorithmVerdictWire {
  algorithm: string;
  flag: boolean;
  evidence: Record<string, unknown>;
}

export interface VerdictWire {
  transaction_id: number;
  nK: boolean;
  nD: boolean;
  nA: boolean;
  nF: boolean;
  action: "pass" | "alert" | "stop";
  window_size: number;
  warm_up: boolean;
  verdicts: Record<string, AlgorithmVerdictWire>;
}

export type AlertStatus = "open" | "allowed" | "blocked";

export interface AlertWire {
  alert_id: number;
  transaction_id: number;
  pan: string;
  created_at: string;
  verdict: VerdictWire;
  status: AlertStatus;
  decided_by: string | null;
  decided_at: string | null;
}

export interface ScoreResponse {
  transaction: TransactionWire;
  verdict: VerdictWire;
  alert: AlertWire | null;
}

export interface WindowResponse {
  pan: string;
  window: TransactionWire[];
}

export interface HealthResponse {
  status: string;
  backend: string;
  transactions: number;
  open_alerts: number;
}

export type TxnGroup = "retail" | "bill_payment" | "top_up" | "other";

export interface TransactionForm {
  pan: string;
  merchant_id: string;
  term_id: string;
  affective_amount: number;
  business_date: string; // ISO timestamp
  pos_condition: number;
  pr_code: number;
  txn_group: TxnGroup;
  settled: boolean;
}
