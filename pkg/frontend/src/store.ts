// Console state and its transitions. Everything here is pure: alerts only
// change through server payloads (snapshot fetches, stream events, decision
// echoes), so a reload that replays the snapshot lands in the same state.

import type { AlertWire } from "./types.js";

export type Connection = "connecting" | "live" | "reconnecting";

export interface ConsoleState {
  connection: Connection;
  alerts: Map<number, AlertWire>;
  selectedId: number | null;
}

export function initialState(): ConsoleState {
  return { connection: "connecting", alerts: new Map(), selectedId: null };
}

/** Insert or update one alert by id; newer server payload always wins. */
export function upsertAlert(state: ConsoleState, alert: AlertWire): ConsoleState {
  const alerts = new Map(state.alerts);
  alerts.set(alert.alert_id, alert);
  return { ...state, alerts };
}

/** Replace all known alerts with a server snapshot. */
export function applySnapshot(
  state: ConsoleState,
  snapshot: AlertWire[],
): ConsoleState {
  const alerts = new Map(snapshot.map((a) => [a.alert_id, a]));
  const selectedId =
    state.selectedId !== null && alerts.has(state.selectedId)
      ? state.selectedId
      : null;
  return { ...state, alerts, selectedId };
}

export function setConnection(
  state: ConsoleState,
  connection: Connection,
): ConsoleState {
  return { ...state, connection };
}

export function selectAlert(
  state: ConsoleState,
  alertId: number | null,
): ConsoleState {
  if (alertId !== null && !state.alerts.has(alertId)) return state;
  return { ...state, selectedId: alertId };
}

function byNewest(a: AlertWire, b: AlertWire): number {
  return b.created_at.localeCompare(a.created_at) || b.alert_id - a.alert_id;
}

/** Alerts still waiting on an inspector, newest first. */
export function openAlerts(state: ConsoleState): AlertWire[] {
  return [...state.alerts.values()].filter((a) => a.status === "open").sort(byNewest);
}

/** Terminally decided alerts, newest first. */
export function decidedAlerts(state: ConsoleState): AlertWire[] {
  return [...state.alerts.values()].filter((a) => a.status !== "open").sort(byNewest);
}

export function selectedAlert(state: ConsoleState): AlertWire | null {
  return state.selectedId === null
    ? null
    : (state.alerts.get(state.selectedId) ?? null);
}
