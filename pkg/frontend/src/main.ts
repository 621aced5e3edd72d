// Browser entry point: wires the feed, store, and API client to the DOM.
// All state lives in store.ts and only changes through server payloads.

import { ApiClient, ApiError, isAlreadyDecided } from "./api.js";
import { AlertFeed } from "./feed.js";
import {
  applySnapshot,
  decidedAlerts,
  initialState,
  openAlerts,
  selectAlert,
  selectedAlert,
  setConnection,
  upsertAlert,
  type ConsoleState,
} from "./store.js";
import { amountVsDate, amountVsHour, renderScatterSVG } from "./scatter.js";
import { voteDerivation, voteLines } from "./vote.js";
import type { AlertWire, TransactionForm, WindowResponse } from "./types.js";

function esc(s: unknown): string {
  return String(s)
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function $(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
}

// -- configuration ------------------------------------------------------

const params = new URLSearchParams(location.search);
const apiBase =
  params.get("api") ??
  localStorage.getItem("kda.api") ??
  "http://127.0.0.1:8000";
const token = params.get("token") ?? localStorage.getItem("kda.token") ?? "";
localStorage.setItem("kda.api", apiBase);
if (token) localStorage.setItem("kda.token", token);

const api = new ApiClient(apiBase, { token: token || undefined });

// -- state --------------------------------------------------------------

let state: ConsoleState = initialState();
const windows = new Map<string, WindowResponse>();

function mutate(next: ConsoleState): void {
  state = next;
  render();
}

// -- rendering ----------------------------------------------------------

function alertRow(a: AlertWire, active: boolean): string {
  const when = a.created_at.replace("T", " ").slice(0, 19);
  const cls = [a.status, active ? "active" : ""].join(" ").trim();
  return (
    `<tr data-alert="${a.alert_id}" class="${cls}">` +
    `<td>#${a.alert_id}</td><td>${esc(a.pan)}</td>` +
    `<td>tx ${a.transaction_id}</td><td>${esc(when)}</td>` +
    `<td class="status">${esc(a.status)}</td></tr>`
  );
}

function renderLists(): void {
  const open = openAlerts(state);
  const done = decidedAlerts(state);
  $("open-count").textContent = String(open.length);
  $("open-body").innerHTML =
    open.map((a) => alertRow(a, a.alert_id === state.selectedId)).join("") ||
    `<tr><td colspan="5" class="empty">no open alerts</td></tr>`;
  $("history-body").innerHTML =
    done.map((a) => alertRow(a, a.alert_id === state.selectedId)).join("") ||
    `<tr><td colspan="5" class="empty">nothing decided yet</td></tr>`;
}

function renderDetail(): void {
  const a = selectedAlert(state);
  const pane = $("detail-body");
  if (!a) {
    pane.innerHTML = `<p class="empty">select an alert to inspect it</p>`;
    return;
  }
  const lines = voteLines(a.verdict)
    .map(
      (l) =>
        `<li class="${l.flagged ? "flagged" : "clear"}"><b>${esc(l.algorithm)}</b>: ` +
        `${l.flagged ? "suspicious" : "normal"} (${esc(l.detail)})</li>`,
    )
    .join("");
  const decided =
    a.status === "open"
      ? `<div class="decide">
           <input id="inspector" placeholder="inspector id" value="${esc(localStorage.getItem("kda.inspector") ?? "")}">
           <button id="btn-allow">allow</button>
           <button id="btn-block" class="danger">block</button>
         </div>
         <p id="decide-msg" class="msg"></p>`
      : `<p>decided <b>${esc(a.status)}</b> by ${esc(a.decided_by ?? "?")} at ${esc(a.decided_at ?? "?")}</p>`;
  const win = windows.get(a.pan);
  const scatter = win
    ? renderScatterSVG(amountVsHour(win.window, a.transaction_id), "amount by hour") +
      renderScatterSVG(amountVsDate(win.window, a.transaction_id), "amount by date")
    : `<p class="empty">loading window…</p>`;
  pane.innerHTML = `
    <h3>alert #${a.alert_id} · ${esc(a.pan)} · tx ${a.transaction_id}</h3>
    <p class="derivation">${esc(voteDerivation(a.verdict))}</p>
    <ul class="votes">${lines}</ul>
    ${decided}
    <div class="scatters">${scatter}</div>`;
  if (a.status === "open") {
    $("btn-allow").onclick = () => decide(a, "allowed");
    $("btn-block").onclick = () => decide(a, "blocked");
  }
}

function render(): void {
  const conn = $("conn");
  conn.textContent = state.connection;
  conn.className = `conn ${state.connection}`;
  renderLists();
  renderDetail();
}

// -- actions ------------------------------------------------------------

async function choose(alertId: number): Promise<void> {
  mutate(selectAlert(state, alertId));
  const a = selectedAlert(state);
  if (!a) return;
  try {
    windows.set(a.pan, await api.getWindow(a.pan));
  } catch {
    windows.delete(a.pan);
  }
  render();
}

async function decide(a: AlertWire, decision: "allowed" | "blocked"): Promise<void> {
  const inspector =
    ($("inspector") as HTMLInputElement).value.trim() || "inspector";
  localStorage.setItem("kda.inspector", inspector);
  const msg = $("decide-msg");
  try {
    const echoed = await api.decide(a.alert_id, decision, inspector);
    mutate(upsertAlert(state, echoed));
  } catch (e) {
    if (isAlreadyDecided(e)) {
      msg.textContent = "already decided elsewhere";
      try {
        mutate(upsertAlert(state, await api.getAlert(a.alert_id)));
      } catch {
        // keep the stale row; the stream echo will repair it
      }
    } else {
      msg.textContent = e instanceof ApiError ? e.message : String(e);
    }
  }
}

async function inject(ev: Event): Promise<void> {
  ev.preventDefault();
  const form = ev.currentTarget as HTMLFormElement;
  const fd = new FormData(form);
  const out = $("inject-result");
  const body: TransactionForm = {
    pan: String(fd.get("pan") ?? "").trim(),
    merchant_id: String(fd.get("merchant") ?? "").trim(),
    term_id: String(fd.get("term") ?? "T00000").trim(),
    affective_amount: Number(fd.get("amount") ?? 0),
    business_date: `${fd.get("date")}T${String(fd.get("hour") ?? "12").padStart(2, "0")}:00:00`,
    pos_condition: Number(fd.get("pos") ?? 0),
    pr_code: 0,
    txn_group: "retail",
    settled: true,
  };
  out.className = "msg";
  out.textContent = "scoring…";
  try {
    const r = await api.postTransaction(body);
    const v = r.verdict;
    if (r.alert) {
      out.className = "msg flagged";
      out.textContent =
        `tx ${r.transaction.id} flagged: alert #${r.alert.alert_id} opened ` +
        `(${voteDerivation(v)})`;
      mutate(upsertAlert(state, r.alert));
    } else {
      out.className = "msg clear";
      out.textContent = `tx ${r.transaction.id} ${v.action} (${voteDerivation(v)})`;
    }
  } catch (e) {
    out.className = "msg error";
    out.textContent = e instanceof ApiError ? `${e.code}: ${e.message}` : String(e);
  }
}

// -- bootstrap ----------------------------------------------------------

async function refreshHealth(): Promise<void> {
  try {
    const h = await api.health();
    $("health").textContent =
      `${h.backend} · ${h.transactions} tx · ${h.open_alerts} open`;
  } catch {
    $("health").textContent = "service unreachable";
  }
}

async function loadSnapshot(): Promise<void> {
  const alerts = await api.listAlerts();
  mutate(applySnapshot(state, alerts));
}

function wire(): void {
  $("settings-form").onsubmit = (ev) => {
    ev.preventDefault();
    const base = ($("api-base") as HTMLInputElement).value.trim();
    const tok = ($("api-token") as HTMLInputElement).value.trim();
    localStorage.setItem("kda.api", base);
    localStorage.setItem("kda.token", tok);
    location.search = ""; // reload clean; config now persists in storage
  };
  ($("api-base") as HTMLInputElement).value = apiBase;
  ($("api-token") as HTMLInputElement).value = token;
  const today = new Date().toISOString().slice(0, 10);
  ($("inject-date") as HTMLInputElement).value = today;
  $("inject-form").onsubmit = inject;
  for (const tbody of ["open-body", "history-body"]) {
    $(tbody).onclick = (ev) => {
      const row = (ev.target as HTMLElement).closest("tr[data-alert]");
      if (row) void choose(Number(row.getAttribute("data-alert")));
    };
  }
}

const feed = new AlertFeed(
  api.streamUrl(),
  (alert) => {
    mutate(upsertAlert(state, alert));
    void refreshHealth();
  },
  (status) => mutate(setConnection(state, status)),
);

wire();
render();
void refreshHealth();
void loadSnapshot().catch(() => {
  $("health").textContent = "service unreachable";
});
feed.start();
setInterval(() => void refreshHealth(), 30_000);
