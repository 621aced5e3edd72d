import { describe, expect, it } from "vitest";

import {
  applySnapshot,
  decidedAlerts,
  initialState,
  openAlerts,
  selectAlert,
  selectedAlert,
  setConnection,
  upsertAlert,
} from "../src/store.js";
import { alert } from "./helpers.js";

describe("alert bookkeeping", () => {
  it("a streamed alert lands in the open list", () => {
    const s = upsertAlert(initialState(), alert());
    expect(openAlerts(s).map((a) => a.alert_id)).toEqual([1]);
    expect(decidedAlerts(s)).toEqual([]);
  });

  it("an alert leaves the open list only on a terminal payload", () => {
    let s = upsertAlert(initialState(), alert());
    // non-terminal rewrites keep it open
    s = upsertAlert(s, alert({ created_at: "2026-08-19T10:00:01+00:00" }));
    expect(openAlerts(s)).toHaveLength(1);
    s = upsertAlert(
      s,
      alert({ status: "blocked", decided_by: "ops-1", decided_at: "2026-08-19T10:05:00+00:00" }),
    );
    expect(openAlerts(s)).toHaveLength(0);
    expect(decidedAlerts(s)[0]?.status).toBe("blocked");
  });

  it("open list sorts newest first", () => {
    let s = initialState();
    s = upsertAlert(s, alert({ alert_id: 1, created_at: "2026-08-19T09:00:00+00:00" }));
    s = upsertAlert(s, alert({ alert_id: 2, created_at: "2026-08-19T11:00:00+00:00" }));
    s = upsertAlert(s, alert({ alert_id: 3, created_at: "2026-08-19T10:00:00+00:00" }));
    expect(openAlerts(s).map((a) => a.alert_id)).toEqual([2, 3, 1]);
  });

  it("a reload snapshot reconstructs the same partition", () => {
    // live path: three events, one decided
    let live = initialState();
    const a1 = alert({ alert_id: 1 });
    const a2 = alert({ alert_id: 2, created_at: "2026-08-19T10:30:00+00:00" });
    live = upsertAlert(live, a1);
    live = upsertAlert(live, a2);
    const decided = alert({ alert_id: 1, status: "allowed", decided_by: "x", decided_at: "t" });
    live = upsertAlert(live, decided);

    // reload path: one snapshot containing what the server now holds
    const reloaded = applySnapshot(initialState(), [decided, a2]);

    expect(openAlerts(reloaded)).toEqual(openAlerts(live));
    expect(decidedAlerts(reloaded)).toEqual(decidedAlerts(live));
  });

  it("snapshot drops a selection that no longer exists", () => {
    let s = upsertAlert(initialState(), alert({ alert_id: 9 }));
    s = selectAlert(s, 9);
    expect(selectedAlert(s)?.alert_id).toBe(9);
    s = applySnapshot(s, [alert({ alert_id: 2 })]);
    expect(selectedAlert(s)).toBeNull();
    s = applySnapshot(s, [alert({ alert_id: 2 })]);
    expect(s.selectedId).toBeNull();
  });

  it("selecting an unknown id is a no-op", () => {
    const s = selectAlert(initialState(), 42);
    expect(s.selectedId).toBeNull();
  });

  it("connection status is tracked without touching alerts", () => {
    let s = upsertAlert(initialState(), alert());
    s = setConnection(s, "reconnecting");
    expect(s.connection).toBe("reconnecting");
    expect(openAlerts(s)).toHaveLength(1);
  });
});
