import { describe, it, expect, vi, afterEach } from "vitest";

import { ApiClient } from "../src/api.js";
import { SessionController } from "../src/controller.js";
import { FakeService, snapshot, SPECTRUM } from "./fake_service.js";

function setup(service: FakeService, pollMs = 1000) {
  const api = new ApiClient("http://svc", service.fetch);
  return new SessionController(api, pollMs);
}

afterEach(() => {
  vi.useRealTimers();
});

describe("phase mapping", () => {
  it("maps a pending vote to awaiting_vote and loads the spectrum", async () => {
    const svc = new FakeService({
      snapshots: [snapshot({ pending: { kind: "vote", row: 3, col: 4 } })],
      spectrum: SPECTRUM,
    });
    const ctl = setup(svc);
    await ctl.attach("s1");
    expect(ctl.getState().phase).toBe("awaiting_vote");
    expect(ctl.getState().spectrum).toEqual(SPECTRUM);
  });

  it("maps a satisfaction prompt to awaiting_satisfaction without a spectrum fetch", async () => {
    const svc = new FakeService({
      snapshots: [snapshot({ pending: { kind: "satisfaction" } })],
    });
    const ctl = setup(svc);
    await ctl.attach("s1");
    expect(ctl.getState().phase).toBe("awaiting_satisfaction");
    expect(svc.calls.filter((c) => c.path.endsWith("/spectrum"))).toHaveLength(0);
  });

  it("maps running with no prompt to watching, and terminal statuses through", async () => {
    for (const [status, phase] of [
      ["running", "watching"],
      ["finished", "finished"],
      ["aborted", "aborted"],
    ] as const) {
      const svc = new FakeService({ snapshots: [snapshot({ status })] });
      const ctl = setup(svc);
      await ctl.attach("s1");
      expect(ctl.getState().phase).toBe(phase);
    }
  });
});

describe("exactly-once submission", () => {
  it("a double-clicked vote issues a single POST", async () => {
    const svc = new FakeService({
      snapshots: [
        snapshot({ pending: { kind: "vote", row: 3, col: 4 } }),
        snapshot({ status: "running", iteration: 1 }),
      ],
      spectrum: SPECTRUM,
      delayMs: 5,
    });
    const ctl = setup(svc);
    await ctl.attach("s1");
    const [first, second] = await Promise.all([
      ctl.submitVote(1, 0.5),
      ctl.submitVote(1, 0.5),
    ]);
    expect(svc.voteCount).toBe(1);
    expect([first, second].filter(Boolean)).toHaveLength(1);
  });

  it("a vote sent when nothing is pending is refused client-side", async () => {
    const svc = new FakeService({ snapshots: [snapshot({ status: "running" })] });
    const ctl = setup(svc);
    await ctl.attach("s1");
    expect(await ctl.submitVote(2, 0.8)).toBe(false);
    expect(svc.voteCount).toBe(0);
  });

  it("a stale vote that draws a 409 resyncs instead of surfacing an error", async () => {
    // server already moved to the satisfaction prompt; the controller still
    // believes a vote is pending
    const stale = new FakeService({
      snapshots: [snapshot({ pending: { kind: "vote", row: 0, col: 0 } })],
      spectrum: SPECTRUM,
    });
    const ctl = setup(stale);
    await ctl.attach("s1");
    // swap the pending prompt under the controller's feet
    stale.current().pending = { kind: "satisfaction" };
    const ok = await ctl.submitVote(0, 0.5);
    expect(ok).toBe(false);
    expect(stale.voteCount).toBe(0);
    expect(ctl.getState().phase).toBe("awaiting_satisfaction");
    expect(ctl.getState().lastError).toBeNull();
  });

  it("double-clicked satisfaction issues a single POST", async () => {
    const svc = new FakeService({
      snapshots: [
        snapshot({ pending: { kind: "satisfaction" } }),
        snapshot({ status: "running", iteration: 5 }),
      ],
      delayMs: 5,
    });
    const ctl = setup(svc);
    await ctl.attach("s1");
    await Promise.all([ctl.submitSatisfaction(true), ctl.submitSatisfaction(true)]);
    expect(svc.satisfactionCount).toBe(1);
  });
});

describe("polling", () => {
  it("keeps at most one poll request in flight", async () => {
    const svc = new FakeService({
      snapshots: [snapshot({ status: "running" })],
      delayMs: 20,
    });
    const ctl = setup(svc);
    ctl.attach("s1");
    // second refresh while the first is still in flight must be a no-op
    await Promise.all([ctl.refresh(), ctl.refresh(), ctl.refresh()]);
    expect(svc.calls).toHaveLength(1);
  });

  it("stops polling once the session finishes", async () => {
    vi.useFakeTimers();
    const svc = new FakeService({
      snapshots: [snapshot({ status: "running" }), snapshot({ status: "finished" })],
    });
    const ctl = setup(svc, 1000);
    await ctl.attach("s1");
    ctl.startPolling();
    svc.advance();
    await vi.advanceTimersByTimeAsync(1000);
    expect(ctl.getState().phase).toBe("finished");
    const n = svc.calls.length;
    await vi.advanceTimersByTimeAsync(5000);
    expect(svc.calls.length).toBe(n);
  });

  it("polls on the configured interval", async () => {
    vi.useFakeTimers();
    const svc = new FakeService({ snapshots: [snapshot({ status: "running" })] });
    const ctl = setup(svc, 1000);
    await ctl.attach("s1");
    const before = svc.calls.length;
    ctl.startPolling();
    await vi.advanceTimersByTimeAsync(3000);
    expect(svc.calls.length).toBe(before + 3);
    ctl.stopPolling();
  });

  it("a network error is reported but polling recovers on the next tick", async () => {
    let fail = true;
    const svc = new FakeService({ snapshots: [snapshot({ status: "running" })] });
    const flaky = async (input: string, init?: RequestInit) => {
      if (fail) {
        fail = false;
        throw new TypeError("network down");
      }
      return svc.fetch(input, init);
    };
    const api = new ApiClient("http://svc", flaky);
    const ctl = new SessionController(api, 10);
    await ctl.attach("s1");
    expect(ctl.getState().lastError).toContain("network down");
    await ctl.refresh();
    expect(ctl.getState().lastError).toBeNull();
    expect(ctl.getState().phase).toBe("watching");
  });
});
