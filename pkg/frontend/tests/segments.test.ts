import { describe, expect, it } from "vitest";
import {
  alignChannels,
  gapsMatchEvents,
  predictionGaps,
  predictionSeries,
  valueAt,
  withGapBreaks,
} from "../src/segments";

describe("withGapBreaks", () => {
  it("breaks the line across a 2-hour data hole", () => {
    const channel = { time_s: [0, 300, 600, 7800, 8100], value: [1, 2, 3, 4, 5], n: 5 };
    const { t, v } = withGapBreaks(channel, 450);
    const nullIndex = v.indexOf(null);
    expect(nullIndex).toBeGreaterThan(0);
    expect(t[nullIndex]).toBe((600 + 7800) / 2);
    expect(v.filter((x) => x !== null)).toEqual([1, 2, 3, 4, 5]);
  });

  it("leaves contiguous data untouched", () => {
    const channel = { time_s: [0, 300, 600], value: [1, 2, 3], n: 3 };
    expect(withGapBreaks(channel, 450).v).toEqual([1, 2, 3]);
  });
});

describe("prediction gaps", () => {
  const pred = {
    stay_id: "s",
    time_s: [0, 300, 600, 900, 1200, 1500, 1800],
    score: [0.1, null, null, 0.4, null, 0.2, 0.3] as (number | null)[],
  };

  it("extracts contiguous null intervals", () => {
    expect(predictionGaps(pred)).toEqual([
      [300, 600],
      [1200, 1200],
    ]);
  });

  it("keeps the raw grid verbatim for plotting", () => {
    const { t, v } = predictionSeries(pred);
    expect(t).toEqual(pred.time_s);
    expect(v).toEqual(pred.score);
  });

  it("matches event intervals exactly when gaps cover events", () => {
    const events = [
      { start_s: 300, end_s: 600, type: "resp_failure_mod_sev" },
      { start_s: 1200, end_s: 1200, type: "resp_failure_mod_sev" },
    ];
    expect(gapsMatchEvents(pred, events, 300)).toBe(true);
    const wrong = [{ start_s: 0, end_s: 1800, type: "resp_failure_mod_sev" }];
    expect(gapsMatchEvents(pred, wrong, 300)).toBe(false);
    const missingEvent = [events[0]];
    expect(gapsMatchEvents(pred, missingEvent, 300)).toBe(false);
  });
});

describe("alignChannels", () => {
  it("merges onto a shared ascending time base with nulls for absent samples", () => {
    const aligned = alignChannels([
      { t: [0, 600], v: [1, 3] },
      { t: [300, 600], v: [10, 30] },
    ]);
    expect(aligned[0]).toEqual([0, 300, 600]);
    expect(aligned[1]).toEqual([1, null, 3]);
    expect(aligned[2]).toEqual([null, 10, 30]);
  });
});

describe("valueAt", () => {
  const channel = { time_s: [0, 300, 900], value: [5, 7, 9], n: 3 };
  it("returns the last value at or before the cursor", () => {
    expect(valueAt(channel, 0)).toBe(5);
    expect(valueAt(channel, 450)).toBe(7);
    expect(valueAt(channel, 5000)).toBe(9);
    expect(valueAt(channel, -1)).toBe(null);
  });
});
