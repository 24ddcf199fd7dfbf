/** Series shaping for the plots: missing points are never rendered, so a
 * series is broken into line segments wherever data is absent. */

import type { EventSpan, Predictions, SeriesChannel } from "./types";

/** Insert nulls where consecutive points are further apart than gapS, so the
 * chart breaks the line instead of bridging missing data. */
export function withGapBreaks(
  channel: SeriesChannel,
  gapS: number,
): { t: number[]; v: (number | null)[] } {
  const t: number[] = [];
  const v: (number | null)[] = [];
  for (let i = 0; i < channel.time_s.length; i++) {
    if (i > 0 && channel.time_s[i] - channel.time_s[i - 1] > gapS) {
      t.push((channel.time_s[i - 1] + channel.time_s[i]) / 2);
      v.push(null);
    }
    t.push(channel.time_s[i]);
    v.push(channel.value[i]);
  }
  return { t, v };
}

/** Prediction series keeps its grid verbatim: null scores are the gaps. */
export function predictionSeries(pred: Predictions): { t: number[]; v: (number | null)[] } {
  return { t: [...pred.time_s], v: [...pred.score] };
}

/** Contiguous no-score intervals of a prediction series, [start_s, end_s]. */
export function predictionGaps(pred: Predictions): Array<[number, number]> {
  const gaps: Array<[number, number]> = [];
  let start: number | null = null;
  for (let i = 0; i < pred.time_s.length; i++) {
    if (pred.score[i] === null) {
      if (start === null) start = pred.time_s[i];
    } else if (start !== null) {
      gaps.push([start, pred.time_s[i - 1]]);
      start = null;
    }
  }
  if (start !== null) gaps.push([start, pred.time_s[pred.time_s.length - 1]]);
  return gaps;
}

/** True iff every prediction gap lies inside some event interval and every
 * event interval is fully gap-covered (up to one grid step of slack). */
export function gapsMatchEvents(
  pred: Predictions,
  events: EventSpan[],
  gridStep: number,
): boolean {
  const gaps = predictionGaps(pred);
  for (const [gapStart, gapEnd] of gaps) {
    const covered = events.some((e) => e.start_s - gridStep <= gapStart && gapEnd <= e.end_s + gridStep);
    if (!covered) return false;
  }
  for (const event of events) {
    const covering = gaps.some(([a, b]) => a - gridStep <= event.start_s && event.end_s <= b + gridStep);
    if (!covering) return false;
  }
  return true;
}

/** Merge several channels onto one shared ascending time base (uPlot's
 * aligned-data format); missing samples become nulls. */
export function alignChannels(
  channels: Array<{ t: number[]; v: (number | null)[] }>,
): [number[], ...(number | null)[][]] {
  const timeSet = new Set<number>();
  for (const c of channels) for (const t of c.t) timeSet.add(t);
  const times = [...timeSet].sort((a, b) => a - b);
  const index = new Map(times.map((t, i) => [t, i]));
  const out: (number | null)[][] = channels.map(() => new Array(times.length).fill(null));
  channels.forEach((c, k) => {
    for (let i = 0; i < c.t.length; i++) out[k][index.get(c.t[i])!] = c.v[i];
  });
  return [times, ...out];
}

/** Nearest defined value at or before timeS, for cursor readouts. */
export function valueAt(channel: SeriesChannel, timeS: number): number | null {
  let best: number | null = null;
  for (let i = 0; i < channel.time_s.length && channel.time_s[i] <= timeS; i++) {
    best = channel.value[i];
  }
  return best;
}
