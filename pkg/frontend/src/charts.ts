/** uPlot glue: vertically stacked plots with one shared x-range, event and
 * annotation underlays, hover tooltip, and drag-to-annotate selection. */

import uPlot from "uplot";
import { alignChannels, withGapBreaks } from "./segments";
import type { CursorState } from "./sync";
import type { Annotation, EventSpan, PlotConfig, Predictions, SeriesChannel } from "./types";

const PALETTE = [
  "#3a6ea5", "#b0413e", "#4a8c5c", "#8c6db0", "#c98a2b",
  "#3aa0a0", "#a54a7c", "#6b6b6b", "#7a9a2e", "#5464c4",
];

const channelColors = new Map<string, string>();

export function colorFor(channel: string): string {
  if (!channelColors.has(channel)) {
    channelColors.set(channel, PALETTE[channelColors.size % PALETTE.length]);
  }
  return channelColors.get(channel)!;
}

export interface PlotHandle {
  plot: uPlot;
  channels: string[];
  destroy(): void;
}

export interface UnderlayProvider {
  events(): EventSpan[];
  annotations(): Annotation[];
  selectedId(): string | null;
  colorOf(annotation: Annotation): string;
}

interface MakePlotOptions {
  container: HTMLElement;
  title: string;
  config: PlotConfig;
  data: Record<string, SeriesChannel>;
  units: Record<string, string>;
  gapS: number;
  sync: CursorState;
  underlays: UnderlayProvider;
  epochMs: number;
  onDragSelect?: (startS: number, endS: number) => void;
  onClick?: (timeS: number) => void;
  scorePlot?: Predictions | null;
}

function drawSpans(u: uPlot, underlays: UnderlayProvider): void {
  const ctx = u.ctx;
  const { top, height } = u.bbox;
  ctx.save();
  for (const event of underlays.events()) {
    const x0 = u.valToPos(event.start_s, "x", true);
    const x1 = u.valToPos(event.end_s, "x", true);
    ctx.fillStyle = "rgba(120, 200, 140, 0.25)";
    ctx.fillRect(x0, top, Math.max(x1 - x0, 2), height);
  }
  for (const annotation of underlays.annotations()) {
    const x0 = u.valToPos(annotation.start_s, "x", true);
    const x1 = u.valToPos(annotation.end_s, "x", true);
    const selected = annotation.annotation_id === underlays.selectedId();
    ctx.fillStyle = hexToRgba(underlays.colorOf(annotation), selected ? 0.45 : 0.2);
    ctx.fillRect(x0, top, Math.max(x1 - x0, 3), height);
    if (selected) {
      ctx.strokeStyle = underlays.colorOf(annotation);
      ctx.lineWidth = 2;
      ctx.strokeRect(x0, top + 1, Math.max(x1 - x0, 3), height - 2);
    }
  }
  ctx.restore();
}

function hexToRgba(hex: string, alpha: number): string {
  const m = /^#?([0-9a-f]{6})$/i.exec(hex);
  if (!m) return `rgba(128,128,128,${alpha})`;
  const n = parseInt(m[1], 16);
  return `rgba(${(n >> 16) & 255},${(n >> 8) & 255},${n & 255},${alpha})`;
}

export function makePlot(opts: MakePlotOptions): PlotHandle {
  const channels = opts.scorePlot ? ["score"] : opts.config.channels;
  const seriesData = opts.scorePlot
    ? [{ t: [...opts.scorePlot.time_s], v: [...opts.scorePlot.score] }]
    : channels.map((c) => withGapBreaks(opts.data[c] ?? { time_s: [], value: [], n: 0 }, opts.gapS));
  const aligned = alignChannels(seriesData);

  const series: uPlot.Series[] = [
    {},
    ...channels.map((channel, i) => ({
      label: channel,
      stroke: opts.scorePlot ? "#20415f" : colorFor(channel),
      width: 1.4,
      scale: opts.scorePlot ? "y0" : `y${opts.config.yAxes[channel] ?? 0}`,
      spanGaps: false,
      points: { show: false },
    })),
  ];
  const axes: uPlot.Axis[] = [
    {
      stroke: "#666",
      grid: { stroke: "#e8e8e8" },
      values: (_u, ticks) => ticks.map((t) => formatTime(t, opts.epochMs)),
    },
    { scale: "y0", stroke: "#666", size: 52, grid: { stroke: "#f0f0f0" } },
  ];
  const usesSecondAxis = !opts.scorePlot && Object.values(opts.config.yAxes).some((v) => v === 1);
  if (usesSecondAxis) {
    axes.push({ scale: "y1", side: 1, stroke: "#666", size: 52, grid: { show: false } });
  }

  let dragStart: number | null = null;
  let downPx: number | null = null;
  const plot = new uPlot(
    {
      width: opts.container.clientWidth || 800,
      height: opts.config.height,
      title: opts.title,
      cursor: {
        drag: { x: false, y: false },
        bind: {
          mousedown: (u, _target, handler) => (event: MouseEvent) => {
            downPx = event.offsetX;
            if (event.shiftKey && opts.onDragSelect) {
              dragStart = u.posToVal(event.offsetX, "x");
              return null;
            }
            return handler(event);
          },
          mouseup: (u, _target, handler) => (event: MouseEvent) => {
            if (dragStart !== null && opts.onDragSelect) {
              const end = u.posToVal(event.offsetX, "x");
              const a = Math.round(Math.min(dragStart, end));
              const b = Math.round(Math.max(dragStart, end));
              dragStart = null;
              opts.onDragSelect(a, b);
              return null;
            }
            // plain click (no drag): selection cycling over overlaps
            if (opts.onClick && downPx !== null && Math.abs(event.offsetX - downPx) < 4) {
              opts.onClick(Math.round(u.posToVal(event.offsetX, "x")));
            }
            downPx = null;
            return handler(event);
          },
        },
      },
      scales: {
        x: { time: false, range: () => [opts.sync.getRange().min, opts.sync.getRange().max] },
        y0: { range: rangeWithOverride(opts.config.yRange) },
        y1: {},
      },
      series,
      axes,
      hooks: {
        drawClear: [(u) => drawSpans(u, opts.underlays)],
        setCursor: [
          (u) => {
            if (u.cursor.idx != null && u.cursor.left != null && u.cursor.left >= 0) {
              const t = u.posToVal(u.cursor.left, "x");
              opts.sync.setCursor(Math.round(t), "plot");
            }
          },
        ],
      },
    },
    aligned as uPlot.AlignedData,
    opts.container,
  );

  const unsubscribe = opts.sync.onRange(() => plot.redraw());

  // wheel zoom and drag-free pan via arrow container handled globally
  opts.container.addEventListener("wheel", (event) => {
    event.preventDefault();
    const rect = (event.currentTarget as HTMLElement).getBoundingClientRect();
    const centerS = plot.posToVal(event.clientX - rect.left, "x");
    opts.sync.zoom(event.deltaY > 0 ? 1.25 : 0.8, centerS, "wheel");
  });

  return {
    plot,
    channels,
    destroy() {
      unsubscribe();
      plot.destroy();
    },
  };
}

function rangeWithOverride(override?: [number | null, number | null]): uPlot.Scale.Range {
  return (_u, min, max) => {
    let lo = min ?? 0;
    let hi = max ?? 1;
    if (override) {
      if (override[0] !== null && override[0] !== undefined) lo = override[0];
      if (override[1] !== null && override[1] !== undefined) hi = override[1];
    }
    if (!(hi > lo)) hi = lo + 1;
    const pad = (hi - lo) * 0.05;
    return [lo - pad, hi + pad];
  };
}

export function formatTime(timeS: number, epochMs: number): string {
  const date = new Date(epochMs + timeS * 1000);
  const hh = String(date.getUTCHours()).padStart(2, "0");
  const mm = String(date.getUTCMinutes()).padStart(2, "0");
  const day = `${date.getUTCMonth() + 1}/${date.getUTCDate()}`;
  return `${day} ${hh}:${mm}`;
}
