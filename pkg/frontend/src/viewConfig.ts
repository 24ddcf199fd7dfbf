/** View configuration: channel-to-plot and plot-to-tab assignment, live
 * reconfiguration, and localStorage persistence per cohort. */

import type { PlotConfig, TabConfig, ViewConfig } from "./types";

const PREFERRED_LAYOUT: string[][] = [
  ["spo2", "sao2"],
  ["pao2"],
  ["fio2", "supplemental_oxygen"],
  ["respiratory_rate"],
  ["peep", "peak_pressure"],
];

export function defaultViewConfig(available: string[]): ViewConfig {
  const used = new Set<string>();
  const plots: PlotConfig[] = [];
  for (const group of PREFERRED_LAYOUT) {
    const channels = group.filter((c) => available.includes(c));
    channels.forEach((c) => used.add(c));
    if (channels.length) {
      plots.push({ channels, height: 120, yAxes: yAxesFor(channels) });
    }
  }
  const rest = available.filter((c) => !used.has(c));
  const overflow: TabConfig = {
    name: "More",
    plots: rest.map((c) => ({ channels: [c], height: 90, yAxes: { [c]: 0 as const } })),
  };
  const tabs: TabConfig[] = [{ name: "Respiratory", plots }];
  if (overflow.plots.length) tabs.push(overflow);
  return { tabs };
}

function yAxesFor(channels: string[]): Record<string, 0 | 1> {
  const axes: Record<string, 0 | 1> = {};
  channels.forEach((c, i) => {
    axes[c] = i === 0 ? 0 : 1; // at most two y-axes per plot
  });
  return axes;
}

export function validateViewConfig(config: ViewConfig): string[] {
  const problems: string[] = [];
  const seen = new Set<string>();
  for (const tab of config.tabs) {
    for (const plot of tab.plots) {
      const axes = new Set(Object.values(plot.yAxes));
      if (axes.size > 2) problems.push(`plot in ${tab.name} uses more than 2 y-axes`);
      for (const channel of plot.channels) {
        if (seen.has(channel)) problems.push(`channel ${channel} assigned to more than one plot`);
        seen.add(channel);
      }
    }
  }
  return problems;
}

/** Move a channel to another plot without reloading; drops empty plots. */
export function moveChannel(
  config: ViewConfig,
  channel: string,
  toTab: number,
  toPlot: number,
): ViewConfig {
  const next: ViewConfig = JSON.parse(JSON.stringify(config));
  for (const tab of next.tabs) {
    for (const plot of tab.plots) {
      const i = plot.channels.indexOf(channel);
      if (i >= 0) {
        plot.channels.splice(i, 1);
        delete plot.yAxes[channel];
      }
    }
    tab.plots = tab.plots.filter((p) => p.channels.length > 0);
  }
  while (next.tabs.length <= toTab) next.tabs.push({ name: `Tab ${next.tabs.length + 1}`, plots: [] });
  const tab = next.tabs[toTab];
  while (tab.plots.length <= toPlot) tab.plots.push({ channels: [], height: 100, yAxes: {} });
  const target = tab.plots[toPlot];
  target.channels.push(channel);
  const sides = new Set(Object.values(target.yAxes));
  target.yAxes[channel] = sides.has(0) ? 1 : 0;
  return next;
}

interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
}

export function storageKey(cohortId: string): string {
  return `respews-view:${cohortId}`;
}

export function loadViewConfig(
  cohortId: string,
  available: string[],
  storage: StorageLike,
): ViewConfig {
  const raw = storage.getItem(storageKey(cohortId));
  if (raw) {
    try {
      const parsed = JSON.parse(raw) as ViewConfig;
      if (validateViewConfig(parsed).length === 0) return parsed;
    } catch {
      /* corrupted entry: fall through to the default */
    }
  }
  return defaultViewConfig(available);
}

export function saveViewConfig(cohortId: string, config: ViewConfig, storage: StorageLike): void {
  storage.setItem(storageKey(cohortId), JSON.stringify(config));
}
