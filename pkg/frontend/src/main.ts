/** ICU monitor application: patient table, synchronized plots with the
 * prediction score on top, and interactive annotation. */

import "uplot/dist/uPlot.min.css";
import { ApiClient, ApiError } from "./api";
import { AnnotationWorkspace } from "./annotations";
import { colorFor, formatTime, makePlot, PlotHandle } from "./charts";
import { coerceField, fieldSpecs, validateMetadata } from "./schemaForm";
import { gapsMatchEvents, valueAt } from "./segments";
import { bridgeAcrossWindows, CursorState } from "./sync";
import type {
  Annotation,
  AnnotationTypeDef,
  EventSpan,
  PatientSummary,
  Predictions,
  SeriesChannel,
  ViewConfig,
} from "./types";
import { defaultViewConfig, loadViewConfig, moveChannel, saveViewConfig } from "./viewConfig";

const api = new ApiClient("");
const sync = new CursorState();
const workspace = new AnnotationWorkspace();

interface AppState {
  patients: PatientSummary[];
  stayId: string | null;
  gridStep: number;
  epochMs: number;
  channels: Record<string, SeriesChannel>;
  units: Record<string, string>;
  predictions: Predictions | null;
  events: EventSpan[];
  annotationTypes: AnnotationTypeDef[];
  viewConfig: ViewConfig | null;
  activeTab: number;
  plots: PlotHandle[];
  patientSort: { key: keyof PatientSummary; ascending: boolean };
}

const state: AppState = {
  patients: [],
  stayId: null,
  gridStep: 300,
  epochMs: Date.UTC(2024, 0, 1),
  channels: {},
  units: {},
  predictions: null,
  events: [],
  annotationTypes: [],
  viewConfig: null,
  activeTab: 0,
  plots: [],
  patientSort: { key: "stay_id", ascending: true },
};

const $ = <T extends HTMLElement>(id: string) => document.getElementById(id) as T;

function banner(message: string, isError = true): void {
  const el = $("banner");
  el.textContent = message;
  el.className = isError ? "banner error" : "banner info";
  el.style.display = message ? "block" : "none";
  if (message && !isError) setTimeout(() => (el.style.display = "none"), 4000);
}

// ---- patient table ---------------------------------------------------------

function renderPatientTable(): void {
  const tbody = $("patient-rows");
  const { key, ascending } = state.patientSort;
  const rows = [...state.patients].sort((a, b) => {
    const va = a[key] as string | number;
    const vb = b[key] as string | number;
    return (va < vb ? -1 : va > vb ? 1 : 0) * (ascending ? 1 : -1);
  });
  tbody.innerHTML = "";
  for (const p of rows) {
    const tr = document.createElement("tr");
    tr.innerHTML =
      `<td>${p.stay_id}</td><td>${(p.length_s / 3600).toFixed(1)} h</td>` +
      `<td>${p.n_events}</td><td>${p.has_predictions ? "yes" : "no"}</td>`;
    tr.className = p.stay_id === state.stayId ? "selected" : "";
    tr.onclick = () => loadPatient(p.stay_id);
    tbody.appendChild(tr);
  }
}

function wirePatientTableSorting(): void {
  document.querySelectorAll<HTMLElement>("#patient-table th[data-key]").forEach((th) => {
    th.onclick = () => {
      const key = th.dataset.key as keyof PatientSummary;
      const sort = state.patientSort;
      sort.ascending = sort.key === key ? !sort.ascending : true;
      sort.key = key;
      renderPatientTable();
    };
  });
  const input = $<HTMLInputElement>("patient-id-input");
  input.onkeydown = (event) => {
    if (event.key === "Enter") {
      const sid = input.value.trim();
      if (state.patients.some((p) => p.stay_id === sid)) {
        loadPatient(sid);
        banner("");
      } else {
        banner(`unknown patient ID ${sid}`);
      }
    }
  };
}

// ---- patient loading ---------------------------------------------------------

async function loadPatient(stayId: string): Promise<void> {
  try {
    const detail = await api.patient(stayId);
    state.stayId = stayId;
    state.gridStep = detail.grid_step;
    state.epochMs = Date.parse(detail.admitted_at);
    const channelNames = (detail.channels as { channel: string; last_s: number }[]).map(
      (c) => c.channel,
    );
    state.viewConfig = loadViewConfig(cohortId(), channelNames, window.localStorage);
    const wanted = state.viewConfig.tabs.flatMap((t) => t.plots.flatMap((p) => p.channels));
    const series = await api.series(stayId, [...new Set(wanted)], { maxPoints: 50000 });
    state.channels = series.channels;
    state.events = await api.events(stayId);
    state.predictions = null;
    if (detail.has_predictions) {
      state.predictions = await api.predictions(stayId);
      if (!gapsMatchEvents(state.predictions, state.events, state.gridStep)) {
        banner("prediction gaps do not line up with event intervals", true);
      }
    }
    sync.setRange({ min: 0, max: detail.length_s || 3600 }, "load");
    await refreshAnnotations();
    $("patient-title").textContent =
      `${stayId} — admitted ${detail.admitted_at.slice(0, 16)} — ` +
      `age ${detail.statics.age ?? "?"}, weight ${detail.statics.weight ?? "?"} kg`;
    renderInfoPane(channelNames);
    renderTabs();
    renderPlots();
    renderPatientTable();
  } catch (error) {
    banner(`failed to load ${stayId}: ${describe(error)}`);
  }
}

function cohortId(): string {
  return `cohort-${state.patients.length}`;
}

function describe(error: unknown): string {
  if (error instanceof ApiError) return `HTTP ${error.status} ${JSON.stringify(error.detail)}`;
  return String(error);
}

function handlePlotClick(timeS: number): void {
  const hit = workspace.cycleAt(timeS);
  sync.setCursor(timeS, "click");
  renderAnnotationTable();
  redrawAll();
  if (hit) openAnnotationEditor(hit);
}

function renderInfoPane(channels: string[]): void {
  const host = $("channel-list");
  host.innerHTML = "";
  for (const c of channels) {
    const chip = document.createElement("span");
    chip.className = "chip";
    chip.style.borderColor = colorFor(c);
    chip.textContent = c;
    chip.title = "click to move this channel to the next plot (live, no reload)";
    chip.onclick = () => cycleChannelPlot(c);
    host.appendChild(chip);
  }
}

/** Live reconfiguration: move a channel to the following plot of the active
 * tab (wrapping to a fresh plot at the end), with no page reload. */
function cycleChannelPlot(channel: string): void {
  if (!state.viewConfig) return;
  const tab = state.viewConfig.tabs[state.activeTab];
  const current = tab ? tab.plots.findIndex((p) => p.channels.includes(channel)) : -1;
  const target = current < 0 ? 0 : Math.min(current + 1, tab.plots.length);
  state.viewConfig = moveChannel(state.viewConfig, channel, state.activeTab, target);
  saveViewConfig(cohortId(), state.viewConfig, window.localStorage);
  void reloadSeriesForView();
}

async function reloadSeriesForView(): Promise<void> {
  if (!state.stayId || !state.viewConfig) return;
  const wanted = state.viewConfig.tabs.flatMap((t) => t.plots.flatMap((p) => p.channels));
  const series = await api.series(state.stayId, [...new Set(wanted)], { maxPoints: 50000 });
  state.channels = series.channels;
  renderTabs();
  renderPlots();
}

// ---- tabs and plots ------------------------------------------------------------

function renderTabs(): void {
  const bar = $("tab-bar");
  bar.innerHTML = "";
  state.viewConfig?.tabs.forEach((tab, i) => {
    const button = document.createElement("button");
    button.textContent = tab.name;
    button.className = i === state.activeTab ? "tab active" : "tab";
    button.onclick = () => {
      state.activeTab = i;
      renderTabs();
      renderPlots();
    };
    bar.appendChild(button);
  });
  const popout = document.createElement("button");
  popout.textContent = "popout ⧉";
  popout.className = "tab popout";
  popout.title = "open this tab in a second window sharing zoom and cursor";
  popout.onclick = () => {
    window.open(`${location.pathname}?stay=${state.stayId}&tab=${state.activeTab}`, "_blank");
  };
  bar.appendChild(popout);
}

function underlayProvider() {
  return {
    events: () => state.events,
    annotations: () => workspace.visible().filter((a) => a.stay_id === state.stayId),
    selectedId: () => workspace.selected?.annotation_id ?? null,
    colorOf: (a: Annotation) =>
      a.color ??
      state.annotationTypes.find((t) => t.type === a.type)?.default_color ??
      "#999999",
  };
}

function renderPlots(): void {
  state.plots.forEach((p) => p.destroy());
  state.plots = [];
  const host = $("plots");
  host.innerHTML = "";
  if (!state.viewConfig) return;

  if (state.predictions) {
    const div = document.createElement("div");
    div.className = "plot";
    host.appendChild(div);
    state.plots.push(
      makePlot({
        container: div,
        title: "prediction score",
        config: { channels: ["score"], height: 110, yAxes: { score: 0 }, yRange: [0, 1] },
        data: {},
        units: {},
        gapS: state.gridStep * 1.5,
        sync,
        underlays: underlayProvider(),
        epochMs: state.epochMs,
        scorePlot: state.predictions,
        onDragSelect: startAnnotationDraft,
        onClick: handlePlotClick,
      }),
    );
  }
  const tab = state.viewConfig.tabs[state.activeTab];
  if (!tab) return;
  for (const plotConfig of tab.plots) {
    const div = document.createElement("div");
    div.className = "plot";
    host.appendChild(div);
    state.plots.push(
      makePlot({
        container: div,
        title: plotConfig.channels.join(", "),
        config: plotConfig,
        data: state.channels,
        units: state.units,
        gapS: state.gridStep * 1.5,
        sync,
        underlays: underlayProvider(),
        epochMs: state.epochMs,
        onDragSelect: startAnnotationDraft,
        onClick: handlePlotClick,
      }),
    );
  }
}

// ---- cursor readout ---------------------------------------------------------------

function renderReadout(timeS: number | null): void {
  const box = $("readout");
  if (timeS === null || !state.stayId) {
    box.textContent = "";
    return;
  }
  const parts = [`t = ${formatTime(timeS, state.epochMs)}`];
  for (const [name, channel] of Object.entries(state.channels)) {
    const value = valueAt(channel, timeS);
    if (value !== null) {
      parts.push(
        `<span style="color:${colorFor(name)}">${name}</span> ${Number(value).toFixed(2)}`,
      );
    }
  }
  box.innerHTML = parts.join(" · ");
}

// ---- annotations ---------------------------------------------------------------------

async function refreshAnnotations(): Promise<void> {
  if (!state.stayId) return;
  workspace.setAll(await api.listAnnotations(state.stayId));
  renderAnnotationTable();
  redrawAll();
}

function redrawAll(): void {
  state.plots.forEach((p) => p.plot.redraw());
}

function renderAnnotationTable(): void {
  const tbody = $("annotation-rows");
  tbody.innerHTML = "";
  for (const a of workspace.visible()) {
    const tr = document.createElement("tr");
    tr.className = a.annotation_id === workspace.selected?.annotation_id ? "selected" : "";
    tr.innerHTML =
      `<td>${a.type}</td><td>${(a.start_s / 3600).toFixed(2)}h</td>` +
      `<td>${(a.end_s / 3600).toFixed(2)}h</td><td>${a.label}</td>`;
    tr.onclick = () => {
      workspace.select(a.annotation_id);
      sync.reveal(a.start_s, a.end_s, "annotation-row");
      renderAnnotationTable();
      openAnnotationEditor(a);
      redrawAll();
    };
    tbody.appendChild(tr);
  }
  const filter = $("type-filter");
  filter.innerHTML = state.annotationTypes
    .map(
      (t) =>
        `<label><input type="checkbox" data-type="${t.type}" ` +
        `${workspace.isTypeVisible(t.type) ? "checked" : ""}/> ` +
        `<span style="color:${t.default_color}">${t.type}</span></label>`,
    )
    .join(" ");
  filter.querySelectorAll<HTMLInputElement>("input[data-type]").forEach((input) => {
    input.onchange = () => {
      workspace.toggleType(input.dataset.type!, input.checked);
      renderAnnotationTable();
      redrawAll();
    };
  });
}

interface Draft {
  annotationId?: string;
  version?: number;
  startS: number;
  endS: number;
}

let draft: Draft | null = null;

function startAnnotationDraft(startS: number, endS: number): void {
  draft = { startS, endS: Math.max(endS, startS) };
  openAnnotationForm("create annotation", null);
}

function openAnnotationEditor(annotation: Annotation): void {
  draft = {
    annotationId: annotation.annotation_id,
    version: annotation.version,
    startS: annotation.start_s,
    endS: annotation.end_s,
  };
  openAnnotationForm(`edit ${annotation.annotation_id}`, annotation);
}

function openAnnotationForm(title: string, existing: Annotation | null): void {
  const panel = $("annotation-form");
  panel.style.display = "block";
  $("form-title").textContent = title;
  const typeSelect = $<HTMLSelectElement>("form-type");
  typeSelect.innerHTML = state.annotationTypes
    .map((t) => `<option value="${t.type}">${t.type}</option>`)
    .join("");
  if (existing) typeSelect.value = existing.type;
  $<HTMLInputElement>("form-label").value = existing?.label ?? "";
  $<HTMLInputElement>("form-start").value = String(draft?.startS ?? 0);
  $<HTMLInputElement>("form-end").value = String(draft?.endS ?? 0);
  renderMetadataFields(existing?.metadata ?? {});
  typeSelect.onchange = () => renderMetadataFields({});
  $("form-errors").textContent = "";
  $<HTMLButtonElement>("form-delete").style.display = existing ? "inline-block" : "none";
}

function renderMetadataFields(values: Record<string, unknown>): void {
  const type = $<HTMLSelectElement>("form-type").value;
  const def = state.annotationTypes.find((t) => t.type === type);
  const host = $("form-metadata");
  host.innerHTML = "";
  if (!def) return;
  for (const spec of fieldSpecs(def.schema)) {
    const row = document.createElement("div");
    row.className = "field";
    const label = `${spec.name}${spec.required ? " *" : ""}`;
    if (spec.kind === "enum") {
      row.innerHTML =
        `<label>${label}</label><select data-field="${spec.name}">` +
        `<option value=""></option>` +
        spec.options!.map((o) => `<option value="${o}">${o}</option>`).join("") +
        `</select>`;
    } else if (spec.kind === "boolean") {
      row.innerHTML = `<label>${label}</label><input type="checkbox" data-field="${spec.name}"/>`;
    } else {
      row.innerHTML = `<label>${label}</label><input type="text" data-field="${spec.name}"/>`;
    }
    host.appendChild(row);
    const input = row.querySelector<HTMLInputElement | HTMLSelectElement>("[data-field]")!;
    const value = values[spec.name];
    if (value !== undefined && input instanceof HTMLInputElement && input.type === "checkbox") {
      input.checked = Boolean(value);
    } else if (value !== undefined) {
      (input as HTMLInputElement).value = String(value);
    }
  }
}

function collectMetadata(): Record<string, unknown> {
  const type = $<HTMLSelectElement>("form-type").value;
  const def = state.annotationTypes.find((t) => t.type === type);
  const metadata: Record<string, unknown> = {};
  if (!def) return metadata;
  for (const spec of fieldSpecs(def.schema)) {
    const input = document.querySelector<HTMLInputElement | HTMLSelectElement>(
      `#form-metadata [data-field="${spec.name}"]`,
    );
    if (!input) continue;
    const raw =
      input instanceof HTMLInputElement && input.type === "checkbox" ? input.checked : input.value;
    const value = coerceField(spec, raw);
    if (value !== undefined) metadata[spec.name] = value;
  }
  return metadata;
}

async function submitAnnotationForm(): Promise<void> {
  if (!state.stayId || !draft) return;
  const type = $<HTMLSelectElement>("form-type").value;
  const def = state.annotationTypes.find((t) => t.type === type);
  const metadata = collectMetadata();
  const startS = Number($<HTMLInputElement>("form-start").value);
  const endS = Number($<HTMLInputElement>("form-end").value);
  const errors = def ? validateMetadata(def.schema, metadata) : [];
  if (endS < startS) errors.push({ field: "end_s", message: "end must not precede start" });
  if (errors.length) {
    $("form-errors").innerHTML = errors.map((e) => `${e.field}: ${e.message}`).join("<br/>");
    return; // schema-invalid metadata never produces a request
  }
  const payload = {
    type,
    start_s: Math.round(startS),
    end_s: Math.round(endS),
    label: $<HTMLInputElement>("form-label").value,
    metadata,
  };
  try {
    if (draft.annotationId) {
      await api.updateAnnotation(draft.annotationId, { ...payload, version: draft.version! });
    } else {
      await api.createAnnotation(state.stayId, payload);
    }
    closeAnnotationForm();
    await refreshAnnotations();
    banner("annotation saved", false);
  } catch (error) {
    $("form-errors").textContent = describe(error);
  }
}

function closeAnnotationForm(): void {
  $("annotation-form").style.display = "none";
  draft = null;
}

async function deleteSelectedAnnotation(): Promise<void> {
  const target = draft?.annotationId ?? workspace.selected?.annotation_id;
  if (!target) return;
  try {
    await api.deleteAnnotation(target);
    closeAnnotationForm();
    await refreshAnnotations();
    banner("annotation deleted", false);
  } catch (error) {
    banner(describe(error));
  }
}

// ---- keyboard shortcuts ---------------------------------------------------------------

function wireKeyboard(): void {
  document.addEventListener("keydown", (event) => {
    const inForm = (event.target as HTMLElement).tagName.match(/INPUT|SELECT|TEXTAREA/);
    if (inForm) return;
    const width = sync.getRange().max - sync.getRange().min;
    if (event.key === "ArrowLeft" && !event.altKey) {
      const annotation = workspace.step(-1);
      if (annotation) {
        sync.reveal(annotation.start_s, annotation.end_s, "kbd");
        renderAnnotationTable();
        redrawAll();
      }
    } else if (event.key === "ArrowRight" && !event.altKey) {
      const annotation = workspace.step(1);
      if (annotation) {
        sync.reveal(annotation.start_s, annotation.end_s, "kbd");
        renderAnnotationTable();
        redrawAll();
      }
    } else if (event.key === "a" && event.altKey) {
      sync.pan(-width / 4, "kbd");
    } else if (event.key === "d" && event.altKey) {
      sync.pan(width / 4, "kbd");
    } else if (event.key === "w" && event.altKey) {
      sync.zoom(0.7, undefined, "kbd");
    } else if (event.key === "s" && event.altKey) {
      sync.zoom(1.4, undefined, "kbd");
    } else if (event.key === "Delete" && workspace.selected) {
      void deleteSelectedAnnotation();
    } else if (event.key === "Enter" && workspace.selected) {
      openAnnotationEditor(workspace.selected);
    } else if (event.key === "Escape") {
      closeAnnotationForm();
    }
  });
}

// ---- bootstrap --------------------------------------------------------------------------

async function start(): Promise<void> {
  wirePatientTableSorting();
  wireKeyboard();
  sync.onCursor((timeS) => renderReadout(timeS));
  bridgeAcrossWindows(sync, new BroadcastChannel("respews-cursor"), Math.random().toString(36));
  $("form-submit").onclick = () => void submitAnnotationForm();
  $("form-cancel").onclick = closeAnnotationForm;
  $("form-delete").onclick = () => void deleteSelectedAnnotation();
  $("export-link").onclick = () => window.open("/api/export/annotations", "_blank");

  try {
    state.patients = await api.listPatients();
    state.annotationTypes = await api.annotationTypes();
    renderPatientTable();
    const params = new URLSearchParams(location.search);
    const requested = params.get("stay");
    if (requested) {
      state.activeTab = Number(params.get("tab") ?? 0);
      await loadPatient(requested);
    } else if (state.patients.length) {
      await loadPatient(state.patients[0].stay_id);
    }
  } catch (error) {
    banner(`service unreachable: ${describe(error)} — retrying in 3 s`);
    setTimeout(() => void start(), 3000);
  }
}

void start();
