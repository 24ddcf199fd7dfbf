/** Annotation workspace state: filtering, sorting, selection with
 * deterministic cycling over overlaps, and chronological keyboard
 * navigation that skips filtered-out types. */

import type { Annotation } from "./types";

export type SortKey = "start_s" | "type" | "updated_at" | "label";

export class AnnotationWorkspace {
  private annotations: Annotation[] = [];
  private hiddenTypes = new Set<string>();
  private selectedId: string | null = null;
  sortKey: SortKey = "start_s";
  sortAscending = true;

  setAll(annotations: Annotation[]): void {
    this.annotations = [...annotations];
    if (this.selectedId && !this.annotations.some((a) => a.annotation_id === this.selectedId)) {
      this.selectedId = null;
    }
  }

  get selected(): Annotation | null {
    return this.annotations.find((a) => a.annotation_id === this.selectedId) ?? null;
  }

  select(annotationId: string | null): void {
    this.selectedId = annotationId;
  }

  toggleType(type: string, visible: boolean): void {
    if (visible) this.hiddenTypes.delete(type);
    else this.hiddenTypes.add(type);
    if (this.selected && this.hiddenTypes.has(this.selected.type)) this.selectedId = null;
  }

  isTypeVisible(type: string): boolean {
    return !this.hiddenTypes.has(type);
  }

  /** Filtered and sorted rows for the table and the overlays. */
  visible(): Annotation[] {
    const rows = this.annotations.filter((a) => !this.hiddenTypes.has(a.type));
    const direction = this.sortAscending ? 1 : -1;
    const key = this.sortKey;
    rows.sort((a, b) => {
      const va = a[key] as string | number;
      const vb = b[key] as string | number;
      if (va < vb) return -direction;
      if (va > vb) return direction;
      return a.annotation_id < b.annotation_id ? -direction : direction;
    });
    return rows;
  }

  /** Annotations covering timeS, in stable chronological order. */
  at(timeS: number): Annotation[] {
    return this.visible()
      .filter((a) => a.start_s <= timeS && timeS <= a.end_s)
      .sort((a, b) => a.start_s - b.start_s || a.annotation_id.localeCompare(b.annotation_id));
  }

  /** Repeated clicks at the same spot cycle deterministically through
   * overlapping annotations. */
  cycleAt(timeS: number): Annotation | null {
    const hits = this.at(timeS);
    if (!hits.length) {
      this.selectedId = null;
      return null;
    }
    const current = hits.findIndex((a) => a.annotation_id === this.selectedId);
    const next = hits[(current + 1) % hits.length];
    this.selectedId = next.annotation_id;
    return next;
  }

  /** Arrow-key navigation in start-time order over visible annotations. */
  step(direction: 1 | -1): Annotation | null {
    const rows = [...this.visible()].sort(
      (a, b) => a.start_s - b.start_s || a.annotation_id.localeCompare(b.annotation_id),
    );
    if (!rows.length) return null;
    const index = rows.findIndex((a) => a.annotation_id === this.selectedId);
    const next =
      index < 0
        ? direction === 1
          ? rows[0]
          : rows[rows.length - 1]
        : rows[(index + direction + rows.length) % rows.length];
    this.selectedId = next.annotation_id;
    return next;
  }
}
