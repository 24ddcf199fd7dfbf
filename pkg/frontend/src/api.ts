import type {
  Annotation,
  AnnotationTypeDef,
  EventSpan,
  PatientDetail,
  PatientSummary,
  Predictions,
  SeriesResponse,
} from "./types";

export class ApiError extends Error {
  constructor(public status: number, public detail: unknown) {
    super(`API error ${status}`);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private base: string = "",
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.base + path, init);
    if (!response.ok) {
      let detail: unknown = null;
      try {
        detail = (await response.json()).detail;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(response.status, detail);
    }
    if (response.status === 204) return undefined as T;
    return (await response.json()) as T;
  }

  listPatients(): Promise<PatientSummary[]> {
    return this.request("/api/patients");
  }

  patient(stayId: string): Promise<PatientDetail> {
    return this.request(`/api/patients/${encodeURIComponent(stayId)}`);
  }

  series(
    stayId: string,
    channels: string[],
    opts: { fromS?: number; toS?: number; maxPoints?: number; mode?: "grid" | "raw" } = {},
  ): Promise<SeriesResponse> {
    const params = new URLSearchParams({ channels: channels.join(",") });
    if (opts.fromS !== undefined) params.set("from_s", String(opts.fromS));
    if (opts.toS !== undefined) params.set("to_s", String(opts.toS));
    if (opts.maxPoints !== undefined) params.set("max_points", String(opts.maxPoints));
    if (opts.mode) params.set("mode", opts.mode);
    return this.request(`/api/patients/${encodeURIComponent(stayId)}/series?${params}`);
  }

  predictions(stayId: string): Promise<Predictions> {
    return this.request(`/api/patients/${encodeURIComponent(stayId)}/predictions`);
  }

  events(stayId: string): Promise<EventSpan[]> {
    return this.request(`/api/patients/${encodeURIComponent(stayId)}/events`);
  }

  annotationTypes(): Promise<AnnotationTypeDef[]> {
    return this.request("/api/annotation-types");
  }

  listAnnotations(stayId: string, type?: string): Promise<Annotation[]> {
    const params = new URLSearchParams();
    if (type) params.set("type", type);
    const suffix = params.toString() ? `?${params}` : "";
    return this.request(`/api/patients/${encodeURIComponent(stayId)}/annotations${suffix}`);
  }

  createAnnotation(
    stayId: string,
    payload: Pick<Annotation, "type" | "start_s" | "end_s" | "label" | "metadata"> & {
      color?: string | null;
    },
  ): Promise<Annotation> {
    return this.request(`/api/patients/${encodeURIComponent(stayId)}/annotations`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  updateAnnotation(
    annotationId: string,
    payload: Partial<Annotation> & { version: number },
  ): Promise<Annotation> {
    return this.request(`/api/annotations/${encodeURIComponent(annotationId)}`, {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  deleteAnnotation(annotationId: string): Promise<void> {
    return this.request(`/api/annotations/${encodeURIComponent(annotationId)}`, {
      method: "DELETE",
    });
  }

  exportAnnotations(): Promise<Annotation[]> {
    return this.request("/api/export/annotations");
  }
}
