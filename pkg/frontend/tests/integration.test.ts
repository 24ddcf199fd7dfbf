/** Client-service integration against an in-memory stand-in implementing the
 * monitor API semantics: versioned annotation CRUD with schema validation,
 * durable reload, and prediction gaps aligned to event intervals. */

import { beforeEach, describe, expect, it } from "vitest";
import { ApiClient, ApiError } from "../src/api";
import { gapsMatchEvents } from "../src/segments";
import { validateMetadata } from "../src/schemaForm";
import type { Annotation, JsonSchema } from "../src/types";

const NOTE_SCHEMA: JsonSchema = {
  type: "object",
  properties: { text: { type: "string" } },
  required: ["text"],
  additionalProperties: false,
};

class FakeService {
  annotations = new Map<string, Annotation>();
  private counter = 0;
  events = [
    { start_s: 36000, end_s: 50400, type: "resp_failure_mod_sev" },
  ];
  predictions = (() => {
    const time_s: number[] = [];
    const score: (number | null)[] = [];
    for (let t = 0; t <= 86400; t += 300) {
      time_s.push(t);
      score.push(t >= 36000 && t <= 50400 ? null : 0.1);
    }
    return { stay_id: "s0", time_s, score };
  })();

  fetch = async (input: string, init?: RequestInit): Promise<Response> => {
    const url = new URL(input, "http://local");
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(init.body as string) : null;
    const respond = (status: number, payload: unknown) =>
      new Response(status === 204 ? null : JSON.stringify(payload), { status });

    if (url.pathname === "/api/patients/s0/events") return respond(200, this.events);
    if (url.pathname === "/api/patients/s0/predictions") return respond(200, this.predictions);
    if (url.pathname === "/api/annotation-types") {
      return respond(200, [{ type: "note", default_color: "#aaa", schema: NOTE_SCHEMA }]);
    }
    if (url.pathname === "/api/patients/s0/annotations" && method === "POST") {
      const errors = validateMetadata(NOTE_SCHEMA, body.metadata ?? {});
      if (body.end_s < body.start_s) errors.push({ field: "end_s", message: "before start" });
      if (errors.length) return respond(422, { detail: errors });
      const annotation: Annotation = {
        annotation_id: `a-${this.counter++}`,
        stay_id: "s0",
        version: 1,
        created_at: "t0",
        updated_at: "t0",
        color: null,
        label: body.label ?? "",
        metadata: body.metadata ?? {},
        type: body.type,
        start_s: body.start_s,
        end_s: body.end_s,
      };
      this.annotations.set(annotation.annotation_id, annotation);
      return respond(201, annotation);
    }
    if (url.pathname === "/api/patients/s0/annotations") {
      return respond(200, [...this.annotations.values()]);
    }
    const match = url.pathname.match(/^\/api\/annotations\/(.+)$/);
    if (match) {
      const existing = this.annotations.get(match[1]);
      if (!existing) return respond(404, { detail: "unknown annotation" });
      if (method === "GET") return respond(200, existing);
      if (method === "DELETE") {
        this.annotations.delete(match[1]);
        return respond(204, null);
      }
      if (method === "PUT") {
        if (body.version !== existing.version) return respond(409, { detail: "version conflict" });
        const merged = { ...existing, ...body, version: existing.version + 1, updated_at: "t1" };
        const errors = validateMetadata(NOTE_SCHEMA, merged.metadata ?? {});
        if (errors.length) return respond(422, { detail: errors });
        this.annotations.set(match[1], merged);
        return respond(200, merged);
      }
    }
    return respond(404, { detail: `no route ${url.pathname}` });
  };
}

describe("annotation round trip through the API client", () => {
  let service: FakeService;
  let client: ApiClient;

  beforeEach(() => {
    service = new FakeService();
    client = new ApiClient("http://local", service.fetch);
  });

  it("creates, edits, reloads and deletes losslessly", async () => {
    const created = await client.createAnnotation("s0", {
      type: "note", start_s: 600, end_s: 1200, label: "check", metadata: { text: "hello" },
    });
    expect(created.version).toBe(1);

    const updated = await client.updateAnnotation(created.annotation_id, {
      version: 1, label: "checked", metadata: { text: "resolved" },
    });
    expect(updated.version).toBe(2);

    // reload: a fresh client over the same store sees identical content
    const reloaded = new ApiClient("http://local", service.fetch);
    const listed = await reloaded.listAnnotations("s0");
    expect(listed).toEqual([updated]);

    await client.deleteAnnotation(created.annotation_id);
    await expect(client.listAnnotations("s0")).resolves.toEqual([]);
  });

  it("surfaces 409 on stale versions and 422 on schema violations", async () => {
    const created = await client.createAnnotation("s0", {
      type: "note", start_s: 0, end_s: 10, label: "", metadata: { text: "x" },
    });
    await client.updateAnnotation(created.annotation_id, { version: 1, label: "first" });
    await expect(
      client.updateAnnotation(created.annotation_id, { version: 1, label: "stale" }),
    ).rejects.toMatchObject({ status: 409 });
    await expect(
      client.createAnnotation("s0", { type: "note", start_s: 0, end_s: 10, label: "", metadata: {} }),
    ).rejects.toMatchObject({ status: 422 });
    await expect(
      client.createAnnotation("s0", { type: "note", start_s: 50, end_s: 10, label: "", metadata: { text: "x" } }),
    ).rejects.toMatchObject({ status: 422 });
  });

  it("client-side validation blocks the request before it is sent", () => {
    const errors = validateMetadata(NOTE_SCHEMA, {});
    expect(errors).toHaveLength(1); // no request would be issued with these errors
  });

  it("prediction gaps line up exactly with served event intervals", async () => {
    const predictions = await client.predictions("s0");
    const events = await client.events("s0");
    expect(gapsMatchEvents(predictions, events, 300)).toBe(true);
  });

  it("ApiError carries status and detail payload", async () => {
    try {
      await client.updateAnnotation("missing", { version: 1 });
      expect.unreachable();
    } catch (error) {
      expect(error).toBeInstanceOf(ApiError);
      expect((error as ApiError).status).toBe(404);
    }
  });
});
