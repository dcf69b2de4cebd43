/**
 * Typed client for the sophie service.
 *
 * Every response is validated with a zod schema before anything renders, so
 * a malformed or incompatible server can never push garbage into the UI.
 */

import { z } from "zod";

export const SUPPORTED_REPORT_VERSION = 1;

// A metric slot is either its computed value or a marker saying why not.
const unavailable = z.object({ unavailable: z.string() });
const metric = <T extends z.ZodTypeAny>(value: T) => z.union([value, unavailable]);

export type Unavailable = z.infer<typeof unavailable>;

export function isUnavailable(value: unknown): value is Unavailable {
  return (
    typeof value === "object" &&
    value !== null &&
    typeof (value as Record<string, unknown>)["unavailable"] === "string"
  );
}

const cloud = z.array(z.tuple([z.string(), z.number().int().positive()]));
const series = z.array(z.number());

const empowerSchema = z.object({
  questions_asked: metric(z.number().int()),
  open_questions: metric(z.number().int()),
  lecture_turn_indices: metric(z.array(z.number().int())),
  clinician_words: metric(z.number().int()).optional(),
  patient_words: metric(z.number().int()).optional(),
  clinician_time_ms: metric(z.number().int()).optional(),
  patient_time_ms: metric(z.number().int()).optional(),
});

const explicitSchema = z.object({
  hedge_percentage: metric(z.number()),
  hedge_cloud: metric(cloud),
  speaking_rate_wpm: metric(z.number()),
  reading_raw: metric(z.number()),
  reading_display: metric(z.number().int()),
});

const empathizeSchema = z.object({
  pronoun_percentage: metric(z.number()),
  empathy_average: metric(z.number()),
  empathy_cloud: metric(cloud),
  trajectory_clinician: metric(series),
  trajectory_patient: metric(series),
  trajectory_ideal: metric(series),
  trajectory_distance: metric(z.number()),
});

const annotationSchema = z.object({
  turn_index: z.number().int().nonnegative(),
  kind: z.enum(["question", "lecture", "suggest_empathy", "suggest_open_question"]),
  payload: z.string().optional(),
});

const perTurnSchema = z.object({
  turn_index: z.number().int().nonnegative(),
  speaker: z.enum(["clinician", "patient"]),
  text: z.string(),
  word_count: z.number().int().nonnegative(),
  is_lecture: z.boolean(),
  questions: z.array(z.tuple([z.string(), z.enum(["open", "closed"])])),
});

export const reportSchema = z.object({
  report_version: z.number().int(),
  empower: empowerSchema,
  explicit: explicitSchema,
  empathize: empathizeSchema,
  annotations: z.array(annotationSchema),
  per_turn: z.array(perTurnSchema),
});

export type FeedbackReport = z.infer<typeof reportSchema>;
export type Annotation = z.infer<typeof annotationSchema>;
export type ReportTurn = z.infer<typeof perTurnSchema>;
export type CloudEntry = [string, number];

const turnSchema = z.object({
  index: z.number().int().nonnegative(),
  speaker: z.enum(["clinician", "patient"]),
  text: z.string(),
  start_ms: z.number().int().nullable().optional(),
  end_ms: z.number().int().nullable().optional(),
});

const sessionCreatedSchema = z.object({
  session_id: z.string().min(1),
  status: z.enum(["active", "completed"]),
  turns: z.array(turnSchema),
});

const turnsResponseSchema = z.object({
  status: z.enum(["active", "completed"]),
  turns: z.array(turnSchema),
});

const reportResponseSchema = z.object({
  report_id: z.string().min(1),
  report: reportSchema,
});

const schemaListSchema = z.object({
  schemas: z.array(z.object({ id: z.string().min(1), description: z.string() })),
});

const errorBodySchema = z.object({
  error: z.object({ code: z.string(), message: z.string() }),
});

export type SessionTurn = z.infer<typeof turnSchema>;
export type SessionCreated = z.infer<typeof sessionCreatedSchema>;
export type TurnsResponse = z.infer<typeof turnsResponseSchema>;
export type ReportResponse = z.infer<typeof reportResponseSchema>;
export type SchemaInfo = z.infer<typeof schemaListSchema>["schemas"][number];

/** The service answered with a structured error body. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** The response did not match the shape this client was built against. */
export class SchemaMismatchError extends Error {
  constructor(path: string, detail: string) {
    super(
      `response from ${path} does not match the expected schema; ` +
        `the server may be running an incompatible version (${detail})`,
    );
    this.name = "SchemaMismatchError";
  }
}

/** The report document itself is from a newer or older contract. */
export class ReportVersionError extends Error {
  constructor(public readonly found: number) {
    super(
      `report version ${found} is not supported ` +
        `(this client understands version ${SUPPORTED_REPORT_VERSION})`,
    );
    this.name = "ReportVersionError";
  }
}

export function validateReport(value: unknown): FeedbackReport {
  const parsed = reportSchema.safeParse(value);
  if (!parsed.success) {
    // Version problems get their own message so the user sees "update one
    // side" instead of a wall of schema noise.
    const versionOnly = z.object({ report_version: z.number().int() }).safeParse(value);
    if (versionOnly.success && versionOnly.data.report_version !== SUPPORTED_REPORT_VERSION) {
      throw new ReportVersionError(versionOnly.data.report_version);
    }
    throw new SchemaMismatchError("report", parsed.error.issues[0]?.message ?? "invalid");
  }
  if (parsed.data.report_version !== SUPPORTED_REPORT_VERSION) {
    throw new ReportVersionError(parsed.data.report_version);
  }
  return parsed.data;
}

async function parseErrorBody(response: Response): Promise<ApiError> {
  let body: unknown;
  try {
    body = await response.json();
  } catch {
    return new ApiError(response.status, "unknown", `HTTP ${response.status}`);
  }
  const parsed = errorBodySchema.safeParse(body);
  if (!parsed.success) {
    return new ApiError(response.status, "unknown", `HTTP ${response.status}`);
  }
  return new ApiError(response.status, parsed.data.error.code, parsed.data.error.message);
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  private async request<T>(
    path: string,
    schema: z.ZodType<T>,
    init?: RequestInit,
  ): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      throw await parseErrorBody(response);
    }
    const body: unknown = await response.json();
    const parsed = schema.safeParse(body);
    if (!parsed.success) {
      throw new SchemaMismatchError(path, parsed.error.issues[0]?.message ?? "invalid");
    }
    return parsed.data;
  }

  private post<T>(path: string, schema: z.ZodType<T>, payload: unknown): Promise<T> {
    return this.request(path, schema, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  listSchemas(): Promise<SchemaInfo[]> {
    return this.request("/api/schemas", schemaListSchema).then((body) => body.schemas);
  }

  createSession(schemaId: string): Promise<SessionCreated> {
    return this.post("/api/sessions", sessionCreatedSchema, { schema_id: schemaId });
  }

  sendTurn(
    sessionId: string,
    text: string,
    startMs?: number,
    endMs?: number,
  ): Promise<TurnsResponse> {
    return this.post(`/api/sessions/${sessionId}/turns`, turnsResponseSchema, {
      text,
      start_ms: startMs ?? null,
      end_ms: endMs ?? null,
    });
  }

  endSession(sessionId: string): Promise<ReportResponse> {
    return this.post(`/api/sessions/${sessionId}/end`, reportResponseSchema, {});
  }

  getReport(reportId: string): Promise<FeedbackReport> {
    return this.request(`/api/reports/${reportId}`, reportSchema).then((report) => {
      if (report.report_version !== SUPPORTED_REPORT_VERSION) {
        throw new ReportVersionError(report.report_version);
      }
      return report;
    });
  }
}
