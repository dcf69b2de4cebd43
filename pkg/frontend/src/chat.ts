/**
 * Live conversation state. DOM-free: the page binds to it through the
 * change listener, and the tests drive it directly against a real service.
 */

import { ApiClient, ApiError, type FeedbackReport } from "./api.js";

export interface ChatMessage {
  speaker: "clinician" | "patient";
  text: string;
  startMs?: number;
  endMs?: number;
}

export type ChatStatus = "connecting" | "active" | "completed";

export class ChatSession {
  sessionId = "";
  status: ChatStatus = "connecting";
  /** Append-only; the transcript never rewrites. */
  readonly messages: ChatMessage[] = [];
  /** True while a request is in flight; the input stays locked. */
  busy = false;
  /** Set on network failure; the caller's text is preserved for retry. */
  retryText: string | null = null;
  lastError: string | null = null;
  reportId: string | null = null;
  report: FeedbackReport | null = null;

  private typingStartedAt: number | null = null;
  private listeners: Array<() => void> = [];
  private seen = 0;

  constructor(
    private readonly client: ApiClient,
    readonly schemaId: string,
    private readonly now: () => number = () => Math.round(performance.now()),
  ) {}

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  get inputLocked(): boolean {
    return this.busy || this.status !== "active";
  }

  /** The page calls this on the first keystroke of each entry. */
  noteTypingStarted(): void {
    if (this.typingStartedAt === null) {
      this.typingStartedAt = this.now();
    }
  }

  private absorb(
    turns: Array<{
      speaker: "clinician" | "patient";
      text: string;
      start_ms?: number | null;
      end_ms?: number | null;
    }>,
  ): void {
    for (const turn of turns.slice(this.seen)) {
      this.messages.push({
        speaker: turn.speaker,
        text: turn.text,
        startMs: turn.start_ms ?? undefined,
        endMs: turn.end_ms ?? undefined,
      });
    }
    this.seen = turns.length;
  }

  async start(): Promise<void> {
    const created = await this.client.createSession(this.schemaId);
    this.sessionId = created.session_id;
    this.absorb(created.turns);
    this.status = created.status;
    this.notify();
  }

  async send(text: string): Promise<void> {
    if (this.inputLocked || !text.trim()) return;
    const startMs = this.typingStartedAt ?? this.now();
    const endMs = Math.max(this.now(), startMs);
    this.busy = true;
    this.lastError = null;
    this.retryText = null;
    this.notify();
    try {
      const result = await this.client.sendTurn(this.sessionId, text, startMs, endMs);
      this.typingStartedAt = null;
      this.absorb(result.turns);
      this.status = result.status;
    } catch (err) {
      if (err instanceof ApiError && err.code === "session_completed") {
        this.status = "completed";
      } else if (err instanceof ApiError) {
        this.lastError = err.message;
      } else {
        // Network trouble: keep the text so a retry needs one click.
        this.retryText = text;
        this.lastError = "could not reach the service";
      }
    } finally {
      this.busy = false;
      this.notify();
    }
  }

  async end(): Promise<void> {
    if (this.busy) return;
    this.busy = true;
    this.notify();
    try {
      const ended = await this.client.endSession(this.sessionId);
      this.reportId = ended.report_id;
      this.report = ended.report;
      this.status = "completed";
    } catch (err) {
      this.lastError = err instanceof Error ? err.message : String(err);
    } finally {
      this.busy = false;
      this.notify();
    }
  }
}
