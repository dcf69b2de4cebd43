/**
 * Page bootstrap. Hash routes:
 *   #/                schema picker
 *   #/chat/<schema>   live conversation
 *   #/report/<id>     feedback page for a stored report
 */

import {
  ApiClient,
  ApiError,
  ReportVersionError,
  SchemaMismatchError,
} from "./api.js";
import { ChatSession } from "./chat.js";
import { renderFeedback, renderReportError } from "./feedback.js";
import { escapeHtml, html } from "./html.js";

const client = new ApiClient("");
const root = document.getElementById("app") as HTMLElement;

function setView(markup: string): void {
  root.innerHTML = markup;
}

// ---------------------------------------------------------------------------
// Schema picker

async function showPicker(): Promise<void> {
  setView(`<p class="loading">loading scenarios&hellip;</p>`);
  let schemas;
  try {
    schemas = await client.listSchemas();
  } catch (err) {
    setView(html`<div class="error-panel"><h2>Service unreachable</h2>
      <p>${err instanceof Error ? err.message : String(err)}</p></div>`);
    return;
  }
  const items = schemas
    .map(
      (s) => html`
        <li>
          <a href="#/chat/${s.id}"><b>${s.id}</b></a>
          <p>${s.description}</p>
        </li>`,
    )
    .join("");
  setView(`
    <section class="picker">
      <h1>Choose a conversation</h1>
      <ul class="schema-list">${items}</ul>
    </section>`);
}

// ---------------------------------------------------------------------------
// Chat view

function renderChat(session: ChatSession): string {
  const bubbles = session.messages
    .map(
      (m) => html`
        <div class="bubble ${m.speaker}">
          <span class="who">${m.speaker === "patient" ? "Sophie" : "You"}</span>
          <p>${m.text}</p>
        </div>`,
    )
    .join("");

  const banner = session.retryText
    ? html`<div class="retry-banner">
        ${session.lastError ?? "request failed"}
        <button id="retry">Retry</button>
      </div>`
    : session.lastError
      ? html`<div class="retry-banner">${session.lastError}</div>`
      : "";

  const done = session.status === "completed";
  return `
    <section class="chat">
      <div class="messages" id="messages">${bubbles}</div>
      ${banner}
      <form id="say" class="entry">
        <textarea id="entry" rows="2" placeholder="${
          done ? "conversation over" : "Say something to Sophie&hellip;"
        }" ${session.inputLocked ? "disabled" : ""}>${escapeHtml(session.retryText ?? "")}</textarea>
        <button type="submit" ${session.inputLocked ? "disabled" : ""}>Send</button>
        <button type="button" id="end" ${session.busy || done ? "disabled" : ""}>
          End Conversation
        </button>
      </form>
    </section>`;
}

async function showChat(schemaId: string): Promise<void> {
  const session = new ChatSession(client, schemaId);

  const repaint = () => {
    setView(renderChat(session));
    const messages = document.getElementById("messages");
    if (messages) messages.scrollTop = messages.scrollHeight;

    const form = document.getElementById("say") as HTMLFormElement | null;
    const entry = document.getElementById("entry") as HTMLTextAreaElement | null;
    entry?.addEventListener("input", () => session.noteTypingStarted());
    form?.addEventListener("submit", (event) => {
      event.preventDefault();
      if (entry && entry.value.trim()) void session.send(entry.value.trim());
    });
    document.getElementById("end")?.addEventListener("click", () => {
      void session.end().then(() => {
        if (session.reportId) location.hash = `#/report/${session.reportId}`;
      });
    });
    document.getElementById("retry")?.addEventListener("click", () => {
      if (session.retryText) void session.send(session.retryText);
    });
    if (!session.inputLocked) entry?.focus();
  };

  session.onChange(repaint);
  repaint();
  try {
    await session.start();
  } catch (err) {
    setView(html`<div class="error-panel"><h2>Could not start the session</h2>
      <p>${err instanceof Error ? err.message : String(err)}</p>
      <p><a href="#/">back to scenarios</a></p></div>`);
  }
}

// ---------------------------------------------------------------------------
// Feedback view

async function showReport(reportId: string): Promise<void> {
  setView(`<p class="loading">loading report&hellip;</p>`);
  try {
    const report = await client.getReport(reportId);
    setView(renderFeedback(report) + `<p class="back"><a href="#/">new conversation</a></p>`);
  } catch (err) {
    if (err instanceof ApiError && err.status === 404) {
      setView(html`<div class="error-panel"><h2>Report not found</h2>
        <p>No stored report has id <code>${reportId}</code>.</p></div>`);
    } else if (err instanceof ReportVersionError || err instanceof SchemaMismatchError) {
      setView(renderReportError(reportId, err.message));
    } else {
      setView(renderReportError(reportId, err instanceof Error ? err.message : String(err)));
    }
  }
}

// ---------------------------------------------------------------------------

function route(): void {
  const hash = location.hash || "#/";
  const chat = hash.match(/^#\/chat\/(.+)$/);
  if (chat && chat[1]) {
    void showChat(decodeURIComponent(chat[1]));
    return;
  }
  const report = hash.match(/^#\/report\/(.+)$/);
  if (report && report[1]) {
    void showReport(decodeURIComponent(report[1]));
    return;
  }
  void showPicker();
}

window.addEventListener("hashchange", route);
route();
