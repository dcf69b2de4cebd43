/**
 * Feedback page rendering: a pure projection of the report document into
 * HTML. Nothing in here mutates the report or talks to the network, which
 * is what lets the tests assert on exact markup.
 *
 * Layout follows the report's own structure: the annotated transcript,
 * then one card per skill (Empower, be Explicit, Empathize) holding the
 * nine metric slots.
 */

import {
  type Annotation,
  type CloudEntry,
  type FeedbackReport,
  type ReportTurn,
  isUnavailable,
} from "./api.js";
import { escapeHtml, html, raw } from "./html.js";

function badge(reason: string): string {
  // An unavailable slot renders as a dash badge with the reason on hover.
  return `<span class="badge unavailable" title="${escapeHtml(reason)}">&mdash;</span>`;
}

function number(value: number, digits = 1): string {
  return value.toFixed(digits);
}

type Metric<T> = T | { unavailable: string };

function slot<T>(value: Metric<T>, render: (v: T) => string): string {
  return isUnavailable(value) ? badge(value.unavailable) : render(value);
}

// ---------------------------------------------------------------------------
// Transcript pane

const SUGGESTION_LABELS: Record<string, string> = {
  suggest_empathy: "Respond to the emotion",
  suggest_open_question: "Hand the floor back",
};

function turnAnnotations(report: FeedbackReport, index: number): Annotation[] {
  return report.annotations.filter((a) => a.turn_index === index);
}

function renderTurn(report: FeedbackReport, turn: ReportTurn): string {
  const annotations = turnAnnotations(report, turn.turn_index);
  const classes = ["bubble", turn.speaker];
  if (annotations.some((a) => a.kind === "lecture")) classes.push("hl-lecture");
  if (annotations.some((a) => a.kind === "question")) classes.push("hl-question");

  const callouts = annotations
    .filter((a) => a.kind === "suggest_empathy" || a.kind === "suggest_open_question")
    .map(
      (a) => html`
        <div class="callout ${a.kind}">
          <strong>${SUGGESTION_LABELS[a.kind] ?? a.kind}:</strong> ${a.payload ?? ""}
        </div>`,
    )
    .join("");

  const who = turn.speaker === "patient" ? "Sophie" : "You";
  return html`
    <div class="${classes.join(" ")}" data-turn="${turn.turn_index}">
      <span class="who">${who}</span>
      <p>${turn.text}</p>
      ${raw(callouts)}
    </div>`;
}

function renderTranscript(report: FeedbackReport): string {
  const turns = report.per_turn.map((turn) => renderTurn(report, turn)).join("");
  return html`
    <section class="transcript-pane">
      <h2>Transcript</h2>
      ${raw(turns)}
    </section>`;
}

// ---------------------------------------------------------------------------
// Word clouds and the trajectory chart

function renderCloud(entries: CloudEntry[]): string {
  if (entries.length === 0) return `<p class="cloud-empty">none</p>`;
  const top = entries[0]?.[1] ?? 1;
  const words = entries
    .map(([word, count]) => {
      const scale = 0.85 + (count / top) * 0.9;
      return html`<span class="cloud-word" style="font-size: ${scale.toFixed(2)}em"
        >${word}<sup>${count}</sup></span>`;
    })
    .join(" ");
  return `<p class="cloud">${words}</p>`;
}

const CHART_WIDTH = 560;
const CHART_HEIGHT = 240;
const CHART_PAD = 24;

function polyline(series: number[], cls: string): string {
  const innerW = CHART_WIDTH - 2 * CHART_PAD;
  const innerH = CHART_HEIGHT - 2 * CHART_PAD;
  const step = series.length > 1 ? innerW / (series.length - 1) : 0;
  const points = series
    .map((value, i) => {
      const x = CHART_PAD + i * step;
      // sentiment is in [-1, 1]; +1 at the top
      const y = CHART_PAD + ((1 - value) / 2) * innerH;
      return `${x.toFixed(1)},${y.toFixed(1)}`;
    })
    .join(" ");
  return `<polyline class="${cls}" fill="none" points="${points}" />`;
}

export function renderTrajectoryChart(
  clinician: number[],
  patient: number[],
  ideal: number[],
): string {
  const midY = CHART_PAD + (CHART_HEIGHT - 2 * CHART_PAD) / 2;
  return `
    <svg class="trajectory-chart" viewBox="0 0 ${CHART_WIDTH} ${CHART_HEIGHT}"
         role="img" aria-label="Sentiment trajectories">
      <line class="axis" x1="${CHART_PAD}" y1="${midY}"
            x2="${CHART_WIDTH - CHART_PAD}" y2="${midY}" />
      ${polyline(clinician, "series-user")}
      ${polyline(patient, "series-patient")}
      ${polyline(ideal, "series-ideal")}
    </svg>
    <p class="legend">
      <span class="key series-user">user</span>
      <span class="key series-patient">Sophie</span>
      <span class="key series-ideal">ideal</span>
    </p>`;
}

// ---------------------------------------------------------------------------
// Metric cards

function renderEmpower(report: FeedbackReport): string {
  const e = report.empower;

  let share: string;
  if (e.clinician_time_ms !== undefined && e.patient_time_ms !== undefined) {
    share = slot(e.clinician_time_ms, (mine) =>
      slot(e.patient_time_ms!, (theirs) => shareBar(mine, theirs, "speaking time")),
    );
  } else if (e.clinician_words !== undefined && e.patient_words !== undefined) {
    share = slot(e.clinician_words, (mine) =>
      slot(e.patient_words!, (theirs) => shareBar(mine, theirs, "words")),
    );
  } else {
    share = badge("no talk share data");
  }

  return `
    <section class="card empower">
      <h2>Empower</h2>
      <div class="metric" data-metric="questions">
        <h3>Questions</h3>
        ${slot(e.questions_asked, (asked) =>
          slot(
            e.open_questions,
            (open) => html`<p><b>${asked}</b> asked, <b>${open}</b> open</p>`,
          ),
        )}
      </div>
      <div class="metric" data-metric="talk-share">
        <h3>Sharing the floor</h3>
        ${share}
      </div>
      <div class="metric" data-metric="lecturing">
        <h3>Lecturing</h3>
        ${slot(e.lecture_turn_indices, (indices) =>
          indices.length === 0
            ? `<p>no lecture turns</p>`
            : html`<p><b>${indices.length}</b> lecture turn${indices.length === 1 ? "" : "s"}
                 (highlighted in red)</p>`,
        )}
      </div>
    </section>`;
}

function shareBar(clinician: number, patient: number, unit: string): string {
  const total = clinician + patient;
  const pct = total > 0 ? (clinician / total) * 100 : 50;
  return html`
    <div class="share-bar" title="${unit}">
      <div class="share-clinician" style="width: ${pct.toFixed(1)}%"></div>
    </div>
    <p class="share-caption">you ${Math.round(pct)}% / Sophie ${Math.round(100 - pct)}%
      (${unit})</p>`;
}

function renderExplicit(report: FeedbackReport): string {
  const x = report.explicit;
  return `
    <section class="card explicit">
      <h2>be Explicit</h2>
      <div class="metric" data-metric="hedges">
        <h3>Hedge words</h3>
        ${slot(x.hedge_percentage, (pct) => html`<p><b>${number(pct)}%</b> of your words</p>`)}
        ${slot(x.hedge_cloud, renderCloud)}
      </div>
      <div class="metric" data-metric="speaking-rate">
        <h3>Speaking rate</h3>
        ${slot(
          x.speaking_rate_wpm,
          (wpm) => html`<p><b>${Math.round(wpm)}</b> words per minute
            <small>(from typing time)</small></p>`,
        )}
      </div>
      <div class="metric" data-metric="reading-level">
        <h3>Reading level</h3>
        ${slot(x.reading_display, (grade) =>
          slot(
            x.reading_raw,
            (rawScore) => html`<p>grade <b>${grade}</b> <small>(raw ${number(rawScore, 2)})</small></p>`,
          ),
        )}
      </div>
    </section>`;
}

function renderEmpathize(report: FeedbackReport): string {
  const m = report.empathize;
  const chart =
    !isUnavailable(m.trajectory_clinician) &&
    !isUnavailable(m.trajectory_patient) &&
    !isUnavailable(m.trajectory_ideal)
      ? renderTrajectoryChart(m.trajectory_clinician, m.trajectory_patient, m.trajectory_ideal)
      : badge(
          isUnavailable(m.trajectory_clinician)
            ? m.trajectory_clinician.unavailable
            : "no trajectory",
        );

  return `
    <section class="card empathize">
      <h2>Empathize</h2>
      <div class="metric" data-metric="pronouns">
        <h3>Personal pronouns</h3>
        ${slot(m.pronoun_percentage, (pct) => html`<p><b>${number(pct)}%</b> of your words</p>`)}
      </div>
      <div class="metric" data-metric="empathy">
        <h3>Empathy</h3>
        ${slot(m.empathy_average, (avg) => html`<p><b>${number(avg)}</b> / 7 average</p>`)}
        ${slot(m.empathy_cloud, renderCloud)}
      </div>
      <div class="metric" data-metric="trajectory">
        <h3>Sentiment trajectory</h3>
        ${chart}
        ${slot(
          m.trajectory_distance,
          (d) => html`<p>distance from the ideal arc: <b>${number(d, 3)}</b></p>`,
        )}
      </div>
    </section>`;
}

// ---------------------------------------------------------------------------

export function renderFeedback(report: FeedbackReport): string {
  return `
    <div class="feedback">
      ${renderTranscript(report)}
      <div class="cards">
        ${renderEmpower(report)}
        ${renderExplicit(report)}
        ${renderEmpathize(report)}
      </div>
    </div>`;
}

/** Error panel for a report that could not be fetched or validated. */
export function renderReportError(reportId: string, message: string): string {
  return html`
    <div class="error-panel">
      <h2>Could not show report</h2>
      <p>${message}</p>
      <p><small>report id: <code>${reportId}</code></small></p>
    </div>`;
}
