/**
 * Install screen: render a threat report (as returned by POST /api/apps)
 * with severity badges and the generated rules, plus confirm/cancel.
 *
 * Rendering is a pure string function so it can be golden-snapshot tested;
 * the text severities and threat wording come verbatim from the server.
 */

import { InstallResponse, PrivacyRule } from "./types.js";

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function describeRule(rule: PrivacyRule, expertMode: boolean): string {
  const stages = rule.pipeline.map((s) => s.pet_id).join(" → ") || "direct";
  const expert = expertMode
    ? ` <span class="epsilon">ε/disclosure = ${rule.epsilon_per_disclosure}</span>`
    : "";
  return (
    `<li class="rule"><code>${escapeHtml(rule.type_id)}</code> via ` +
    `<span class="pipeline">${escapeHtml(stages)}</span>` +
    ` under <code>${escapeHtml(rule.policy)}</code>${expert}</li>`
  );
}

export function renderInstallScreen(
  install: InstallResponse,
  expertMode = false,
): string {
  const { threats, rules } = install;
  const lines: string[] = [];
  lines.push(`<section class="install-screen" data-app="${escapeHtml(threats.app_id)}">`);
  lines.push(`  <h2>Install ${escapeHtml(threats.app_id)}?</h2>`);
  lines.push(`  <ul class="threats">`);
  for (const entry of threats.entries) {
    lines.push(
      `    <li class="threat severity-${entry.severity}">` +
        `<span class="badge badge-${entry.severity}">` +
        `${entry.severity.toUpperCase()}</span> ` +
        `<code>${escapeHtml(entry.type_id)}</code> ` +
        `<em>(${escapeHtml(entry.classification)}, ${escapeHtml(entry.access_mode)})</em>` +
        `<ul>` +
        entry.threat_texts
          .map((t) => `<li>${escapeHtml(t)}</li>`)
          .join("") +
        `</ul></li>`,
    );
  }
  lines.push(`  </ul>`);
  lines.push(`  <h3>Privacy rules that will apply</h3>`);
  lines.push(`  <ul class="rules">`);
  for (const rule of rules) {
    lines.push("    " + describeRule(rule, expertMode));
  }
  lines.push(`  </ul>`);
  lines.push(
    `  <div class="actions">` +
      `<button class="confirm" data-action="confirm">Install</button>` +
      `<button class="cancel" data-action="cancel">Cancel</button></div>`,
  );
  lines.push(`</section>`);
  return lines.join("\n");
}

export function renderErrorToast(message: string): string {
  return `<div class="toast toast-error" role="alert">${escapeHtml(message)}</div>`;
}
