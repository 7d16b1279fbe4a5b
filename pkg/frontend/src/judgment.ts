/**
 * Human entailment-judgment checklist.
 *
 * One yes/no control per (premise, hypothesis) pair, in the order the metric
 * procedure consumes them: first each reference subclaim against the
 * generated summary (claim recall), then each generated citation's sentence
 * against the generated subclaims (citation support, where a yes short-circuits
 * the rest of that citation's rows), then each generated subclaim against the
 * reference summary (claim precision). Partial answers can be saved as a
 * draft; posted records match the metrics module's judgment schema.
 */

import type { ApiClient } from './api.ts';
import type { InstanceDetail, JudgmentItem } from './types.ts';

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export type JudgmentBlock = 'claim_recall' | 'citation_support' | 'claim_precision';

export class JudgmentRow {
  readonly root: HTMLElement;
  verdict: boolean | null = null;
  skipped = false;
  private yesButton: HTMLButtonElement;
  private noButton: HTMLButtonElement;

  constructor(
    readonly block: JudgmentBlock,
    readonly premise: string,
    readonly hypothesis: string,
    readonly citation: number | null,
    private onAnswer: (row: JudgmentRow) => void,
  ) {
    this.root = el('div', 'judgment-row');
    this.root.dataset.block = block;
    if (citation !== null) this.root.dataset.citation = String(citation);
    this.root.appendChild(el('span', 'premise', premise));
    this.root.appendChild(el('span', 'arrow', ' entails? '));
    this.root.appendChild(el('span', 'hypothesis', hypothesis));
    this.yesButton = el('button', 'yes', 'yes') as HTMLButtonElement;
    this.noButton = el('button', 'no', 'no') as HTMLButtonElement;
    for (const [button, value] of [
      [this.yesButton, true],
      [this.noButton, false],
    ] as const) {
      button.type = 'button';
      button.addEventListener('click', () => {
        if (this.skipped) return;
        this.verdict = value;
        this.yesButton.classList.toggle('selected', value);
        this.noButton.classList.toggle('selected', !value);
        this.onAnswer(this);
      });
      this.root.appendChild(button);
    }
  }

  skip(): void {
    this.skipped = true;
    this.root.classList.add('skipped');
    this.yesButton.disabled = true;
    this.noButton.disabled = true;
  }
}

export interface JudgmentView {
  root: HTMLElement;
  rows: JudgmentRow[];
  draftButton: HTMLButtonElement;
  submitButton: HTMLButtonElement;
  collect(includeUnanswered?: boolean): JudgmentItem[];
}

export function buildJudgmentRows(
  instance: InstanceDetail,
  onAnswer: (row: JudgmentRow) => void,
): JudgmentRow[] {
  const output = instance.output;
  if (!output || output.summary === null) return [];
  const refSubclaims = instance.ref_subclaims ?? [];
  const genSubclaims = instance.gen_subclaims ?? [];
  const rows: JudgmentRow[] = [];

  for (const claim of refSubclaims) {
    rows.push(new JudgmentRow('claim_recall', output.summary, claim, null, onAnswer));
  }
  const citations = [...(output.citations ?? [])].sort((a, b) => a - b);
  for (const citation of citations) {
    for (const claim of genSubclaims) {
      rows.push(
        new JudgmentRow('citation_support', instance.sentences[citation], claim, citation, onAnswer),
      );
    }
  }
  if (instance.reference.summary !== null) {
    for (const claim of genSubclaims) {
      rows.push(new JudgmentRow('claim_precision', instance.reference.summary, claim, null, onAnswer));
    }
  }
  return rows;
}

export function renderJudgment(instance: InstanceDetail, api: ApiClient): JudgmentView {
  const root = el('div', 'judgment-view');
  root.appendChild(el('h3', 'title', `Entailment judgments for ${instance.instance_id}`));

  const rows = buildJudgmentRows(instance, (answered) => {
    // a yes settles the citation: remaining unanswered rows for it are skipped
    if (answered.block === 'citation_support' && answered.verdict === true) {
      for (const row of rows) {
        if (
          row.block === 'citation_support' &&
          row.citation === answered.citation &&
          row.verdict === null &&
          row !== answered
        ) {
          row.skip();
        }
      }
    }
    refreshGate();
  });
  rows.forEach((row) => root.appendChild(row.root));

  const draftButton = el('button', 'save-draft', 'Save draft') as HTMLButtonElement;
  const submitButton = el('button', 'submit-judgments', 'Submit all') as HTMLButtonElement;
  draftButton.type = 'button';
  submitButton.type = 'button';
  submitButton.disabled = true;
  const status = el('p', 'status', '');

  function collect(includeUnanswered = false): JudgmentItem[] {
    return rows
      .filter((row) => !row.skipped && (includeUnanswered || row.verdict !== null))
      .map((row) => ({
        premise: row.premise,
        hypothesis: row.hypothesis,
        verdict: row.verdict === true,
      }));
  }

  function refreshGate(): void {
    const pending = rows.filter((row) => !row.skipped && row.verdict === null).length;
    submitButton.disabled = pending > 0;
    status.textContent = pending > 0 ? `${pending} judgments remaining` : 'All pairs judged.';
  }

  async function post(items: JudgmentItem[]): Promise<void> {
    try {
      await api.submitJudgments(instance.instance_id, items);
      status.textContent = `Stored ${items.length} judgments.`;
    } catch (err) {
      status.textContent = err instanceof Error ? err.message : String(err);
    }
  }

  draftButton.addEventListener('click', () => void post(collect(false)));
  submitButton.addEventListener('click', () => void post(collect(false)));

  root.appendChild(draftButton);
  root.appendChild(submitButton);
  root.appendChild(status);
  refreshGate();
  return { root, rows, draftButton, submitButton, collect };
}
