/**
 * Phase-II revision view: the article on the left; on the right the draft
 * summary, both annotators' scores, an editable summary and the citation
 * selection. Saving posts to the revision endpoint and is disabled while the
 * edit is invalid (empty summary unless the instance is marked negative).
 */

import type { ApiClient } from './api.ts';
import { HighlightController } from './highlight.ts';
import { ASPECT_NAMES, RATING_METRICS, type RevisionQueueEntry } from './types.ts';

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

export interface RevisionView {
  root: HTMLElement;
  highlight: HighlightController;
  summaryInput: HTMLTextAreaElement;
  negativeToggle: HTMLInputElement;
  citationBoxes: HTMLInputElement[];
  saveButton: HTMLButtonElement;
  selectedCitations(): number[];
}

export function renderRevision(entry: RevisionQueueEntry, api: ApiClient): RevisionView {
  const root = el('div', 'revision-view');

  const articlePanel = el('div', 'article-panel');
  const list = el('ol', 'sentence-list');
  list.start = 0;
  const items = entry.sentences.map((text, index) => {
    const item = el('li', 'sentence');
    item.dataset.index = String(index);
    item.textContent = text;
    list.appendChild(item);
    return item;
  });
  articlePanel.appendChild(list);
  const highlight = new HighlightController(items);

  const editor = el('div', 'revision-editor');
  editor.appendChild(el('h3', 'aspect-name', ASPECT_NAMES[entry.aspect]));
  editor.appendChild(el('p', 'summary-text', `Draft: ${entry.reference.summary ?? 'Unknown.'}`));

  const scores = el('div', 'score-table');
  for (const rating of entry.ratings) {
    scores.appendChild(
      el(
        'p',
        'score-row',
        `${rating.annotator_id}: ${RATING_METRICS.map((m) => `${m}=${rating[m]}`).join(' ')}`,
      ),
    );
  }
  editor.appendChild(scores);

  const negativeToggle = el('input') as HTMLInputElement;
  negativeToggle.type = 'checkbox';
  negativeToggle.className = 'negative-toggle';
  const negativeLabel = el('label', 'negative-label', ' no relevant information (negative)');
  negativeLabel.prepend(negativeToggle);
  editor.appendChild(negativeLabel);

  const summaryInput = el('textarea', 'summary-input') as HTMLTextAreaElement;
  summaryInput.value = entry.reference.summary ?? '';
  editor.appendChild(summaryInput);

  const citationBoxes: HTMLInputElement[] = [];
  const citationPicker = el('div', 'citation-picker');
  const preset = new Set(entry.reference.citations ?? []);
  entry.sentences.forEach((_, index) => {
    const box = el('input') as HTMLInputElement;
    box.type = 'checkbox';
    box.dataset.index = String(index);
    box.checked = preset.has(index);
    const label = el('label', 'citation-option', ` ${index}`);
    label.prepend(box);
    citationPicker.appendChild(label);
    citationBoxes.push(box);
    box.addEventListener('change', () => {
      highlight.apply(selectedCitations());
      refreshGate();
    });
  });
  editor.appendChild(citationPicker);

  const rationaleInput = el('textarea', 'rationale-input') as HTMLTextAreaElement;
  rationaleInput.placeholder = 'Rationale for the revision';
  editor.appendChild(rationaleInput);

  const saveButton = el('button', 'save-revision', 'Save revision') as HTMLButtonElement;
  saveButton.type = 'button';
  const status = el('p', 'status', '');
  editor.appendChild(saveButton);
  editor.appendChild(status);

  function selectedCitations(): number[] {
    return citationBoxes.filter((b) => b.checked).map((b) => Number(b.dataset.index));
  }

  function refreshGate(): void {
    if (negativeToggle.checked) {
      saveButton.disabled = false;
      return;
    }
    saveButton.disabled = summaryInput.value.trim() === '';
  }

  negativeToggle.addEventListener('change', () => {
    summaryInput.disabled = negativeToggle.checked;
    citationBoxes.forEach((b) => (b.disabled = negativeToggle.checked));
    refreshGate();
  });
  summaryInput.addEventListener('input', refreshGate);
  refreshGate();

  saveButton.addEventListener('click', () => {
    const negative = negativeToggle.checked;
    void api
      .submitRevision(
        entry.instance_id,
        negative ? null : summaryInput.value.trim(),
        negative ? null : selectedCitations(),
        rationaleInput.value,
      )
      .then(() => {
        status.textContent = 'Revision saved.';
        root.classList.add('revised');
      })
      .catch((err: unknown) => {
        status.textContent = err instanceof Error ? err.message : String(err);
      });
  });

  root.appendChild(articlePanel);
  root.appendChild(editor);
  return { root, highlight, summaryInput, negativeToggle, citationBoxes, saveButton, selectedCitations };
}
