/**
 * Phase-I evaluation view.
 *
 * Left panel: the article as indexed sentences. Right panel: one summary card
 * per aspect, each with three 5-point rating controls. Hovering a card
 * highlights exactly the sentences it cites; the highlight stays until
 * another card is hovered. Submit stays disabled until all three metrics are
 * set, and posted scores are re-fetched so the card shows what the server
 * stored.
 */

import type { ApiClient } from './api.ts';
import { HighlightController } from './highlight.ts';
import {
  ASPECT_NAMES,
  RATING_METRICS,
  RATING_RUBRIC,
  type ArticleDetail,
  type InstanceDetail,
  type RatingMetric,
  type Ratings,
} from './types.ts';

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

function renderSentencePanel(sentences: string[]): { panel: HTMLElement; items: HTMLElement[] } {
  const panel = el('div', 'article-panel');
  const list = el('ol', 'sentence-list');
  list.start = 0;
  const items = sentences.map((text, index) => {
    const item = el('li', 'sentence');
    item.dataset.index = String(index);
    item.textContent = text;
    list.appendChild(item);
    return item;
  });
  panel.appendChild(list);
  return { panel, items };
}

class RatingControl {
  readonly root: HTMLElement;
  private buttons: HTMLButtonElement[] = [];
  value: number | null = null;

  constructor(
    readonly metric: RatingMetric,
    private onChange: () => void,
  ) {
    this.root = el('div', 'rating-control');
    this.root.dataset.metric = metric;
    this.root.appendChild(el('span', 'metric-name', metric));
    const stars = el('span', 'stars');
    for (let score = 1; score <= 5; score++) {
      const button = el('button', 'star') as HTMLButtonElement;
      button.type = 'button';
      button.textContent = '☆';
      button.dataset.score = String(score);
      // rubric text for this star level, per the scoring guidelines
      button.title = RATING_RUBRIC[metric][5 - score];
      button.addEventListener('click', () => this.set(score));
      this.buttons.push(button);
      stars.appendChild(button);
    }
    this.root.appendChild(stars);
  }

  set(score: number): void {
    this.value = score;
    this.buttons.forEach((b, i) => {
      b.textContent = i < score ? '★' : '☆';
      b.classList.toggle('selected', i < score);
    });
    this.onChange();
  }
}

export class SummaryCard {
  readonly root: HTMLElement;
  readonly controls: RatingControl[];
  private submitButton: HTMLButtonElement;
  private status: HTMLElement;

  constructor(
    readonly instance: InstanceDetail,
    private api: ApiClient,
    onHover: (citations: number[] | null) => void,
  ) {
    this.root = el('section', 'summary-card');
    this.root.dataset.instanceId = instance.instance_id;
    this.root.addEventListener('mouseenter', () => onHover(instance.reference.citations));

    this.root.appendChild(el('h3', 'aspect-name', ASPECT_NAMES[instance.aspect]));
    const summary = instance.reference.summary ?? 'Unknown.';
    this.root.appendChild(el('p', 'summary-text', summary));
    const cites = instance.reference.citations;
    this.root.appendChild(
      el('p', 'citation-list', cites === null ? 'Citations: Null.' : `Citations: [${cites.join(', ')}]`),
    );

    this.controls = RATING_METRICS.map(
      (metric) => new RatingControl(metric, () => this.refreshGate()),
    );
    this.controls.forEach((c) => this.root.appendChild(c.root));

    this.submitButton = el('button', 'submit-rating', 'Submit ratings') as HTMLButtonElement;
    this.submitButton.type = 'button';
    this.submitButton.disabled = true;
    this.submitButton.addEventListener('click', () => void this.submit());
    this.root.appendChild(this.submitButton);
    this.status = el('p', 'status', '');
    this.root.appendChild(this.status);
  }

  /** Submit enables only once every metric has a score. */
  ratings(): Ratings | null {
    const entries = this.controls.map((c) => [c.metric, c.value] as const);
    if (entries.some(([, value]) => value === null)) return null;
    return Object.fromEntries(entries) as Ratings;
  }

  refreshGate(): void {
    this.submitButton.disabled = this.ratings() === null;
    if (this.submitButton.disabled) {
      this.status.textContent = 'Rate all three metrics to submit.';
    } else {
      this.status.textContent = '';
    }
  }

  async submit(): Promise<void> {
    const ratings = this.ratings();
    if (ratings === null) {
      this.status.textContent = 'Rate all three metrics to submit.';
      return;
    }
    try {
      await this.api.submitRatings(this.instance.instance_id, ratings);
      const stored = await this.api.fetchRatings(this.instance.instance_id);
      this.status.textContent = `Saved: ${RATING_METRICS.map((m) => `${m}=${stored[m]}`).join(' ')}`;
      this.root.classList.add('rated');
    } catch (err) {
      this.status.textContent = err instanceof Error ? err.message : String(err);
    }
  }
}

export interface EvaluationView {
  root: HTMLElement;
  highlight: HighlightController;
  cards: SummaryCard[];
}

export function renderEvaluation(article: ArticleDetail, api: ApiClient): EvaluationView {
  const root = el('div', 'evaluation-view');
  const { panel, items } = renderSentencePanel(article.sentences);
  const highlight = new HighlightController(items);

  const cardsPanel = el('div', 'cards-panel');
  const cards = article.instances.map((instance) => {
    const card = new SummaryCard(instance, api, (citations) => highlight.apply(citations));
    cardsPanel.appendChild(card.root);
    return card;
  });

  root.appendChild(panel);
  root.appendChild(cardsPanel);
  return { root, highlight, cards };
}
