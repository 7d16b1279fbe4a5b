/** Hover-highlight bookkeeping for the article panel. */

export const HIGHLIGHT_CLASS = 'highlighted';

/**
 * Applies citation highlights to the sentence list. Each apply() replaces the
 * previous highlight set entirely, so the visible set always equals the last
 * hovered card's citations and persists until the next hover.
 */
export class HighlightController {
  constructor(private sentences: HTMLElement[]) {}

  apply(citations: number[] | null): void {
    const wanted = new Set(citations ?? []);
    this.sentences.forEach((el, index) => {
      el.classList.toggle(HIGHLIGHT_CLASS, wanted.has(index));
    });
  }

  highlighted(): number[] {
    const out: number[] = [];
    this.sentences.forEach((el, index) => {
      if (el.classList.contains(HIGHLIGHT_CLASS)) out.push(index);
    });
    return out;
  }
}
