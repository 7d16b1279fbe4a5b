import { afterEach, beforeEach, describe, expect, it, vi } from 'vitest';

import { ApiClient } from '../src/api.ts';
import { HIGHLIGHT_CLASS } from '../src/highlight.ts';
import { renderRevision } from '../src/revision.ts';
import type { RevisionQueueEntry } from '../src/types.ts';
import { installFakeServer, makeInstance, type FakeServer } from './helpers.ts';

function queueEntry(): RevisionQueueEntry {
  return {
    ...makeInstance({ reference: { summary: 'Draft summary.', citations: [1] } }),
    ratings: [
      { annotator_id: 'med0', completeness: 2, conciseness: 5, traceability: 4 },
      { annotator_id: 'nlp0', completeness: 5, conciseness: 5, traceability: 5 },
    ],
    revised: false,
  };
}

describe('revision view', () => {
  let server: FakeServer;

  beforeEach(() => {
    server = installFakeServer();
    document.body.innerHTML = '';
    vi.stubGlobal(
      'fetch',
      vi.fn(async (input: RequestInfo | URL, init?: RequestInit) => {
        server.requests.push({
          method: init?.method ?? 'GET',
          path: String(input),
          body: init?.body ? JSON.parse(String(init.body)) : undefined,
        });
        return new Response(JSON.stringify({ stored: true }), { status: 201 });
      }),
    );
  });

  afterEach(() => {
    vi.unstubAllGlobals();
  });

  function mount() {
    const view = renderRevision(queueEntry(), new ApiClient('token'));
    document.body.appendChild(view.root);
    return view;
  }

  it('shows both annotators scores', () => {
    mount();
    const rows = [...document.querySelectorAll('.score-row')].map((el) => el.textContent);
    expect(rows).toHaveLength(2);
    expect(rows[0]).toContain('med0');
    expect(rows[1]).toContain('nlp0');
  });

  it('preselects the draft citations and live-highlights edits', () => {
    const view = mount();
    expect(view.selectedCitations()).toEqual([1]);
    view.citationBoxes[3].checked = true;
    view.citationBoxes[3].dispatchEvent(new Event('change'));
    const highlightedNow = [...document.querySelectorAll('.sentence')].flatMap((el, i) =>
      el.classList.contains(HIGHLIGHT_CLASS) ? [i] : [],
    );
    expect(highlightedNow).toEqual([1, 3]);
  });

  it('save disabled when the summary is emptied', () => {
    const view = mount();
    expect(view.saveButton.disabled).toBe(false);
    view.summaryInput.value = '   ';
    view.summaryInput.dispatchEvent(new Event('input'));
    expect(view.saveButton.disabled).toBe(true);
  });

  it('negative toggle posts null summary and citations', async () => {
    const view = mount();
    view.negativeToggle.checked = true;
    view.negativeToggle.dispatchEvent(new Event('change'));
    expect(view.saveButton.disabled).toBe(false);
    view.saveButton.click();
    await vi.waitFor(() => expect(server.requests).toHaveLength(1));
    expect(server.requests[0].body).toEqual({ summary: null, citations: null, rationale: '' });
  });

  it('saving posts the edited summary and citation selection', async () => {
    const view = mount();
    view.summaryInput.value = 'Corrected summary.';
    view.summaryInput.dispatchEvent(new Event('input'));
    view.citationBoxes[0].checked = true;
    view.citationBoxes[0].dispatchEvent(new Event('change'));
    view.saveButton.click();
    await vi.waitFor(() => expect(server.requests).toHaveLength(1));
    expect(server.requests[0].path).toBe('/api/instances/pm1:a/revision');
    expect(server.requests[0].body).toEqual({
      summary: 'Corrected summary.',
      citations: [0, 1],
      rationale: '',
    });
  });
});
