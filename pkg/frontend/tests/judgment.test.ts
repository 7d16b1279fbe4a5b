import { afterEach, beforeEach, describe, expect, it, vi } from 'vitest';

import { ApiClient } from '../src/api.ts';
import { renderJudgment } from '../src/judgment.ts';
import { installFakeServer, makeInstance, type FakeServer } from './helpers.ts';

function judgeable() {
  return makeInstance({
    output: { summary: 'Generated summary.', citations: [1, 4] },
    ref_subclaims: ['ref claim A', 'ref claim B', 'ref claim C'],
    gen_subclaims: ['gen claim X', 'gen claim Y', 'gen claim Z'],
  });
}

describe('judgment checklist', () => {
  let server: FakeServer;

  beforeEach(() => {
    server = installFakeServer();
    document.body.innerHTML = '';
  });

  afterEach(() => {
    vi.unstubAllGlobals();
  });

  function mount(instance = judgeable()) {
    const view = renderJudgment(instance, new ApiClient('token'));
    document.body.appendChild(view.root);
    return view;
  }

  it('builds rows in procedure order: recall, citation support, precision', () => {
    const view = mount();
    const blocks = view.rows.map((r) => r.block);
    expect(blocks).toEqual([
      ...Array(3).fill('claim_recall'),
      ...Array(6).fill('citation_support'),
      ...Array(3).fill('claim_precision'),
    ]);
  });

  it('claim-recall rows pair the generated summary with each reference subclaim', () => {
    const view = mount();
    const recall = view.rows.filter((r) => r.block === 'claim_recall');
    expect(recall.map((r) => r.premise)).toEqual(Array(3).fill('Generated summary.'));
    expect(recall.map((r) => r.hypothesis)).toEqual(['ref claim A', 'ref claim B', 'ref claim C']);
  });

  it('two citations and three generated subclaims give at most six support rows', () => {
    const view = mount();
    const support = view.rows.filter((r) => r.block === 'citation_support');
    expect(support).toHaveLength(6);
    expect(support.map((r) => r.citation)).toEqual([1, 1, 1, 4, 4, 4]);
    expect(support[0].premise).toBe('Sentence one.');
    expect(support[3].premise).toBe('Sentence four.');
  });

  it('a yes short-circuits the remaining rows of that citation', () => {
    const view = mount();
    const support = view.rows.filter((r) => r.block === 'citation_support' && r.citation === 1);
    (support[0].root.querySelector('.yes') as HTMLButtonElement).click();
    expect(support[1].skipped).toBe(true);
    expect(support[2].skipped).toBe(true);
    // the other citation's rows remain live
    const other = view.rows.filter((r) => r.citation === 4);
    expect(other.every((r) => !r.skipped)).toBe(true);
  });

  it('a no does not short-circuit', () => {
    const view = mount();
    const support = view.rows.filter((r) => r.citation === 1);
    (support[0].root.querySelector('.no') as HTMLButtonElement).click();
    expect(support[1].skipped).toBe(false);
  });

  it('submit disabled until every live row is answered', () => {
    const view = mount();
    expect(view.submitButton.disabled).toBe(true);
    for (const row of view.rows) {
      if (!row.skipped) (row.root.querySelector('.yes') as HTMLButtonElement).click();
    }
    expect(view.submitButton.disabled).toBe(false);
  });

  it('all-yes submission stores metrics-schema records with every verdict true', async () => {
    const view = mount();
    for (const row of view.rows) {
      if (!row.skipped) (row.root.querySelector('.yes') as HTMLButtonElement).click();
    }
    view.submitButton.click();
    await vi.waitFor(() => expect(server.judgments.length).toBeGreaterThan(0));

    expect(server.judgments.every((j) => j.verdict === true)).toBe(true);
    expect(server.judgments.every((j) => j.judge === 'human')).toBe(true);
    // every reference subclaim is covered against the generated summary, so
    // a downstream claim-recall computation over these verdicts is 3/3
    const recallPairs = server.judgments.filter((j) => j.premise === 'Generated summary.');
    expect(recallPairs.map((j) => j.hypothesis).sort()).toEqual([
      'ref claim A',
      'ref claim B',
      'ref claim C',
    ]);
  });

  it('partial answers can be saved as a draft', async () => {
    const view = mount();
    (view.rows[0].root.querySelector('.yes') as HTMLButtonElement).click();
    view.draftButton.click();
    await vi.waitFor(() => expect(server.judgments).toHaveLength(1));
    expect(view.submitButton.disabled).toBe(true);
  });

  it('negative outputs have nothing to judge', () => {
    const view = mount(makeInstance({ output: { summary: null, citations: null } }));
    expect(view.rows).toHaveLength(0);
  });
});
