/** In-memory fake of the annotation service for DOM tests. */

import { vi } from 'vitest';

import type { InstanceDetail, JudgmentItem, Ratings } from '../src/types.ts';

export interface FakeServer {
  ratings: Map<string, Ratings>;
  judgments: Array<JudgmentItem & { instance_id: string; judge: string }>;
  requests: Array<{ method: string; path: string; body: unknown }>;
}

export function installFakeServer(): FakeServer {
  const server: FakeServer = { ratings: new Map(), judgments: [], requests: [] };

  const fetchMock = vi.fn(async (input: RequestInfo | URL, init?: RequestInit) => {
    const path = String(input);
    const method = init?.method ?? 'GET';
    const body = init?.body ? JSON.parse(String(init.body)) : undefined;
    server.requests.push({ method, path, body });

    const respond = (status: number, payload: unknown) =>
      new Response(JSON.stringify(payload), {
        status,
        headers: { 'Content-Type': 'application/json' },
      });

    let match = path.match(/^\/api\/instances\/([^/]+)\/ratings$/);
    if (match) {
      const id = match[1];
      if (method === 'POST') {
        server.ratings.set(id, body as Ratings);
        return respond(201, body);
      }
      const stored = server.ratings.get(id);
      return stored ? respond(200, stored) : respond(404, { detail: 'no rating submitted' });
    }

    match = path.match(/^\/api\/instances\/([^/]+)\/judgments$/);
    if (match && method === 'POST') {
      const id = match[1];
      const items = (body as { verdicts: JudgmentItem[] }).verdicts;
      for (const item of items) {
        server.judgments.push({ ...item, instance_id: id, judge: 'human' });
      }
      return respond(201, { instance_id: id, stored: items.length, complete: items.length > 0 });
    }

    return respond(404, { detail: `unhandled ${method} ${path}` });
  });

  vi.stubGlobal('fetch', fetchMock);
  return server;
}

export function makeInstance(overrides: Partial<InstanceDetail> = {}): InstanceDetail {
  return {
    instance_id: 'pm1:a',
    pmid: 'pm1',
    aspect: 'a',
    sentences: [
      'Sentence zero.',
      'Sentence one.',
      'Sentence two.',
      'Sentence three.',
      'Sentence four.',
      'Sentence five.',
    ],
    reference: { summary: 'Reference summary.', citations: [0, 5] },
    output: null,
    ref_subclaims: null,
    gen_subclaims: null,
    ...overrides,
  };
}
