/**
 * Typed client for the annotation service.
 *
 * The UI never mutates state except through these endpoints; all state lives
 * server-side and views re-fetch after writes.
 */

import type {
  ArticleDetail,
  InstanceDetail,
  JudgmentItem,
  Ratings,
  RevisionQueueEntry,
  TaskEntry,
} from './types.ts';

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export class ApiClient {
  constructor(
    private token: string,
    private base: string = '',
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const res = await fetch(`${this.base}${path}`, {
      method,
      headers: {
        'Content-Type': 'application/json',
        Authorization: `Bearer ${this.token}`,
      },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!res.ok) {
      let detail = res.statusText;
      try {
        const payload = await res.json();
        if (payload && typeof payload.detail === 'string') detail = payload.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(res.status, detail);
    }
    return res.json() as Promise<T>;
  }

  register(email: string, domain: string): Promise<{ id: string; token: string }> {
    return this.request('POST', '/api/register', { email, domain });
  }

  consent(dataUse: boolean, cookies: boolean): Promise<unknown> {
    return this.request('POST', '/api/consent', { data_use: dataUse, cookies });
  }

  tasks(): Promise<TaskEntry[]> {
    return this.request('GET', '/api/tasks');
  }

  instance(instanceId: string): Promise<InstanceDetail> {
    return this.request('GET', `/api/instances/${instanceId}`);
  }

  article(pmid: string): Promise<ArticleDetail> {
    return this.request('GET', `/api/articles/${pmid}`);
  }

  submitRatings(instanceId: string, ratings: Ratings): Promise<Ratings> {
    return this.request('POST', `/api/instances/${instanceId}/ratings`, ratings);
  }

  fetchRatings(instanceId: string): Promise<Ratings> {
    return this.request('GET', `/api/instances/${instanceId}/ratings`);
  }

  revisionQueue(): Promise<RevisionQueueEntry[]> {
    return this.request('GET', '/api/revisions');
  }

  submitRevision(
    instanceId: string,
    summary: string | null,
    citations: number[] | null,
    rationale: string,
  ): Promise<unknown> {
    return this.request('POST', `/api/instances/${instanceId}/revision`, {
      summary,
      citations,
      rationale,
    });
  }

  submitJudgments(instanceId: string, verdicts: JudgmentItem[]): Promise<unknown> {
    return this.request('POST', `/api/instances/${instanceId}/judgments`, { verdicts });
  }
}
