/**
 * Bootstrap: token entry, task list, and view switching. One annotator
 * session per tab; nothing is cached beyond the in-memory token.
 */

import { ApiClient } from './api.ts';
import { renderEvaluation } from './evaluation.ts';
import { renderJudgment } from './judgment.ts';
import { renderRevision } from './revision.ts';
import './styles.css';

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

async function showTasks(root: HTMLElement, api: ApiClient): Promise<void> {
  root.replaceChildren();
  const heading = el('h2', undefined, 'Your tasks');
  root.appendChild(heading);

  const tasks = await api.tasks();
  const byPmid = new Map<string, string[]>();
  for (const task of tasks) {
    const pmid = task.instance_id.split(':')[0];
    byPmid.set(pmid, [...(byPmid.get(pmid) ?? []), task.instance_id]);
  }

  const list = el('ul', 'task-list');
  for (const [pmid, ids] of byPmid) {
    const item = el('li', 'task-item');
    const open = el('button', 'open-article', `Article ${pmid} (${ids.length} tasks)`);
    open.addEventListener('click', () => {
      void api.article(pmid).then((article) => {
        root.replaceChildren();
        root.appendChild(backButton(root, api));
        root.appendChild(renderEvaluation(article, api).root);
      });
    });
    item.appendChild(open);

    for (const instanceId of ids) {
      const judge = el('button', 'open-judgment', `judgments: ${instanceId}`);
      judge.addEventListener('click', () => {
        void api.instance(instanceId).then((instance) => {
          root.replaceChildren();
          root.appendChild(backButton(root, api));
          root.appendChild(renderJudgment(instance, api).root);
        });
      });
      item.appendChild(judge);
    }
    list.appendChild(item);
  }
  root.appendChild(list);

  const revisions = el('button', 'open-revisions', 'Revision queue');
  revisions.addEventListener('click', () => {
    void api.revisionQueue().then((queue) => {
      root.replaceChildren();
      root.appendChild(backButton(root, api));
      if (queue.length === 0) {
        root.appendChild(el('p', undefined, 'Nothing to revise.'));
        return;
      }
      for (const entry of queue) {
        root.appendChild(renderRevision(entry, api).root);
      }
    });
  });
  root.appendChild(revisions);
}

function backButton(root: HTMLElement, api: ApiClient): HTMLElement {
  const back = el('button', 'back', 'Back to tasks');
  back.addEventListener('click', () => void showTasks(root, api));
  return back;
}

function showLogin(root: HTMLElement): void {
  const form = el('div', 'login');
  form.appendChild(el('h2', undefined, 'Annotation sign-in'));
  const tokenInput = el('input') as HTMLInputElement;
  tokenInput.placeholder = 'Bearer token from registration';
  const start = el('button', undefined, 'Start');
  const status = el('p', 'status', '');
  start.addEventListener('click', () => {
    const api = new ApiClient(tokenInput.value.trim());
    showTasks(root, api).catch((err: unknown) => {
      status.textContent = err instanceof Error ? err.message : String(err);
    });
  });
  form.appendChild(tokenInput);
  form.appendChild(start);
  form.appendChild(status);
  root.replaceChildren(form);
}

const mount = document.getElementById('app');
if (mount) showLogin(mount);
