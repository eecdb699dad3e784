/**
 * Thin client for the story service. This module is the frontend's only
 * contact with the backend; everything else works off StoryData and the
 * on-the-fly responses fetched here.
 */

import type {
  AskStoryResponse,
  AskTextResponse,
  ColorCategorization,
  EntityScope,
  ServiceErrorBody,
  StoryData,
  StoryListing,
  TraitRanking,
} from './types.js';

export class ServiceError extends Error {
  readonly status: number;
  readonly code: string;

  constructor(status: number, code: string, message: string) {
    super(message);
    this.name = 'ServiceError';
    this.status = status;
    this.code = code;
  }
}

export interface AskScope {
  chapter?: number;
  scene?: number;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ServiceClient {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.base = baseUrl.replace(/\/+$/, '');
    const impl = fetchImpl ?? globalThis.fetch;
    if (!impl) throw new Error('no fetch implementation available');
    this.fetchImpl = impl.bind(globalThis);
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(this.base + path, init);
    if (!resp.ok) {
      let code = 'http_error';
      let message = `${resp.status} for ${path}`;
      try {
        const body = (await resp.json()) as ServiceErrorBody;
        code = body.error.code;
        message = body.error.message;
      } catch {
        // non-JSON error body; keep the fallback message
      }
      throw new ServiceError(resp.status, code, message);
    }
    return (await resp.json()) as T;
  }

  private post<T>(path: string, body: unknown, signal?: AbortSignal): Promise<T> {
    return this.request<T>(path, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(body),
      signal,
    });
  }

  listStories(signal?: AbortSignal): Promise<StoryListing[]> {
    return this.request<StoryListing[]>('/stories', { signal });
  }

  /** Fetch a story, honoring ETags so unchanged stories cost no body transfer. */
  async story(
    id: string,
    etag?: string,
    signal?: AbortSignal,
  ): Promise<{ story: StoryData | null; etag: string; notModified: boolean }> {
    const headers: Record<string, string> = {};
    if (etag) headers['if-none-match'] = etag;
    const resp = await this.fetchImpl(`${this.base}/stories/${encodeURIComponent(id)}`, {
      headers,
      signal,
    });
    if (resp.status === 304) {
      return { story: null, etag: etag ?? '', notModified: true };
    }
    if (!resp.ok) {
      const body = (await resp.json()) as ServiceErrorBody;
      throw new ServiceError(resp.status, body.error.code, body.error.message);
    }
    return {
      story: (await resp.json()) as StoryData,
      etag: resp.headers.get('etag') ?? '',
      notModified: false,
    };
  }

  async chapterText(id: string, chapterIndex: number, signal?: AbortSignal): Promise<string> {
    const resp = await this.fetchImpl(
      `${this.base}/stories/${encodeURIComponent(id)}/chapters/${chapterIndex}/text`,
      { signal },
    );
    if (!resp.ok) {
      const body = (await resp.json()) as ServiceErrorBody;
      throw new ServiceError(resp.status, body.error.code, body.error.message);
    }
    return await resp.text();
  }

  /** Scope the question to a chapter or scene by passing AskScope fields. */
  ask(
    id: string,
    question: string,
    scope: AskScope = {},
    signal?: AbortSignal,
  ): Promise<AskStoryResponse | AskTextResponse> {
    let wireScope: 'story' | { chapter: number; scene?: number } = 'story';
    if (scope.chapter !== undefined) {
      wireScope =
        scope.scene !== undefined
          ? { chapter: scope.chapter, scene: scope.scene }
          : { chapter: scope.chapter };
    }
    return this.post(
      `/stories/${encodeURIComponent(id)}/ask`,
      { question, scope: wireScope },
      signal,
    );
  }

  rankByTrait(
    id: string,
    trait: string,
    scope: EntityScope,
    signal?: AbortSignal,
  ): Promise<TraitRanking> {
    return this.post(`/stories/${encodeURIComponent(id)}/rank-by-trait`, { trait, scope }, signal);
  }

  categorizeByColor(
    id: string,
    attribute: string,
    scope: EntityScope,
    signal?: AbortSignal,
  ): Promise<ColorCategorization> {
    return this.post(
      `/stories/${encodeURIComponent(id)}/categorize-by-color`,
      { attribute, scope },
      signal,
    );
  }
}

/**
 * One in-flight request per view: starting a new request aborts the previous
 * one, so a stale response can never overwrite fresher state.
 */
export class RequestSlot {
  private controller: AbortController | null = null;

  async run<T>(task: (signal: AbortSignal) => Promise<T>): Promise<T> {
    this.controller?.abort();
    const controller = new AbortController();
    this.controller = controller;
    try {
      return await task(controller.signal);
    } finally {
      if (this.controller === controller) this.controller = null;
    }
  }

  cancel(): void {
    this.controller?.abort();
    this.controller = null;
  }
}
