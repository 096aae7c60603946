import {
  PairsPage,
  Progress,
  VerdictAck,
  VerdictRequest,
  VersionConflictError,
} from './types.js';

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** Thin typed client over the assessment HTTP API. */
export class ApiClient {
  constructor(
    private readonly base: string = '',
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  async getPairs(after: number, limit: number, version?: string): Promise<PairsPage> {
    const params = new URLSearchParams({ after: String(after), limit: String(limit) });
    if (version !== undefined) params.set('version', version);
    const resp = await this.fetchImpl(`${this.base}/api/pairs?${params}`);
    if (resp.status === 409) throw new VersionConflictError();
    if (!resp.ok) throw new Error(`pairs request failed: ${resp.status}`);
    return (await resp.json()) as PairsPage;
  }

  async postVerdict(verdict: VerdictRequest): Promise<VerdictAck> {
    const resp = await this.fetchImpl(`${this.base}/api/verdicts`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(verdict),
    });
    if (!resp.ok) throw new Error(`verdict rejected: ${resp.status}`);
    return (await resp.json()) as VerdictAck;
  }

  async postSeen(pairs: { query_id: string; gallery_id: string }[]): Promise<Progress> {
    const resp = await this.fetchImpl(`${this.base}/api/seen`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({ pairs }),
    });
    if (!resp.ok) throw new Error(`seen batch rejected: ${resp.status}`);
    return (await resp.json()) as Progress;
  }

  async getProgress(): Promise<Progress> {
    const resp = await this.fetchImpl(`${this.base}/api/progress`);
    if (!resp.ok) throw new Error(`progress request failed: ${resp.status}`);
    return (await resp.json()) as Progress;
  }
}
