export interface PairCard {
  rank: number;
  query_id: string;
  gallery_id: string;
  score: number;
  q_start: number;
  q_end: number;
  g_start: number;
  g_end: number;
  k: number;
  query_thumbs: string[];
  gallery_thumbs: string[];
  verdict: 'duplicate' | 'negative' | null;
}

export interface PairsPage {
  version: string;
  total: number;
  pairs: PairCard[];
}

export interface Progress {
  seen: number;
  found: number;
  negatives: number;
  fraction: number | null;
  estimated_total: number | null;
  status: string;
}

export interface VerdictRequest {
  query: { dataset: string; video_id: string };
  gallery: { dataset: string; video_id: string };
  label: 'duplicate' | 'negative';
  assessor: string;
}

export interface VerdictAck {
  seq: number;
  effective_label: 'duplicate' | 'negative';
}

export class VersionConflictError extends Error {
  constructor() {
    super('ranked pair list changed on the server');
    this.name = 'VersionConflictError';
  }
}
