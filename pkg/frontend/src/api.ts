// Thin typed client over the game-master HTTP API. The fetch function is
// injectable so the game flow can be tested against a scripted server.

export interface Reveal {
  s: string;
  y: number;
}

export interface GuessRecord {
  rule: string;
  verdict: string;
}

export interface SessionState {
  session_id: string;
  status: 'open' | 'won' | 'abandoned';
  difficulty: string;
  created_at: number;
  reveals: Reveal[];
  guesses: GuessRecord[];
  probe_count: number;
  secret?: string;
}

export interface GuessResult {
  verdict: 'equivalent' | 'not_equivalent' | 'malformed';
  counterexample?: Reveal;
  secret?: string;
  message?: string;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<{
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
}>;

export class ApiError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
    private readonly base = '',
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const res = await this.fetchFn(this.base + path, {
      method,
      headers: body === undefined ? undefined : { 'content-type': 'application/json' },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = (await res.json().catch(() => null)) as Record<string, unknown> | null;
    if (!res.ok) {
      const detail = payload && 'detail' in payload ? String(payload.detail) : `HTTP ${res.status}`;
      throw new ApiError(detail, res.status);
    }
    return payload as T;
  }

  createGame(difficulty?: string): Promise<SessionState> {
    return this.request('POST', '/api/games', difficulty ? { difficulty } : {});
  }

  getGame(sessionId: string): Promise<SessionState> {
    return this.request('GET', `/api/games/${sessionId}`);
  }

  probe(sessionId: string, structure: string): Promise<Reveal> {
    return this.request('POST', `/api/games/${sessionId}/probe`, { s: structure });
  }

  guess(sessionId: string, rule: string): Promise<GuessResult> {
    return this.request('POST', `/api/games/${sessionId}/guess`, { rule });
  }

  health(): Promise<{ status: string }> {
    return this.request('GET', '/api/health');
  }
}
