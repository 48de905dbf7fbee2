// Game flow state. All labels come from the server: after every mutating
// call the session is re-fetched, so the client can never invent a tag.

import { ApiClient, GuessResult, SessionState } from './api.js';

export class GameFlow {
  state: SessionState | null = null;
  lastGuess: GuessResult | null = null;

  constructor(private readonly api: ApiClient) {}

  get sessionId(): string | null {
    return this.state?.session_id ?? null;
  }

  get isOpen(): boolean {
    return this.state?.status === 'open';
  }

  get isWon(): boolean {
    return this.state?.status === 'won';
  }

  get reveals(): SessionState['reveals'] {
    return this.state?.reveals ?? [];
  }

  get secret(): string | null {
    return this.state?.secret ?? null;
  }

  async start(difficulty?: string): Promise<SessionState> {
    this.state = await this.api.createGame(difficulty);
    this.lastGuess = null;
    return this.state;
  }

  async restore(sessionId: string): Promise<SessionState> {
    this.state = await this.api.getGame(sessionId);
    return this.state;
  }

  async probe(structure: string): Promise<number> {
    if (!this.state) throw new Error('no active session');
    const reveal = await this.api.probe(this.state.session_id, structure);
    this.state = await this.api.getGame(this.state.session_id);
    return reveal.y;
  }

  async guess(rule: string): Promise<GuessResult> {
    if (!this.state) throw new Error('no active session');
    const result = await this.api.guess(this.state.session_id, rule);
    this.lastGuess = result;
    this.state = await this.api.getGame(this.state.session_id);
    return result;
  }
}
