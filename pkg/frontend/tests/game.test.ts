// Full play-through against a scripted master whose secret is "zero red":
// a structure is green exactly when it holds no red piece. The client must
// show precisely what the server reveals and nothing it computed itself.

import { describe, expect, test } from 'vitest';

import { ApiClient, ApiError, FetchLike, Reveal, SessionState } from '../src/api.js';
import { GameFlow } from '../src/game.js';

const SECRET = 'zero red';
const PARAPHRASE = 'zero red or zero red';

function scriptedMaster() {
  const label = (s: string): number => (/[QUD]/.test(s) ? 0 : 1);
  const session: SessionState = {
    session_id: 'g123',
    status: 'open',
    difficulty: 'full',
    created_at: 1,
    reveals: [
      { s: '......', y: 1 },
      { s: 'Q.....', y: 0 },
    ],
    guesses: [],
    probe_count: 2,
  };
  const requests: { method: string; url: string; body?: unknown }[] = [];

  const reply = (status: number, payload: unknown) => ({
    ok: status < 400,
    status,
    json: async () => payload,
  });

  const publicState = (): SessionState => {
    const state = { ...session, reveals: [...session.reveals], guesses: [...session.guesses] };
    if (session.status !== 'won') delete state.secret;
    return state;
  };

  const fetchFn: FetchLike = async (url, init) => {
    const method = init?.method ?? 'GET';
    const body = init?.body ? JSON.parse(init.body as string) : undefined;
    requests.push({ method, url, body });

    if (method === 'GET' && url === '/api/games/g123') return reply(200, publicState());
    if (method === 'POST' && url === '/api/games') return reply(201, publicState());
    if (method === 'POST' && url === '/api/games/g123/probe') {
      const s = (body as { s: string }).s;
      if (!/^[.qudQUD]{6}$/.test(s)) return reply(400, { detail: `bad structure ${s}` });
      const reveal: Reveal = { s, y: label(s) };
      if (!session.reveals.some((r) => r.s === s)) session.reveals.push(reveal);
      return reply(200, reveal);
    }
    if (method === 'POST' && url === '/api/games/g123/guess') {
      const rule = (body as { rule: string }).rule;
      session.guesses.push({ rule, verdict: 'pending' });
      if (rule === SECRET || rule === PARAPHRASE) {
        session.status = 'won';
        session.secret = SECRET;
        session.guesses[session.guesses.length - 1].verdict = 'equivalent';
        return reply(200, { verdict: 'equivalent', secret: SECRET });
      }
      if (rule === 'zero blue') {
        // genuine counterexample: all-blue board satisfies the secret, not the guess
        const cx: Reveal = { s: 'q.....', y: label('q.....') };
        session.reveals.push(cx);
        session.guesses[session.guesses.length - 1].verdict = 'not_equivalent';
        return reply(200, { verdict: 'not_equivalent', counterexample: cx });
      }
      session.guesses[session.guesses.length - 1].verdict = 'malformed';
      return reply(200, { verdict: 'malformed', message: 'expected quantifier' });
    }
    return reply(404, { detail: `no route ${method} ${url}` });
  };

  return { fetchFn, session, requests };
}

describe('game loop', () => {
  test('create, probe, wrong guess with counterexample, paraphrase win', async () => {
    const master = scriptedMaster();
    const game = new GameFlow(new ApiClient(master.fetchFn));

    await game.start();
    expect(game.isOpen).toBe(true);
    expect(game.reveals).toHaveLength(2);
    expect(game.secret).toBeNull(); // nothing leaks while open

    const y = await game.probe('......');
    expect(y).toBe(1); // "zero red" tags the empty board green
    expect(game.reveals.map((r) => r.s)).toContain('......');

    const wrong = await game.guess('zero blue');
    expect(wrong.verdict).toBe('not_equivalent');
    expect(wrong.counterexample).toEqual({ s: 'q.....', y: 1 });
    // the counterexample arrives on the board with its server-side label
    expect(game.reveals).toContainEqual({ s: 'q.....', y: 1 });
    expect(game.isOpen).toBe(true);

    const win = await game.guess(PARAPHRASE);
    expect(win.verdict).toBe('equivalent');
    expect(win.secret).toBe(SECRET);
    expect(game.isWon).toBe(true);
    expect(game.secret).toBe(SECRET);
  });

  test('reveals always equal the server state, never local inference', async () => {
    const master = scriptedMaster();
    const game = new GameFlow(new ApiClient(master.fetchFn));
    await game.start();
    await game.probe('uudd..');
    await game.probe('UU....');
    expect(game.reveals).toEqual(master.session.reveals);
  });

  test('malformed guess is surfaced as a verdict', async () => {
    const master = scriptedMaster();
    const game = new GameFlow(new ApiClient(master.fetchFn));
    await game.start();
    const res = await game.guess('at least one pointing up');
    expect(res.verdict).toBe('malformed');
    expect(res.message).toMatch(/quantifier/);
    expect(game.isOpen).toBe(true);
  });

  test('restore picks up an existing session via GET', async () => {
    const master = scriptedMaster();
    master.session.reveals.push({ s: 'qq....', y: 1 });
    const game = new GameFlow(new ApiClient(master.fetchFn));
    await game.restore('g123');
    expect(game.sessionId).toBe('g123');
    expect(game.reveals).toHaveLength(3);
    expect(master.requests[0]).toMatchObject({ method: 'GET', url: '/api/games/g123' });
  });

  test('http errors raise ApiError with the server detail', async () => {
    const master = scriptedMaster();
    const game = new GameFlow(new ApiClient(master.fetchFn));
    await game.start();
    await expect(game.probe('bogus!')).rejects.toThrowError(ApiError);
    await expect(game.probe('bogus!')).rejects.toThrowError(/bad structure/);
  });
});
