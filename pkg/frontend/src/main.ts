import { ApiClient } from './api.js';
import {
  BuilderState,
  CONJ_OPTIONS,
  OBJ_OPTIONS,
  QTY_OPTIONS,
  REL_OPTIONS,
  buildRule,
  initialBuilderState,
} from './builder.js';
import { cycleCell, emptyStructure, isValidStructure, withCell } from './encoding.js';
import { GameFlow } from './game.js';
import { clear, renderReveal, renderStructureRow } from './view.js';

const api = new ApiClient();
const game = new GameFlow(api);

const $ = (id: string): HTMLElement => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
};

// -- status and board -------------------------------------------------------

function showMessage(text: string, kind: 'info' | 'error' | 'win' = 'info'): void {
  const box = $('message');
  box.textContent = text;
  box.className = `message ${kind}`;
}

function renderSession(): void {
  const board = $('board');
  clear(board);
  for (const reveal of game.reveals) board.append(renderReveal(reveal.s, reveal.y));
  $('session-label').textContent = game.sessionId
    ? `game ${game.sessionId} — ${game.state?.status ?? ''}`
    : 'no game yet';
  const winBox = $('win');
  clear(winBox);
  if (game.isWon && game.secret) {
    const h = document.createElement('h2');
    h.textContent = 'You got it!';
    const p = document.createElement('p');
    p.textContent = `The secret rule was: "${game.secret}" — uncovered after ${game.reveals.length} revealed structures.`;
    winBox.append(h, p);
  }
  window.location.hash = game.sessionId ?? '';
}

// -- structure composer ------------------------------------------------------

let draft = emptyStructure();

function renderComposer(): void {
  const holder = $('composer-cells');
  clear(holder);
  draft.split('').forEach((ch, i) => {
    const btn = document.createElement('button');
    btn.type = 'button';
    btn.className = 'composer-cell';
    btn.title = 'click to change this cell';
    btn.append(renderStructureRow(withCell('......', i, ch)).children[i].cloneNode(true));
    btn.addEventListener('click', () => {
      draft = withCell(draft, i, cycleCell(ch));
      ($('draft-text') as HTMLInputElement).value = draft;
      renderComposer();
    });
    holder.append(btn);
  });
}

// -- rule builder ------------------------------------------------------------

const builder: BuilderState = initialBuilderState();

function select(id: string, options: readonly string[], onChange: (v: string) => void): void {
  const el = $(id) as HTMLSelectElement;
  clear(el);
  for (const opt of options) {
    const o = document.createElement('option');
    o.value = o.textContent = opt;
    el.append(o);
  }
  el.addEventListener('change', () => onChange(el.value));
}

function syncBuilderVisibility(): void {
  $('builder-rel-fields').style.display = builder.shape === 'relational' ? '' : 'none';
  $('builder-conj-fields').style.display = builder.shape === 'conjunction' ? '' : 'none';
  ($('guess-text') as HTMLInputElement).value = buildRule(builder);
}

function setupBuilder(): void {
  select('builder-shape', ['simple', 'relational', 'conjunction'], (v) => {
    builder.shape = v as BuilderState['shape'];
    syncBuilderVisibility();
  });
  select('builder-qty', QTY_OPTIONS, (v) => {
    builder.qty = v;
    syncBuilderVisibility();
  });
  select('builder-obj', OBJ_OPTIONS, (v) => {
    builder.obj = v;
    syncBuilderVisibility();
  });
  select('builder-rel', REL_OPTIONS, (v) => {
    builder.rel = v;
    syncBuilderVisibility();
  });
  select('builder-obj2', OBJ_OPTIONS, (v) => {
    builder.obj2 = v;
    syncBuilderVisibility();
  });
  select('builder-conj', CONJ_OPTIONS, (v) => {
    builder.conj = v;
    syncBuilderVisibility();
  });
  select('builder-qty2', QTY_OPTIONS, (v) => {
    builder.qty2 = v;
    syncBuilderVisibility();
  });
  select('builder-obj2-conj', OBJ_OPTIONS, (v) => {
    builder.obj2 = v;
    syncBuilderVisibility();
  });
  syncBuilderVisibility();
}

// -- actions -----------------------------------------------------------------

function busy<A extends unknown[]>(fn: (...args: A) => Promise<void>): (...args: A) => void {
  let inFlight = false; // one request per action button
  return (...args: A) => {
    if (inFlight) return;
    inFlight = true;
    fn(...args)
      .catch((err) => showMessage(String(err instanceof Error ? err.message : err), 'error'))
      .finally(() => {
        inFlight = false;
        renderSession();
      });
  };
}

const newGame = busy(async () => {
  const difficulty = ($('difficulty') as HTMLSelectElement).value;
  await game.start(difficulty === 'easy' ? 'easy' : undefined);
  showMessage('New game: two structures are revealed. Probe more, then guess the rule.');
});

const probe = busy(async () => {
  const text = ($('draft-text') as HTMLInputElement).value.trim();
  if (!isValidStructure(text)) {
    showMessage(`"${text}" is not a valid structure (6 characters of .qudQUD)`, 'error');
    return;
  }
  const y = await game.probe(text);
  showMessage(`"${text}" ${y ? 'follows' : 'breaks'} the secret rule.`);
});

const guess = busy(async () => {
  const rule = ($('guess-text') as HTMLInputElement).value.trim();
  const result = await game.guess(rule);
  if (result.verdict === 'equivalent') {
    showMessage(`Correct! The secret was "${result.secret}".`, 'win');
  } else if (result.verdict === 'not_equivalent') {
    showMessage(
      `Not the rule. Counterexample: "${result.counterexample?.s}" is tagged ` +
        `${result.counterexample?.y ? 'green' : 'red'} — see the board.`,
      'error',
    );
  } else {
    showMessage(`The master cannot parse that rule: ${result.message ?? ''}`, 'error');
  }
});

function init(): void {
  setupBuilder();
  renderComposer();
  ($('draft-text') as HTMLInputElement).value = draft;
  $('draft-text').addEventListener('input', () => {
    const v = ($('draft-text') as HTMLInputElement).value;
    if (isValidStructure(v)) {
      draft = v;
      renderComposer();
    }
  });
  $('new-game').addEventListener('click', () => newGame());
  $('probe').addEventListener('click', () => probe());
  $('guess').addEventListener('click', () => guess());

  const fromHash = window.location.hash.replace(/^#/, '');
  if (fromHash) {
    game
      .restore(fromHash)
      .then(() => {
        showMessage('Session restored.');
        renderSession();
      })
      .catch(() => showMessage('Could not restore that session; start a new game.', 'error'));
  }
}

init();
