// DOM renderers: structures as rows of colored squares and triangles.

import { CellView, decodeStructure } from './encoding.js';

function cellElement(view: CellView): HTMLElement {
  const cell = document.createElement('div');
  cell.className = 'cell';
  if (view.kind === null) {
    cell.classList.add('empty');
    return cell;
  }
  const piece = document.createElement('div');
  piece.className = `piece ${view.kind} ${view.color}`;
  cell.append(piece);
  return cell;
}

export function renderStructureRow(text: string): HTMLElement {
  const row = document.createElement('div');
  row.className = 'structure';
  try {
    for (const view of decodeStructure(text)) row.append(cellElement(view));
  } catch {
    row.textContent = text;
    const badge = document.createElement('span');
    badge.className = 'error-badge';
    badge.textContent = 'invalid';
    row.append(badge);
  }
  return row;
}

export function renderReveal(s: string, y: number): HTMLElement {
  const item = document.createElement('div');
  item.className = `reveal ${y ? 'tag-green' : 'tag-red'}`;
  item.append(renderStructureRow(s));
  const tag = document.createElement('span');
  tag.className = 'tag';
  tag.textContent = y ? 'follows the rule' : 'breaks the rule';
  item.append(tag);
  return item;
}

export function clear(el: HTMLElement): void {
  while (el.firstChild) el.removeChild(el.firstChild);
}
