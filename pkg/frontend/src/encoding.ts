// Structure text encoding shared with the server: 6 characters over
// ".qudQUD" (lowercase blue, uppercase red; q square, u pyramid up,
// d pyramid down, dot empty), leftmost cell first.

export const STRUCTURE_LEN = 6;
export const CELL_CHARS = '.qudQUD';

export type PieceKind = 'square' | 'pyramid-up' | 'pyramid-down';

export interface CellView {
  color: 'red' | 'blue' | null;
  kind: PieceKind | null; // null = empty cell
}

const KIND_BY_OFFSET: PieceKind[] = ['square', 'pyramid-up', 'pyramid-down'];

export class EncodingError extends Error {
  constructor(message: string, readonly position: number) {
    super(message);
  }
}

export function decodeCell(ch: string, position = 0): CellView {
  const code = CELL_CHARS.indexOf(ch);
  if (ch.length !== 1 || code < 0) {
    throw new EncodingError(`unknown cell character '${ch}' at position ${position}`, position);
  }
  if (code === 0) return { color: null, kind: null };
  return {
    color: code <= 3 ? 'blue' : 'red',
    kind: KIND_BY_OFFSET[(code - 1) % 3],
  };
}

export function decodeStructure(text: string): CellView[] {
  if (text.length !== STRUCTURE_LEN) {
    throw new EncodingError(`structure text must be ${STRUCTURE_LEN} characters`, text.length);
  }
  return Array.from(text, (ch, i) => decodeCell(ch, i));
}

export function isValidStructure(text: string): boolean {
  try {
    decodeStructure(text);
    return true;
  } catch {
    return false;
  }
}

// Composer support: clicking a cell cycles empty -> blue square -> blue up
// -> blue down -> red square -> red up -> red down -> empty.
export function cycleCell(ch: string, backwards = false): string {
  const code = CELL_CHARS.indexOf(ch);
  if (code < 0) return '.';
  const n = CELL_CHARS.length;
  return CELL_CHARS[(code + (backwards ? n - 1 : 1)) % n];
}

export function emptyStructure(): string {
  return '.'.repeat(STRUCTURE_LEN);
}

export function withCell(text: string, position: number, ch: string): string {
  return text.slice(0, position) + ch + text.slice(position + 1);
}
