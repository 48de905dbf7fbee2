// Grammar-guided rule composition. The dropdown options are exactly the
// grammar's alternatives, so every built string is a valid rule; free
// text stays available for the adventurous (the server reports parse
// errors).

export const QTY_OPTIONS = [
  'at_least 1',
  'at_least 2',
  'exactly 1',
  'exactly 2',
  'at_most 1',
  'at_most 2',
  'zero',
] as const;

const COLORS = ['red', 'blue'] as const;
const SHAPES = ['pyramid pointing_up', 'pyramid pointing_down', 'pyramid', 'block'] as const;

export const OBJ_OPTIONS: readonly string[] = [
  ...COLORS,
  ...SHAPES,
  ...COLORS.flatMap((c) => SHAPES.map((s) => `${c} ${s}`)),
];

export const REL_OPTIONS = ['touching', 'surrounded_by', 'at_the_right_of'] as const;
export const CONJ_OPTIONS = ['and', 'or'] as const;

export type RuleShape = 'simple' | 'relational' | 'conjunction';

export interface BuilderState {
  shape: RuleShape;
  qty: string;
  obj: string;
  rel: string; // relational only
  obj2: string; // relational object / conjunction right object
  conj: string; // conjunction only
  qty2: string; // conjunction right quantifier
}

export function initialBuilderState(): BuilderState {
  return {
    shape: 'simple',
    qty: QTY_OPTIONS[0],
    obj: OBJ_OPTIONS[0],
    rel: REL_OPTIONS[0],
    obj2: OBJ_OPTIONS[0],
    conj: CONJ_OPTIONS[0],
    qty2: QTY_OPTIONS[0],
  };
}

export function buildRule(state: BuilderState): string {
  switch (state.shape) {
    case 'simple':
      return `${state.qty} ${state.obj}`;
    case 'relational':
      return `${state.qty} ${state.obj} ${state.rel} ${state.obj2}`;
    case 'conjunction':
      return `${state.qty} ${state.obj} ${state.conj} ${state.qty2} ${state.obj2}`;
  }
}
