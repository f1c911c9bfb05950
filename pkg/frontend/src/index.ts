export { FigureSpec, Kind, KINDS, renderFigure } from './figures'
export { SchemaError, parseCsv } from './csv'
export { run } from './cli'
