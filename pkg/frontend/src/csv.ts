import { readFileSync } from 'fs'

export class SchemaError extends Error {
  readonly column: string
  constructor(column: string, message: string) {
    super(message)
    this.column = column
  }
}

export interface Table {
  header: string[]
  rows: number[][]
}

export function parseCsv(path: string): Table {
  const text = readFileSync(path, 'utf8')
  const lines = text.split('\n').filter((l) => l.trim().length > 0)
  if (lines.length === 0) {
    throw new SchemaError('(header)', `${path}: empty file, expected a header row`)
  }
  const header = lines[0].split(',').map((h) => h.trim())
  const rows: number[][] = []
  for (const line of lines.slice(1)) {
    const cells = line.split(',')
    if (cells.length !== header.length) {
      throw new SchemaError(header[Math.min(cells.length, header.length) - 1] ?? '(row)',
        `${path}: row has ${cells.length} cells, header has ${header.length}`)
    }
    rows.push(cells.map((c) => (c.trim() === '' ? NaN : Number(c))))
  }
  return { header, rows }
}

/** Exact fixed columns, e.g. x,value. */
export function expectExact(t: Table, columns: string[], path: string): void {
  for (let i = 0; i < columns.length; i++) {
    if (t.header[i] !== columns[i]) {
      throw new SchemaError(columns[i],
        `${path}: expected column ${i + 1} to be '${columns[i]}', found '${t.header[i] ?? '(missing)'}'`)
    }
  }
  if (t.header.length !== columns.length) {
    throw new SchemaError(t.header[columns.length],
      `${path}: unexpected extra column '${t.header[columns.length]}'`)
  }
}

/** A time column followed by one or more series columns with a fixed prefix,
 *  e.g. t,x1,...,xN or t,core1,...,coreM. */
export function expectSeries(t: Table, timeCol: string, prefix: string, path: string): number {
  if (t.header[0] !== timeCol) {
    throw new SchemaError(timeCol,
      `${path}: expected first column '${timeCol}', found '${t.header[0] ?? '(missing)'}'`)
  }
  if (t.header.length < 2) {
    throw new SchemaError(`${prefix}1`,
      `${path}: no series columns; expected '${prefix}1' after '${timeCol}'`)
  }
  for (let i = 1; i < t.header.length; i++) {
    const want = `${prefix}${i}`
    if (t.header[i] !== want) {
      throw new SchemaError(want,
        `${path}: expected column ${i + 1} to be '${want}', found '${t.header[i]}'`)
    }
  }
  return t.header.length - 1
}

export function column(t: Table, i: number): number[] {
  return t.rows.map((r) => r[i])
}
