#!/usr/bin/env node
/** Figure renderer for the dislocation-lab CSV/JSON outputs.
 *
 *   disloc-render --kind trajectories --in trajectory.csv --out fig.svg
 *
 * Exit codes: 0 rendered, 2 schema or usage error (the offending column is
 * named on stderr).  Output is SVG and byte-identical across re-renders of
 * identical inputs.
 */

import { mkdirSync, writeFileSync } from 'fs'
import { dirname } from 'path'

import { SchemaError } from './csv'
import { FigureSpec, KINDS, Kind, renderFigure } from './figures'

function parseArgs(argv: string[]): { spec: FigureSpec; out: string } {
  const flags = new Map<string, string>()
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i]
    const val = argv[i + 1]
    if (!key.startsWith('--') || val === undefined) {
      throw new SchemaError('(usage)', `bad argument pair '${key} ${val ?? ''}'`)
    }
    flags.set(key.slice(2), val)
  }
  const kind = flags.get('kind')
  const input = flags.get('in')
  const out = flags.get('out')
  if (!kind || !input || !out) {
    throw new SchemaError('(usage)',
      'required: --kind <kind> --in <csv> --out <svg>  '
      + `(kinds: ${KINDS.join(', ')})`)
  }
  if (!(KINDS as readonly string[]).includes(kind)) {
    throw new SchemaError('kind', `unknown kind '${kind}'; options: ${KINDS.join(', ')}`)
  }
  const spec: FigureSpec = { kind: kind as Kind, input }
  const input2 = flags.get('in2')
  if (input2) spec.input2 = input2
  const summary = flags.get('summary')
  if (summary) spec.summary = summary
  return { spec, out }
}

export function run(argv: string[]): number {
  try {
    const { spec, out } = parseArgs(argv)
    const svg = renderFigure(spec)
    mkdirSync(dirname(out), { recursive: true })
    writeFileSync(out, svg)
    return 0
  } catch (err) {
    if (err instanceof SchemaError) {
      process.stderr.write(`schema error (column: ${err.column}): ${err.message}\n`)
      return 2
    }
    if (err instanceof Error && 'code' in err && (err as NodeJS.ErrnoException).code === 'ENOENT') {
      process.stderr.write(`input not found: ${err.message}\n`)
      return 2
    }
    throw err
  }
}

if (require.main === module) {
  process.exit(run(process.argv.slice(2)))
}
