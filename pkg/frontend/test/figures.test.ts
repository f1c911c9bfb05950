import { mkdtempSync, readFileSync, writeFileSync } from 'fs'
import { tmpdir } from 'os'
import { join } from 'path'
import { describe, expect, it } from 'vitest'

import { SchemaError, parseCsv } from '../src/csv'
import { FigureSpec, KINDS, renderFigure } from '../src/figures'
import { run } from '../src/cli'

const FIX = join(__dirname, '..', 'fixtures')

const SPECS: Record<string, FigureSpec> = {
  'profile': { kind: 'profile', input: join(FIX, 'heteroclinic', 'profile.csv') },
  'multibump': { kind: 'multibump', input: join(FIX, 'multibump', 'profile.csv') },
  'trajectories': { kind: 'trajectories', input: join(FIX, 'triple', 'trajectory.csv') },
  'cores-overlay': { kind: 'cores-overlay', input: join(FIX, 'overlay', 'cores.csv') },
  'relaxation': { kind: 'relaxation', input: join(FIX, 'relaxation', 'relaxation.csv') },
  'orowan-ratio': { kind: 'orowan-ratio', input: join(FIX, 'orowan', 'orowan.csv') },
}

describe('figure kinds', () => {
  for (const kind of KINDS) {
    it(`renders ${kind} from the canonical fixtures`, () => {
      const svg = renderFigure(SPECS[kind])
      expect(svg.startsWith('<svg')).toBe(true)
      expect(svg.trimEnd().endsWith('</svg>')).toBe(true)
      expect(svg).toContain('<polyline')
    })

    it(`re-renders ${kind} byte-identically`, () => {
      const a = Buffer.from(renderFigure(SPECS[kind]))
      const b = Buffer.from(renderFigure(SPECS[kind]))
      expect(a.equals(b)).toBe(true)
    })
  }
})

describe('trajectories figure', () => {
  it('marks the triple collision at T_c = 1/(2 pi)', () => {
    const svg = renderFigure(SPECS['trajectories'])
    const m = svg.match(/data-tc="([^"]+)"/)
    expect(m).not.toBeNull()
    const tc = Number(m![1])
    expect(Math.abs(tc - 1 / (2 * Math.PI))).toBeLessThan(1e-4)
    expect(svg).toContain('triple collision')
  })
})

describe('profile figure', () => {
  it('overlays the closed form with a residual inset at s = 1/2', () => {
    const svg = renderFigure(SPECS['profile'])
    expect(svg).toContain('arctan(x)/pi')
    expect(svg).toContain('residual')
  })
})

describe('relaxation figure', () => {
  it('draws the log-linear fit from the summary', () => {
    const svg = renderFigure(SPECS['relaxation'])
    expect(svg).toContain('fitted rate')
  })
})

describe('orowan figure', () => {
  it('shows the unit-limit reference line', () => {
    const svg = renderFigure(SPECS['orowan-ratio'])
    expect(svg).toContain('limit value 1')
  })
})

describe('schema validation', () => {
  it('rejects a wrong column with its name', () => {
    const dir = mkdtempSync(join(tmpdir(), 'disloc-plots-'))
    const bad = join(dir, 'bad.csv')
    writeFileSync(bad, 'x,val\n0,1\n')
    try {
      renderFigure({ kind: 'profile', input: bad })
      expect.unreachable('should have thrown')
    } catch (err) {
      expect(err).toBeInstanceOf(SchemaError)
      expect((err as SchemaError).column).toBe('value')
    }
  })

  it('rejects trajectory files without series columns', () => {
    const dir = mkdtempSync(join(tmpdir(), 'disloc-plots-'))
    const bad = join(dir, 'bad.csv')
    writeFileSync(bad, 't\n0\n')
    expect(() => renderFigure({ kind: 'trajectories', input: bad }))
      .toThrowError(/x1/)
  })

  it('accepts an empty-but-valid CSV and renders empty axes', () => {
    const dir = mkdtempSync(join(tmpdir(), 'disloc-plots-'))
    const empty = join(dir, 'empty.csv')
    writeFileSync(empty, 'x,value\n')
    const svg = renderFigure({ kind: 'profile', input: empty })
    expect(svg.startsWith('<svg')).toBe(true)
    expect(svg).toContain('<rect')
  })
})

describe('cli', () => {
  it('writes the figure and exits 0', () => {
    const dir = mkdtempSync(join(tmpdir(), 'disloc-plots-'))
    const out = join(dir, 'fig.svg')
    const code = run(['--kind', 'trajectories',
                      '--in', SPECS['trajectories'].input, '--out', out])
    expect(code).toBe(0)
    const svg = readFileSync(out, 'utf8')
    expect(svg).toContain('</svg>')
  })

  it('exits 2 on schema errors and on unknown kinds', () => {
    const dir = mkdtempSync(join(tmpdir(), 'disloc-plots-'))
    const bad = join(dir, 'bad.csv')
    writeFileSync(bad, 'a,b\n1,2\n')
    expect(run(['--kind', 'profile', '--in', bad,
                '--out', join(dir, 'x.svg')])).toBe(2)
    expect(run(['--kind', 'nope', '--in', bad,
                '--out', join(dir, 'x.svg')])).toBe(2)
    expect(run(['--kind', 'profile'])).toBe(2)
  })

  it('renders empty axes from an empty CSV with exit 0', () => {
    const dir = mkdtempSync(join(tmpdir(), 'disloc-plots-'))
    const empty = join(dir, 'empty.csv')
    writeFileSync(empty, 't,x1\n')
    expect(run(['--kind', 'trajectories', '--in', empty,
                '--out', join(dir, 'fig.svg')])).toBe(0)
  })

  it('re-running produces byte-identical files', () => {
    const dir = mkdtempSync(join(tmpdir(), 'disloc-plots-'))
    const out1 = join(dir, 'a.svg')
    const out2 = join(dir, 'b.svg')
    const argv = ['--kind', 'orowan-ratio', '--in', SPECS['orowan-ratio'].input]
    expect(run([...argv, '--out', out1])).toBe(0)
    expect(run([...argv, '--out', out2])).toBe(0)
    expect(readFileSync(out1).equals(readFileSync(out2))).toBe(true)
  })
})

describe('fixture integrity', () => {
  it('canonical fixtures parse and have the documented schemas', () => {
    const traj = parseCsv(SPECS['trajectories'].input)
    expect(traj.header).toEqual(['t', 'x1', 'x2', 'x3'])
    const orowan = parseCsv(SPECS['orowan-ratio'].input)
    expect(orowan.header).toEqual(['eps', 'lambda', 'ratio'])
    expect(orowan.rows.length).toBe(3)
  })
})
