import { existsSync, readFileSync } from 'fs'
import { dirname, join } from 'path'

import { SchemaError, Table, column, expectExact, expectSeries, parseCsv } from './csv'
import {
  PALETTE, circle, document as svgDocument, extent, frame, legend, line,
  padded, polyline, text, MARGIN, WIDTH,
} from './svg'

export const KINDS = [
  'profile', 'multibump', 'trajectories', 'cores-overlay', 'relaxation',
  'orowan-ratio',
] as const

export type Kind = (typeof KINDS)[number]

export interface FigureSpec {
  kind: Kind
  input: string
  /** second input (particle trajectory CSV) for cores-overlay */
  input2?: string
  /** optional summary/collision JSON; discovered next to the input if absent */
  summary?: string
}

function sidecar(input: string, name: string, explicit?: string): any | undefined {
  const path = explicit ?? join(dirname(input), name)
  if (!existsSync(path)) return undefined
  return JSON.parse(readFileSync(path, 'utf8'))
}

function seriesColors(n: number): string[] {
  return Array.from({ length: n }, (_, i) => PALETTE[i % PALETTE.length])
}

// --- profile -----------------------------------------------------------------

function figProfile(spec: FigureSpec): string {
  const t = parseCsv(spec.input)
  expectExact(t, ['x', 'value'], spec.input)
  const xs = column(t, 0)
  const vs = column(t, 1)
  const summary = sidecar(spec.input, 'summary.json', spec.summary)
  const fr = frame(padded(extent(xs)), padded(extent(vs)),
    'Layer profile', 'x', 'u(x)')
  const parts = fr.parts
  parts.push(polyline(xs, vs, fr.sx, fr.sy, PALETTE[0], 1.8))
  const entries: Array<[string, string]> = [['computed profile', PALETTE[0]]]
  if (summary && typeof summary.s === 'number' && Math.abs(summary.s - 0.5) < 1e-12 && xs.length > 0) {
    const closed = xs.map((x) => 0.5 + Math.atan(x) / Math.PI)
    parts.push(polyline(xs, closed, fr.sx, fr.sy, PALETTE[1], 1.2, '6,4'))
    entries.push(['1/2 + arctan(x)/pi', PALETTE[1]])
    // residual inset: profile minus the closed form, own vertical scale
    const resid = vs.map((v, i) => v - closed[i])
    const ix0 = WIDTH - MARGIN.right - 240
    const ix1 = WIDTH - MARGIN.right - 20
    const iy0 = 420
    const iy1 = 330
    const rext = padded(extent(resid), 0.2)
    const isx = (x: number) => ix0 + ((x - fr.sx.domain[0]) / (fr.sx.domain[1] - fr.sx.domain[0])) * (ix1 - ix0)
    const isy = (v: number) => iy0 + ((v - rext[0]) / (rext[1] - rext[0])) * (iy1 - iy0)
    parts.push(`<rect x="${ix0}" y="${iy1}" width="${ix1 - ix0}" height="${iy0 - iy1}" fill="#ffffff" fill-opacity="0.9" stroke="#999999" stroke-width="0.5"/>`)
    const pts = xs.map((x, i) => `${isx(x).toFixed(2)},${isy(resid[i]).toFixed(2)}`)
    parts.push(`<polyline fill="none" stroke="${PALETTE[2]}" stroke-width="1" points="${pts.join(' ')}"/>`)
    const rmax = Math.max(...resid.map(Math.abs), 0)
    parts.push(text((ix0 + ix1) / 2, iy1 - 6, `residual (max ${rmax.toExponential(2)})`, 10))
  }
  if (summary && typeof summary.residual === 'number') {
    parts.push(text(MARGIN.left + 8, MARGIN.top + 16,
      `solver residual ${Number(summary.residual).toExponential(2)}`, 11, 'start'))
  }
  parts.push(legend(entries, ['', '6,4']))
  return svgDocument(parts)
}

// --- multibump -----------------------------------------------------------------

function figMultibump(spec: FigureSpec): string {
  const t = parseCsv(spec.input)
  expectExact(t, ['x', 'value'], spec.input)
  const xs = column(t, 0)
  const vs = column(t, 1)
  const summary = sidecar(spec.input, 'summary.json', spec.summary)
  const ydom = padded(extent(vs), 0.12)
  const fr = frame(padded(extent(xs)), ydom, 'Multibump equilibrium', 'x', 'u(x)')
  const parts = fr.parts
  // integer well levels inside the data range
  for (let lev = Math.ceil(ydom[0]); lev <= Math.floor(ydom[1]); lev++) {
    parts.push(line(fr.sx(fr.sx.domain[0]), fr.sy(lev), fr.sx(fr.sx.domain[1]), fr.sy(lev),
      '#bbbbbb', 0.8, '2,3'))
  }
  parts.push(polyline(xs, vs, fr.sx, fr.sy, PALETTE[0], 1.8))
  if (summary) {
    const notes: string[] = []
    if (typeof summary.energy === 'number') notes.push(`energy ${Number(summary.energy).toFixed(6)}`)
    if (typeof summary.detachment_margin === 'number') notes.push(`margin ${Number(summary.detachment_margin).toExponential(2)}`)
    if (typeof summary.residual === 'number') notes.push(`EL residual ${Number(summary.residual).toExponential(2)}`)
    if (notes.length > 0) parts.push(text(MARGIN.left + 8, MARGIN.top + 16, notes.join('   '), 11, 'start'))
  }
  return svgDocument(parts)
}

// --- trajectories ---------------------------------------------------------------

function figTrajectories(spec: FigureSpec): string {
  const t = parseCsv(spec.input)
  const n = expectSeries(t, 't', 'x', spec.input)
  const times = column(t, 0)
  const coll = sidecar(spec.input, 'collision.json', spec.summary)
  const Tc: number | undefined = coll?.collision?.T_c
  const allX: number[] = []
  for (let i = 1; i <= n; i++) allX.push(...column(t, i))
  const xdomData = extent(times)
  const xdom = padded([xdomData[0], Tc !== undefined ? Math.max(xdomData[1], Tc) : xdomData[1]])
  const fr = frame(xdom, padded(extent(allX)), 'Particle trajectories', 't', 'x_i(t)')
  const parts = fr.parts
  const colors = seriesColors(n)
  for (let i = 1; i <= n; i++) {
    parts.push(polyline(times, column(t, i), fr.sx, fr.sy, colors[i - 1], 1.6))
  }
  if (Tc !== undefined) {
    const px = fr.sx(Tc)
    parts.push(line(px, fr.sy(fr.sy.domain[0]), px, fr.sy(fr.sy.domain[1]),
      '#d62728', 1.2, '5,4'))
    const kind = coll?.collision?.type ?? 'collision'
    parts.push(`<g data-tc="${Tc.toExponential(12)}">`
      + text(px, MARGIN.top + 14, `${kind} collision, T_c = ${Tc.toPrecision(6)}`, 11)
      + '</g>')
    if (t.rows.length > 0) {
      const last = t.rows[t.rows.length - 1]
      const idx: number[] = coll?.collision?.indices ?? []
      for (const i of idx) {
        parts.push(circle(fr.sx(last[0]), fr.sy(last[i + 1]), 3.5, '#d62728'))
      }
    }
  }
  parts.push(legend(Array.from({ length: n }, (_, i) =>
    [`particle ${i + 1}`, colors[i]] as [string, string])))
  return svgDocument(parts)
}

// --- cores vs particles overlay ---------------------------------------------------

function figCoresOverlay(spec: FigureSpec): string {
  const cores = parseCsv(spec.input)
  const m = expectSeries(cores, 't', 'core', spec.input)
  const input2 = spec.input2 ?? join(dirname(spec.input), 'trajectory.csv')
  if (!existsSync(input2)) {
    throw new SchemaError('trajectory.csv',
      `cores-overlay needs a particle trajectory CSV (looked for ${input2})`)
  }
  const traj = parseCsv(input2)
  const n = expectSeries(traj, 't', 'x', input2)
  const tc = column(cores, 0)
  const tp = column(traj, 0)
  const all: number[] = []
  for (let i = 1; i <= m; i++) all.push(...column(cores, i))
  for (let i = 1; i <= n; i++) all.push(...column(traj, i))
  const fr = frame(padded(extent([...tc, ...tp])), padded(extent(all)),
    'Field cores vs particle dynamics', 't', 'position')
  const parts = fr.parts
  for (let i = 1; i <= n; i++) {
    parts.push(polyline(tp, column(traj, i), fr.sx, fr.sy, PALETTE[0], 1.4, '6,4'))
  }
  for (let i = 1; i <= m; i++) {
    const ys = column(cores, i)
    parts.push(polyline(tc, ys, fr.sx, fr.sy, PALETTE[1], 1.8))
  }
  parts.push(legend([[`field cores (${m})`, PALETTE[1]],
                     [`particles (${n})`, PALETTE[0]]], ['', '6,4']))
  return svgDocument(parts)
}

// --- relaxation ----------------------------------------------------------------

function figRelaxation(spec: FigureSpec): string {
  const t = parseCsv(spec.input)
  expectExact(t, ['t', 'sup_deviation'], spec.input)
  const times = column(t, 0)
  const sups = column(t, 1)
  const summary = sidecar(spec.input, 'summary.json', spec.summary)
  const logs = sups.map((v) => (v > 0 ? Math.log10(v) : NaN))
  const fr = frame(padded(extent(times)), padded(extent(logs)),
    'Post-collision relaxation', 't', 'log10 sup |v - v_inf|')
  const parts = fr.parts
  parts.push(polyline(times, logs, fr.sx, fr.sy, PALETTE[0], 1.8))
  const fit = summary?.relaxation
  if (fit && typeof fit.rate === 'number' && typeof fit.rho === 'number'
      && typeof fit.T_eps === 'number') {
    const ts = times.filter((v) => v >= fit.T_eps)
    // sup ~ rho exp(-rate (t - T_eps)) drawn in log10 coordinates
    const lineLog = ts.map((v) =>
      Math.log10(fit.rho) - fit.rate * (v - fit.T_eps) * Math.LOG10E)
    parts.push(polyline(ts, lineLog, fr.sx, fr.sy, PALETTE[1], 1.2, '6,4'))
    parts.push(text(MARGIN.left + 8, MARGIN.top + 16,
      `fitted rate ${Number(fit.rate).toPrecision(4)} (R^2 ${Number(fit.r_squared).toFixed(4)})`,
      11, 'start'))
    parts.push(legend([['measured decay', PALETTE[0]], ['log-linear fit', PALETTE[1]]], ['', '6,4']))
  } else {
    parts.push(legend([['measured decay', PALETTE[0]]]))
  }
  return svgDocument(parts)
}

// --- Orowan ratio -----------------------------------------------------------------

function figOrowanRatio(spec: FigureSpec): string {
  const t = parseCsv(spec.input)
  expectExact(t, ['eps', 'lambda', 'ratio'], spec.input)
  const rows = [...t.rows].sort((a, b) => a[0] - b[0])
  const eps = rows.map((r) => r[0])
  const ratio = rows.map((r) => r[2])
  const fr = frame(padded(extent([0, ...eps])), padded(extent([0, 1.1, ...ratio])),
    'Orowan ratio', 'eps', 'Hbar / (eps^(1+2s) gamma |p0| L0)')
  const parts = fr.parts
  parts.push(line(fr.sx(fr.sx.domain[0]), fr.sy(1), fr.sx(fr.sx.domain[1]), fr.sy(1),
    '#444444', 1, '4,4'))
  parts.push(polyline(eps, ratio, fr.sx, fr.sy, PALETTE[0], 1.6))
  for (let i = 0; i < eps.length; i++) {
    parts.push(circle(fr.sx(eps[i]), fr.sy(ratio[i]), 3.5, PALETTE[0]))
  }
  parts.push(legend([['measured ratio', PALETTE[0]], ['limit value 1', '#444444']], ['', '4,4']))
  return svgDocument(parts)
}

const BUILDERS: Record<Kind, (spec: FigureSpec) => string> = {
  'profile': figProfile,
  'multibump': figMultibump,
  'trajectories': figTrajectories,
  'cores-overlay': figCoresOverlay,
  'relaxation': figRelaxation,
  'orowan-ratio': figOrowanRatio,
}

export function renderFigure(spec: FigureSpec): string {
  const builder = BUILDERS[spec.kind]
  if (!builder) {
    throw new SchemaError('kind', `unknown figure kind '${spec.kind}'`)
  }
  return builder(spec)
}
