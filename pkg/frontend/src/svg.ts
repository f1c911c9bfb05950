/** Minimal deterministic SVG plotting: fixed canvas, fixed style, all
 *  coordinates rounded to 1/100 px so re-rendering is byte-identical. */

export const WIDTH = 800
export const HEIGHT = 500
export const MARGIN = { left: 64, right: 24, top: 42, bottom: 48 }

export const PALETTE = [
  '#1f77b4', '#d62728', '#2ca02c', '#9467bd', '#ff7f0e',
  '#8c564b', '#e377c2', '#7f7f7f', '#bcbd22', '#17becf',
]

const fmt = (v: number): string => {
  const r = v.toFixed(2)
  return r === '-0.00' ? '0.00' : r
}

export interface Scale {
  (v: number): number
  domain: [number, number]
}

export function linScale(domain: [number, number], range: [number, number]): Scale {
  let [d0, d1] = domain
  if (!(isFinite(d0) && isFinite(d1))) { d0 = 0; d1 = 1 }
  if (d0 === d1) { d0 -= 0.5; d1 += 0.5 }
  const k = (range[1] - range[0]) / (d1 - d0)
  const f = ((v: number) => range[0] + (v - d0) * k) as Scale
  f.domain = [d0, d1]
  return f
}

export function extent(values: number[]): [number, number] {
  let lo = Infinity
  let hi = -Infinity
  for (const v of values) {
    if (!isFinite(v)) continue
    if (v < lo) lo = v
    if (v > hi) hi = v
  }
  if (lo > hi) return [0, 1]
  return [lo, hi]
}

export function padded(e: [number, number], frac = 0.06): [number, number] {
  const w = e[1] - e[0] || 1
  return [e[0] - frac * w, e[1] + frac * w]
}

/** Round-valued tick positions covering [lo, hi] (about n of them). */
export function ticks(lo: number, hi: number, n = 6): number[] {
  if (!(isFinite(lo) && isFinite(hi)) || lo === hi) return [lo]
  const span = hi - lo
  const step0 = span / n
  const mag = Math.pow(10, Math.floor(Math.log10(step0)))
  let step = mag
  for (const m of [1, 2, 2.5, 5, 10]) {
    if (m * mag >= step0) { step = m * mag; break }
  }
  const out: number[] = []
  let v = Math.ceil(lo / step) * step
  for (; v <= hi + 1e-12 * span; v += step) out.push(Math.abs(v) < 1e-12 * span ? 0 : v)
  return out
}

export function tickLabel(v: number): string {
  if (v === 0) return '0'
  const a = Math.abs(v)
  if (a >= 1e4 || a < 1e-3) return v.toExponential(1)
  const s = v.toPrecision(4)
  return s.includes('.') ? s.replace(/\.?0+$/, '') : s
}

export function polyline(xs: number[], ys: number[], sx: Scale, sy: Scale,
                         color: string, width = 1.5, dash = ''): string {
  const pts: string[] = []
  for (let i = 0; i < xs.length; i++) {
    if (!isFinite(xs[i]) || !isFinite(ys[i])) continue
    pts.push(`${fmt(sx(xs[i]))},${fmt(sy(ys[i]))}`)
  }
  if (pts.length === 0) return ''
  const dashAttr = dash ? ` stroke-dasharray="${dash}"` : ''
  return `<polyline fill="none" stroke="${color}" stroke-width="${width}"${dashAttr} points="${pts.join(' ')}"/>`
}

export function circle(x: number, y: number, r: number, color: string,
                       extra = ''): string {
  return `<circle cx="${fmt(x)}" cy="${fmt(y)}" r="${r}" fill="${color}"${extra ? ' ' + extra : ''}/>`
}

export function line(x1: number, y1: number, x2: number, y2: number,
                     color: string, width = 1, dash = ''): string {
  const dashAttr = dash ? ` stroke-dasharray="${dash}"` : ''
  return `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" stroke="${color}" stroke-width="${width}"${dashAttr}/>`
}

export function text(x: number, y: number, s: string, size = 12,
                     anchor = 'middle', color = '#222222'): string {
  return `<text x="${fmt(x)}" y="${fmt(y)}" font-family="Helvetica,Arial,sans-serif" `
    + `font-size="${size}" text-anchor="${anchor}" fill="${color}">${escapeXml(s)}</text>`
}

export function escapeXml(s: string): string {
  return s.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;')
}

export interface Frame {
  sx: Scale
  sy: Scale
  parts: string[]
}

/** Axes, tick marks, labels and title on the fixed canvas. */
export function frame(xdom: [number, number], ydom: [number, number],
                      title: string, xlabel: string, ylabel: string,
                      yTickLabel: (v: number) => string = tickLabel): Frame {
  const x0 = MARGIN.left
  const x1 = WIDTH - MARGIN.right
  const y0 = HEIGHT - MARGIN.bottom
  const y1 = MARGIN.top
  const sx = linScale(xdom, [x0, x1])
  const sy = linScale(ydom, [y0, y1])
  const parts: string[] = []
  parts.push(`<rect x="${x0}" y="${y1}" width="${x1 - x0}" height="${y0 - y1}" fill="#fcfcfc" stroke="#333333" stroke-width="1"/>`)
  for (const v of ticks(sx.domain[0], sx.domain[1])) {
    const px = sx(v)
    parts.push(line(px, y0, px, y0 + 5, '#333333'))
    parts.push(line(px, y0, px, y1, '#dddddd', 0.6))
    parts.push(text(px, y0 + 18, tickLabel(v), 11))
  }
  for (const v of ticks(sy.domain[0], sy.domain[1])) {
    const py = sy(v)
    parts.push(line(x0 - 5, py, x0, py, '#333333'))
    parts.push(line(x0, py, x1, py, '#dddddd', 0.6))
    parts.push(text(x0 - 8, py + 4, yTickLabel(v), 11, 'end'))
  }
  parts.push(text((x0 + x1) / 2, 24, title, 15))
  parts.push(text((x0 + x1) / 2, HEIGHT - 10, xlabel, 12))
  parts.push(`<g transform="translate(16,${(y0 + y1) / 2}) rotate(-90)">${text(0, 0, ylabel, 12)}</g>`)
  return { sx, sy, parts }
}

export function legend(entries: Array<[string, string]>, dashes: string[] = []): string {
  const x = WIDTH - MARGIN.right - 170
  let y = MARGIN.top + 14
  const parts = [`<rect x="${x - 8}" y="${y - 14}" width="178" height="${entries.length * 18 + 8}" fill="#ffffff" fill-opacity="0.85" stroke="#999999" stroke-width="0.5"/>`]
  entries.forEach(([label, color], i) => {
    parts.push(line(x, y, x + 22, y, color, 2, dashes[i] ?? ''))
    parts.push(text(x + 28, y + 4, label, 11, 'start'))
    y += 18
  })
  return parts.join('')
}

export function document(parts: string[]): string {
  return `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">\n`
    + `<rect width="${WIDTH}" height="${HEIGHT}" fill="#ffffff"/>\n`
    + parts.filter((p) => p.length > 0).join('\n')
    + '\n</svg>\n'
}
