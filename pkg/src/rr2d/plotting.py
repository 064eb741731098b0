"""SVG line chart and plain-text table for sweep results."""
from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

from .errors import DomainError

INPUT_TAG = "INPUT"
_PALETTE = ("#1f3a93", "#d4a017", "#2e8b57", "#c0392b", "#7d3c98", "#17a2b8", "#555555")
_W, _H = 720, 480
_LEFT, _RIGHT, _TOP, _BOTTOM = 70, 180, 30, 60


def _series(records):
    series = {}
    for r in records:
        series.setdefault(r.method, []).append((r.snr_db, r.mean_sinr_db))
    for pts in series.values():
        pts.sort()
    return series


def _svg(series):
    xs = [x for pts in series.values() for x, _ in pts]
    ys = [y for pts in series.values() for _, y in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    pw, ph = _W - _LEFT - _RIGHT, _H - _TOP - _BOTTOM

    def sx(x):
        return _LEFT + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return _TOP + (y1 - y) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
           f'viewBox="0 0 {_W} {_H}">',
           f'<rect x="{_LEFT}" y="{_TOP}" width="{pw}" height="{ph}" fill="none" stroke="#000"/>',
           f'<text x="{_LEFT + pw / 2:.1f}" y="{_H - 15}" text-anchor="middle">Input SNR (dB)</text>',
           f'<text x="15" y="{_TOP + ph / 2:.1f}" text-anchor="middle" '
           f'transform="rotate(-90 15 {_TOP + ph / 2:.1f})">Mean output SINR (dB)</text>']
    for k in range(5):
        xv = x0 + k * (x1 - x0) / 4
        yv = y0 + k * (y1 - y0) / 4
        out.append(f'<text x="{sx(xv):.1f}" y="{_TOP + ph + 18}" text-anchor="middle" '
                   f'font-size="11">{xv:.0f}</text>')
        out.append(f'<text x="{_LEFT - 6}" y="{sy(yv) + 4:.1f}" text-anchor="end" '
                   f'font-size="11">{yv:.1f}</text>')
    methods = [m for m in series if m != INPUT_TAG] + ([INPUT_TAG] if INPUT_TAG in series else [])
    for i, m in enumerate(methods):
        colour = "#000000" if m == INPUT_TAG else _PALETTE[i % len(_PALETTE)]
        dash = ' stroke-dasharray="4 4"' if m == INPUT_TAG else ""
        pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in series[m])
        sid = escape(m)
        out.append(f'<polyline id="series-{sid}" fill="none" stroke="{colour}" '
                   f'stroke-width="1.5"{dash} points="{pts}"/>')
        ly = _TOP + 14 + 18 * i
        lx = _W - _RIGHT + 12
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 24}" y2="{ly}" stroke="{colour}"{dash}/>')
        out.append(f'<text x="{lx + 30}" y="{ly + 4}" font-size="11">{sid}</text>')
    out.append("</svg>\n")
    return "\n".join(out)


def _table(records):
    lines = [f"{'snr_db':>8} {'method':<12} {'mean_db':>10} {'std_db':>8} "
             f"{'n_trials':>8} {'mean_lin_db':>11}"]
    for r in records:
        lines.append(f"{r.snr_db:8g} {r.method:<12} {r.mean_sinr_db:10.4f} {r.std_sinr_db:8.4f} "
                     f"{r.n_trials:8d} {r.mean_linear_sinr_db:11.4f}")
    return "\n".join(lines) + "\n"


def emit_plot_data(records, out_dir, basename="sinr"):
    """Write ``<basename>.svg`` and ``<basename>_table.txt``; return both paths.

    One polyline per method plus the dotted input-SINR baseline. Raises
    DomainError without writing anything if no method series is present.
    """
    records = list(records)
    series = _series(records)
    if not [m for m in series if m != INPUT_TAG]:
        raise DomainError("no method results to plot")
    out = Path(out_dir)
    svg_path = out / f"{basename}.svg"
    table_path = out / f"{basename}_table.txt"
    svg, table = _svg(series), _table(records)
    try:
        out.mkdir(parents=True, exist_ok=True)
        svg_path.write_text(svg)
        table_path.write_text(table)
    except OSError as exc:
        raise OSError(f"cannot write plot data under {out}: {exc.strerror or exc}") from exc
    return svg_path, table_path
