"""A very small SVG line-plot writer (axes, polylines, a shaded band, labels)."""

import math
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=20, top=30, bottom=50)


def _fmt(v):
    return f"{v:.2f}"


class Figure:
    def __init__(self, title="", xlabel="", ylabel="", logx=False, logy=False):
        self.title, self.xlabel, self.ylabel = title, xlabel, ylabel
        self.logx, self.logy = logx, logy
        self._lines, self._bands, self._vlines, self._texts = [], [], [], []

    def line(self, xs, ys, color="#1f77b4", dashed=False):
        self._lines.append((list(xs), list(ys), color, dashed))

    def band(self, xs, lower, upper, color="#1f77b4"):
        self._bands.append((list(xs), list(lower), list(upper), color))

    def vline(self, x, color="#d62728"):
        self._vlines.append((x, color))

    def text(self, x_frac, y_frac, label):
        self._texts.append((x_frac, y_frac, label))

    def _tx(self, v):
        return math.log10(v) if self.logx else v

    def _ty(self, v):
        return math.log10(v) if self.logy else v

    def _finite_pairs(self):
        for xs, ys, *_ in self._lines:
            yield from zip(xs, ys)
        for xs, lo, hi, _ in self._bands:
            yield from zip(xs, lo)
            yield from zip(xs, hi)

    def _ranges(self):
        pts = [
            (self._tx(x), self._ty(y))
            for x, y in self._finite_pairs()
            if math.isfinite(x) and math.isfinite(y) and (not self.logx or x > 0) and (not self.logy or y > 0)
        ]
        if not pts:
            return (0.0, 1.0), (0.0, 1.0)
        xs, ys = zip(*pts)
        x0, x1 = min(xs), max(xs)
        y0, y1 = min(ys), max(ys)
        if x1 == x0:
            x0, x1 = x0 - 0.5, x1 + 0.5
        if y1 == y0:
            y0, y1 = y0 - 0.5, y1 + 0.5
        pad = 0.05 * (y1 - y0)
        return (x0, x1), (y0 - pad, y1 + pad)

    def render(self):
        (x0, x1), (y0, y1) = self._ranges()
        pw = WIDTH - MARGIN["left"] - MARGIN["right"]
        ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

        def px(x):
            return MARGIN["left"] + (self._tx(x) - x0) / (x1 - x0) * pw

        def py(y):
            return MARGIN["top"] + (1.0 - (self._ty(y) - y0) / (y1 - y0)) * ph

        def ok(x, y):
            return (
                math.isfinite(x)
                and math.isfinite(y)
                and (not self.logx or x > 0)
                and (not self.logy or y > 0)
            )

        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        ]
        for xs, lo, hi, color in self._bands:
            keep = [(x, a, b) for x, a, b in zip(xs, lo, hi) if ok(x, a) and ok(x, b)]
            if len(keep) >= 2:
                upper = [f"{_fmt(px(x))},{_fmt(py(b))}" for x, _, b in keep]
                lower = [f"{_fmt(px(x))},{_fmt(py(a))}" for x, a, _ in reversed(keep)]
                out.append(
                    f'<polygon points="{" ".join(upper + lower)}" fill="{color}" '
                    'fill-opacity="0.2" stroke="none"/>'
                )
        for xs, ys, color, dashed in self._lines:
            pts = [f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in zip(xs, ys) if ok(x, y)]
            dash = ' stroke-dasharray="6,4"' if dashed else ""
            out.append(
                f'<polyline points="{" ".join(pts)}" fill="none" stroke="{color}" stroke-width="2"{dash}/>'
            )
        for x, color in self._vlines:
            if ok(x, 1.0):
                out.append(
                    f'<line x1="{_fmt(px(x))}" y1="{MARGIN["top"]}" x2="{_fmt(px(x))}" '
                    f'y2="{HEIGHT - MARGIN["bottom"]}" stroke="{color}" stroke-dasharray="4,3"/>'
                )
        left, bottom = MARGIN["left"], HEIGHT - MARGIN["bottom"]
        out.append(
            f'<polyline points="{left},{MARGIN["top"]} {left},{bottom} {WIDTH - MARGIN["right"]},{bottom}" '
            'fill="none" stroke="black"/>'
        )
        for k in range(5):
            fx, fy = x0 + k * (x1 - x0) / 4, y0 + k * (y1 - y0) / 4
            lx = 10**fx if self.logx else fx
            ly = 10**fy if self.logy else fy
            xpix = left + k * pw / 4
            ypix = bottom - k * ph / 4
            out.append(f'<text x="{_fmt(xpix)}" y="{bottom + 18}" font-size="11" text-anchor="middle">{lx:.3g}</text>')
            out.append(f'<text x="{left - 6}" y="{_fmt(ypix + 4)}" font-size="11" text-anchor="end">{ly:.3g}</text>')
        out.append(
            f'<text x="{WIDTH / 2}" y="{HEIGHT - 12}" font-size="13" text-anchor="middle">{escape(self.xlabel)}</text>'
        )
        out.append(
            f'<text x="16" y="{HEIGHT / 2}" font-size="13" text-anchor="middle" '
            f'transform="rotate(-90 16 {HEIGHT / 2})">{escape(self.ylabel)}</text>'
        )
        out.append(
            f'<text x="{WIDTH / 2}" y="20" font-size="14" text-anchor="middle">{escape(self.title)}</text>'
        )
        for fx, fy, label in self._texts:
            out.append(
                f'<text x="{_fmt(left + fx * pw)}" y="{_fmt(MARGIN["top"] + fy * ph)}" '
                f'font-size="12">{escape(label)}</text>'
            )
        out.append("</svg>")
        return "\n".join(out) + "\n"

    def save(self, path):
        with open(path, "w", newline="\n") as fh:
            fh.write(self.render())


def curve_figure(curve):
    fig = Figure("localized Gaussian complexity", "t", "f_hat(t)")
    fig.band(curve.grid, curve.f_hat - 2 * curve.stderr, curve.f_hat + 2 * curve.stderr)
    fig.line(curve.grid, curve.f_hat)
    fig.vline(curve.argmax())
    return fig


def sweep_figure(report):
    x_key = report.slope_against
    xs = [r["n"] if x_key == "n" else r["params"][x_key] for r in report.rows]
    ys = [r[report.slope_of] for r in report.rows]
    fig = Figure(f"{report.experiment} sweep", x_key, report.slope_of, logx=True, logy=True)
    fig.line(xs, ys)
    keep = [(x, y) for x, y in zip(xs, ys) if x > 0 and y > 0]
    if len(keep) >= 2 and math.isfinite(report.slope):
        lx = [math.log(x) for x, _ in keep]
        ly = [math.log(y) for _, y in keep]
        mx, my = sum(lx) / len(lx), sum(ly) / len(ly)
        fit = [math.exp(my + report.slope * (v - mx)) for v in lx]
        fig.line([x for x, _ in keep], fit, color="#ff7f0e", dashed=True)
    fig.text(0.05, 0.08, f"slope = {report.slope:.3f} +/- {report.slope_stderr:.3f}")
    return fig
