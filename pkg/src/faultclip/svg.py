"""Deterministic SVG emission for sweep results.

Hand-rolled on purpose: the charts must be byte-identical across reruns
(no timestamps, no generator metadata), and a mean line with box-plot
glyphs per rate needs nothing heavier.
"""

from .metrics import SweepResult

_W, _H = 640, 400
_ML, _MR, _MT, _MB = 70, 20, 40, 60


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".") if v else "0"


def _rate_label(rate: float) -> str:
    return "0" if rate == 0 else f"{rate:.0e}"


def sweep_svg(result: SweepResult, title: str = "accuracy vs fault rate") -> str:
    """Mean-accuracy line plus min/quartile/max boxes, one per rate."""
    summaries = result.summaries()
    n = len(summaries)
    plot_w = _W - _ML - _MR
    plot_h = _H - _MT - _MB

    def sx(i: int) -> float:
        return _ML + (plot_w * i / max(n - 1, 1))

    def sy(acc: float) -> float:
        return _MT + plot_h * (1.0 - acc)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="monospace" font-size="11">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.1f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<rect x="{_ML}" y="{_MT}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="#999"/>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = sy(frac)
        parts.append(
            f'<line x1="{_ML}" y1="{y:.1f}" x2="{_ML + plot_w}" y2="{y:.1f}" '
            f'stroke="#ddd"/>'
        )
        parts.append(
            f'<text x="{_ML - 8}" y="{y + 4:.1f}" text-anchor="end">{_fmt(frac)}</text>'
        )
    half = 7
    for i, s in enumerate(summaries):
        x = sx(i)
        parts.append(
            f'<text x="{x:.1f}" y="{_H - _MB + 18}" text-anchor="middle">'
            f"{_rate_label(s.rate)}</text>"
        )
        parts.append(
            f'<line x1="{x:.1f}" y1="{sy(s.min):.1f}" x2="{x:.1f}" y2="{sy(s.max):.1f}" '
            f'stroke="#444"/>'
        )
        parts.append(
            f'<rect x="{x - half:.1f}" y="{sy(s.q3):.1f}" width="{2 * half}" '
            f'height="{max(sy(s.q1) - sy(s.q3), 0.5):.1f}" fill="#cce" stroke="#448"/>'
        )
        parts.append(
            f'<line x1="{x - half:.1f}" y1="{sy(s.median):.1f}" x2="{x + half:.1f}" '
            f'y2="{sy(s.median):.1f}" stroke="#226"/>'
        )
    points = " ".join(f"{sx(i):.1f},{sy(s.mean):.1f}" for i, s in enumerate(summaries))
    parts.append(f'<polyline points="{points}" fill="none" stroke="#c22" stroke-width="1.5"/>')
    parts.append(
        f'<text x="{_ML}" y="{_H - 14}" fill="#555">fault rate (per bit); '
        f"red: mean of {result.config.trials_per_rate} trials</text>"
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
