"""Minimal deterministic SVG charts (bar and line).

Hand-rolled instead of a plotting library so that report bytes are
identical across runs, which the reproducibility checks require.
"""

WIDTH, HEIGHT = 860, 360
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 30, 60
PALETTE = ["#4878a8", "#d65f5f", "#6acc64", "#ee854a", "#956cb4", "#8c613c"]


def _fmt(v):
    return f"{v:.2f}".rstrip("0").rstrip(".")


def _axes(title, y_max, y_label):
    plot_h = HEIGHT - MARGIN_T - MARGIN_B
    parts = [
        f'<text x="{WIDTH / 2:.1f}" y="18" text-anchor="middle" '
        f'font-size="14" font-family="sans-serif">{title}</text>',
        f'<line x1="{MARGIN_L}" y1="{MARGIN_T}" x2="{MARGIN_L}" '
        f'y2="{HEIGHT - MARGIN_B}" stroke="#333"/>',
        f'<line x1="{MARGIN_L}" y1="{HEIGHT - MARGIN_B}" x2="{WIDTH - MARGIN_R}" '
        f'y2="{HEIGHT - MARGIN_B}" stroke="#333"/>',
        f'<text x="16" y="{MARGIN_T + plot_h / 2:.1f}" text-anchor="middle" '
        f'font-size="11" font-family="sans-serif" '
        f'transform="rotate(-90 16 {MARGIN_T + plot_h / 2:.1f})">{y_label}</text>',
    ]
    for i in range(5):
        frac = i / 4
        y = HEIGHT - MARGIN_B - frac * plot_h
        parts.append(f'<text x="{MARGIN_L - 8}" y="{y + 4:.1f}" text-anchor="end" '
                     f'font-size="10" font-family="sans-serif">'
                     f'{_fmt(frac * y_max)}</text>')
        if i:
            parts.append(f'<line x1="{MARGIN_L}" y1="{y:.1f}" '
                         f'x2="{WIDTH - MARGIN_R}" y2="{y:.1f}" '
                         f'stroke="#ddd" stroke-width="0.5"/>')
    return parts


def _document(parts):
    body = "\n".join(parts)
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
            f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">\n'
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>\n'
            f"{body}\n</svg>\n")


def grouped_bar_chart(categories, series, title, y_label):
    """`series` is a list of (name, values) with one value per category."""
    y_max = max((max(vals) for _, vals in series if vals), default=1.0) or 1.0
    plot_w = WIDTH - MARGIN_L - MARGIN_R
    plot_h = HEIGHT - MARGIN_T - MARGIN_B
    group_w = plot_w / max(len(categories), 1)
    bar_w = group_w * 0.8 / max(len(series), 1)

    parts = _axes(title, y_max, y_label)
    for g, label in enumerate(categories):
        x0 = MARGIN_L + g * group_w + group_w * 0.1
        parts.append(f'<text x="{x0 + group_w * 0.4:.1f}" '
                     f'y="{HEIGHT - MARGIN_B + 16}" text-anchor="middle" '
                     f'font-size="10" font-family="sans-serif">{label}</text>')
        for s, (_, values) in enumerate(series):
            h = plot_h * (values[g] / y_max) if y_max else 0
            x = x0 + s * bar_w
            y = HEIGHT - MARGIN_B - h
            parts.append(f'<rect x="{x:.1f}" y="{y:.1f}" width="{bar_w:.1f}" '
                         f'height="{h:.1f}" fill="{PALETTE[s % len(PALETTE)]}"/>')
    for s, (name, _) in enumerate(series):
        x = MARGIN_L + s * 130
        y = HEIGHT - 18
        parts.append(f'<rect x="{x}" y="{y - 9}" width="10" height="10" '
                     f'fill="{PALETTE[s % len(PALETTE)]}"/>')
        parts.append(f'<text x="{x + 14}" y="{y}" font-size="11" '
                     f'font-family="sans-serif">{name}</text>')
    return _document(parts)


def line_chart(x_labels, series, title, y_label):
    y_max = max((max(vals) for _, vals in series if vals), default=1.0) or 1.0
    plot_w = WIDTH - MARGIN_L - MARGIN_R
    plot_h = HEIGHT - MARGIN_T - MARGIN_B
    n = max(len(x_labels), 1)
    step = plot_w / max(n - 1, 1)

    parts = _axes(title, y_max, y_label)
    for i, label in enumerate(x_labels):
        x = MARGIN_L + i * step
        parts.append(f'<text x="{x:.1f}" y="{HEIGHT - MARGIN_B + 16}" '
                     f'text-anchor="middle" font-size="10" '
                     f'font-family="sans-serif">{label}</text>')
    for s, (name, values) in enumerate(series):
        points = []
        for i, v in enumerate(values):
            x = MARGIN_L + i * step
            y = HEIGHT - MARGIN_B - plot_h * (v / y_max)
            points.append(f"{x:.1f},{y:.1f}")
        color = PALETTE[s % len(PALETTE)]
        parts.append(f'<polyline points="{" ".join(points)}" fill="none" '
                     f'stroke="{color}" stroke-width="2"/>')
        for point in points:
            px, py = point.split(",")
            parts.append(f'<circle cx="{px}" cy="{py}" r="3" fill="{color}"/>')
        x = MARGIN_L + s * 130
        y = HEIGHT - 18
        parts.append(f'<rect x="{x}" y="{y - 9}" width="10" height="10" '
                     f'fill="{color}"/>')
        parts.append(f'<text x="{x + 14}" y="{y}" font-size="11" '
                     f'font-family="sans-serif">{name}</text>')
    return _document(parts)
