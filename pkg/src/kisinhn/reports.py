"""Deterministic report emission: CSV text, standalone SVG, optional PNG.

CSV files are plain comma-separated text with a single header line, newline
line endings, and exact rationals rendered as `num/den` (bare integer when
the denominator is 1).  No field ever contains a comma, so no quoting layer
is involved and equal data produces byte-identical files.

SVG files are self-contained with a fixed 640 x 480 viewBox.  Data
coordinates map to pixels affinely: the scale factors (pixels per unit in x
and y) are computed from the data bounds, held constant within a file, and
written into the SVG header comment.  The reference polygon (when given) is
drawn in black; the remaining polygons are colored by their class label.

PNG rendering draws the same data through matplotlib and is emitted next to
the delimited output unless suppressed.
"""

from fractions import Fraction

PALETTE = (
    "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e",
    "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f",
)

VIEW_W = 640
VIEW_H = 480
MARGIN = 48


def frac_str(x):
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def csv_text(header, rows):
    lines = [",".join(header)]
    for row in rows:
        cells = [str(c) for c in row]
        for cell in cells:
            if "," in cell or "\n" in cell:
                raise ValueError(f"CSV cell may not contain separators: {cell!r}")
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def polygon_cells(poly):
    """Breakpoints of a polygon as a single `x:y` semicolon-joined cell."""
    return ";".join(f"{frac_str(x)}:{frac_str(y)}" for x, y in poly.vertices)


def cloud_rows(cloud):
    """CSV rows (dim, pivots, rank, deg_num, deg_den) for a subobject cloud."""
    rows = []
    for point in cloud:
        if point.witness is None:
            pivots = "-"
        else:
            pivots = ";".join(str(r) for r in point.witness.pivot_rows)
        deg = Fraction(point.degree)
        rows.append((point.rank, pivots, point.rank,
                     deg.numerator, deg.denominator))
    return rows


def polygon_rows(poly):
    """CSV rows (x_num, x_den, y_num, y_den) for polygon breakpoints."""
    return [(Fraction(x).numerator, Fraction(x).denominator,
             Fraction(y).numerator, Fraction(y).denominator)
            for x, y in poly.vertices]


def contact_cell(contact):
    return ";".join(str(d) for d in sorted(contact)) or "-"


def candidate_rows(cands):
    """CSV rows (index, breakpoints, slopes, contact) for candidate polygons."""
    rows = []
    for i, cand in enumerate(cands):
        slopes = ";".join(frac_str(s) for s in cand.polygon.slopes())
        rows.append((i, polygon_cells(cand.polygon), slopes,
                     contact_cell(cand.contact)))
    return rows


def variety_rows(enum):
    """CSV rows: one per point with canonical form, divisors, polygon, J."""
    from .literals import format_matrix
    from .variety import stratify

    stratify(enum)
    rows = []
    for i, lat in enumerate(enum.points):
        form = format_matrix(lat.g.rows).replace(", ", ";").replace(",", ";")
        divisors = ";".join(str(d) for d in lat.hodge_divisors)
        poly = enum._polygons[i]
        rows.append((i, form, divisors, polygon_cells(poly),
                     contact_cell(enum.invariants_J[i])))
    return rows


# ------------------------------------------------------------------- figures

def _bounds(groups, reference):
    xs, ys = [], []
    for _, _, polys in groups:
        for verts in polys:
            for x, y in verts:
                xs.append(Fraction(x))
                ys.append(Fraction(y))
    if reference is not None:
        for x, y in reference:
            xs.append(Fraction(x))
            ys.append(Fraction(y))
    if not xs:
        xs, ys = [Fraction(0), Fraction(1)], [Fraction(0), Fraction(1)]
    lo_x, hi_x = min(xs), max(xs)
    lo_y, hi_y = min(ys), max(ys)
    if hi_x == lo_x:
        hi_x = lo_x + 1
    if hi_y == lo_y:
        hi_y = lo_y + 1
    return lo_x, hi_x, lo_y, hi_y


def polygons_svg(groups, reference=None, title=""):
    """Standalone SVG of polygon families.

    groups: list of (label, color, [vertex lists]); reference: vertex list
    drawn in black (double width) behind the groups.  The affine data-to-
    pixel map is constant per file and recorded in the header comment.
    """
    lo_x, hi_x, lo_y, hi_y = _bounds(groups, reference)
    sx = Fraction(VIEW_W - 2 * MARGIN) / (hi_x - lo_x)
    sy = Fraction(VIEW_H - 2 * MARGIN) / (hi_y - lo_y)

    def px(x):
        return float(MARGIN + (Fraction(x) - lo_x) * sx)

    def py(y):
        return float(VIEW_H - MARGIN - (Fraction(y) - lo_y) * sy)

    def path(verts):
        return " ".join(f"{'M' if i == 0 else 'L'} {px(x):.2f} {py(y):.2f}"
                        for i, (x, y) in enumerate(verts))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {VIEW_W} {VIEW_H}">',
        f"<!-- scale: {float(sx):.4f} px/unit (x), {float(sy):.4f} px/unit (y); "
        f"data origin ({frac_str(lo_x)}, {frac_str(lo_y)}) at pixel "
        f"({MARGIN}, {VIEW_H - MARGIN}) -->",
        f'<rect width="{VIEW_W}" height="{VIEW_H}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{VIEW_W // 2}" y="24" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="14">{title}</text>')
    # axes through the data origin
    out.append(f'<line x1="{MARGIN}" y1="{py(lo_y):.2f}" x2="{VIEW_W - MARGIN}" '
               f'y2="{py(lo_y):.2f}" stroke="#cccccc"/>')
    out.append(f'<line x1="{px(lo_x):.2f}" y1="{MARGIN}" x2="{px(lo_x):.2f}" '
               f'y2="{VIEW_H - MARGIN}" stroke="#cccccc"/>')
    if reference is not None:
        out.append(f'<path d="{path(reference)}" fill="none" stroke="black" '
                   'stroke-width="3"/>')
    legend_y = 40
    for label, color, polys in groups:
        for verts in polys:
            out.append(f'<path d="{path(verts)}" fill="none" stroke="{color}" '
                       'stroke-width="1.5"/>')
            for x, y in verts:
                out.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="2.5" '
                           f'fill="{color}"/>')
        out.append(f'<text x="{VIEW_W - MARGIN - 140}" y="{legend_y}" '
                   f'font-family="sans-serif" font-size="12" '
                   f'fill="{color}">{label}</text>')
        legend_y += 16
    out.append("</svg>")
    return "\n".join(out) + "\n"


def polygons_png(path, groups, reference=None, title=""):
    """Render the same polygon families through matplotlib."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.4, 4.8), dpi=100)
    if reference is not None:
        xs = [float(x) for x, _ in reference]
        ys = [float(y) for _, y in reference]
        ax.plot(xs, ys, color="black", linewidth=3, label="reference")
    for label, color, polys in groups:
        first = True
        for verts in polys:
            xs = [float(x) for x, _ in verts]
            ys = [float(y) for _, y in verts]
            ax.plot(xs, ys, color=color, linewidth=1.5, marker="o",
                    markersize=3, label=label if first else None)
            first = False
    if title:
        ax.set_title(title)
    ax.grid(True, color="#dddddd")
    if reference is not None or groups:
        ax.legend(loc="best", fontsize=8)
    fig.savefig(path, format="png")
    plt.close(fig)


def contact_groups(cands):
    """Color candidate polygons by contact class, stable order."""
    classes = sorted({c.contact for c in cands}, key=lambda s: (len(s), sorted(s)))
    groups = []
    for i, cls in enumerate(classes):
        label = "J={" + ",".join(str(d) for d in sorted(cls)) + "}"
        color = PALETTE[i % len(PALETTE)]
        polys = [c.polygon.vertices for c in cands if c.contact == cls]
        groups.append((label, color, polys))
    return groups
