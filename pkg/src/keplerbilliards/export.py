"""CSV and SVG writers for tables, portraits and orbits."""

import csv
import io

import numpy as np

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
           "#bcbd22", "#17becf")


def _fmt(x):
    return repr(float(x))


def write_rows(path, header, rows):
    """Write rows to ``path`` (or return the text when path is None)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([x if isinstance(x, (str, int, np.integer)) else _fmt(x) for x in r])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def table_rows(table, n=512):
    u = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    p = table.position(u)
    k = table.curvature(u)
    return [(u[i], p[i].real, p[i].imag, k[i]) for i in range(n)]


def write_table_csv(path, table, n=512):
    return write_rows(path, ("u", "x", "y", "kappa"), table_rows(table, n))


def portrait_rows(U, A, E=None, R=None, valid=None):
    """Rows ordered by seed then step; invalid (terminated) entries are skipped."""
    n1, m = U.shape
    rows = []
    for j in range(m):
        for k in range(n1):
            if valid is not None and not valid[k, j]:
                continue
            row = [j, k, U[k, j] % (2 * np.pi), A[k, j]]
            if E is not None:
                row += [E[k, j], R[k, j]]
            rows.append(row)
    return rows


def write_portrait_csv(path, U, A, E=None, R=None, valid=None):
    header = ["seed_id", "step", "u", "alpha"]
    if E is not None:
        header += ["energy_residual", "min_r"]
    return write_rows(path, header, portrait_rows(U, A, E, R, valid))


def emit_svg(path, points, seed_ids=None, width=800, height=400, radius=0.8, title=None):
    """Scatter plot of (x, y) points, one color per seed id; deterministic bytes.

    ``points`` is an (N, 2) array.  With no points a valid empty SVG is written.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    ids = np.zeros(len(pts), int) if seed_ids is None else np.asarray(seed_ids, int)
    keep = np.isfinite(pts).all(axis=1)
    pts, ids = pts[keep], ids[keep]
    if len(pts):
        x0, y0 = pts.min(axis=0)
        x1, y1 = pts.max(axis=0)
    else:
        x0 = y0 = 0.0
        x1 = y1 = 1.0
    pad_x = 0.02 * max(x1 - x0, 1e-12)
    pad_y = 0.02 * max(y1 - y0, 1e-12)
    x0, x1, y0, y1 = x0 - pad_x, x1 + pad_x, y0 - pad_y, y1 + pad_y
    sx = width / (x1 - x0)
    sy = height / (y1 - y0)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        out.append(f"<title>{_escape(title)}</title>")
    for sid in np.unique(ids):
        color = PALETTE[int(sid) % len(PALETTE)]
        out.append(f'<g fill="{color}" stroke="none">')
        for x, y in pts[ids == sid]:
            cx = (x - x0) * sx
            cy = height - (y - y0) * sy
            out.append(f'<circle cx="{cx:.3f}" cy="{cy:.3f}" r="{radius:g}"/>')
        out.append("</g>")
    out.append("</svg>")
    text = "\n".join(out) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def _escape(s):
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def portrait_svg(path, U, A, valid=None, **kw):
    """Scatter of (u, alpha) over all seeds and steps."""
    n1, m = U.shape
    ids = np.repeat(np.arange(m)[None, :], n1, axis=0)
    mask = np.isfinite(U) if valid is None else valid
    pts = np.column_stack([(U[mask] % (2 * np.pi)), A[mask]])
    return emit_svg(path, pts, ids[mask], **kw)
