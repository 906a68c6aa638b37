"""Report dictionaries, trajectory CSV files and SVG plots.

Reports are plain ``dict`` objects built in a fixed key order so that
``json.dumps`` output is byte-stable.  Complex numbers are written as
``[re, im]`` pairs and vertex ids are always external.
"""

import csv
import json

import numpy as np

__all__ = [
    "cplx",
    "tree_section",
    "criterion_section",
    "gains_section",
    "spectrum_section",
    "gershgorin_section",
    "simulation_section",
    "dumps_report",
    "format_text",
    "csv_columns",
    "write_csv",
    "read_csv",
    "write_svg",
]


def cplx(z):
    z = complex(z)
    return [z.real, z.imag]


def _sorted_spectrum(eigs):
    return sorted((complex(z) for z in eigs), key=lambda z: (round(z.real, 12), round(z.imag, 12)))


def tree_section(tree):
    return {
        "root": tree.root,
        "edges": [[p, c] for p, c in tree.edges()],
        "internal_ids": {str(v): tree.perm[v] for v in sorted(tree.perm)},
    }


def criterion_section(verdict, dfm=None):
    out = {
        "consensus_achievable": verdict.consensus_achievable,
        "tested_modes": [cplx(z) for z in verdict.tested_modes],
        "bipartitions_checked": verdict.bipartitions_checked,
        "exhaustive": verdict.exhaustive,
        "failures": [
            {"mode": cplx(lam), "alpha": alpha, "rank": rank}
            for lam, alpha, rank in verdict.failures
        ],
    }
    if dfm is not None:
        out["dfm_sample"] = dfm
    return out


def gains_section(gains, tree):
    root_gain_zero = not np.any(gains.K[tree.root - 1])
    return {
        "mode": gains.mode.value,
        "provenance": gains.provenance,
        "K": {str(i + 1): np.asarray(k).tolist() for i, k in enumerate(gains.K)},
        "root_path": list(gains.root_path) if gains.root_path else None,
        "root_neighbor_weight": gains.root_neighbor_weight,
        "root_tracking": gains.mode.value == "dst-only" or root_gain_zero,
    }


def spectrum_section(M):
    eigs = _sorted_spectrum(np.linalg.eigvals(M)) if M.size else []
    abscissa = max(z.real for z in eigs) if eigs else float("-inf")
    return {
        "size": M.shape[0],
        "spectrum": [cplx(z) for z in eigs],
        "spectral_abscissa": abscissa,
        "hurwitz": abscissa < 0,
    }


def gershgorin_section(report, tree):
    inv = tree.inverse_perm
    return {
        "surrogate_all": report.surrogate_all,
        "resolvent_all": report.resolvent_all,
        "eigenvalue_certificate": report.eigenvalue_certificate,
        "spectral_abscissa": report.spectral_abscissa,
        "iterations": report.iterations,
        "rows": [
            {
                "block": r.block,
                "edge": [tree.parent[inv[r.block]], inv[r.block]],
                "radius": r.radius,
                "hurwitz": r.hurwitz,
                "surrogate_value": r.surrogate_value,
                "surrogate_pass": r.surrogate_pass,
                "resolvent_value": r.resolvent_value,
                "resolvent_pass": r.resolvent_pass,
                "omega_min": r.omega_min,
                "omega_bound": r.omega_bound,
                "grid_points": r.grid_points,
            }
            for r in report.rows
        ],
    }


def simulation_section(result, dt, T, tol, samples=21):
    eps = result.consensus_error
    idx = np.unique(np.linspace(0, len(eps) - 1, samples).round().astype(int))
    return {
        "dt": dt,
        "T": T,
        "tol": tol,
        "verdict": result.verdict(tol),
        "eps_initial": float(eps[0]),
        "eps_final": float(eps[-1]),
        "eps_ratio": float(eps[-1] / eps[0]) if eps[0] > 0 else 0.0,
        "eps_samples": [[float(result.times[k]), float(eps[k])] for k in idx],
    }


def dumps_report(report):
    return json.dumps(report, indent=2) + "\n"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, list) and len(v) == 2 and all(isinstance(x, float) for x in v):
        re, im = v
        return f"{re:.6g}{im:+.6g}i" if im else f"{re:.6g}"
    return str(v)


def format_text(report):
    """Short human-readable rendering of a report."""
    lines = [f"scenario: {report.get('scenario')}  command: {report.get('command')}"]
    if "error" in report:
        lines.append(f"error: {report['error']['type']}: {report['error']['message']}")
    if "dst" in report:
        edges = " ".join(f"({p},{c})" for p, c in report["dst"]["edges"])
        lines.append(f"spanning tree: root {report['dst']['root']}, edges {edges}")
    if "criterion" in report:
        c = report["criterion"]
        modes = ", ".join(_fmt(z) for z in c["tested_modes"]) or "none"
        lines.append(
            f"criterion: {'achievable' if c['consensus_achievable'] else 'NOT achievable'}"
            f" (modes {modes}; {c['bipartitions_checked']} splits, {len(c['failures'])} failures)"
        )
    if "gains" in report:
        g = report["gains"]
        lines.append(f"gains ({g['mode']}, {g['provenance']}):")
        for v, k in g["K"].items():
            lines.append(f"  K{v} = {k}")
        if g["root_tracking"]:
            lines.append("  root tracking: root control is zero")
    if "closed_loop" in report:
        cl = report["closed_loop"]
        lines.append(f"closed-loop spectral abscissa: {cl['spectral_abscissa']:.6g}")
        lines.append("  spectrum: " + ", ".join(_fmt(z) for z in cl["spectrum"]))
    if "gershgorin" in report:
        gr = report["gershgorin"]
        lines.append(
            f"gershgorin: surrogate {'pass' if gr['surrogate_all'] else 'fail'},"
            f" resolvent {'pass' if gr['resolvent_all'] else 'fail'},"
            f" certificate {'pass' if gr['eigenvalue_certificate'] else 'fail'}"
        )
        for r in gr["rows"]:
            lines.append(
                f"  edge {tuple(r['edge'])}: radius {r['radius']:.4g}"
                f" surrogate {r['surrogate_value']:.4g} resolvent {r['resolvent_value']:.4g}"
            )
    if "simulation" in report:
        s = report["simulation"]
        lines.append(
            f"simulation: eps(0) = {s['eps_initial']:.6g}, eps(T) = {s['eps_final']:.6g},"
            f" verdict {'consensus' if s['verdict'] else 'no consensus'} at tol {s['tol']:g}"
        )
    for key in ("csv", "svg"):
        if key in report:
            lines.append(f"{key}: {report[key]}")
    lines.append(f"exit code: {report.get('exit_code')}")
    return "\n".join(lines) + "\n"


def csv_columns(tree, N, n):
    inv = tree.inverse_perm
    cols = ["t"]
    cols += [f"x{i}_{k}" for i in range(1, N + 1) for k in range(1, n + 1)]
    cols += [f"y{inv[q]}_{k}" for q in range(1, N) for k in range(1, n + 1)]
    return cols


def write_csv(path, result, tree):
    """Write ``t, x<i>_<k>..., y<i>_<k>...`` with 17 significant digits."""
    S, N, n = result.agents.shape
    data = np.hstack(
        [result.times[:, None], result.agents.reshape(S, -1), result.edges.reshape(S, -1)]
    )
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(csv_columns(tree, N, n))
        for row in data:
            writer.writerow([f"{v:.17g}" for v in row])


def read_csv(path):
    """Column name -> float array."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    data = np.array(rows).reshape(len(rows), len(header))
    return {name: data[:, k] for k, name in enumerate(header)}


_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"]


def write_svg(path, times, series, title, labels=None):
    """Line plot of each column of ``series`` against ``times`` in an 800x500 viewBox."""
    series = np.asarray(series, dtype=float)
    width, height, pad = 800, 500, 50
    t0, t1 = float(times[0]), float(times[-1])
    lo, hi = float(series.min()), float(series.max())
    if hi == lo:
        hi, lo = hi + 1, lo - 1

    def px(t):
        return pad + (t - t0) / (t1 - t0 or 1) * (width - 2 * pad)

    def py(v):
        return height - pad - (v - lo) / (hi - lo) * (height - 2 * pad)

    step = max(1, len(times) // 1000)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2}" y="25" text-anchor="middle" font-size="16">{title}</text>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{pad}" y="{height - pad + 20}" font-size="12">{t0:g}</text>',
        f'<text x="{width - pad}" y="{height - pad + 20}" text-anchor="end" font-size="12">t = {t1:g}</text>',
        f'<text x="{pad - 5}" y="{pad}" text-anchor="end" font-size="12">{hi:.3g}</text>',
        f'<text x="{pad - 5}" y="{height - pad}" text-anchor="end" font-size="12">{lo:.3g}</text>',
    ]
    for k in range(series.shape[1]):
        pts = " ".join(
            f"{px(times[s]):.2f},{py(series[s, k]):.2f}" for s in range(0, len(times), step)
        )
        color = _COLORS[k % len(_COLORS)]
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        if labels:
            parts.append(
                f'<text x="{width - pad + 5}" y="{pad + 15 * k}" font-size="12" fill="{color}">'
                f"{labels[k]}</text>"
            )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
