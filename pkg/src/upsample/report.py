"""CSV and SVG emission for cost sweeps.

Outputs are deterministic: no timestamps, fixed float formatting, fixed
series ordering, and SVG coordinates rounded to 3 decimals so golden-file
comparison is stable.
"""
from __future__ import annotations

import io
from typing import Sequence

from .costmodel import BASELINE_ALGORITHM, CostReport, HardwareProfile, WorkloadSpec

CSV_COLUMNS = (
    "algorithm,r,macs,weight_bytes,activation_bytes,T_s,E_j,AI,act_reuse,"
    "E_per_pixel,PPE,T_normalized,E_normalized,bound_time,bound_energy"
)


def _f(x: float) -> str:
    return f"{x:.9e}"


def sweep_csv(reports: Sequence[CostReport], w: WorkloadSpec, hw: HardwareProfile) -> str:
    """Render sweep reports as CSV with a commented metadata header."""
    buf = io.StringIO()
    buf.write("# upsample cost sweep\n")
    buf.write(
        f"# workload: H={w.H} C={w.C} K={w.K} bytes_per_element={w.bytes_per_element}\n"
    )
    buf.write(
        f"# profile: {hw.name} tau_comp={_f(hw.tau_comp)} tau_mem={_f(hw.tau_mem)} "
        f"eps_comp={_f(hw.eps_comp)} eps_mem={_f(hw.eps_mem)} pi0={_f(hw.pi0)}\n"
    )
    buf.write(f"# normalization baseline: {BASELINE_ALGORITHM} at r=1\n")
    buf.write(CSV_COLUMNS + "\n")
    for rep in reports:
        req = rep.requirements
        buf.write(
            f"{rep.algorithm},{rep.r},{req.macs},{req.weight_bytes},{req.activation_bytes},"
            f"{_f(rep.T)},{_f(rep.E)},{_f(rep.arithmetic_intensity)},{_f(rep.activation_reuse)},"
            f"{_f(rep.energy_per_pixel)},{_f(rep.perf_per_energy)},"
            f"{_f(rep.T_normalized)},{_f(rep.E_normalized)},{rep.bound_time},{rep.bound_energy}\n"
        )
    return buf.getvalue()


# --- SVG charts ---------------------------------------------------------------

_PALETTE = (
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
    "#9467bd", "#8c564b", "#17becf", "#7f7f7f",
)
_PANEL_W, _PANEL_H = 420, 300
_MARGIN = 52


def _series(reports: Sequence[CostReport]) -> dict[str, list[CostReport]]:
    by_algo: dict[str, list[CostReport]] = {}
    for rep in reports:
        by_algo.setdefault(rep.algorithm, []).append(rep)
    for reps in by_algo.values():
        reps.sort(key=lambda rep: rep.r)
    return by_algo


def _rd(x: float) -> str:
    return f"{x:.3f}"


class _Panel:
    """One chart panel; callers map data to pixel coordinates through it."""

    def __init__(self, ox: float, oy: float, title: str, x_label: str, y_label: str):
        self.ox, self.oy = ox, oy
        self.elems: list[str] = [
            f'<text x="{_rd(ox + _PANEL_W / 2)}" y="{_rd(oy + 18)}" text-anchor="middle" '
            f'font-size="14" font-weight="600">{title}</text>'
        ]
        self.x0 = ox + _MARGIN
        self.y0 = oy + _PANEL_H - _MARGIN
        self.x1 = ox + _PANEL_W - 16
        self.y1 = oy + 34
        self.elems.append(
            f'<rect x="{_rd(self.x0)}" y="{_rd(self.y1)}" width="{_rd(self.x1 - self.x0)}" '
            f'height="{_rd(self.y0 - self.y1)}" fill="none" stroke="#999" stroke-width="1"/>'
        )
        self.elems.append(
            f'<text x="{_rd((self.x0 + self.x1) / 2)}" y="{_rd(self.y0 + 34)}" '
            f'text-anchor="middle" font-size="11">{x_label}</text>'
        )
        self.elems.append(
            f'<text x="{_rd(self.ox + 14)}" y="{_rd((self.y0 + self.y1) / 2)}" font-size="11" '
            f'text-anchor="middle" transform="rotate(-90 {_rd(self.ox + 14)} '
            f'{_rd((self.y0 + self.y1) / 2)})">{y_label}</text>'
        )

    def map_x(self, v: float, lo: float, hi: float) -> float:
        span = (hi - lo) or 1.0
        return self.x0 + (v - lo) / span * (self.x1 - self.x0)

    def map_y(self, v: float, lo: float, hi: float) -> float:
        span = (hi - lo) or 1.0
        return self.y0 - (v - lo) / span * (self.y0 - self.y1)

    def polyline(self, pts: list[tuple[float, float]], color: str, dash: str = ""):
        coords = " ".join(f"{_rd(x)},{_rd(y)}" for x, y in pts)
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self.elems.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"{extra}/>'
        )

    def dot(self, x: float, y: float, color: str):
        self.elems.append(f'<circle cx="{_rd(x)}" cy="{_rd(y)}" r="3.5" fill="{color}"/>')

    def tick_x(self, x: float, label: str):
        self.elems.append(
            f'<line x1="{_rd(x)}" y1="{_rd(self.y0)}" x2="{_rd(x)}" y2="{_rd(self.y0 + 4)}" '
            f'stroke="#555"/>'
            f'<text x="{_rd(x)}" y="{_rd(self.y0 + 16)}" text-anchor="middle" '
            f'font-size="10">{label}</text>'
        )

    def tick_y(self, y: float, label: str):
        self.elems.append(
            f'<line x1="{_rd(self.x0 - 4)}" y1="{_rd(y)}" x2="{_rd(self.x0)}" y2="{_rd(y)}" '
            f'stroke="#555"/>'
            f'<text x="{_rd(self.x0 - 6)}" y="{_rd(y + 3)}" text-anchor="end" '
            f'font-size="10">{label}</text>'
        )


def _cost_panel(panel: _Panel, by_algo, metric: str, colors):
    rs = sorted({rep.r for reps in by_algo.values() for rep in reps})
    values = [getattr(rep, metric) for reps in by_algo.values() for rep in reps]
    y_hi = max(values) * 1.05
    x_lo, x_hi = min(rs), max(rs)
    for r in rs:
        panel.tick_x(panel.map_x(r, x_lo, x_hi), str(r))
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        v = frac * y_hi
        panel.tick_y(panel.map_y(v, 0.0, y_hi), f"{v:.1f}")
    for name, reps in sorted(by_algo.items()):
        pts = [
            (panel.map_x(rep.r, x_lo, x_hi), panel.map_y(getattr(rep, metric), 0.0, y_hi))
            for rep in reps
        ]
        panel.polyline(pts, colors[name])
        for x, y in pts:
            panel.dot(x, y, colors[name])


def _roofline_panel(panel: _Panel, reports, colors, balance: float, kind: str):
    import math

    xs = [
        rep.arithmetic_intensity if kind == "time" else rep.activation_reuse
        for rep in reports
    ]
    lx = [math.log10(x) for x in xs] + [math.log10(balance)]
    x_lo, x_hi = min(lx) - 0.3, max(lx) + 0.3
    for frac in (0.0, 0.5, 1.0):
        panel.tick_y(panel.map_y(frac, 0.0, 1.05), f"{frac:.1f}")
    n_ticks = 5
    for i in range(n_ticks + 1):
        v = x_lo + (x_hi - x_lo) * i / n_ticks
        panel.tick_x(panel.map_x(v, x_lo, x_hi), f"{10 ** v:.2g}")
    roof = []
    for i in range(65):
        v = x_lo + (x_hi - x_lo) * i / 64
        attain = min(1.0, (10**v) / balance)
        roof.append((panel.map_x(v, x_lo, x_hi), panel.map_y(attain, 0.0, 1.05)))
    panel.polyline(roof, "#000000")
    bx = panel.map_x(math.log10(balance), x_lo, x_hi)
    panel.polyline([(bx, panel.y0), (bx, panel.y1)], "#000000", dash="4 3")
    for rep in sorted(reports, key=lambda rep: (rep.algorithm, rep.r)):
        x = rep.arithmetic_intensity if kind == "time" else rep.activation_reuse
        attain = min(1.0, x / balance)
        panel.dot(
            panel.map_x(math.log10(x), x_lo, x_hi),
            panel.map_y(attain, 0.0, 1.05),
            colors[rep.algorithm],
        )


def sweep_svg(reports: Sequence[CostReport], w: WorkloadSpec, hw: HardwareProfile) -> str:
    """Four-panel static chart: normalized T and E vs r, time and energy rooflines."""
    by_algo = _series(reports)
    colors = {
        name: _PALETTE[i % len(_PALETTE)] for i, name in enumerate(sorted(by_algo))
    }
    width, height = 2 * _PANEL_W, 2 * _PANEL_H + 24 + 14 * len(by_algo)

    panels = [
        _Panel(0, 0, "Normalized time cost", "upsampling factor r", "T / T(D-SP, r=1)"),
        _Panel(_PANEL_W, 0, "Normalized energy cost", "upsampling factor r", "E / E(D-SP, r=1)"),
        _Panel(0, _PANEL_H, "Time roofline", "arithmetic intensity (MACs/byte)", "attainable"),
        _Panel(_PANEL_W, _PANEL_H, "Energy roofline", "activation reuse (MACs/byte)", "attainable"),
    ]
    _cost_panel(panels[0], by_algo, "T_normalized", colors)
    _cost_panel(panels[1], by_algo, "E_normalized", colors)
    _roofline_panel(panels[2], reports, colors, hw.time_balance, "time")
    _roofline_panel(panels[3], reports, colors, hw.energy_balance, "energy")

    legend = []
    for i, name in enumerate(sorted(by_algo)):
        y = 2 * _PANEL_H + 16 + 14 * i
        legend.append(
            f'<rect x="16" y="{_rd(y - 8)}" width="18" height="4" fill="{colors[name]}"/>'
            f'<text x="40" y="{_rd(y - 2)}" font-size="11">{name}</text>'
        )

    body = "\n".join(e for p in panels for e in p.elems) + "\n" + "\n".join(legend)
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width} {height}" '
        f'font-family="Helvetica, Arial, sans-serif">\n'
        f'<rect width="{width}" height="{height}" fill="#ffffff"/>\n'
        f'<title>upsample cost sweep: H={w.H} C={w.C} K={w.K} profile={hw.name}</title>\n'
        f"{body}\n</svg>\n"
    )
