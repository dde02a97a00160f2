"""CSV tables and figure data for NESR/QBER versus t and over the (n, k) grid."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

from .analytics import EsdDesign, LinkMetrics, link_metrics
from .design import sweep
from .params import LinkParams
from . import svg

CSV_COLUMNS = ("t", "n", "k", "p_s", "q_s", "p_tail", "q_tail", "nesr", "s_esd", "qber")
DEFAULT_DESIGNS = (EsdDesign(0, 0), EsdDesign(3, 2), EsdDesign(5, 3), EsdDesign(7, 3))
FIGURES = ("nesr-qber", "nk-grid")
QBER_LIMIT = 0.03


def fmt_number(v: float | None) -> str:
    """17 significant digits, enough to round-trip a double."""
    if v is None:
        return "undefined"
    return f"{v:.16e}"


def metrics_row(m: LinkMetrics) -> list[str]:
    return [fmt_number(m.t), str(m.design.n), str(m.design.k), fmt_number(m.p_s),
            fmt_number(m.q_s), fmt_number(m.p_tail), fmt_number(m.q_tail),
            fmt_number(m.nesr), fmt_number(m.s_esd), fmt_number(m.qber)]


def to_csv(rows: Iterable[LinkMetrics]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for m in sorted(rows, key=lambda m: (m.t, m.design.n, m.design.k)):
        writer.writerow(metrics_row(m))
    return buf.getvalue()


def log_grid(t_min: float, t_max: float, points: int) -> list[float]:
    if not 0 < t_min <= t_max <= 1:
        raise ValueError("need 0 < t_min <= t_max <= 1")
    if points < 1:
        raise ValueError("need at least one point")
    if points == 1 or t_min == t_max:
        return [t_min]
    a, b = math.log10(t_min), math.log10(t_max)
    return [10 ** (a + (b - a) * i / (points - 1)) for i in range(points)]


def t_sweep(ts: Sequence[float], designs: Sequence[EsdDesign], params: LinkParams) -> list[LinkMetrics]:
    return [link_metrics(t, d, params) for t in ts for d in designs]


def grid_sweep(t: float, params: LinkParams, n_max: int) -> list[LinkMetrics]:
    return [p.metrics for p in sweep(t, params, n_max)]


@dataclass
class Claim:
    name: str
    passed: bool
    detail: str


@dataclass
class Reproduction:
    figure: str
    files: dict[str, str] = field(default_factory=dict)
    claims: list[Claim] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.claims)

    def summary(self) -> str:
        lines = [f"figure={self.figure}"]
        lines += [f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}" for c in self.claims]
        lines.append(f"overall={'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines) + "\n"

    def write(self, out_dir: Path) -> None:
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, text in self.files.items():
            (out_dir / name).write_text(text)
        (out_dir / "summary.txt").write_text(self.summary())


def _magnitude_claims(params: LinkParams, p: float, t: float, lo: float, hi: float | None) -> list[Claim]:
    m = link_metrics(t, EsdDesign(7, 3), params)
    gain = math.log10(m.nesr / t)
    in_range = gain >= lo and (hi is None or gain <= hi)
    bound = f"[{lo}, {hi}]" if hi is not None else f">= {lo}"
    return [
        Claim(f"P={p} t={t:g} (7,3) NESR gain", in_range,
              f"log10(NESR/t)={gain:.4f} (NESR={m.nesr:.6g}) expected {bound}"),
        Claim(f"P={p} t={t:g} (7,3) QBER", m.qber < QBER_LIMIT,
              f"QBER={m.qber:.6g} expected < {QBER_LIMIT}"),
    ]


def reproduce_nesr_qber(params: LinkParams, designs: Sequence[EsdDesign] = DEFAULT_DESIGNS,
                        points: int = 141) -> Reproduction:
    rep = Reproduction("nesr-qber")
    ts = log_grid(1e-14, 1.0, points)
    for p in (0.99, 0.5):
        prm = params_with(params, p)
        rows = t_sweep(ts, designs, prm)
        rep.files[f"nesr_qber_P{p}.csv"] = to_csv(rows)
        for metric, log_y in (("nesr", True), ("qber", False)):
            series = [(f"n={d.n},k={d.k}", ts, [getattr(m, metric) for m in rows if m.design == d])
                      for d in designs]
            rep.files[f"{metric}_vs_t_P{p}.svg"] = svg.line_chart(
                series, title=f"{metric.upper()} vs t, P={p}", x_label="transmission rate t",
                y_label=metric.upper(), log_x=True, log_y=log_y)
    rep.claims += _magnitude_claims(params_with(params, 0.99), 0.99, 1e-13, 7.8, 8.3)
    rep.claims += _magnitude_claims(params_with(params, 0.5), 0.5, 1e-12, 7.0, None)
    return rep


def params_with(params: LinkParams, deflection: float) -> LinkParams:
    return replace(params, gate=replace(params.gate, deflection=deflection, epsilon=0.0))


def reproduce_nk_grid(params: LinkParams, n_max: int = 9, ts: Sequence[float] = (1e-7, 1e-9)) -> Reproduction:
    rep = Reproduction("nk-grid")
    for t in ts:
        rows = grid_sweep(t, params, n_max)
        tag = f"t{t:.0e}"
        rep.files[f"nk_grid_{tag}.csv"] = to_csv(rows)
        for metric, log_values in (("nesr", True), ("qber", False)):
            cells = {(m.design.n, m.design.k): getattr(m, metric) for m in rows}
            rep.files[f"{metric}_nk_{tag}.svg"] = svg.heatmap(
                cells, title=f"{metric.upper()} over (n, k), t={t:g}",
                value_label=metric.upper(), log_values=log_values)
        blocked = [m for m in rows if m.design.k >= 1]
        if t >= 1e-8:
            worst = max(blocked, key=lambda m: m.qber)
            rep.claims.append(Claim(
                f"t={t:g} QBER controlled for k>=1", all(m.qber < QBER_LIMIT for m in blocked),
                f"max QBER over k>=1 is {worst.qber:.6g} at {worst.design}"))
        else:
            k1 = [m for m in blocked if m.design.k == 1]
            k2 = [m for m in blocked if m.design.k >= 2]
            low = min(k1, key=lambda m: m.qber)
            high = max(k2, key=lambda m: m.qber)
            rep.claims.append(Claim(
                f"t={t:g} QBER above {QBER_LIMIT} for k=1", all(m.qber > QBER_LIMIT for m in k1),
                f"min QBER over k=1 is {low.qber:.6g} at {low.design}"))
            rep.claims.append(Claim(
                f"t={t:g} QBER controlled for k>=2", all(m.qber < QBER_LIMIT for m in k2),
                f"max QBER over k>=2 is {high.qber:.6g} at {high.design}"))
    return rep


def reproduce(figure: str, params: LinkParams, designs: Sequence[EsdDesign] = DEFAULT_DESIGNS) -> Reproduction:
    if figure == "nesr-qber":
        return reproduce_nesr_qber(params, designs)
    if figure == "nk-grid":
        return reproduce_nk_grid(params)
    raise ValueError(f"unknown figure {figure!r}; choose from {', '.join(FIGURES)}")
