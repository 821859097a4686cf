# charts.py  –  Plotly figures for a report table

from __future__ import annotations

import logging
from pathlib import Path
from typing import Sequence, Union

import plotly.graph_objects as go

from config import READABILITY_TARGET_GRADE
from harness import ReportRow

logger = logging.getLogger(__name__)

IMAGE_SUFFIXES = {".png", ".svg", ".pdf", ".jpg", ".jpeg", ".webp"}

_LAYOUT = dict(
    margin=dict(l=10, r=10, t=40, b=30),
    paper_bgcolor="white",
    plot_bgcolor="white",
    font_color="#333333",
    legend=dict(orientation="h", yanchor="bottom", y=1.02, xanchor="center", x=0.5),
)


def _scored(rows: Sequence[ReportRow]) -> list:
    # "/" rows have nothing to draw
    return [r for r in rows if not r.is_absent]


def create_score_chart(rows: Sequence[ReportRow]) -> go.Figure:
    """Grouped horizontal bars: SARI and BLEU per row."""
    scored = _scored(rows)
    labels = [r.label for r in scored]

    fig = go.Figure()
    fig.add_trace(go.Bar(
        y=labels, x=[r.sari for r in scored], name="SARI",
        orientation="h", marker_color="rgba(78,205,196,0.8)",
    ))
    fig.add_trace(go.Bar(
        y=labels, x=[r.bleu for r in scored], name="BLEU",
        orientation="h", marker_color="rgba(255,107,107,0.6)",
    ))
    fig.update_layout(
        barmode="group",
        xaxis=dict(range=[0, 100], title="Score"),
        yaxis=dict(autorange="reversed"),
        height=max(250, len(scored) * 60),
        **_LAYOUT,
    )
    return fig


def create_readability_chart(rows: Sequence[ReportRow], target: float = READABILITY_TARGET_GRADE) -> go.Figure:
    """FKGL per row with a dashed line at the target grade."""
    scored = _scored(rows)

    fig = go.Figure()
    fig.add_trace(go.Bar(
        x=[r.label for r in scored], y=[r.fkgl for r in scored], name="FKGL",
        marker_color=["rgba(78,205,196,0.8)" if r.fkgl <= target else "rgba(255,107,107,0.6)" for r in scored],
    ))
    fig.add_hline(
        y=target, line_dash="dash", line_color="#888888",
        annotation_text=f"grade {target:g}", annotation_position="top right",
    )
    fig.update_layout(yaxis=dict(title="Grade level"), height=420, showlegend=False, **_LAYOUT)
    return fig


def save_figure(fig: go.Figure, path: Union[str, Path]) -> None:
    """``.html`` is written by plotly itself; image formats need kaleido."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix in (".html", ".htm"):
        fig.write_html(str(path), include_plotlyjs="cdn")
    elif suffix in IMAGE_SUFFIXES:
        fig.write_image(str(path))
    else:
        raise ValueError(f"unsupported chart format {suffix or path.name!r}")
    logger.info("Wrote chart to %s", path)
