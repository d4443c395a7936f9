"""Pre-generated sample questions: one per measure and dimension pair.

The library gives users working starting points and gives the parser a set
of exact-match targets, so a question copied verbatim from the library
always carries a fully specified sketch.  Capped at 50 entries per graph.
"""

from __future__ import annotations

import re
from typing import Dict, List

from ..model import ContextGraph, MEASURE, DIMENSION
from .sketch import QuerySketch

SAMPLE_CAP = 50


def _normalize(question: str) -> str:
    text = question.lower().strip()
    text = re.sub(r"[?!.]+$", "", text)
    return re.sub(r"\s+", " ", text)


def generate_sample_questions(graph: ContextGraph) -> List[dict]:
    """[{question, sketch}] in deterministic table/column order."""
    out: List[dict] = []
    for table in graph.tables:
        measures = [c for c in table.columns if c.role == MEASURE and not c.pii]
        dimensions = [c for c in table.columns
                      if c.role == DIMENSION and not c.pii
                      and c.data_type == "text"]
        for measure in measures:
            m_disp = (measure.display_name or measure.name).lower()
            for dim in dimensions:
                if len(out) >= SAMPLE_CAP:
                    return out
                d_disp = (dim.display_name or dim.name).lower()
                question = f"Total {m_disp} by {d_disp}"
                sketch = QuerySketch(
                    select_terms=[m_disp],
                    group_terms=[d_disp],
                    wants_aggregate=True,
                    aggregate_fn="sum",
                )
                out.append({"question": question, "sketch": sketch.to_doc()})
    return out


def sample_lookup(graph: ContextGraph) -> Dict[str, dict]:
    """Normalized question text -> sketch document."""
    return {_normalize(s["question"]): s["sketch"]
            for s in generate_sample_questions(graph)}
