import json
import logging
import os
from typing import Any, Dict, List, Optional

import networkx as nx
from pydantic import BaseModel, Field

logger = logging.getLogger("reports")

SCHEMA_VERSION = 1
TOOL_VERSION = "0.4.0"


class CheckVerdict(BaseModel):
    """One named check with its outcome and witnesses"""
    name: str
    passed: bool
    details: Dict[str, Any] = Field(default_factory=dict)
    witnesses: List[Any] = Field(default_factory=list)


class RunReport(BaseModel):
    """Machine-readable result of one CLI run"""
    schema_version: int = SCHEMA_VERSION
    tool_version: str = TOOL_VERSION
    command: List[str]
    instance: Dict[str, Any] = Field(default_factory=dict)
    config: Dict[str, Any] = Field(default_factory=dict)
    checks: List[CheckVerdict] = Field(default_factory=list)
    timing: Optional[float] = None

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def add(self, name: str, passed: bool, witnesses: Optional[List[Any]] = None, **details) -> CheckVerdict:
        verdict = CheckVerdict(name=name, passed=bool(passed), details=details, witnesses=witnesses or [])
        self.checks.append(verdict)
        return verdict

    def to_json(self) -> str:
        data = self.dict(exclude={"timing"} if self.timing is None else set())
        return json.dumps(data, indent=2, sort_keys=True, default=str)

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(self.to_json())
            handle.write("\n")
        logger.info(f"Report written to {path}")


def _node_order(graph: nx.Graph) -> List[Any]:
    try:
        return sorted(graph.nodes)
    except TypeError:
        return sorted(graph.nodes, key=str)


def _quote(value: Any) -> str:
    return '"' + str(value).replace('"', '\\"') + '"'


def dot_source(graph: nx.Graph, name: str = "G") -> str:
    """DOT text with nodes and edges in a stable order"""
    lines = [f"graph {name} {{"]
    position = {node: i for i, node in enumerate(_node_order(graph))}
    for node in position:
        lines.append(f"  {_quote(node)};")
    edges = sorted(
        (tuple(sorted((a, b), key=position.get)) + (data,) for a, b, data in graph.edges(data=True)),
        key=lambda edge: (position[edge[0]], position[edge[1]]),
    )
    for a, b, data in edges:
        label = ",".join(f"{key}={data[key]}" for key in sorted(data))
        suffix = f" [label={_quote(label)}]" if label else ""
        lines.append(f"  {_quote(a)} -- {_quote(b)}{suffix};")
    return "\n".join(lines) + "\n}\n"


def export_dot(graph: nx.Graph, path: str, name: str = "G") -> None:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(dot_source(graph, name))
    logger.info(f"DOT export of {graph.number_of_nodes()} nodes, {graph.number_of_edges()} edges to {path}")
