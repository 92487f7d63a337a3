"""Deterministic markdown reports and artifact headers."""

from __future__ import annotations

from dataclasses import dataclass, field

from . import __version__
from .errors import IoFailure

__all__ = ["RunResults", "artifact_header", "emit_report", "fmt"]

TOOL = "morse-infinity"


def fmt(v) -> str:
    """Shortest round-trip form of a number; integral floats drop ``.0``."""
    if isinstance(v, bool) or v is None:
        return str(v)
    if isinstance(v, int):
        return str(v)
    try:
        text = repr(float(v))
    except (TypeError, ValueError):
        return str(v)
    return text[:-2] if text.endswith(".0") else text


def artifact_header(command: str, config: dict, seed, prefix: str = "# ") -> str:
    """Header lines naming tool version, command, seed and the full config."""
    echo = " ".join(f"{k}={_cfg_value(config[k])}" for k in sorted(config))
    lines = [f"{TOOL} {__version__}", f"command: {command}", f"seed: {seed}", f"config: {echo}"]
    return "".join(prefix + line + "\n" for line in lines)


def _cfg_value(v) -> str:
    if isinstance(v, float):
        return fmt(v)
    return str(v)


@dataclass
class RunResults:
    """Collected output of the pipeline stages that ran.

    Attributes:
        command: The subcommand.
        config: Config echo (flat mapping).
        seed: Seed used.
        audits: ``ConditionResult``-like rows.
        constants: ``(name, value, note)`` rows; ``note`` names the check
            tolerance or the source of the value.
        reduction: Summary mapping of the reduction stage.
        chart: Summary mapping of the chart stage.
        solutions: ``BVPSolution`` rows, with ``solution_tol``.
        notes: Free-form lines appended at the end.
        informational: Audit names that are reported but not required.
    """

    command: str = "report"
    config: dict = field(default_factory=dict)
    seed: int = 0
    audits: list = field(default_factory=list)
    constants: list = field(default_factory=list)
    reduction: dict | None = None
    chart: dict | None = None
    solutions: list | None = None
    solution_tol: float = 1e-8
    notes: list = field(default_factory=list)
    informational: set = field(default_factory=set)

    @property
    def audits_passed(self) -> bool:
        """All audits pass, ignoring rows listed in ``informational``."""
        return all(a.passed for a in self.audits if a.name not in self.informational)


def _verdict(a, informational) -> str:
    v = "yes" if a.passed else "NO"
    return v + " (not required)" if a.name in informational else v


def _table(head, rows) -> list:
    out = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    out += ["| " + " | ".join(str(c) for c in r) + " |" for r in rows]
    return out


def _mapping(d: dict) -> list:
    return _table(["quantity", "value"], [(k, fmt(v)) for k, v in d.items()])


def render_report(r: RunResults) -> str:
    """Markdown text of the report; depends only on the contents of ``r``."""
    lines = [f"# {TOOL} report", "", "```", artifact_header(r.command, r.config, r.seed, prefix="").rstrip(), "```"]
    if r.audits:
        lines += ["", "## Audits", ""]
        lines += _table(
            ["condition", "passed", "worst value", "tolerance", "samples"],
            [(a.name, _verdict(a, r.informational), fmt(a.worst_value), fmt(a.tolerance), a.samples_used)
             for a in r.audits],
        )
    if r.constants:
        lines += ["", "## Constants", ""]
        lines += _table(["constant", "value", "checked against"], [(n, fmt(v), note) for n, v, note in r.constants])
    if r.reduction:
        lines += ["", "## Reduction", ""] + _mapping(r.reduction)
    if r.chart:
        lines += ["", "## Chart", ""] + _mapping(r.chart)
    if r.solutions is not None:
        lines += ["", "## Solutions", "", f"Acceptance: gradient and doubled-quadrature residual <= {fmt(r.solution_tol)}.", ""]
        lines += _table(
            ["#", "source", "nontrivial", "norm_H", "grad_norm", "residual"],
            [(i, s.source, "yes" if s.nontrivial else "no", fmt(s.norm_H), fmt(s.grad_norm), fmt(s.residual))
             for i, s in enumerate(r.solutions)],
        )
    if r.notes:
        lines += ["", "Notes:", ""] + [f"- {n}" for n in r.notes]
    return "\n".join(lines) + "\n"


def emit_report(results: RunResults, path=None) -> str:
    """Render the report and, if ``path`` is given, write it.

    Raises:
        IoFailure: The file cannot be written.
    """
    text = render_report(results)
    if path is not None:
        try:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise IoFailure(f"cannot write report {path!s}: {exc}") from exc
    return text
