"""Display utilities for pretty-printing schedules and run summaries"""

from typing import Dict, List, Sequence


def _fmt(value: float) -> str:
    return f"{value:g}"


def format_schedule(brackets: Sequence) -> str:
    """Aligned text table of a Hyperband bracket schedule, one bracket per row."""
    rows = []
    for bracket in brackets:
        stages = " -> ".join(f"{stage.n}x{_fmt(stage.budget)}" for stage in bracket.stages)
        rows.append([str(bracket.s), str(bracket.n), _fmt(bracket.b0), stages, _fmt(bracket.total_budget)])

    header = ["s", "n", "b0", "stages (n x budget)", "total budget"]
    widths = [max(len(header[i]), *(len(r[i]) for r in rows)) if rows else len(header[i]) for i in range(len(header))]

    def line(cells: List[str]) -> str:
        return " │ ".join(cell.rjust(w) if i != 3 else cell.ljust(w) for i, (cell, w) in enumerate(zip(cells, widths)))

    output = [line(header), "─" * len(line(header))]
    output += [line(r) for r in rows]
    return "\n".join(output)


def format_run_summary(summaries: List[Dict]) -> str:
    """One row per seed: final incumbent loss, regret, evaluations per budget and model fraction."""
    output = [f"\n{'='*70}", "📊 RUN SUMMARY", f"{'='*70}"]
    if not summaries:
        output.append("❌ No runs completed")
        output.append(f"{'='*70}")
        return "\n".join(output)

    for s in summaries:
        loss = "N/A" if s.get("incumbent_loss") is None else f"{s['incumbent_loss']:.6g}"
        regret = "N/A" if s.get("incumbent_regret") is None else f"{s['incumbent_regret']:.6g}"
        per_budget = ", ".join(f"{_fmt(b)}:{n}" for b, n in sorted(s.get("evaluations_per_budget", {}).items()))
        output.append(
            f"🎲 seed {s['seed']:>4} │ loss {loss:>10} │ regret {regret:>10} │ "
            f"evals {s['evaluations']:>5} │ model {s['model_fraction']:.0%}"
        )
        if per_budget:
            output.append(f"   per budget: {per_budget}")
    output.append(f"{'='*70}")
    return "\n".join(output)
