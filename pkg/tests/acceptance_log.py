"""Collects one PASS/FAIL line per acceptance criterion."""

LINES: list[str] = []


def record(criterion: int, ok: bool, detail: str) -> bool:
    line = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}"
    LINES.append(line)
    print(line)
    return ok
