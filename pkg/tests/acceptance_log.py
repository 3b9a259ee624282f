"""Collects one verdict line per acceptance criterion for the terminal summary."""

LINES: dict[int, str] = {}


def record(number: int, ok: bool, detail: str) -> bool:
    LINES[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(LINES[number])
    return ok
