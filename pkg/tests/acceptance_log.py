"""Collected one-line acceptance results (printed by the conftest summary hook)."""

LINES: list[str] = []


def record(number: int, passed: bool, detail: str) -> bool:
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
    LINES.append(line)
    print(line, flush=True)
    return passed
