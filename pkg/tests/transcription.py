"""Reader for the hand-transcribed feeder tables in ``fixtures/feeder_tables.txt``."""

from __future__ import annotations

from pathlib import Path

PATH = Path(__file__).parent / "fixtures" / "feeder_tables.txt"


def read_tables(path: Path = PATH) -> dict[str, list[list[str]]]:
    """Section name -> data rows (header dropped), every cell kept as text."""
    sections: dict[str, list[list[str]]] = {}
    current = None
    for raw in path.read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = sections.setdefault(line[1:-1], [])
            header = True
            continue
        if header:
            header = False
            continue
        current.append(line.split("\t"))
    return sections


def text(value: float) -> str:
    """Canonical text of a dataset number, for comparison with the transcription."""
    return f"{value:g}"


def dataset_tables(dataset) -> dict[str, list[list[str]]]:
    """The same sections rendered from a loaded dataset."""
    net = dataset.network
    classes = ("Commercial", "Industrial", "Residential")
    by_value = {c.value: c for c in dataset.profile.percent}
    return {
        "lines": [
            [str(ln.from_bus), str(ln.to_bus), text(ln.r_ohm), text(ln.x_ohm)] for ln in net.lines
        ],
        "loads": [
            [f"ni{b.id}", text(b.p0_peak), text(b.q0_peak), b.consumer_class.value]
            for b in net.ordered_buses
            if b.consumer_class is not None
        ],
        "profile": [
            [f"T{t}", *(text(dataset.profile.at(t, by_value[c])) for c in classes)] for t in range(1, 25)
        ],
        "profile_extra": [
            [f"T{24 + k}", *(text(row[c]) for c in classes)]
            for k, row in enumerate(dataset.extra_profile_rows, start=1)
        ],
        "capacitors": [
            [f"ni{b.id}", text(b.bank.c_microfarad), str(b.bank.n_max)]
            for b in net.ordered_buses
            if b.bank is not None
        ],
    }
