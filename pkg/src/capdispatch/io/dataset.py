"""Dataset files: one JSON document each for network, prices and profile.

Every document carries ``schema_version`` and ``kind`` fields. Errors are
raised as :class:`DatasetError` with a code (``parse``, ``schema``, ``xref``
or ``validation``), the file and a JSON-path location inside it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable

from capdispatch.economics import PriceSchedule
from capdispatch.io import bundled
from capdispatch.loadmodel import (
    HOURS,
    PRESETS,
    Bus,
    ConsumerClass,
    LoadModelParams,
    LoadProfile,
    params_for_class,
)
from capdispatch.netmodel import Diagnostic, Line, Network, PerUnitBase, validate_network
from capdispatch.powerflow import CapacitorBank

SCHEMA_VERSION = 1
DATA_DIR = Path(__file__).parent / "data"
BUNDLED_PATHS = (DATA_DIR / "network.json", DATA_DIR / "prices.json", DATA_DIR / "profile.json")


class DatasetError(Exception):
    def __init__(
        self,
        code: str,
        file: str,
        location: str,
        message: str,
        diagnostics: Iterable[Diagnostic] = (),
    ):
        self.code = code
        self.file = file
        self.location = location
        self.message = message
        self.diagnostics = list(diagnostics)
        super().__init__(f"{code} error in {file} at {location}: {message}")


@dataclass(frozen=True)
class Dataset:
    network: Network
    prices: PriceSchedule
    profile: LoadProfile
    provenance: dict[str, str] = field(default_factory=dict)
    extra_profile_rows: tuple[dict[str, float], ...] = ()


class _Reader:
    """Typed accessors over a parsed document that raise located schema errors."""

    def __init__(self, file: str):
        self.file = file

    def fail(self, path: str, message: str, code: str = "schema") -> DatasetError:
        return DatasetError(code, self.file, path, message)

    def get(self, obj: Any, key: str, path: str, default: Any = ...) -> Any:
        if not isinstance(obj, dict):
            raise self.fail(path, "expected an object")
        if key not in obj:
            if default is ...:
                raise self.fail(f"{path}.{key}", "missing required field")
            return default
        return obj[key]

    def number(self, value: Any, path: str, *, positive: bool = False, nonneg: bool = False) -> float:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise self.fail(path, f"expected a finite number, got {value!r}")
        if positive and not value > 0:
            raise self.fail(path, f"must be > 0, got {value}")
        if nonneg and value < 0:
            raise self.fail(path, f"must be >= 0, got {value}")
        return float(value)

    def integer(self, value: Any, path: str) -> int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise self.fail(path, f"expected an integer, got {value!r}")
        return value

    def array(self, value: Any, path: str) -> list:
        if not isinstance(value, list):
            raise self.fail(path, "expected an array")
        return value

    def hourly(self, value: Any, path: str, **kw: bool) -> tuple[float, ...]:
        if not isinstance(value, list):
            return (self.number(value, path, **kw),) * HOURS
        if len(value) != HOURS:
            raise self.fail(path, f"expected {HOURS} hourly rows, got {len(value)}")
        return tuple(self.number(v, f"{path}[{k}]", **kw) for k, v in enumerate(value))

    def consumer_class(self, value: Any, path: str) -> ConsumerClass:
        try:
            return ConsumerClass(value)
        except ValueError:
            names = ", ".join(c.value for c in ConsumerClass)
            raise self.fail(path, f"unknown consumer class {value!r} (expected one of {names})") from None


def _read_json(path: Path | str, kind: str) -> tuple[dict, _Reader]:
    path = Path(path)
    reader = _Reader(str(path))
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DatasetError("parse", str(path), "-", f"cannot read file: {exc.strerror or exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DatasetError("parse", str(path), f"line {exc.lineno}, column {exc.colno}", exc.msg) from exc
    if not isinstance(doc, dict):
        raise reader.fail("$", "top level must be an object")
    version = reader.get(doc, "schema_version", "$")
    if version != SCHEMA_VERSION:
        raise reader.fail("$.schema_version", f"unsupported schema version {version!r}")
    if reader.get(doc, "kind", "$") != kind:
        raise reader.fail("$.kind", f"expected kind {kind!r}")
    return doc, reader


def _provenance(doc: dict, reader: _Reader, prefix: str) -> dict[str, str]:
    raw = reader.get(doc, "provenance", "$", default={})
    if isinstance(raw, str):
        return {prefix: raw}
    if not isinstance(raw, dict) or not all(isinstance(v, str) for v in raw.values()):
        raise reader.fail("$.provenance", "expected a string or an object of strings")
    return {f"{prefix}/{k}": v for k, v in raw.items()}


def parse_network(path: Path | str) -> tuple[Network, dict[str, str]]:
    doc, r = _read_json(path, "network")
    base_doc = r.get(doc, "base", "$", default={})
    try:
        base = PerUnitBase(
            r.number(r.get(base_doc, "mva", "$.base", 10.0), "$.base.mva", positive=True),
            r.number(r.get(base_doc, "kv", "$.base", 20.0), "$.base.kv", positive=True),
        )
    except ValueError as exc:
        raise r.fail("$.base", str(exc)) from exc
    frequency = r.number(r.get(doc, "frequency_hz", "$", 50.0), "$.frequency_hz", positive=True)
    slack_doc = r.get(doc, "slack", "$")
    slack_raw = r.get(slack_doc, "bus", "$.slack")
    slack_ids = slack_raw if isinstance(slack_raw, list) else [slack_raw]
    slack_buses = tuple(r.integer(b, "$.slack.bus") for b in slack_ids)
    slack_v = r.number(r.get(slack_doc, "voltage_pu", "$.slack", 1.0), "$.slack.voltage_pu", positive=True)

    banks: dict[int, CapacitorBank] = {}
    for k, cap in enumerate(r.array(r.get(doc, "capacitors", "$", []), "$.capacitors")):
        path_k = f"$.capacitors[{k}]"
        bus_id = r.integer(r.get(cap, "bus", path_k), f"{path_k}.bus")
        if bus_id in banks:
            raise r.fail(f"{path_k}.bus", f"second capacitor bank on bus {bus_id}")
        c = r.number(r.get(cap, "c_microfarad", path_k), f"{path_k}.c_microfarad", positive=True)
        n_max = r.integer(r.get(cap, "n_max", path_k), f"{path_k}.n_max")
        if n_max < 1:
            raise r.fail(f"{path_k}.n_max", f"must be >= 1, got {n_max}")
        banks[bus_id] = CapacitorBank(c, n_max)

    buses = []
    for k, bd in enumerate(r.array(r.get(doc, "buses", "$"), "$.buses")):
        path_k = f"$.buses[{k}]"
        bus_id = r.integer(r.get(bd, "id", path_k), f"{path_k}.id")
        raw_class = r.get(bd, "class", path_k, None)
        cls = None if raw_class is None else r.consumer_class(raw_class, f"{path_k}.class")
        params = _bus_params(bd, cls, r, path_k)
        buses.append(
            Bus(
                id=bus_id,
                consumer_class=cls,
                params=params,
                p0_peak=r.number(r.get(bd, "p_peak_pu", path_k, 0.0), f"{path_k}.p_peak_pu", nonneg=True),
                q0_peak=r.number(r.get(bd, "q_peak_pu", path_k, 0.0), f"{path_k}.q_peak_pu", nonneg=True),
                v_min_pu=r.number(r.get(bd, "v_min_pu", path_k, 0.9), f"{path_k}.v_min_pu", positive=True),
                v_max_pu=r.number(r.get(bd, "v_max_pu", path_k, 1.1), f"{path_k}.v_max_pu", positive=True),
                bank=banks.get(bus_id),
            )
        )
    known = {b.id for b in buses}
    for k, bus_id in enumerate(banks):
        if bus_id not in known:
            raise r.fail(f"$.capacitors[{k}].bus", f"capacitor declared on nonexistent bus {bus_id}", "xref")

    lines = []
    for k, ld in enumerate(r.array(r.get(doc, "lines", "$"), "$.lines")):
        path_k = f"$.lines[{k}]"
        try:
            lines.append(
                Line(
                    r.integer(r.get(ld, "from", path_k), f"{path_k}.from"),
                    r.integer(r.get(ld, "to", path_k), f"{path_k}.to"),
                    r.number(r.get(ld, "r_ohm", path_k), f"{path_k}.r_ohm", nonneg=True),
                    r.number(r.get(ld, "x_ohm", path_k), f"{path_k}.x_ohm", nonneg=True),
                )
            )
        except ValueError as exc:
            raise r.fail(path_k, str(exc)) from exc

    network = Network(
        buses=tuple(buses),
        lines=tuple(lines),
        slack_buses=slack_buses,
        slack_voltage_pu=slack_v,
        base=base,
        frequency_hz=frequency,
    )
    return network, _provenance(doc, r, "network")


def _bus_params(bd: dict, cls: ConsumerClass | None, r: _Reader, path: str) -> LoadModelParams:
    if cls is None:
        return PRESETS["constant-power"]
    if cls is not ConsumerClass.CUSTOM:
        return params_for_class(cls)
    if "model" in bd:
        name = bd["model"]
        if name not in PRESETS:
            raise r.fail(f"{path}.model", f"unknown load model preset {name!r}")
        return PRESETS[name]
    if "k1" not in bd or "k2" not in bd:
        raise r.fail(path, "Custom class requires explicit k1 and k2 (or a model preset)")
    return LoadModelParams(
        r.number(bd["k1"], f"{path}.k1", nonneg=True),
        r.number(bd["k2"], f"{path}.k2", nonneg=True),
    )


def parse_profile(path: Path | str) -> tuple[LoadProfile, dict[str, str], tuple[dict[str, float], ...]]:
    doc, r = _read_json(path, "profile")
    classes = [
        r.consumer_class(c, f"$.classes[{k}]")
        for k, c in enumerate(r.array(r.get(doc, "classes", "$"), "$.classes"))
    ]
    rows = r.array(r.get(doc, "rows", "$"), "$.rows")
    if len(rows) != HOURS:
        raise r.fail("$.rows", f"expected {HOURS} hourly rows, got {len(rows)}")

    def read_row(row: Any, path: str) -> dict[str, float]:
        out = {}
        for cls in classes:
            pct = r.number(r.get(row, cls.value, path), f"{path}.{cls.value}", nonneg=True)
            if pct > 100:
                raise r.fail(f"{path}.{cls.value}", f"percentage {pct} exceeds 100")
            out[cls.value] = pct
        return out

    columns: dict[ConsumerClass, list[float]] = {c: [] for c in classes}
    for k, row in enumerate(rows):
        path_k = f"$.rows[{k}]"
        t = r.integer(r.get(row, "t", path_k), f"{path_k}.t")
        if t != k + 1:
            raise r.fail(f"{path_k}.t", f"expected hour {k + 1}, got {t}")
        for name, pct in read_row(row, path_k).items():
            columns[ConsumerClass(name)].append(pct)
    extras = []
    for k, row in enumerate(r.array(r.get(doc, "extra_rows", "$", []), "$.extra_rows")):
        path_k = f"$.extra_rows[{k}]"
        extras.append({"t": float(r.integer(r.get(row, "t", path_k), f"{path_k}.t")), **read_row(row, path_k)})
    profile = LoadProfile({c: tuple(v) for c, v in columns.items()})
    return profile, _provenance(doc, r, "profile"), tuple(extras)


def parse_prices(path: Path | str) -> tuple[PriceSchedule, dict[str, str]]:
    doc, r = _read_json(path, "prices")
    retail = r.get(doc, "retail", "$")
    if not isinstance(retail, dict):
        raise r.fail("$.retail", "expected an object keyed by consumer class")
    ca, cr = {}, {}
    for name, entry in retail.items():
        cls = r.consumer_class(name, f"$.retail.{name}")
        ca[cls] = r.hourly(r.get(entry, "active", f"$.retail.{name}"), f"$.retail.{name}.active", nonneg=True)
        cr[cls] = r.hourly(r.get(entry, "reactive", f"$.retail.{name}"), f"$.retail.{name}.reactive", nonneg=True)
    wholesale = r.get(doc, "wholesale", "$")
    prices = PriceSchedule(
        ca=ca,
        cr=cr,
        pm=r.hourly(r.get(wholesale, "active", "$.wholesale"), "$.wholesale.active", nonneg=True),
        qm=r.hourly(r.get(wholesale, "reactive", "$.wholesale"), "$.wholesale.reactive", nonneg=True),
        p_slack_max=r.hourly(r.get(doc, "p_slack_max_pu", "$", 10.0), "$.p_slack_max_pu", positive=True),
        q_slack_max=r.hourly(r.get(doc, "q_slack_max_pu", "$", 10.0), "$.q_slack_max_pu", positive=True),
    )
    return prices, _provenance(doc, r, "prices")


def read_dataset(network_path: Path | str, prices_path: Path | str, profile_path: Path | str) -> Dataset:
    """Parse the three files and check cross references, without network validation."""
    network, prov_n = parse_network(network_path)
    prices, prov_p = parse_prices(prices_path)
    profile, prov_l, extras = parse_profile(profile_path)
    for bus in network.ordered_buses:
        cls = bus.consumer_class
        if cls is None:
            continue
        if cls not in profile.percent:
            raise DatasetError(
                "xref", str(profile_path), "$.classes", f"bus {bus.id} uses class {cls.value} with no profile column"
            )
        if cls not in prices.ca:
            raise DatasetError(
                "xref", str(prices_path), "$.retail", f"bus {bus.id} uses class {cls.value} with no retail prices"
            )
    return Dataset(network, prices, profile, {**prov_n, **prov_p, **prov_l}, extras)


def load_dataset(network_path: Path | str, prices_path: Path | str, profile_path: Path | str) -> Dataset:
    """Parse, cross-check and validate a dataset.

    Raises:
        DatasetError: ``validation`` code carries the network diagnostics.
    """
    dataset = read_dataset(network_path, prices_path, profile_path)
    diags = validate_network(dataset.network)
    if diags:
        raise DatasetError(
            "validation", str(network_path), diags[0].location, "; ".join(str(d) for d in diags), diags
        )
    return dataset


def bundled_khodabandelu() -> Dataset:
    rows = [dict(zip((c.value for c in bundled.PROFILE_CLASSES), map(float, r))) for r in bundled.EXTRA_PROFILE_ROWS]
    extras = tuple({"t": float(HOURS + 1 + k), **row} for k, row in enumerate(rows))
    return Dataset(
        network=bundled.bundled_network(),
        prices=bundled.bundled_prices(),
        profile=bundled.bundled_profile(),
        provenance=dict(bundled.PROVENANCE),
        extra_profile_rows=extras,
    )


def with_overrides(
    network: Network,
    *,
    base_mva: float | None = None,
    frequency_hz: float | None = None,
    v_min_pu: float | None = None,
    v_max_pu: float | None = None,
) -> Network:
    """Copy of ``network`` with system-wide parameters replaced."""
    if base_mva is not None:
        network = replace(network, base=PerUnitBase(base_mva, network.base.base_kv))
    if frequency_hz is not None:
        network = replace(network, frequency_hz=frequency_hz)
    if v_min_pu is not None or v_max_pu is not None:
        buses = tuple(
            replace(
                b,
                v_min_pu=b.v_min_pu if v_min_pu is None else v_min_pu,
                v_max_pu=b.v_max_pu if v_max_pu is None else v_max_pu,
            )
            for b in network.buses
        )
        network = replace(network, buses=buses)
    return network


# -- serialisation -----------------------------------------------------------


def _split_provenance(provenance: dict[str, str], prefix: str) -> dict[str, str] | str:
    if prefix in provenance:
        return provenance[prefix]
    return {k[len(prefix) + 1 :]: v for k, v in provenance.items() if k.startswith(prefix + "/")}


def network_document(network: Network, provenance: dict[str, str] | None = None) -> dict:
    buses = []
    for b in network.ordered_buses:
        entry: dict[str, Any] = {"id": b.id, "class": None if b.consumer_class is None else b.consumer_class.value}
        if b.consumer_class is ConsumerClass.CUSTOM:
            entry.update(k1=b.params.k1, k2=b.params.k2)
        entry.update(p_peak_pu=b.p0_peak, q_peak_pu=b.q0_peak, v_min_pu=b.v_min_pu, v_max_pu=b.v_max_pu)
        buses.append(entry)
    slack: Any = network.slack_buses[0] if len(network.slack_buses) == 1 else list(network.slack_buses)
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "network",
        "provenance": _split_provenance(provenance or {}, "network"),
        "base": {"mva": network.base.base_mva, "kv": network.base.base_kv},
        "frequency_hz": network.frequency_hz,
        "slack": {"bus": slack, "voltage_pu": network.slack_voltage_pu},
        "buses": buses,
        "lines": [{"from": ln.from_bus, "to": ln.to_bus, "r_ohm": ln.r_ohm, "x_ohm": ln.x_ohm} for ln in network.lines],
        "capacitors": [
            {"bus": b.id, "c_microfarad": b.bank.c_microfarad, "n_max": b.bank.n_max}
            for b in network.ordered_buses
            if b.bank is not None
        ],
    }


def _floats(values) -> list[float]:
    return [float(v) for v in values]


def prices_document(prices: PriceSchedule, provenance: dict[str, str] | None = None) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "prices",
        "provenance": _split_provenance(provenance or {}, "prices"),
        "retail": {
            cls.value: {"active": _floats(prices.ca[cls]), "reactive": _floats(prices.cr[cls])} for cls in prices.ca
        },
        "wholesale": {"active": _floats(prices.pm), "reactive": _floats(prices.qm)},
        "p_slack_max_pu": _floats(prices.p_slack_max),
        "q_slack_max_pu": _floats(prices.q_slack_max),
    }


def profile_document(
    profile: LoadProfile,
    provenance: dict[str, str] | None = None,
    extra_rows: Iterable[dict[str, float]] = (),
) -> dict:
    classes = list(profile.percent)
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "profile",
        "provenance": _split_provenance(provenance or {}, "profile"),
        "classes": [c.value for c in classes],
        "rows": [{"t": t, **{c.value: profile.percent[c][t - 1] for c in classes}} for t in range(1, HOURS + 1)],
        "extra_rows": [{**row, "t": int(row["t"])} for row in extra_rows],
    }


def write_dataset(dataset: Dataset, network_path: Path | str, prices_path: Path | str, profile_path: Path | str) -> None:
    docs = (
        (network_path, network_document(dataset.network, dataset.provenance)),
        (prices_path, prices_document(dataset.prices, dataset.provenance)),
        (profile_path, profile_document(dataset.profile, dataset.provenance, dataset.extra_profile_rows)),
    )
    for path, doc in docs:
        Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
