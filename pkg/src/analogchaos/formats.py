"""Text formats: instance files and result CSV/JSON."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .chaos import ChaosRecord, Outcome, ResultTable
from .errors import StorageError, ValidationError
from .model import Family, Instance

RESULT_COLUMNS = (
    "family",
    "n",
    "sigma",
    "instance_id",
    "realization_id",
    "outcome",
    "delta_e0",
    "D",
    "W",
    "z",
    "e_intended",
    "manifest",
)


# -- instances -----------------------------------------------------------


def _spins_to_text(s) -> str:
    return "".join("+" if x > 0 else "-" for x in s)


def format_instance(instance: Instance) -> str:
    """Header ``# family=.. n=.. m=.. [meta k=v ...]``, ground-state lines, then terms.

    Metadata values are compact JSON; couplings use the shortest decimal
    that round-trips the binary value.
    """
    head = f"# family={instance.family.value} n={instance.n_spins} m={instance.n_terms}"
    if instance.metadata:
        meta = " ".join(
            f"{k}={json.dumps(v, separators=(',', ':'), sort_keys=True)}"
            for k, v in instance.metadata.items()
        )
        head += " meta " + meta
    lines = [head]
    lines.extend(f"# gs {_spins_to_text(g)}" for g in instance.known_ground_states)
    for k in range(instance.n_terms):
        sites = instance.term_sites(k)
        lines.append(f"{len(sites)} {' '.join(map(str, sites))} {float(instance.couplings[k])!r}")
    return "\n".join(lines) + "\n"


def parse_instance(text: str) -> Instance:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# family="):
        raise ValidationError("instance file must start with a '# family=' header")
    fields = lines[0][2:].split(" ")
    header: dict[str, str] = {}
    meta: dict = {}
    in_meta = False
    for tok in fields:
        if tok == "meta":
            in_meta = True
            continue
        key, sep, value = tok.partition("=")
        if not sep:
            raise ValidationError(f"malformed header token {tok!r}")
        if in_meta:
            meta[key] = json.loads(value)
        else:
            header[key] = value
    try:
        n = int(header["n"])
        m = int(header["m"])
        family = Family(header["family"])
    except (KeyError, ValueError) as exc:
        raise ValidationError(f"bad instance header: {exc}") from exc
    gs = []
    sites = []
    couplings = []
    for line in lines[1:]:
        if line.startswith("# gs "):
            gs.append([1 if c == "+" else -1 for c in line[5:].strip()])
            continue
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split()
        a = int(parts[0])
        if len(parts) != a + 2:
            raise ValidationError(f"term line {line!r} does not match its arity")
        sites.append(tuple(int(x) for x in parts[1 : 1 + a]))
        couplings.append(float(parts[-1]))
    if len(sites) != m:
        raise ValidationError(f"header says m={m} but found {len(sites)} terms")
    return Instance.from_arrays(n, sites, couplings, family, meta, gs)


def write_instance(instance: Instance, path) -> None:
    try:
        Path(path).write_text(format_instance(instance))
    except OSError as exc:
        raise StorageError(f"cannot write {path}: {exc}") from exc


def read_instance(path) -> Instance:
    try:
        return parse_instance(Path(path).read_text())
    except OSError as exc:
        raise StorageError(f"cannot read {path}: {exc}") from exc


# -- results -------------------------------------------------------------


def _num(x: float) -> str:
    return "" if math.isnan(x) else repr(x)


def record_row(r: ChaosRecord, manifest_hash: str) -> list[str]:
    chaos = r.outcome is Outcome.CHAOS
    return [
        r.family.value,
        str(r.n),
        repr(float(r.sigma)),
        str(r.instance_id),
        str(r.realization_id),
        r.outcome.value,
        _num(float(r.delta_e0)),
        str(int(r.D)) if chaos else "",
        str(int(r.W)) if chaos else "",
        _num(float(r.z)),
        _num(float(r.e_intended)),
        manifest_hash,
    ]


def _parse_float(s: str) -> float:
    return float(s) if s else math.nan


def row_record(row: dict) -> tuple[ChaosRecord, str]:
    try:
        rec = ChaosRecord(
            family=Family(row["family"]),
            n=int(row["n"]),
            sigma=float(row["sigma"]),
            instance_id=int(row["instance_id"]),
            realization_id=int(row["realization_id"]),
            outcome=Outcome(row["outcome"]),
            delta_e0=_parse_float(row["delta_e0"]),
            D=_parse_float(row["D"]),
            W=_parse_float(row["W"]),
            z=_parse_float(row["z"]),
            e_intended=_parse_float(row["e_intended"]),
        )
    except (KeyError, ValueError) as exc:
        raise ValidationError(f"malformed result row {row}: {exc}") from exc
    return rec, row.get("manifest", "")


def format_results_csv(table: ResultTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_COLUMNS)
    for r in table.records:
        w.writerow(record_row(r, table.manifest_hash))
    return buf.getvalue()


def parse_results_csv(text: str, force_mixed: bool = False) -> ResultTable:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != RESULT_COLUMNS:
        raise ValidationError(f"unexpected result columns {reader.fieldnames}")
    records = []
    hashes = set()
    for row in reader:
        rec, h = row_record(row)
        records.append(rec)
        hashes.add(h)
    if len(hashes) > 1 and not force_mixed:
        raise ValidationError("results mix rows from different manifests (use force to combine)")
    return ResultTable(records, hashes.pop() if len(hashes) == 1 else "")


def format_results_json(table: ResultTable) -> str:
    rows = [dict(zip(RESULT_COLUMNS, record_row(r, table.manifest_hash))) for r in table.records]
    return json.dumps({"manifest": table.manifest_hash, "rows": rows}, indent=1) + "\n"


def read_results(paths, force_mixed: bool = False) -> ResultTable:
    """Read and concatenate result CSVs, refusing mixed manifests unless forced."""
    if isinstance(paths, (str, Path)):
        paths = [paths]
    tables = []
    for p in paths:
        try:
            tables.append(parse_results_csv(Path(p).read_text(), force_mixed))
        except OSError as exc:
            raise StorageError(f"cannot read {p}: {exc}") from exc
    hashes = {t.manifest_hash for t in tables}
    if len(hashes) > 1 and not force_mixed:
        raise ValidationError("result files come from different manifests (use force to combine)")
    records = [r for t in tables for r in t.records]
    return ResultTable(records, hashes.pop() if len(hashes) == 1 else "").sorted()


def spins_from_text(text: str) -> np.ndarray:
    text = text.strip()
    if set(text) <= {"+", "-"}:
        return np.array([1 if c == "+" else -1 for c in text], dtype=np.int8)
    return np.array([int(x) for x in text.replace(",", " ").split()], dtype=np.int8)
