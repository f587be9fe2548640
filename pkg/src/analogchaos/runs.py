"""Run manifests and checkpointed, resumable execution of sweeps."""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .chaos import ChaosRunConfig, ResultTable, run_sweep
from .errors import StorageError, ValidationError
from .formats import format_results_csv, parse_results_csv, record_row
from .model import Family
from .noise import NoiseTargets
from .solvers import PtParams, SolverProfile

SOLVER_PROFILES = ("auto", "exact", "grid-dp", "elimination", "pt")
CLAMP_PROFILES = {"none": None, "dwave": 1.0}

_REQUIRED = ("master_seed", "family", "sizes", "sigmas", "n_instances", "n_realizations")


@dataclass
class RunManifest:
    master_seed: int
    family: str
    sizes: list[int]
    sigmas: list[float]
    n_instances: int
    n_realizations: int
    family_params: dict = field(default_factory=dict)
    solver: dict = field(default_factory=lambda: {"kind": "auto", "pt": {"sweeps": 10_000}})
    descent_sweeps: int = 100
    clamp_profile: str = "none"
    targets: str | None = None
    artifact_version: str = __version__
    timestamp: str = ""
    status: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "RunManifest":
        if not isinstance(data, dict):
            raise ValidationError("manifest must be a JSON object")
        missing = [k for k in _REQUIRED if k not in data]
        if missing:
            raise ValidationError(f"manifest is missing {missing}")
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValidationError(f"manifest has unknown keys {sorted(unknown)}")
        try:
            m = cls(**data)
            m.to_config()
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"invalid manifest: {exc}") from exc
        return m

    def determining(self) -> dict:
        """Fields that fix the result table (everything but timestamp and status)."""
        return {
            "master_seed": self.master_seed,
            "family": self.family,
            "family_params": self.family_params,
            "sizes": list(self.sizes),
            "sigmas": [float(s) for s in self.sigmas],
            "n_instances": self.n_instances,
            "n_realizations": self.n_realizations,
            "solver": self.solver,
            "descent_sweeps": self.descent_sweeps,
            "clamp_profile": self.clamp_profile,
            "targets": self.targets,
            "artifact_version": self.artifact_version,
        }

    @property
    def hash(self) -> str:
        blob = json.dumps(self.determining(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def to_config(self) -> ChaosRunConfig:
        kind = self.solver.get("kind", "auto")
        if kind not in SOLVER_PROFILES:
            raise ValidationError(f"unknown solver profile {kind!r}")
        if self.clamp_profile not in CLAMP_PROFILES:
            raise ValidationError(f"unknown clamp profile {self.clamp_profile!r}")
        pt = PtParams(**self.solver.get("pt", {}))
        targets = self.targets
        if self.clamp_profile == "dwave" and targets is None:
            targets = NoiseTargets.COUPLINGS_AND_FIELDS
        return ChaosRunConfig(
            family=Family(self.family),
            sizes=tuple(self.sizes),
            sigmas=tuple(self.sigmas),
            n_instances=int(self.n_instances),
            n_realizations=int(self.n_realizations),
            master_seed=int(self.master_seed),
            solver=SolverProfile(kind, pt),
            descent_sweeps=int(self.descent_sweeps),
            targets=NoiseTargets(targets) if targets is not None else None,
            clamp=CLAMP_PROFILES[self.clamp_profile],
            family_params=dict(self.family_params),
        )

    def to_json(self) -> str:
        data = {k: getattr(self, k) for k in self.__dataclass_fields__}
        return json.dumps(data, indent=2, sort_keys=True) + "\n"


def load_manifest(path) -> RunManifest:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise StorageError(f"cannot read manifest {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"manifest {path} is not valid JSON: {exc}") from exc
    return RunManifest.from_dict(data)


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class _Checkpoint:
    """Append-only partial results plus a JSON sidecar holding their checksum."""

    def __init__(self, out: Path, manifest_hash: str):
        self.rows_path = out.with_name(out.name + ".partial")
        self.meta_path = out.with_name(out.name + ".partial.json")
        self.manifest_hash = manifest_hash

    def load(self) -> ResultTable | None:
        if not self.rows_path.exists() and not self.meta_path.exists():
            return None
        try:
            meta = json.loads(self.meta_path.read_text())
            data = self.rows_path.read_bytes()
        except (OSError, json.JSONDecodeError) as exc:
            raise StorageError(f"checkpoint for {self.rows_path} is unreadable: {exc}") from exc
        if meta.get("sha256") != _sha256(data):
            raise StorageError(f"checkpoint {self.rows_path} fails its checksum")
        if meta.get("manifest") != self.manifest_hash:
            raise StorageError("checkpoint was written for a different manifest")
        return parse_results_csv(data.decode())

    def start(self, existing: ResultTable | None) -> None:
        if existing is None:
            self._write(format_results_csv(ResultTable([], self.manifest_hash)).encode())

    def append(self, records) -> None:
        text = "".join(
            ",".join(record_row(r, self.manifest_hash)) + "\n" for r in records
        )
        data = self.rows_path.read_bytes() + text.encode()
        self._write(data)

    def _write(self, data: bytes) -> None:
        tmp = self.rows_path.with_name(self.rows_path.name + ".tmp")
        tmp.write_bytes(data)
        tmp.replace(self.rows_path)
        self.meta_path.write_text(json.dumps({"manifest": self.manifest_hash, "sha256": _sha256(data)}))

    def clear(self) -> None:
        for p in (self.rows_path, self.meta_path):
            p.unlink(missing_ok=True)


class _Interrupted(Exception):
    pass


def execute_manifest(
    manifest_path,
    out_path=None,
    jobs: int = 1,
    stop_after: int | None = None,
    write_json: bool = False,
) -> tuple[Path, bool]:
    """Run (or resume) a manifest and write its result CSV.

    Completed instances are checkpointed next to the output so an interrupted
    run can be resumed; ``stop_after`` halts deliberately after that many
    instances. Returns ``(csv_path, completed)``.
    """
    manifest_path = Path(manifest_path)
    manifest = load_manifest(manifest_path)
    config = manifest.to_config()
    out = Path(out_path) if out_path else manifest_path.with_suffix(".csv")
    h = manifest.hash
    ckpt = _Checkpoint(out, h)
    try:
        existing = ckpt.load()
        ckpt.start(existing)
        if existing is not None:
            existing = ResultTable(existing.records, h)
        finished = [0]

        def on_instance(records):
            ckpt.append(records)
            finished[0] += 1
            if stop_after is not None and finished[0] >= stop_after:
                raise _Interrupted

        try:
            table = run_sweep(config, existing, jobs=jobs if stop_after is None else 1, on_instance=on_instance)
        except _Interrupted:
            return out, False
        table = ResultTable(table.records, h)
        csv_text = format_results_csv(table)
        out.write_text(csv_text)
        if write_json:
            from .formats import format_results_json

            out.with_suffix(".json").write_text(format_results_json(table))
        ckpt.clear()
        manifest.timestamp = manifest.timestamp or _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
        manifest.status = {
            "completed": True,
            "results": out.name,
            "rows": len(table),
            "sha256": _sha256(csv_text.encode()),
            "manifest_hash": h,
        }
        manifest_path.write_text(manifest.to_json())
    except OSError as exc:
        raise StorageError(str(exc)) from exc
    return out, True
