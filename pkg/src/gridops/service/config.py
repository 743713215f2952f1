"""Scenario configuration: fabric spec reference plus the knobs of every
monitoring stage. Validation happens here, before any state is touched."""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..errors import ValidationError
from ..fabric import FabricSpec, ResourceKind
from ..incidents import ShiftSchedule
from ..probes import AlarmPolicy, ProbeCheck, ProbeSpec
from ..storage_ops import DetectionTolerances
from ..topology import DowntimeWindow, RegistryEntry, WhitelistPolicy

DEFAULT_SCAN_INTERVAL = 30  # minutes

DEFAULT_PROBES = [
    ("SE", "SEReadWrite"),
    ("CE", "CESubmit"),
    ("WMS", "WMSPing"),
    ("Catalogue", "CatalogueLookup"),
    ("VOMS", "VOMSPing"),
]


@dataclass
class ScenarioConfig:
    fabric_spec: FabricSpec
    probe_specs: list[ProbeSpec]
    whitelist_policy: WhitelistPolicy
    alarm_policy: AlarmPolicy
    tolerances: DetectionTolerances
    scan_interval: int = DEFAULT_SCAN_INTERVAL
    heavy_user_threshold: float = 0.80
    heavy_user_top_n: int = 10
    duration: int = 0
    seed: int = 0
    registry_overrides: dict[str, bool] = field(default_factory=dict)
    extra_registry: list[RegistryEntry] = field(default_factory=list)
    downtimes: list[DowntimeWindow] = field(default_factory=list)
    shifts: Optional[ShiftSchedule] = None
    raw: dict = field(default_factory=dict)

    @property
    def cycles(self) -> int:
        return self.duration // self.scan_interval

    @classmethod
    def from_dict(cls, doc: dict, base_dir: Optional[Path] = None) -> "ScenarioConfig":
        if "fabric" in doc:
            fabric_spec = FabricSpec.from_dict(doc["fabric"])
        elif "fabric_file" in doc:
            path = Path(doc["fabric_file"])
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            fabric_spec = FabricSpec.from_json(path)
        else:
            raise ValidationError("scenario needs a 'fabric' spec or a 'fabric_file' reference")

        interval = int(doc.get("scan_interval", DEFAULT_SCAN_INTERVAL))
        if interval <= 0:
            raise ValidationError(f"scan_interval must be > 0, got {interval}")
        duration = int(doc.get("duration", 0))
        if duration < 0:
            raise ValidationError(f"duration must be >= 0, got {duration}")
        threshold = float(doc.get("heavy_user_threshold", 0.80))
        if not 0.0 <= threshold <= 1.0:
            raise ValidationError(f"heavy_user_threshold must be in [0,1], got {threshold}")

        probes_doc = doc.get("probes")
        if probes_doc is None:
            probes_doc = [
                {"kind": kind, "check": check, "interval": interval} for kind, check in DEFAULT_PROBES
            ]
        probe_specs = [
            ProbeSpec(
                kind=ResourceKind(p["kind"]),
                check=ProbeCheck(p["check"]),
                interval=int(p.get("interval", interval)),
            )
            for p in probes_doc
        ]

        wl = doc.get("whitelist_policy", {})
        al = doc.get("alarm_policy", {})
        tol = doc.get("tolerances", {})
        registry = doc.get("registry", {})
        shifts_doc = doc.get("shifts")
        return cls(
            fabric_spec=fabric_spec,
            probe_specs=probe_specs,
            whitelist_policy=WhitelistPolicy(
                max_filling=float(wl.get("max_filling", 0.80)),
                alarm_lookback=int(wl.get("alarm_lookback", 1440)),
            ),
            alarm_policy=AlarmPolicy(
                raise_after=int(al.get("raise_after", 3)),
                clear_after=int(al.get("clear_after", 2)),
            ),
            tolerances=DetectionTolerances(
                relative=float(tol.get("relative", 0.05)),
                free_bytes=int(tol.get("free_bytes", 0)),
                staleness_bound=int(tol.get("staleness_bound", 120)),
            ),
            scan_interval=interval,
            heavy_user_threshold=threshold,
            heavy_user_top_n=int(doc.get("heavy_user_top_n", 10)),
            duration=duration,
            seed=int(doc.get("seed", 0)),
            registry_overrides={k: bool(v) for k, v in registry.get("overrides", {}).items()},
            extra_registry=[
                RegistryEntry(
                    resource_id=e["id"],
                    kind=ResourceKind(e["kind"]),
                    site=e.get("site", ""),
                    in_production=bool(e.get("in_production", True)),
                )
                for e in registry.get("extra", [])
            ],
            downtimes=[
                DowntimeWindow(
                    resource_id=d["resource"],
                    start=int(d["start"]),
                    end=int(d["end"]),
                    reason=d.get("reason", ""),
                )
                for d in doc.get("downtimes", [])
            ],
            shifts=ShiftSchedule(
                teams=list(shifts_doc["teams"]),
                shift_length=int(shifts_doc.get("shift_length", 7)),
                epoch=int(shifts_doc.get("epoch", 0)),
            )
            if shifts_doc
            else None,
            raw=doc,
        )

    @classmethod
    def from_json(cls, path: str | Path) -> "ScenarioConfig":
        path = Path(path)
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh), base_dir=path.parent)

    def build_registry(self) -> list[RegistryEntry]:
        """Static registry derived from the fabric spec plus configured extras."""
        entries = []
        spec = self.fabric_spec
        for node in spec.storage:
            entries.append(self._entry(node.id, ResourceKind.SE, node.site))
        for node in spec.compute:
            entries.append(self._entry(node.id, ResourceKind.CE, node.site))
        for node in spec.workload:
            entries.append(self._entry(node.id, ResourceKind.WMS, ""))
        for node in spec.services:
            entries.append(self._entry(node.id, node.kind, ""))
        entries.extend(self.extra_registry)
        return entries

    def _entry(self, rid: str, kind: ResourceKind, site: str) -> RegistryEntry:
        return RegistryEntry(
            resource_id=rid,
            kind=kind,
            site=site,
            in_production=self.registry_overrides.get(rid, True),
        )
