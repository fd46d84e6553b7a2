"""DNN workloads as ordered layer graphs.

Workload JSON schema::

    {
      "name": "WL1",
      "total_params_m": 177,              # optional metadata
      "dnns": [
        {"name": "resnet18",
         "layers": [
           {"id": "r18.conv1", "weight_kb": 9.2, "macs": 118013952,
            "activations_out_bits": 6422528, "sparsity": 1.0,
            "successors": ["r18.l1.0.a"], "dynamic": false},
           ...]}
      ]
    }

``successors`` defaults to the next layer of the same DNN when omitted; an
explicit empty list means the layer feeds nothing. ``dynamic`` defaults to
false and ``sparsity`` to 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional

from .errors import ValidationError


@dataclass(frozen=True)
class LayerSpec:
    id: str
    dnn_id: str
    weight_kb: float
    macs: float
    activations_out_bits: float
    sparsity: float = 1.0
    successors: tuple[str, ...] = ()
    dynamic: bool = False

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "weight_kb": self.weight_kb,
            "macs": self.macs,
            "activations_out_bits": self.activations_out_bits,
            "sparsity": self.sparsity,
            "successors": list(self.successors),
            "dynamic": self.dynamic,
        }


@dataclass(frozen=True)
class WorkloadSpec:
    name: str
    dnns: tuple[tuple[LayerSpec, ...], ...]
    dnn_names: tuple[str, ...] = ()
    total_params_m: Optional[float] = None
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.dnn_names:
            names = tuple(layers[0].dnn_id if layers else f"dnn{i}" for i, layers in enumerate(self.dnns))
            object.__setattr__(self, "dnn_names", names)
        object.__setattr__(self, "_index", {l.id: l for l in self.layers})

    @property
    def layers(self) -> list[LayerSpec]:
        """All layers in execution order, DNN by DNN."""
        return [layer for dnn in self.dnns for layer in dnn]

    def layer(self, layer_id: str) -> LayerSpec:
        return self._index[layer_id]

    @property
    def n_layers(self) -> int:
        return sum(len(d) for d in self.dnns)

    def edges(self) -> Iterable[tuple[LayerSpec, LayerSpec]]:
        for layer in self.layers:
            for succ in layer.successors:
                yield layer, self._index[succ]

    def concat(self, other: "WorkloadSpec", name: Optional[str] = None) -> "WorkloadSpec":
        return WorkloadSpec(name or f"{self.name}+{other.name}", self.dnns + other.dnns,
                            self.dnn_names + other.dnn_names)

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "dnns": [
                {"name": dname, "layers": [l.to_dict() for l in layers]}
                for dname, layers in zip(self.dnn_names, self.dnns)
            ],
        }
        if self.total_params_m is not None:
            d["total_params_m"] = self.total_params_m
        return d


def validate_workload(w: WorkloadSpec) -> WorkloadSpec:
    seen: dict[str, LayerSpec] = {}
    for dnn in w.dnns:
        for layer in dnn:
            where = f"workload {w.name!r}, layer {layer.id!r}"
            if layer.id in seen:
                raise ValidationError(f"{where}: duplicate layer id")
            seen[layer.id] = layer
            if not layer.macs >= 1:
                raise ValidationError(f"{where}: macs must be >= 1, got {layer.macs}")
            if not layer.weight_kb > 0:
                raise ValidationError(f"{where}: weight_kb must be > 0, got {layer.weight_kb}")
            if not layer.activations_out_bits >= 0:
                raise ValidationError(f"{where}: activations_out_bits must be >= 0")
            if not 0.0 < layer.sparsity <= 1.0:
                raise ValidationError(f"{where}: sparsity must be in (0, 1], got {layer.sparsity}")
    for dnn in w.dnns:
        for layer in dnn:
            for succ in layer.successors:
                if succ not in seen:
                    raise ValidationError(
                        f"workload {w.name!r}, layer {layer.id!r}: unknown successor {succ!r}")
    _check_acyclic(w, seen)
    return w


def _check_acyclic(w: WorkloadSpec, index: dict[str, LayerSpec]) -> None:
    # iterative three-colour DFS
    state = {lid: 0 for lid in index}
    for root in index:
        if state[root]:
            continue
        stack = [(root, iter(index[root].successors))]
        state[root] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                state[node] = 2
                stack.pop()
            elif state[nxt] == 1:
                raise ValidationError(
                    f"workload {w.name!r}, layer {node!r}: successor {nxt!r} closes a cycle")
            elif state[nxt] == 0:
                state[nxt] = 1
                stack.append((nxt, iter(index[nxt].successors)))


def workload_from_dict(raw: dict, source: str = "<dict>") -> WorkloadSpec:
    try:
        name = raw.get("name", Path(source).stem)
        dnns, dnn_names = [], []
        for di, dnn in enumerate(raw["dnns"]):
            dname = dnn.get("name", f"dnn{di}")
            records = dnn["layers"]
            layers = []
            for li, rec in enumerate(records):
                if "successors" in rec:
                    succ = tuple(rec["successors"])
                elif li + 1 < len(records):
                    succ = (records[li + 1]["id"],)
                else:
                    succ = ()
                layers.append(LayerSpec(
                    id=str(rec["id"]),
                    dnn_id=dname,
                    weight_kb=float(rec["weight_kb"]),
                    macs=float(rec["macs"]),
                    activations_out_bits=float(rec["activations_out_bits"]),
                    sparsity=float(rec.get("sparsity", 1.0)),
                    successors=succ,
                    dynamic=bool(rec.get("dynamic", False)),
                ))
            dnns.append(tuple(layers))
            dnn_names.append(dname)
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise ValidationError(f"{source}: malformed workload ({exc!r})") from exc
    total = raw.get("total_params_m")
    w = WorkloadSpec(name, tuple(dnns), tuple(dnn_names),
                     float(total) if total is not None else None)
    try:
        return validate_workload(w)
    except ValidationError as exc:
        raise ValidationError(f"{source}: {exc}") from exc


def load_workload(path: str | Path) -> WorkloadSpec:
    """Load and validate a workload file.

    Bare names such as ``"wl1"`` or ``"wl_synthetic_small.json"`` resolve to
    the fixtures shipped in ``chipletdse/data/workloads`` when no such file
    exists on disk.
    """
    p = Path(path)
    if p.exists():
        text = p.read_text(encoding="utf-8")
    else:
        fname = p.name if p.suffix == ".json" else f"{p.name}.json"
        res = resources.files("chipletdse.data.workloads").joinpath(fname)
        if not res.is_file():
            raise ValidationError(f"{path}: workload file not found")
        text = res.read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: parse error ({exc})") from exc
    return workload_from_dict(raw, str(path))


def dump_workload(w: WorkloadSpec, path: str | Path) -> None:
    Path(path).write_text(json.dumps(w.to_dict(), indent=1) + "\n", encoding="utf-8")


def total_requirements(w: WorkloadSpec) -> tuple[float, float]:
    """(total weight KB, total MACs) over every layer of every DNN."""
    weight = sum(l.weight_kb for l in w.layers)
    macs = sum(l.macs for l in w.layers)
    return weight, macs
