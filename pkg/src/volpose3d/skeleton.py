"""Pose layout (joint names + PAF tree) and skeleton containers."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CMU14_JOINTS = (
    "neck",
    "nose",
    "lshoulder",
    "lelbow",
    "lwrist",
    "lhip",
    "lknee",
    "lankle",
    "rshoulder",
    "relbow",
    "rwrist",
    "rhip",
    "rknee",
    "rankle",
)

CMU14_PAFS = (
    ("neck", "nose"),
    ("neck", "lshoulder"),
    ("lshoulder", "lelbow"),
    ("lelbow", "lwrist"),
    ("neck", "rshoulder"),
    ("rshoulder", "relbow"),
    ("relbow", "rwrist"),
    ("neck", "lhip"),
    ("lhip", "lknee"),
    ("lknee", "lankle"),
    ("neck", "rhip"),
    ("rhip", "rknee"),
    ("rknee", "rankle"),
)


class LayoutError(ValueError):
    pass


@dataclass(frozen=True)
class PoseLayout:
    joint_names: tuple[str, ...]
    paf_edges: tuple[tuple[int, int], ...]
    root: str = "neck"

    def __post_init__(self):
        object.__setattr__(self, "joint_names", tuple(self.joint_names))
        object.__setattr__(self, "paf_edges", tuple((int(a), int(b)) for a, b in self.paf_edges))
        self._check_tree()

    def _check_tree(self) -> None:
        n = len(self.joint_names)
        if len(set(self.joint_names)) != n:
            raise LayoutError("duplicate joint names")
        if self.root not in self.joint_names:
            raise LayoutError(f"root joint {self.root!r} missing from layout")
        parent: dict[int, int] = {}
        for a, b in self.paf_edges:
            if not (0 <= a < n and 0 <= b < n) or a == b:
                raise LayoutError(f"invalid PAF edge ({a}, {b})")
            if b in parent:
                raise LayoutError(f"joint {self.joint_names[b]!r} has two parents")
            parent[b] = a
        root = self.joint_names.index(self.root)
        if root in parent:
            raise LayoutError("root joint cannot be a PAF child")
        # every edge's parent must already be reachable when edges are walked in order
        reached = {root}
        for a, b in self.paf_edges:
            if a not in reached:
                raise LayoutError(
                    f"edge {self.joint_names[a]}->{self.joint_names[b]} is not connected to the "
                    "root by earlier edges"
                )
            reached.add(b)

    @property
    def n_joints(self) -> int:
        return len(self.joint_names)

    @property
    def n_pafs(self) -> int:
        return len(self.paf_edges)

    @property
    def n_gt(self) -> int:
        return self.n_joints + 3 * self.n_pafs

    def index(self, name: str) -> int:
        return self.joint_names.index(name)

    def edge_names(self) -> list[tuple[str, str]]:
        return [(self.joint_names[a], self.joint_names[b]) for a, b in self.paf_edges]

    def channel_names(self) -> list[str]:
        names = [f"hm:{j}" for j in self.joint_names]
        for a, b in self.edge_names():
            names += [f"paf:{a}-{b}:{ax}" for ax in "xyz"]
        return names

    def to_dict(self) -> dict:
        return {"joints": list(self.joint_names), "pafs": [list(e) for e in self.edge_names()]}

    @classmethod
    def from_dict(cls, data: dict) -> PoseLayout:
        joints = list(data["joints"])
        edges = []
        for a, b in data["pafs"]:
            try:
                edges.append((joints.index(a), joints.index(b)))
            except ValueError as exc:
                raise LayoutError(f"PAF edge ({a}, {b}) names an unknown joint") from exc
        return cls(tuple(joints), tuple(edges), root=data.get("root", "neck"))

    @classmethod
    def cmu14(cls) -> PoseLayout:
        return cls.from_dict({"joints": CMU14_JOINTS, "pafs": CMU14_PAFS})


def load_layout(path) -> PoseLayout:
    return PoseLayout.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(eq=False)
class Skeleton:
    """One person: ``joints`` is ``(N, 3)`` world coordinates with NaN rows for
    absent joints; ``confidences`` is ``(N,)`` in [0, 1]."""

    joints: np.ndarray
    confidences: np.ndarray = field(default=None)

    def __post_init__(self):
        self.joints = np.array(self.joints, dtype=np.float64).reshape(-1, 3)
        n = len(self.joints)
        if self.confidences is None:
            self.confidences = np.where(self.present, 1.0, 0.0)
        else:
            self.confidences = np.array(self.confidences, dtype=np.float64).reshape(n)
        conf = self.confidences[self.present]
        if np.any(conf < 0) or np.any(conf > 1):
            raise ValueError("confidences must lie in [0, 1]")

    @property
    def present(self) -> np.ndarray:
        return np.all(np.isfinite(self.joints), axis=1)

    @property
    def n_present(self) -> int:
        return int(self.present.sum())

    def copy(self) -> Skeleton:
        return Skeleton(self.joints.copy(), self.confidences.copy())

    @classmethod
    def empty(cls, n_joints: int) -> Skeleton:
        return cls(np.full((n_joints, 3), np.nan), np.zeros(n_joints))


def skeletons_to_json(skeletons, layout: PoseLayout) -> list[dict]:
    out = []
    for s in skeletons:
        joints, conf = {}, {}
        for i, name in enumerate(layout.joint_names):
            if s.present[i]:
                joints[name] = [float(x) for x in s.joints[i]]
                conf[name] = float(s.confidences[i])
            else:
                joints[name] = None
        out.append({"joints": joints, "confidences": conf})
    return out


def skeletons_from_json(data, layout: PoseLayout) -> list[Skeleton]:
    if not isinstance(data, list):
        raise ValueError("skeleton JSON must be an array")
    out = []
    for entry in data:
        joints = np.full((layout.n_joints, 3), np.nan)
        conf = np.zeros(layout.n_joints)
        given_conf = entry.get("confidences") or {}
        for name, xyz in entry["joints"].items():
            if name not in layout.joint_names:
                raise ValueError(f"unknown joint name {name!r}")
            if xyz is None:
                continue
            i = layout.index(name)
            joints[i] = [float(v) for v in xyz]
            conf[i] = float(given_conf.get(name, 1.0))
        out.append(Skeleton(joints, conf))
    return out


def save_skeletons(skeletons, layout: PoseLayout, path) -> None:
    text = json.dumps(skeletons_to_json(skeletons, layout), indent=2)
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_skeletons(path, layout: PoseLayout) -> list[Skeleton]:
    return skeletons_from_json(json.loads(Path(path).read_text(encoding="utf-8")), layout)
