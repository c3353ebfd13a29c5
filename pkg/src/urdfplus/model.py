"""In-memory robot model, structural validation, and regular numbering.

A RobotModel is the direct image of one description file: links, the tree
joints that form the spanning tree, plus the loop joints and couplings that
close kinematic loops.  Numbering assigns body indices 0..N_B (root = 0,
every body above its parent) and joint indices 1..N_J.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidModelError
from .spatial import JointType, SpatialTransform


@dataclass(frozen=True)
class Inertial:
    mass: float
    center_of_mass: tuple[float, float, float] = (0.0, 0.0, 0.0)
    inertia: tuple[tuple[float, ...], ...] = (
        (0.0, 0.0, 0.0),
        (0.0, 0.0, 0.0),
        (0.0, 0.0, 0.0),
    )

    def inertia_matrix(self) -> np.ndarray:
        return np.array(self.inertia, dtype=float)


@dataclass(frozen=True)
class Link:
    name: str
    inertial: Inertial | None = None
    # visual/collision/vendor elements, preserved verbatim and never interpreted
    payload: tuple[str, ...] = ()


@dataclass(frozen=True)
class TreeJoint:
    name: str
    joint_type: JointType
    parent: str
    child: str
    origin: SpatialTransform = field(default_factory=SpatialTransform.identity)
    axis: tuple[float, float, float] | None = None
    axis2: tuple[float, float, float] | None = None
    independent: bool | None = None  # tri-state; None == attribute omitted
    payload: tuple[str, ...] = ()  # limit/dynamics/... preserved verbatim


@dataclass(frozen=True)
class LoopJoint:
    name: str
    joint_type: JointType
    predecessor: str
    successor: str
    predecessor_origin: SpatialTransform = field(
        default_factory=SpatialTransform.identity
    )
    successor_origin: SpatialTransform = field(
        default_factory=SpatialTransform.identity
    )
    axis: tuple[float, float, float] | None = None
    axis2: tuple[float, float, float] | None = None


@dataclass(frozen=True)
class Coupling:
    name: str
    predecessor: str
    successor: str
    ratio: float


@dataclass(frozen=True)
class RobotModel:
    name: str
    links: tuple[Link, ...] = ()
    tree_joints: tuple[TreeJoint, ...] = ()
    loop_joints: tuple[LoopJoint, ...] = ()
    couplings: tuple[Coupling, ...] = ()
    # material/transmission/gazebo/sensor elements, preserved verbatim
    payload: tuple[str, ...] = ()

    def link_names(self) -> list[str]:
        return [link.name for link in self.links]


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    subject: str = ""

    def __str__(self) -> str:
        if self.subject:
            return f"{self.code}: {self.message} ({self.subject})"
        return f"{self.code}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.ok:
            return "model valid"
        return "\n".join(str(v) for v in self.violations)


def _coupling_subchain_joints(model: RobotModel, predecessor: str, successor: str):
    """Tree joints on the two path subchains between the coupling endpoints
    and their nearest common ancestor (computed on names, pre-numbering).
    Returns None when the tree shape is too broken to walk safely."""
    parent_joint = {j.child: j for j in model.tree_joints}

    def root_path(name):
        path = [name]
        seen = {name}
        while name in parent_joint:
            name = parent_joint[name].parent
            if name in seen:
                return None  # cycle; reported elsewhere
            seen.add(name)
            path.append(name)
        return path

    pred_path = root_path(predecessor)
    succ_path = root_path(successor)
    if pred_path is None or succ_path is None:
        return None
    pred_set = set(pred_path)
    nca = next((name for name in succ_path if name in pred_set), None)
    if nca is None:
        return None  # endpoints in disjoint trees; reported elsewhere
    joints = []
    for path in (pred_path, succ_path):
        for name in path:
            if name == nca:
                break
            joints.append(parent_joint[name])
    return joints


def validate_model(model: RobotModel) -> ValidationReport:
    """Structural validation; violations are data, nothing is raised."""
    violations: list[Violation] = []
    link_names = model.link_names()
    known = set(link_names)

    seen: set[str] = set()
    for name in link_names:
        if not name:
            violations.append(Violation("empty-name", "link with empty name"))
        elif name in seen:
            violations.append(Violation("duplicate-link", "duplicate link name", name))
        seen.add(name)

    joint_names: set[str] = set()
    all_joints = (
        [(j.name, "joint") for j in model.tree_joints]
        + [(j.name, "loop") for j in model.loop_joints]
        + [(c.name, "coupling") for c in model.couplings]
    )
    for name, kind in all_joints:
        if not name:
            violations.append(Violation("empty-name", f"{kind} with empty name"))
        elif name in joint_names:
            violations.append(
                Violation("duplicate-joint", "duplicate joint name", name)
            )
        joint_names.add(name)

    for joint in model.tree_joints:
        for ref in (joint.parent, joint.child):
            if ref not in known:
                violations.append(
                    Violation("unknown-link", f"joint references unknown link {ref!r}",
                              joint.name)
                )
        if joint.parent == joint.child:
            violations.append(
                Violation("self-joint", "joint parent equals child", joint.name)
            )
        if joint.joint_type.requires_axis and joint.axis is None:
            violations.append(
                Violation("axis-missing", "joint type requires an axis", joint.name)
            )
        if not joint.joint_type.requires_axis and joint.axis is not None:
            violations.append(
                Violation("axis-unused", "joint type takes no axis", joint.name)
            )

    for loop in model.loop_joints:
        for ref in (loop.predecessor, loop.successor):
            if ref not in known:
                violations.append(
                    Violation("unknown-link", f"loop references unknown link {ref!r}",
                              loop.name)
                )
        if loop.predecessor == loop.successor:
            violations.append(
                Violation("self-loop", "loop predecessor equals successor", loop.name)
            )
        if loop.joint_type.requires_axis and loop.axis is None:
            violations.append(
                Violation("axis-missing", "loop type requires an axis", loop.name)
            )

    for coupling in model.couplings:
        for ref in (coupling.predecessor, coupling.successor):
            if ref not in known:
                violations.append(
                    Violation("unknown-link",
                              f"coupling references unknown link {ref!r}",
                              coupling.name)
                )
        if coupling.predecessor == coupling.successor:
            violations.append(
                Violation("self-loop", "coupling predecessor equals successor",
                          coupling.name)
            )
        if coupling.ratio == 0.0:
            violations.append(
                Violation("zero-ratio", "coupling ratio must be nonzero",
                          coupling.name)
            )

    for link in model.links:
        inertial = link.inertial
        if inertial is None:
            continue
        if inertial.mass < 0.0:
            violations.append(
                Violation("bad-inertia", "negative mass", link.name)
            )
        m = inertial.inertia_matrix()
        if np.abs(m - m.T).max() > 1e-12:
            violations.append(
                Violation("bad-inertia", "inertia matrix not symmetric", link.name)
            )

    # Tree shape: every link at most one parent joint, exactly one root,
    # no parent cycles, everything connected to the root.
    children_seen: set[str] = set()
    for joint in model.tree_joints:
        if joint.child in children_seen:
            violations.append(
                Violation("multiple-parents",
                          f"link {joint.child!r} is the child of several joints",
                          joint.name)
            )
        children_seen.add(joint.child)

    roots = [name for name in link_names if name not in children_seen]
    if model.links and not roots:
        violations.append(Violation("no-root", "every link has a parent joint"))
    elif len(roots) > 1:
        violations.append(
            Violation("multiple-roots", "multiple root links: " + ", ".join(roots))
        )

    parent_of = {j.child: j.parent for j in model.tree_joints}
    for start in children_seen:
        walked: set[str] = set()
        name = start
        while name in parent_of:
            if name in walked:
                violations.append(
                    Violation("tree-cycle", "tree joints form a cycle", start)
                )
                break
            walked.add(name)
            name = parent_of[name]

    if len(roots) == 1 and not any(v.code == "tree-cycle" for v in violations):
        reachable = {roots[0]}
        frontier = [roots[0]]
        child_map: dict[str, list[str]] = {}
        for joint in model.tree_joints:
            child_map.setdefault(joint.parent, []).append(joint.child)
        while frontier:
            name = frontier.pop()
            for child in child_map.get(name, ()):
                if child not in reachable:
                    reachable.add(child)
                    frontier.append(child)
        for name in link_names:
            if name not in reachable:
                violations.append(
                    Violation("disconnected", "link unreachable from the root", name)
                )

    # Couplings relate summed joint positions, which only makes sense over
    # uniform single-DoF joints of one motion type along both path subchains.
    for coupling in model.couplings:
        if {coupling.predecessor, coupling.successor} - known:
            continue  # unknown-link already reported
        joints = _coupling_subchain_joints(
            model, coupling.predecessor, coupling.successor
        )
        if joints is None:
            continue  # broken tree shape already reported
        kinds = set()
        for joint in joints:
            if joint.joint_type is JointType.FIXED:
                continue
            if joint.joint_type.dof != 1:
                violations.append(
                    Violation("coupling-dof",
                              f"coupled path crosses {joint.joint_type.value} joint "
                              f"{joint.name!r} with {joint.joint_type.dof} DoF",
                              coupling.name)
                )
            kinds.add(joint.joint_type.motion_kind)
        if len(kinds) > 1:
            violations.append(
                Violation("coupling-motion-type",
                          "coupled joints must share motion type",
                          coupling.name)
            )

    return ValidationReport(tuple(violations))


@dataclass(frozen=True)
class NumberedModel:
    """RobotModel plus the regular numbering of bodies and joints.

    body_names[i] is the link with body index i (root = 0); parent[i] is the
    body index of body i's parent (parent[0] = -1).  tree_joint_of[i] is the
    tree joint connecting body i to parent[i], so tree joint numbers coincide
    with body numbers.  Loop joints and couplings receive numbers
    N_B+1..N_J: loop joints first, then couplings, each in declaration order.
    """

    model: RobotModel
    body_names: tuple[str, ...]
    parent: tuple[int, ...]
    tree_joint_of: tuple[TreeJoint | None, ...]
    loop_entries: tuple[tuple[int, object], ...]  # (number, LoopJoint | Coupling)

    @property
    def n_bodies(self) -> int:
        """Non-root body count N_B."""
        return len(self.body_names) - 1

    @property
    def n_joints(self) -> int:
        """Total joint count N_J = N_B + N_L."""
        return self.n_bodies + len(self.loop_entries)

    def body_index(self, name: str) -> int:
        return self.body_names.index(name)

    def coordinate_slices(self) -> list[slice]:
        """Per-body coordinate segment of the stacked position vector q;
        entry 0 is the empty root slice."""
        slices = [slice(0, 0)]
        offset = 0
        for i in range(1, self.n_bodies + 1):
            width = self.tree_joint_of[i].joint_type.dof
            slices.append(slice(offset, offset + width))
            offset += width
        return slices

    @property
    def total_dof(self) -> int:
        return sum(
            j.joint_type.dof for j in self.tree_joint_of if j is not None
        )


def regular_numbering(model: RobotModel) -> NumberedModel:
    """Number bodies breadth-first from the root, children in declaration
    order, so every body index exceeds its parent's."""
    report = validate_model(model)
    if not report.ok:
        raise InvalidModelError("cannot number an invalid model", report.violations)
    if not model.links:
        raise InvalidModelError("cannot number an empty model")

    children: dict[str, list[TreeJoint]] = {}
    for joint in model.tree_joints:
        children.setdefault(joint.parent, []).append(joint)
    child_names = {j.child for j in model.tree_joints}
    root = next(name for name in model.link_names() if name not in child_names)

    body_names: list[str] = [root]
    parent: list[int] = [-1]
    tree_joint_of: list[TreeJoint | None] = [None]
    queue = [root]
    while queue:
        name = queue.pop(0)
        parent_index = body_names.index(name)
        for joint in children.get(name, ()):
            body_names.append(joint.child)
            parent.append(parent_index)
            tree_joint_of.append(joint)
            queue.append(joint.child)

    n_b = len(body_names) - 1
    loop_entries: list[tuple[int, object]] = []
    number = n_b + 1
    for loop in model.loop_joints:
        loop_entries.append((number, loop))
        number += 1
    for coupling in model.couplings:
        loop_entries.append((number, coupling))
        number += 1

    return NumberedModel(
        model=model,
        body_names=tuple(body_names),
        parent=tuple(parent),
        tree_joint_of=tuple(tree_joint_of),
        loop_entries=tuple(loop_entries),
    )


def count_degrees_of_freedom(numbered: NumberedModel) -> tuple[int, int]:
    """(n, n_c): total tree-joint DoF and total loop-constraint count.

    A loop joint of type t contributes 6 - dof(t) constraints; a coupling
    contributes exactly one.
    """
    n = numbered.total_dof
    n_c = 0
    for _, entry in numbered.loop_entries:
        if isinstance(entry, Coupling):
            n_c += 1
        else:
            n_c += entry.joint_type.constraint_count
    return n, n_c


def structurally_equal(a: RobotModel, b: RobotModel, tol: float = 1e-12) -> bool:
    """Field-level equality: same names and types, numerics within tol,
    preserved payloads byte-identical."""

    def transforms_equal(x: SpatialTransform, y: SpatialTransform) -> bool:
        return bool(
            np.abs(x.rot - y.rot).max() <= tol
            and np.abs(x.trans - y.trans).max() <= tol
        )

    def vecs_equal(x, y) -> bool:
        if (x is None) != (y is None):
            return False
        if x is None:
            return True
        return bool(np.abs(np.asarray(x) - np.asarray(y)).max() <= tol)

    if a.name != b.name or a.payload != b.payload:
        return False
    if (
        len(a.links) != len(b.links)
        or len(a.tree_joints) != len(b.tree_joints)
        or len(a.loop_joints) != len(b.loop_joints)
        or len(a.couplings) != len(b.couplings)
    ):
        return False
    for la, lb in zip(a.links, b.links):
        if la.name != lb.name or la.payload != lb.payload:
            return False
        if (la.inertial is None) != (lb.inertial is None):
            return False
        if la.inertial is not None:
            if abs(la.inertial.mass - lb.inertial.mass) > tol:
                return False
            if not vecs_equal(la.inertial.center_of_mass, lb.inertial.center_of_mass):
                return False
            ia, ib = la.inertial.inertia_matrix(), lb.inertial.inertia_matrix()
            if np.abs(ia - ib).max() > tol:
                return False
    for ja, jb in zip(a.tree_joints, b.tree_joints):
        if (
            ja.name != jb.name
            or ja.joint_type is not jb.joint_type
            or ja.parent != jb.parent
            or ja.child != jb.child
            or ja.independent != jb.independent
            or ja.payload != jb.payload
        ):
            return False
        if not transforms_equal(ja.origin, jb.origin):
            return False
        if not vecs_equal(ja.axis, jb.axis) or not vecs_equal(ja.axis2, jb.axis2):
            return False
    for la, lb in zip(a.loop_joints, b.loop_joints):
        if (
            la.name != lb.name
            or la.joint_type is not lb.joint_type
            or la.predecessor != lb.predecessor
            or la.successor != lb.successor
        ):
            return False
        if not transforms_equal(la.predecessor_origin, lb.predecessor_origin):
            return False
        if not transforms_equal(la.successor_origin, lb.successor_origin):
            return False
        if not vecs_equal(la.axis, lb.axis) or not vecs_equal(la.axis2, lb.axis2):
            return False
    for ca, cb in zip(a.couplings, b.couplings):
        if (
            ca.name != cb.name
            or ca.predecessor != cb.predecessor
            or ca.successor != cb.successor
            or abs(ca.ratio - cb.ratio) > tol
        ):
            return False
    return True


def with_independent_flags(
    model: RobotModel, flags: dict[str, bool | None]
) -> RobotModel:
    """Copy of the model with selected tree joints' independent flags replaced
    (test and tooling convenience)."""
    joints = tuple(
        replace(j, independent=flags[j.name]) if j.name in flags else j
        for j in model.tree_joints
    )
    return replace(model, tree_joints=joints)
