"""Bidirectional mapping between URDF+ XML text and RobotModel.

Plain URDF parses unchanged.  Three extensions are understood on top of it:

* ``<loop>`` elements under ``<robot>`` describing loop-closing joints, with
  ``predecessor``/``successor`` children (each naming a link and optionally
  carrying an ``origin``) plus the usual ``type``/``axis``;
* ``<coupling>`` elements relating the summed positions of the two path
  subchains between ``predecessor`` and ``successor`` by a ``ratio``;
* an optional ``independent="true|false"`` attribute on ``<joint>`` marking
  which tree joints span the independent coordinates.

Visual, collision, and vendor extensions inside ``<link>``, the
limit/dynamics family inside ``<joint>``, and material/transmission/gazebo/
sensor elements under ``<robot>`` are preserved as verbatim text blobs and
written back untouched.  ``<mimic>`` children are translated into couplings
(zero offset only).  Every parse failure carries a line and column.
"""

from __future__ import annotations

import math
import xml.parsers.expat as expat
from dataclasses import dataclass, field

from .errors import (
    InvalidNumberError,
    MissingAttributeError,
    UnknownElementError,
    UnknownJointTypeError,
    UnsupportedMimicOffsetError,
    XmlSyntaxError,
)
from .model import Coupling, Inertial, Link, LoopJoint, RobotModel, TreeJoint
from .spatial import (
    JointType,
    SpatialTransform,
    rot_from_rpy,
    rpy_from_rot,
)

# joint children preserved verbatim (semantics out of scope, kept for round-trip)
_JOINT_PAYLOAD_TAGS = {"limit", "dynamics", "calibration", "safety_controller"}
# robot children preserved verbatim
_ROBOT_PAYLOAD_TAGS = {"material", "transmission", "gazebo", "sensor"}


@dataclass(frozen=True)
class ParseDiagnostic:
    severity: str  # "error" | "warning"
    line: int
    column: int
    message: str
    path: str = ""

    def __str__(self) -> str:
        loc = f"line {self.line}, column {self.column}"
        if self.path:
            loc += f" ({self.path})"
        return f"{self.severity}: {self.message} [{loc}]"


@dataclass
class ParseResult:
    model: RobotModel
    warnings: list[ParseDiagnostic] = field(default_factory=list)


class _Element:
    __slots__ = ("tag", "attrib", "children", "line", "column",
                 "start_byte", "end_byte", "seq")

    def __init__(self, tag, attrib, line, column, start_byte, seq):
        self.tag = tag
        self.attrib = attrib
        self.children: list[_Element] = []
        self.line = line
        self.column = column
        self.start_byte = start_byte
        self.end_byte = start_byte
        self.seq = seq

    def find(self, tag):
        for child in self.children:
            if child.tag == tag:
                return child
        return None


def _scan_tag_end(data: bytes, start: int) -> int:
    """Index just past the '>' closing the tag that starts at `start`,
    ignoring '>' inside quoted attribute values."""
    quote = None
    for i in range(start, len(data)):
        b = data[i : i + 1]
        if quote is not None:
            if b == quote:
                quote = None
        elif b in (b"'", b'"'):
            quote = b
        elif b == b">":
            return i + 1
    return len(data)


def _build_tree(data: bytes) -> _Element:
    """Parse bytes into a positioned element tree (expat-based)."""
    parser = expat.ParserCreate()
    stack: list[_Element] = []
    root: list[_Element] = []
    seq = [0]

    def bump():
        seq[0] += 1
        return seq[0]

    def on_start(tag, attrs):
        element = _Element(
            tag,
            dict(attrs),
            parser.CurrentLineNumber,
            parser.CurrentColumnNumber + 1,
            parser.CurrentByteIndex,
            bump(),
        )
        if stack:
            stack[-1].children.append(element)
        else:
            root.append(element)
        stack.append(element)

    def on_end(tag):
        event_seq = bump()
        element = stack.pop()
        idx = parser.CurrentByteIndex
        if event_seq == element.seq + 1 and data[idx - 2 : idx] == b"/>":
            element.end_byte = idx  # self-closing: index already past the tag
        elif data[idx : idx + 2] == b"</":
            element.end_byte = _scan_tag_end(data, idx)
        else:
            element.end_byte = idx

    def on_other(*_args):
        bump()

    parser.StartElementHandler = on_start
    parser.EndElementHandler = on_end
    parser.CharacterDataHandler = on_other
    parser.CommentHandler = on_other
    parser.ProcessingInstructionHandler = on_other
    try:
        parser.Parse(data, True)
    except expat.ExpatError as exc:
        raise XmlSyntaxError(
            expat.errors.messages[exc.code], exc.lineno, exc.offset + 1
        ) from exc
    return root[0]


class _Interpreter:
    """Turns the positioned element tree into a RobotModel."""

    def __init__(self, data: bytes):
        self.data = data
        self.warnings: list[ParseDiagnostic] = []
        self.counters = {"joint": 0, "loop": 0, "coupling": 0}

    def warn(self, element: _Element, message: str, path: str = ""):
        self.warnings.append(
            ParseDiagnostic("warning", element.line, element.column, message, path)
        )

    def raw(self, element: _Element) -> str:
        return self.data[element.start_byte : element.end_byte].decode("utf-8")

    def path(self, *parts: str) -> str:
        return "/".join(parts)

    # -- attribute and numeric helpers ------------------------------------

    def require_attr(self, element: _Element, attr: str, path: str) -> str:
        value = element.attrib.get(attr)
        if value is None:
            raise MissingAttributeError(
                f"<{element.tag}> requires attribute {attr!r}",
                element.line, element.column, path,
            )
        return value

    def parse_float(self, text: str, element: _Element, path: str) -> float:
        try:
            value = float(text)
        except ValueError:
            raise InvalidNumberError(
                f"invalid number {text!r}", element.line, element.column, path
            ) from None
        if not math.isfinite(value):
            raise InvalidNumberError(
                f"non-finite number {text!r}", element.line, element.column, path
            )
        return value

    def parse_triple(self, text: str, element: _Element, path: str):
        parts = text.split()
        if len(parts) != 3:
            raise InvalidNumberError(
                f"expected 3 numbers, got {len(parts)} in {text!r}",
                element.line, element.column, path,
            )
        return tuple(self.parse_float(p, element, path) for p in parts)

    def parse_bool(self, text: str, element: _Element, path: str) -> bool:
        if text == "true":
            return True
        if text == "false":
            return False
        raise InvalidNumberError(
            f"expected 'true' or 'false', got {text!r}",
            element.line, element.column, path,
        )

    def auto_name(self, element: _Element, kind: str, path: str) -> str:
        name = element.attrib.get("name")
        if name:
            return name
        generated = f"{kind}_{self.counters[kind]}"
        self.warn(element, f"unnamed <{element.tag}> assigned name {generated!r}", path)
        return generated

    # -- shared sub-elements ----------------------------------------------

    def parse_origin(self, element: _Element | None, path: str) -> SpatialTransform:
        if element is None:
            return SpatialTransform.identity()
        xyz = (0.0, 0.0, 0.0)
        rpy = (0.0, 0.0, 0.0)
        if "xyz" in element.attrib:
            xyz = self.parse_triple(element.attrib["xyz"], element, path)
        if "rpy" in element.attrib:
            rpy = self.parse_triple(element.attrib["rpy"], element, path)
        return SpatialTransform.from_rpy_xyz(rpy, xyz)

    def parse_axis(self, element: _Element, path: str):
        """Unit direction from an <axis>/<axis2> element; nonzero vectors
        are normalized, matching common URDF tooling."""
        xyz = element.attrib.get("xyz", "1 0 0")
        vec = self.parse_triple(xyz, element, path)
        norm = math.sqrt(sum(v * v for v in vec))
        if norm < 1e-12:
            raise InvalidNumberError(
                f"axis {xyz!r} has zero length", element.line, element.column, path
            )
        return tuple(v / norm for v in vec)

    def parse_link_ref(self, element: _Element, path: str) -> str:
        # standard URDF spells it link="..."; the loop/coupling templates and
        # some writers use name="..." -- accept both
        value = element.attrib.get("link", element.attrib.get("name"))
        if value is None:
            raise MissingAttributeError(
                f"<{element.tag}> requires attribute 'link' (or 'name')",
                element.line, element.column, path,
            )
        return value

    def joint_type(self, element: _Element, path: str) -> JointType:
        text = self.require_attr(element, "type", path)
        if text == "planar":
            raise UnknownJointTypeError(
                "joint type 'planar' is not supported; model it with two "
                "prismatic joints and a continuous joint",
                element.line, element.column, path,
            )
        try:
            return JointType(text)
        except ValueError:
            raise UnknownJointTypeError(
                f"unknown joint type {text!r}", element.line, element.column, path
            ) from None

    # -- element interpreters ----------------------------------------------

    def parse_link(self, element: _Element) -> Link:
        path = self.path("robot", "link")
        name = self.require_attr(element, "name", path)
        path = self.path("robot", f"link({name})")
        inertial = None
        payload = []
        for child in element.children:
            if child.tag == "inertial":
                inertial = self.parse_inertial(child, self.path(path, "inertial"))
            else:
                payload.append(self.raw(child))
        return Link(name=name, inertial=inertial, payload=tuple(payload))

    def parse_inertial(self, element: _Element, path: str) -> Inertial:
        mass = 0.0
        mass_el = element.find("mass")
        if mass_el is not None:
            mass = self.parse_float(
                self.require_attr(mass_el, "value", path), mass_el, path
            )
        com = (0.0, 0.0, 0.0)
        rot = None
        origin_el = element.find("origin")
        if origin_el is not None:
            if "xyz" in origin_el.attrib:
                com = self.parse_triple(origin_el.attrib["xyz"], origin_el, path)
            if "rpy" in origin_el.attrib:
                rpy = self.parse_triple(origin_el.attrib["rpy"], origin_el, path)
                if any(rpy):
                    rot = rot_from_rpy(*rpy)
        inertia = ((0.0,) * 3,) * 3
        inertia_el = element.find("inertia")
        if inertia_el is not None:
            v = {
                key: self.parse_float(
                    self.require_attr(inertia_el, key, path), inertia_el, path
                )
                for key in ("ixx", "ixy", "ixz", "iyy", "iyz", "izz")
            }
            inertia = (
                (v["ixx"], v["ixy"], v["ixz"]),
                (v["ixy"], v["iyy"], v["iyz"]),
                (v["ixz"], v["iyz"], v["izz"]),
            )
        if rot is not None:
            # re-express the inertia tensor in the link frame
            m = rot @ [list(row) for row in inertia] @ rot.T
            inertia = tuple(tuple(float(x) for x in row) for row in m)
        return Inertial(mass=mass, center_of_mass=com, inertia=inertia)

    def parse_joint(self, element: _Element):
        """Returns (TreeJoint, mimic | None); mimic resolution happens after
        every joint is known."""
        self.counters["joint"] += 1
        path = self.path("robot", "joint")
        name = self.auto_name(element, "joint", path)
        path = self.path("robot", f"joint({name})")
        jtype = self.joint_type(element, path)
        independent = None
        if "independent" in element.attrib:
            independent = self.parse_bool(
                element.attrib["independent"], element, path
            )

        origin = SpatialTransform.identity()
        axis = axis2 = None
        parent = child = None
        mimic = None
        payload = []
        for sub in element.children:
            if sub.tag == "origin":
                origin = self.parse_origin(sub, self.path(path, "origin"))
            elif sub.tag == "axis":
                axis = self.parse_axis(sub, self.path(path, "axis"))
            elif sub.tag == "axis2":
                axis2 = self.parse_axis(sub, self.path(path, "axis2"))
            elif sub.tag == "parent":
                parent = self.parse_link_ref(sub, self.path(path, "parent"))
            elif sub.tag == "child":
                child = self.parse_link_ref(sub, self.path(path, "child"))
            elif sub.tag == "mimic":
                mimic = self.parse_mimic(sub, name, self.path(path, "mimic"))
            elif sub.tag in _JOINT_PAYLOAD_TAGS:
                payload.append(self.raw(sub))
            else:
                raise UnknownElementError(
                    f"unknown element <{sub.tag}> inside <joint>",
                    sub.line, sub.column, path,
                )
        if parent is None or child is None:
            raise MissingAttributeError(
                "<joint> requires <parent> and <child> elements",
                element.line, element.column, path,
            )
        if jtype.requires_axis and axis is None:
            axis = (1.0, 0.0, 0.0)  # URDF default
        if not jtype.requires_axis and axis is not None:
            self.warn(element, f"axis ignored on {jtype.value} joint", path)
            axis = None
        if axis2 is not None and jtype is not JointType.UNIVERSAL:
            self.warn(element, f"axis2 ignored on {jtype.value} joint", path)
            axis2 = None
        joint = TreeJoint(
            name=name,
            joint_type=jtype,
            parent=parent,
            child=child,
            origin=origin,
            axis=axis,
            axis2=axis2,
            independent=independent,
            payload=tuple(payload),
        )
        return joint, mimic

    def parse_mimic(self, element: _Element, follower: str, path: str):
        target = self.require_attr(element, "joint", path)
        multiplier = 1.0
        offset = 0.0
        if "multiplier" in element.attrib:
            multiplier = self.parse_float(element.attrib["multiplier"], element, path)
        if "offset" in element.attrib:
            offset = self.parse_float(element.attrib["offset"], element, path)
        if offset != 0.0:
            raise UnsupportedMimicOffsetError(
                f"mimic with nonzero offset {offset} cannot be expressed as a "
                "coupling", element.line, element.column, path,
            )
        return (follower, target, multiplier, element)

    def parse_loop_endpoint(self, parent_el: _Element, tag: str, path: str):
        endpoint = parent_el.find(tag)
        if endpoint is None:
            raise MissingAttributeError(
                f"<loop> requires a <{tag}> element",
                parent_el.line, parent_el.column, path,
            )
        name = self.parse_link_ref(endpoint, self.path(path, tag))
        origin = self.parse_origin(endpoint.find("origin"), self.path(path, tag))
        return name, origin

    def parse_loop(self, element: _Element) -> LoopJoint:
        self.counters["loop"] += 1
        path = self.path("robot", "loop")
        name = self.auto_name(element, "loop", path)
        path = self.path("robot", f"loop({name})")
        jtype = self.joint_type(element, path)
        predecessor, pred_origin = self.parse_loop_endpoint(element, "predecessor", path)
        successor, succ_origin = self.parse_loop_endpoint(element, "successor", path)
        axis = axis2 = None
        axis_el = element.find("axis")
        if axis_el is not None:
            axis = self.parse_axis(axis_el, self.path(path, "axis"))
        axis2_el = element.find("axis2")
        if axis2_el is not None:
            axis2 = self.parse_axis(axis2_el, self.path(path, "axis2"))
        for sub in element.children:
            if sub.tag not in ("predecessor", "successor", "axis", "axis2"):
                raise UnknownElementError(
                    f"unknown element <{sub.tag}> inside <loop>",
                    sub.line, sub.column, path,
                )
        if jtype.requires_axis and axis is None:
            axis = (1.0, 0.0, 0.0)
        return LoopJoint(
            name=name,
            joint_type=jtype,
            predecessor=predecessor,
            successor=successor,
            predecessor_origin=pred_origin,
            successor_origin=succ_origin,
            axis=axis,
            axis2=axis2,
        )

    def parse_coupling(self, element: _Element) -> Coupling:
        self.counters["coupling"] += 1
        path = self.path("robot", "coupling")
        name = self.auto_name(element, "coupling", path)
        path = self.path("robot", f"coupling({name})")
        predecessor = successor = None
        ratio = None
        for sub in element.children:
            if sub.tag == "predecessor":
                predecessor = self.parse_link_ref(sub, self.path(path, "predecessor"))
            elif sub.tag == "successor":
                successor = self.parse_link_ref(sub, self.path(path, "successor"))
            elif sub.tag == "ratio":
                ratio = self.parse_float(
                    self.require_attr(sub, "value", self.path(path, "ratio")),
                    sub, self.path(path, "ratio"),
                )
            else:
                raise UnknownElementError(
                    f"unknown element <{sub.tag}> inside <coupling>",
                    sub.line, sub.column, path,
                )
        if predecessor is None or successor is None:
            raise MissingAttributeError(
                "<coupling> requires <predecessor> and <successor> elements",
                element.line, element.column, path,
            )
        if ratio is None:
            raise MissingAttributeError(
                "<coupling> requires a <ratio> element with a 'value' attribute",
                element.line, element.column, path,
            )
        return Coupling(
            name=name, predecessor=predecessor, successor=successor, ratio=ratio
        )

    def interpret(self, root: _Element) -> RobotModel:
        if root.tag != "robot":
            raise UnknownElementError(
                f"expected <robot> document element, got <{root.tag}>",
                root.line, root.column, "",
            )
        name = root.attrib.get("name")
        if name is None:
            self.warn(root, "<robot> has no name attribute", "robot")
            name = "robot"

        links: list[Link] = []
        joints: list[TreeJoint] = []
        loops: list[LoopJoint] = []
        couplings: list[Coupling] = []
        payload: list[str] = []
        mimics = []
        for child in root.children:
            if child.tag == "link":
                links.append(self.parse_link(child))
            elif child.tag == "joint":
                joint, mimic = self.parse_joint(child)
                joints.append(joint)
                if mimic is not None:
                    mimics.append(mimic)
            elif child.tag == "loop":
                loops.append(self.parse_loop(child))
            elif child.tag == "coupling":
                couplings.append(self.parse_coupling(child))
            elif child.tag in _ROBOT_PAYLOAD_TAGS:
                payload.append(self.raw(child))
            else:
                raise UnknownElementError(
                    f"unknown element <{child.tag}> under <robot>",
                    child.line, child.column, "robot",
                )

        by_name = {j.name: j for j in joints}
        for follower, target, multiplier, element in mimics:
            if target not in by_name:
                raise UnknownElementError(
                    f"mimic references unknown joint {target!r}",
                    element.line, element.column,
                    self.path("robot", f"joint({follower})", "mimic"),
                )
            couplings.append(
                Coupling(
                    name=f"{follower}_mimic",
                    predecessor=by_name[follower].child,
                    successor=by_name[target].child,
                    ratio=multiplier,
                )
            )

        if not links:
            self.warn(root, "robot has no links", "robot")

        return RobotModel(
            name=name,
            links=tuple(links),
            tree_joints=tuple(joints),
            loop_joints=tuple(loops),
            couplings=tuple(couplings),
            payload=tuple(payload),
        )


def parse_urdf_plus(text: str | bytes) -> ParseResult:
    """Parse URDF+ text into a RobotModel plus any warning diagnostics.

    Raises subclasses of UrdfXmlError (each with .line/.column) on malformed
    input.  Structural problems beyond the syntax level are left to
    model.validate_model so they can all be reported together.
    """
    data = text.encode("utf-8") if isinstance(text, str) else bytes(text)
    interpreter = _Interpreter(data)
    model = interpreter.interpret(_build_tree(data))
    return ParseResult(model, interpreter.warnings)


def parse_file(path) -> ParseResult:
    with open(path, "rb") as handle:
        return parse_urdf_plus(handle.read())


# -- serialization ----------------------------------------------------------


def _esc(value: str) -> str:
    """Escape a string for use inside a double-quoted attribute."""
    return (
        value.replace("&", "&amp;").replace("<", "&lt;").replace('"', "&quot;")
    )


def _fmt(value: float) -> str:
    """Shortest decimal that round-trips to the same float."""
    return repr(float(value))


def _fmt_triple(values) -> str:
    return " ".join(_fmt(v) for v in values)


def _origin_line(origin: SpatialTransform, indent: str) -> list[str]:
    if origin.is_identity():
        return []
    rpy = rpy_from_rot(origin.rot)
    return [
        f'{indent}<origin xyz="{_fmt_triple(origin.trans)}" '
        f'rpy="{_fmt_triple(rpy)}"/>'
    ]


def _payload_lines(payload, indent: str) -> list[str]:
    # verbatim blobs; only the leading indent is ours
    return [indent + blob for blob in payload]


def serialize_urdf_plus(model: RobotModel) -> str:
    """Canonical 2-space-indented serialization; parses back to a
    structurally equal model."""
    out: list[str] = ['<?xml version="1.0"?>', f'<robot name="{_esc(model.name)}">']
    for link in model.links:
        inner: list[str] = []
        if link.inertial is not None:
            i = link.inertial
            m = i.inertia_matrix()
            inner.append("    <inertial>")
            if any(i.center_of_mass):
                inner.append(
                    f'      <origin xyz="{_fmt_triple(i.center_of_mass)}"/>'
                )
            inner.append(f'      <mass value="{_fmt(i.mass)}"/>')
            inner.append(
                f'      <inertia ixx="{_fmt(m[0, 0])}" ixy="{_fmt(m[0, 1])}" '
                f'ixz="{_fmt(m[0, 2])}" iyy="{_fmt(m[1, 1])}" '
                f'iyz="{_fmt(m[1, 2])}" izz="{_fmt(m[2, 2])}"/>'
            )
            inner.append("    </inertial>")
        inner.extend(_payload_lines(link.payload, "    "))
        if inner:
            out.append(f'  <link name="{_esc(link.name)}">')
            out.extend(inner)
            out.append("  </link>")
        else:
            out.append(f'  <link name="{_esc(link.name)}"/>')

    for joint in model.tree_joints:
        attrs = f'name="{_esc(joint.name)}" type="{joint.joint_type.value}"'
        if joint.independent is not None:
            attrs += f' independent="{"true" if joint.independent else "false"}"'
        out.append(f"  <joint {attrs}>")
        out.extend(_origin_line(joint.origin, "    "))
        out.append(f'    <parent link="{_esc(joint.parent)}"/>')
        out.append(f'    <child link="{_esc(joint.child)}"/>')
        if joint.axis is not None:
            out.append(f'    <axis xyz="{_fmt_triple(joint.axis)}"/>')
        if joint.axis2 is not None:
            out.append(f'    <axis2 xyz="{_fmt_triple(joint.axis2)}"/>')
        out.extend(_payload_lines(joint.payload, "    "))
        out.append("  </joint>")

    for loop in model.loop_joints:
        out.append(f'  <loop name="{_esc(loop.name)}" type="{loop.joint_type.value}">')
        for tag, link_name, origin in (
            ("predecessor", loop.predecessor, loop.predecessor_origin),
            ("successor", loop.successor, loop.successor_origin),
        ):
            origin_lines = _origin_line(origin, "      ")
            if origin_lines:
                out.append(f'    <{tag} name="{_esc(link_name)}">')
                out.extend(origin_lines)
                out.append(f"    </{tag}>")
            else:
                out.append(f'    <{tag} name="{_esc(link_name)}"/>')
        if loop.axis is not None:
            out.append(f'    <axis xyz="{_fmt_triple(loop.axis)}"/>')
        if loop.axis2 is not None:
            out.append(f'    <axis2 xyz="{_fmt_triple(loop.axis2)}"/>')
        out.append("  </loop>")

    for coupling in model.couplings:
        out.append(f'  <coupling name="{_esc(coupling.name)}">')
        out.append(f'    <predecessor name="{_esc(coupling.predecessor)}"/>')
        out.append(f'    <successor name="{_esc(coupling.successor)}"/>')
        out.append(f'    <ratio value="{_fmt(coupling.ratio)}"/>')
        out.append("  </coupling>")

    out.extend(_payload_lines(model.payload, "  "))
    out.append("</robot>")
    return "\n".join(out) + "\n"
