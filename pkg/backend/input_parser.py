"""
Input Parser
Reads smooth expressions and the sectioned input files of the command line

A file is a sequence of sections, each a header line `[name]` followed by
`key = value` lines; `#` starts a comment. Recognised sections:

    [bundle]     rank, dim, domain, omega(i,j,mu), beta(i,j), compatible
    [path]       gamma(mu), period, a, b
    [component]  kind, gamma(mu), cuts, a, b, period, oriented, reversed, window
    [family]     grid = lo, hi, count
    [glue]       first, second, first_grid, second_grid, overlap, blend
    [classify]   samples, per_axis, nodes, seed, oriented

Indices are 1-based. `[component]` may repeat; every other section at most once.
"""

import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from bordism import BlendPartition, Bordism, Component, check_cut_family, circle, left_elbow, right_elbow, standard
from bundle import BundleData, PathData, validate_bundle, validate_path
from field_theory import TFTData, make_tft
from geometry import expressions as ex
from geometry.errors import (
    AsymmetryError, DomainExitError, FieldTheoryError, InvariantViolation, ParseError, SingularMatrixError,
)

logger = logging.getLogger(__name__)

FUNCTIONS = {"sin": ex.sin, "cos": ex.cos, "exp": ex.exp}
CONSTANTS = {"pi": math.pi}
PATH_VARIABLES = ("t", "s")

_TOKEN = re.compile(
    r"(?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^(),])"
)
_SECTION = re.compile(r"^\[\s*(?P<name>[a-z_]+)\s*\]$")
_ENTRY = re.compile(r"^(?P<key>[a-z_]+)\s*(?:\((?P<index>[^)]*)\))?\s*=\s*(?P<value>.*)$")

SECTION_KEYS = {
    "bundle": ("rank", "dim", "domain", "omega", "beta", "compatible"),
    "path": ("gamma", "period", "a", "b"),
    "component": ("kind", "gamma", "cuts", "a", "b", "period", "oriented", "reversed", "window"),
    "family": ("grid",),
    "glue": ("first", "second", "first_grid", "second_grid", "overlap", "blend"),
    "classify": ("samples", "per_axis", "nodes", "seed", "oriented"),
}
INDEXED_KEYS = {"omega": 3, "beta": 2, "gamma": 1}
COMPONENT_KINDS = ("standard", "left_elbow", "right_elbow", "circle")


# Expressions

@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    column: int


def tokenize(text: str, line: int = 0, offset: int = 0) -> List[Token]:
    tokens: List[Token] = []
    position = 0
    while position < len(text):
        if text[position].isspace():
            position += 1
            continue
        match = _TOKEN.match(text, position)
        if match is None:
            raise ParseError(f"unexpected character {text[position]!r}", line, offset + position + 1,
                             ["number", "variable", "function", "operator"])
        kind = match.lastgroup
        tokens.append(Token(kind, match.group(kind), offset + position + 1))
        position = match.end()
    tokens.append(Token("end", "", offset + len(text) + 1))
    return tokens


class ExpressionParser:
    """
    Recursive-descent parser for the expression grammar

    `variables` lists the admissible variable names; anything else is
    reported with its column.
    """

    def __init__(self, text: str, variables: Sequence[str], line: int = 0, offset: int = 0):
        self.tokens = tokenize(text, line, offset)
        self.variables = tuple(variables)
        self.line = line
        self.index = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def _advance(self) -> Token:
        token = self.current
        self.index += 1
        return token

    def _error(self, message: str, expected: Sequence[str]) -> ParseError:
        return ParseError(message, self.line, self.current.column, expected)

    def _expect(self, text: str) -> Token:
        if self.current.text != text:
            found = self.current.text or "end of input"
            raise self._error(f"found {found!r}", [repr(text)])
        return self._advance()

    def parse(self) -> ex.SmoothExpr:
        expr = self._expr()
        if self.current.kind != "end":
            raise self._error(f"unexpected {self.current.text!r}", ["operator", "end of input"])
        return expr

    def _expr(self) -> ex.SmoothExpr:
        expr = self._term()
        while self.current.text in ("+", "-"):
            op = self._advance().text
            right = self._term()
            expr = ex.add(expr, right) if op == "+" else ex.subtract(expr, right)
        return expr

    def _term(self) -> ex.SmoothExpr:
        expr = self._unary()
        while self.current.text in ("*", "/"):
            op = self._advance().text
            right = self._unary()
            expr = ex.multiply(expr, right) if op == "*" else ex.divide(expr, right)
        return expr

    def _unary(self) -> ex.SmoothExpr:
        if self.current.text == "-":
            self._advance()
            return ex.negate(self._unary())
        return self._power()

    def _power(self) -> ex.SmoothExpr:
        base = self._atom()
        if self.current.text != "^":
            return base
        self._advance()
        sign = 1
        if self.current.text == "-":
            self._advance()
            sign = -1
        token = self.current
        if token.kind != "number" or not token.text.isdigit():
            raise self._error(f"found {token.text or 'end of input'!r}", ["integer exponent"])
        self._advance()
        return ex.power(base, sign * int(token.text))

    def _atom(self) -> ex.SmoothExpr:
        token = self.current
        if token.kind == "number":
            self._advance()
            return ex.constant(float(token.text))
        if token.kind == "name":
            self._advance()
            if token.text in FUNCTIONS:
                self._expect("(")
                arg = self._expr()
                self._expect(")")
                return FUNCTIONS[token.text](arg)
            if token.text in CONSTANTS:
                return ex.constant(CONSTANTS[token.text])
            if token.text in self.variables:
                return ex.variable(token.text)
            raise ParseError(f"unknown name {token.text!r}", self.line, token.column,
                             list(self.variables) + list(FUNCTIONS) + list(CONSTANTS))
        if token.text == "(":
            self._advance()
            expr = self._expr()
            self._expect(")")
            return expr
        raise self._error(f"found {token.text or 'end of input'!r}", ["number", "variable", "function", "'('"])


def parse_expression(text: str, variables: Sequence[str] = ("t", "s", *(f"x{k}" for k in range(1, 10))),
                     line: int = 0, offset: int = 0) -> ex.SmoothExpr:
    """Parse one expression; errors carry line, column and the expected tokens"""
    return ExpressionParser(text, variables, line, offset).parse()


def parse_number(text: str, line: int = 0, offset: int = 0) -> float:
    """A constant expression such as `-2`, `2*pi` or `1e-3`"""
    expr = parse_expression(text, (), line, offset)
    if not isinstance(expr, ex.Constant):
        raise ParseError("expected a constant", line, offset + 1, ["number"])
    return expr.value


# Files

@dataclass
class Entry:
    key: str
    index: Tuple[int, ...]
    value: str
    line: int
    column: int


@dataclass
class Section:
    name: str
    line: int
    entries: Dict[str, List[Entry]] = field(default_factory=dict)

    def get(self, key: str) -> Optional[Entry]:
        values = self.entries.get(key)
        return values[0] if values else None

    def indexed(self, key: str) -> List[Entry]:
        return self.entries.get(key, [])

    def require(self, key: str) -> Entry:
        entry = self.get(key)
        if entry is None:
            raise ParseError(f"[{self.name}] section is missing `{key}`", self.line, 1, [key])
        return entry


@dataclass
class GlueSpec:
    first: Bordism
    second: Bordism
    overlap: ex.SmoothExpr
    partition: BlendPartition


@dataclass
class ParsedInput:
    """Everything read from one input file"""
    source: str
    bundle: Optional[BundleData] = None
    path: Optional[PathData] = None
    interval: Tuple[float, float] = (0.0, 1.0)
    components: List[Component] = field(default_factory=list)
    grid: Optional[Tuple[float, ...]] = None
    glue: Optional[GlueSpec] = None
    classify: Dict[str, object] = field(default_factory=dict)

    def bordism(self) -> Bordism:
        if not self.components:
            raise InvariantViolation("bordism", f"{self.source} defines no [component] sections")
        return Bordism(tuple(self.components), self.grid)

    def tft(self, oriented: bool = False) -> TFTData:
        if self.bundle is None:
            raise InvariantViolation("bundle", f"{self.source} has no [bundle] section")
        return make_tft(self.bundle, oriented)


def _split_lines(text: str) -> List[Section]:
    sections: List[Section] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0].rstrip()
        stripped = content.strip()
        if not stripped:
            continue
        header = _SECTION.match(stripped)
        if header:
            name = header.group("name")
            if name not in SECTION_KEYS:
                raise ParseError(f"unknown section [{name}]", number, content.index("[") + 1,
                                 [f"[{s}]" for s in SECTION_KEYS])
            if name != "component" and any(s.name == name for s in sections):
                raise ParseError(f"duplicate section [{name}]", number, 1)
            sections.append(Section(name, number))
            continue
        if not sections:
            raise ParseError("entry outside of any section", number, 1, ["[section]"])
        match = _ENTRY.match(stripped)
        indent = len(content) - len(content.lstrip())
        if match is None:
            raise ParseError("malformed entry", number, indent + 1, ["key = value"])
        section = sections[-1]
        key = match.group("key")
        if key not in SECTION_KEYS[section.name]:
            raise ParseError(f"unknown key `{key}` in [{section.name}]", number, indent + 1,
                             SECTION_KEYS[section.name])
        index = _parse_index(match.group("index"), key, number, indent + match.start("index") + 1)
        entry = Entry(key, index, match.group("value").strip(), number, indent + match.start("value") + 1)
        existing = section.entries.setdefault(key, [])
        if any(e.index == index for e in existing):
            raise ParseError(f"duplicate entry `{key}`", number, indent + 1)
        existing.append(entry)
    return sections


def _parse_index(text: Optional[str], key: str, line: int, column: int) -> Tuple[int, ...]:
    arity = INDEXED_KEYS.get(key, 0)
    if text is None:
        if arity:
            raise ParseError(f"`{key}` needs {arity} index(es)", line, column, [f"{key}(...)"])
        return ()
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != arity or not all(p.isdigit() and int(p) >= 1 for p in parts):
        raise ParseError(f"`{key}` takes {arity} positive integer index(es), got ({text})", line, column)
    return tuple(int(p) for p in parts)


def _split_top_level(text: str) -> List[Tuple[str, int]]:
    """Comma-separated items outside parentheses, with their offsets"""
    items, depth, start = [], 0, 0
    for k, char in enumerate(text):
        if char == "(":
            depth += 1
        elif char == ")":
            depth -= 1
        elif char == "," and depth == 0:
            items.append((text[start:k], start))
            start = k + 1
    items.append((text[start:], start))
    return [(item.strip(), offset + len(item) - len(item.lstrip())) for item, offset in items]


def _bracketed(entry: Entry) -> List[Tuple[str, int]]:
    value = entry.value
    if not (value.startswith("[") and value.endswith("]")):
        raise ParseError("expected a bracketed list", entry.line, entry.column, ["[...]"])
    return [(item, 1 + offset) for item, offset in _split_top_level(value[1:-1])]


def _number(entry: Entry) -> float:
    return parse_number(entry.value, entry.line, entry.column - 1)


def _integer(entry: Entry, minimum: int = 1) -> int:
    if not entry.value.isdigit() or int(entry.value) < minimum:
        raise ParseError(f"`{entry.key}` must be an integer >= {minimum}", entry.line, entry.column, ["integer"])
    return int(entry.value)


def _boolean(entry: Entry) -> bool:
    value = entry.value.lower()
    if value not in ("true", "false"):
        raise ParseError(f"`{entry.key}` must be true or false", entry.line, entry.column, ["true", "false"])
    return value == "true"


def _grid(entry: Entry, count_override: Optional[int] = None) -> Tuple[float, ...]:
    """`lo, hi, count`: count equally spaced parameter values; `count_override` replaces count"""
    parts = _split_top_level(entry.value)
    if len(parts) != 3:
        raise ParseError("grid needs `lo, hi, count`", entry.line, entry.column, ["lo, hi, count"])
    lo = parse_number(parts[0][0], entry.line, entry.column - 1 + parts[0][1])
    hi = parse_number(parts[1][0], entry.line, entry.column - 1 + parts[1][1])
    count = parts[2][0]
    if not count.isdigit() or int(count) < 1:
        raise ParseError("grid count must be a positive integer", entry.line, entry.column + parts[2][1], ["integer"])
    if int(count) > 1 and not lo < hi:
        raise ParseError(f"grid needs lo < hi, got {lo} and {hi}", entry.line, entry.column)
    total = int(count) if count_override is None else count_override
    return tuple(float(v) for v in np.linspace(lo, hi, total))


def _pair(entry: Entry) -> Tuple[float, float]:
    parts = _split_top_level(entry.value)
    if len(parts) != 2:
        raise ParseError(f"`{entry.key}` needs `lo, hi`", entry.line, entry.column, ["lo, hi"])
    return tuple(parse_number(text, entry.line, entry.column - 1 + offset) for text, offset in parts)


def _domain(entry: Entry) -> List[Tuple[float, float]]:
    """`[lo, hi] x [lo, hi] x ...`"""
    intervals = []
    for match in re.finditer(r"\[([^\]]*)\]", entry.value):
        inner = Entry(entry.key, (), match.group(1), entry.line, entry.column + match.start(1))
        lo, hi = _pair(inner)
        if not lo < hi:
            raise InvariantViolation("domain box", f"empty interval [{lo}, {hi}] (line {entry.line})")
        intervals.append((lo, hi))
    rebuilt = " x ".join(m.group(0) for m in re.finditer(r"\[[^\]]*\]", entry.value))
    if not intervals or re.sub(r"\s+", "", rebuilt) != re.sub(r"\s+", "", entry.value):
        raise ParseError("domain must read `[lo, hi] x [lo, hi] ...`", entry.line, entry.column, ["[lo, hi] x [lo, hi]"])
    return intervals


def _anchored(error: InvariantViolation, section: Section) -> InvariantViolation:
    return InvariantViolation(error.invariant, f"{error.detail} ([{section.name}] at line {section.line})")


def _build_bundle(section: Section) -> BundleData:
    rank = _integer(section.require("rank"))
    dim = _integer(section.require("dim"))
    domain_entry = section.get("domain")
    domain = _domain(domain_entry) if domain_entry else [(-2.0, 2.0)] * dim
    if len(domain) != dim:
        raise ParseError(f"domain has {len(domain)} intervals for dim = {dim}", domain_entry.line, domain_entry.column)
    coordinates = tuple(f"x{mu}" for mu in range(1, dim + 1))

    omega = [[[ex.ZERO] * rank for _ in range(rank)] for _ in range(dim)]
    for entry in section.indexed("omega"):
        i, j, mu = entry.index
        if i > rank or j > rank or mu > dim:
            raise ParseError(f"omega({i},{j},{mu}) is out of range for rank {rank}, dim {dim}", entry.line, entry.column)
        omega[mu - 1][i - 1][j - 1] = parse_expression(entry.value, coordinates, entry.line, entry.column - 1)

    beta_entries = section.indexed("beta")
    beta = [[ex.ONE if i == j and not beta_entries else ex.ZERO for j in range(rank)] for i in range(rank)]
    for entry in beta_entries:
        i, j = entry.index
        if i > rank or j > rank:
            raise ParseError(f"beta({i},{j}) is out of range for rank {rank}", entry.line, entry.column)
        beta[i - 1][j - 1] = parse_expression(entry.value, coordinates, entry.line, entry.column - 1)

    compatible_entry = section.get("compatible")
    compatible = _boolean(compatible_entry) if compatible_entry else False
    try:
        bundle = BundleData.from_matrices(omega, beta, domain, compatible)
        validate_bundle(bundle)
    except InvariantViolation as e:
        raise _anchored(e, section) from e
    except AsymmetryError as e:
        raise InvariantViolation("beta symmetry", f"{e} ([{section.name}] at line {section.line})") from e
    except SingularMatrixError as e:
        raise InvariantViolation("beta nondegeneracy", f"{e} ([{section.name}] at line {section.line})") from e
    logger.info(f"bundle of rank {rank} over a {dim}-dimensional box (line {section.line})")
    return bundle


def _build_path(section: Section, dim: Optional[int], grid: Optional[Tuple[float, ...]],
                fallback: Optional[PathData] = None) -> Optional[PathData]:
    entries = section.indexed("gamma")
    period_entry = section.get("period")
    period = _number(period_entry) if period_entry else None
    if not entries:
        if fallback is None:
            return None
        return PathData(fallback.components, period or fallback.period, grid or fallback.grid)
    count = dim or max(e.index[0] for e in entries)
    components: List[Optional[ex.SmoothExpr]] = [None] * count
    for entry in entries:
        (mu,) = entry.index
        if mu > count:
            raise ParseError(f"gamma({mu}) exceeds the base dimension {count}", entry.line, entry.column)
        components[mu - 1] = parse_expression(entry.value, PATH_VARIABLES, entry.line, entry.column - 1)
    missing = [mu + 1 for mu, c in enumerate(components) if c is None]
    if missing:
        raise ParseError(f"missing gamma({missing[0]})", section.line, 1, [f"gamma({missing[0]})"])
    try:
        return PathData(tuple(components), period, grid)
    except InvariantViolation as e:
        raise _anchored(e, section) from e


def _build_component(section: Section, bundle: Optional[BundleData], default_path: Optional[PathData],
                     grid: Optional[Tuple[float, ...]]) -> Component:
    kind_entry = section.require("kind")
    kind = kind_entry.value
    if kind not in COMPONENT_KINDS:
        raise ParseError(f"unknown component kind {kind!r}", kind_entry.line, kind_entry.column, COMPONENT_KINDS)
    path = _build_path(section, bundle.dim if bundle else None, grid, default_path)
    if path is None:
        raise ParseError("component needs gamma(...) or a [path] section", section.line, 1, ["gamma(1)"])

    flags = {}
    for key in ("oriented", "reversed"):
        entry = section.get(key)
        flags[key] = _boolean(entry) if entry else False
    window_entry = section.get("window")
    window = _number(window_entry) if window_entry else None

    try:
        if kind == "standard":
            cuts_entry = section.require("cuts")
            taus = [
                parse_expression(text, ("s",), cuts_entry.line, cuts_entry.column - 1 + offset)
                for text, offset in _bracketed(cuts_entry)
            ]
            component = standard(path, taus, window=window, **flags)
        elif kind == "circle":
            component = circle(path, **flags)
        else:
            a, b = _number(section.require("a")), _number(section.require("b"))
            factory = right_elbow if kind == "right_elbow" else left_elbow
            component = factory(path, a, b, window=window, **flags)
        check_cut_family(component)
    except InvariantViolation as e:
        raise _anchored(e, section) from e
    spans = [component.span(s) for s in component.fibers()]
    _validated(path, bundle, (min(lo for lo, _ in spans), max(hi for _, hi in spans)), section)
    return component


def _validated(path: PathData, bundle: Optional[BundleData], span: Tuple[float, float], section: Section) -> PathData:
    """Loop periodicity and, given a bundle, that the image over `span` stays in the domain"""
    try:
        return validate_path(path, bundle, span)
    except InvariantViolation as e:
        raise _anchored(e, section) from e
    except DomainExitError as e:
        raise InvariantViolation("path image", f"{e} ([{section.name}] at line {section.line})") from e


def _component_index(entry: Entry, components: Sequence[Component]) -> Component:
    k = _integer(entry)
    if k > len(components):
        raise ParseError(f"`{entry.key}` refers to component {k}, only {len(components)} defined",
                         entry.line, entry.column)
    return components[k - 1]


def _build_glue(section: Section, components: Sequence[Component]) -> GlueSpec:
    presentations = []
    for key in ("first", "second"):
        component = _component_index(section.require(key), components)
        grid = _grid(section.require(f"{key}_grid"))
        path = PathData(component.path.components, component.path.period, grid, component.path.reparametrization)
        taus = component.cuts.taus
        if taus is None:
            raise ParseError(f"`{key}` must refer to a standard component", section.line, 1)
        try:
            presentations.append(Bordism.of(standard(path, taus, component.oriented, component.reversed,
                                                     component.window), grid=grid))
        except InvariantViolation as e:
            raise _anchored(e, section) from e
    overlap_entry = section.require("overlap")
    overlap = parse_expression(overlap_entry.value, PATH_VARIABLES, overlap_entry.line, overlap_entry.column - 1)
    lo, hi = _pair(section.require("blend"))
    try:
        partition = BlendPartition(lo, hi)
    except InvariantViolation as e:
        raise _anchored(e, section) from e
    return GlueSpec(presentations[0], presentations[1], overlap, partition)


def parse_text(text: str, source: str = "<input>", grid_count: Optional[int] = None) -> ParsedInput:
    sections = _split_lines(text)
    parsed = ParsedInput(source)
    by_name = {s.name: s for s in sections if s.name != "component"}

    if "family" in by_name:
        parsed.grid = _grid(by_name["family"].require("grid"), grid_count)
    if "bundle" in by_name:
        parsed.bundle = _build_bundle(by_name["bundle"])
    if "path" in by_name:
        section = by_name["path"]
        parsed.path = _build_path(section, parsed.bundle.dim if parsed.bundle else None, parsed.grid)
        if parsed.path is None:
            raise ParseError("[path] section needs gamma(...)", section.line, 1, ["gamma(1)"])
        a_entry, b_entry = section.get("a"), section.get("b")
        a = _number(a_entry) if a_entry else 0.0
        b = _number(b_entry) if b_entry else (parsed.path.period or 1.0)
        parsed.interval = (a, b)
        _validated(parsed.path, parsed.bundle, (min(a, b), max(a, b)), section)

    for section in (s for s in sections if s.name == "component"):
        parsed.components.append(_build_component(section, parsed.bundle, parsed.path, parsed.grid))
    if parsed.components:
        parsed.bordism()

    if "glue" in by_name:
        parsed.glue = _build_glue(by_name["glue"], parsed.components)
    if "classify" in by_name:
        section = by_name["classify"]
        for key, reader in (("samples", _integer), ("per_axis", _integer), ("nodes", lambda e: _integer(e, 4)),
                            ("seed", lambda e: _integer(e, 0)),
                            ("oriented", _boolean)):
            entry = section.get(key)
            if entry is not None:
                parsed.classify[key] = reader(entry)
    return parsed


def parse_input(path, grid_count: Optional[int] = None) -> ParsedInput:
    """Read and parse an input file; FieldTheoryErrors are prefixed with the file name"""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        parsed = parse_text(text, str(path), grid_count)
    except FieldTheoryError as e:
        logger.error(f"{path}: {e}")
        raise
    logger.info(f"parsed {path}: {len(parsed.components)} component(s)")
    return parsed
