"""Tree-structured randomly generated functions.

Expression trees over coordinates, constants and a fixed operator pool, with
protected evaluation semantics so every tree is total and finite on the whole
search box. Trees serialize to prefix s-expressions, one per line, and wrap
into the common objective-function interface for use as training problems.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GenerationExhaustedError, ParameterError, ParseError
from .problems.base import ObjectiveFunction
from .seeding import derive_seed

UNARY_OPS = ("sin", "cos", "exp", "log", "sqrt", "square", "abs", "neg")
BINARY_OPS = ("add", "sub", "mul", "div")
OPERATORS = BINARY_OPS + UNARY_OPS

ARITY = {name: 2 for name in BINARY_OPS}
ARITY.update({name: 1 for name in UNARY_OPS})


@dataclass(frozen=True)
class Protection:
    """Constants of the protected operator semantics."""

    div_guard: float = 1e-10
    log_guard: float = 1e-10
    exp_cap: float = 50.0
    value_clamp: float = 1e12


DEFAULT_PROTECTION = Protection()


# -- tree nodes --------------------------------------------------------------

@dataclass(frozen=True)
class OpNode:
    op: str
    children: tuple

    def __post_init__(self):
        if self.op not in ARITY:
            raise ParameterError(f"unknown operator {self.op!r}")
        if len(self.children) != ARITY[self.op]:
            raise ParameterError(
                f"operator {self.op!r} expects {ARITY[self.op]} children, "
                f"got {len(self.children)}"
            )


@dataclass(frozen=True)
class CoordNode:
    index: int


@dataclass(frozen=True)
class ConstNode:
    value: float


@dataclass(frozen=True)
class ExprTree:
    root: object
    dimension: int

    def __post_init__(self):
        for node in iter_nodes(self.root):
            if isinstance(node, CoordNode) and not 0 <= node.index < self.dimension:
                raise ParameterError(
                    f"coordinate index {node.index} out of range for d={self.dimension}"
                )

    @property
    def depth(self) -> int:
        return node_depth(self.root)

    def has_coordinate(self) -> bool:
        return any(isinstance(n, CoordNode) for n in iter_nodes(self.root))


def iter_nodes(node):
    stack = [node]
    while stack:
        cur = stack.pop()
        yield cur
        if isinstance(cur, OpNode):
            stack.extend(cur.children)


def node_depth(node) -> int:
    if isinstance(node, OpNode):
        return 1 + max(node_depth(c) for c in node.children)
    return 1


# -- evaluation --------------------------------------------------------------

def _eval_node(node, X: np.ndarray, prot: Protection) -> np.ndarray:
    if isinstance(node, CoordNode):
        return X[:, node.index]
    if isinstance(node, ConstNode):
        return np.full(X.shape[0], node.value)
    op = node.op
    a = _eval_node(node.children[0], X, prot)
    if op == "add":
        out = a + _eval_node(node.children[1], X, prot)
    elif op == "sub":
        out = a - _eval_node(node.children[1], X, prot)
    elif op == "mul":
        out = a * _eval_node(node.children[1], X, prot)
    elif op == "div":
        b = _eval_node(node.children[1], X, prot)
        guarded = np.abs(b) > prot.div_guard
        out = np.where(guarded, a / np.where(guarded, b, 1.0), 1.0)
    elif op == "sin":
        out = np.sin(a)
    elif op == "cos":
        out = np.cos(a)
    elif op == "exp":
        out = np.exp(np.minimum(a, prot.exp_cap))
    elif op == "log":
        out = np.log(np.abs(a) + prot.log_guard)
    elif op == "sqrt":
        out = np.sqrt(np.abs(a))
    elif op == "square":
        out = a * a
    elif op == "abs":
        out = np.abs(a)
    elif op == "neg":
        out = -a
    else:  # pragma: no cover - rejected at construction
        raise ParameterError(f"unknown operator {op!r}")
    # clamp every node so intermediates can never overflow to inf/nan
    return np.clip(out, -prot.value_clamp, prot.value_clamp)


def evaluate_tree_batch(
    tree: ExprTree, X, protection: Protection = DEFAULT_PROTECTION
) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != tree.dimension:
        raise ParameterError(f"expected (n, {tree.dimension}) matrix, got {X.shape}")
    return _eval_node(tree.root, X, protection)


def evaluate_tree(tree: ExprTree, x, protection: Protection = DEFAULT_PROTECTION) -> float:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != tree.dimension:
        raise ParameterError(f"expected point of dimension {tree.dimension}")
    return float(evaluate_tree_batch(tree, x[None, :], protection)[0])


# -- serialization (prefix s-expressions) ------------------------------------

def serialize_tree(tree: ExprTree) -> str:
    return _write_node(tree.root)


def _write_node(node) -> str:
    if isinstance(node, CoordNode):
        return f"x{node.index}"
    if isinstance(node, ConstNode):
        return repr(node.value)
    args = " ".join(_write_node(c) for c in node.children)
    return f"({node.op} {args})"


def deserialize_tree(text: str, dimension: int) -> ExprTree:
    tokens = _tokenize(text)
    pos = 0

    def parse(idx: int):
        if idx >= len(tokens):
            raise ParseError("unexpected end of input", len(text))
        tok, at = tokens[idx]
        if tok == "(":
            if idx + 1 >= len(tokens):
                raise ParseError("missing operator after '('", at)
            op, op_at = tokens[idx + 1]
            if op not in ARITY:
                raise ParseError(f"unknown operator {op!r}", op_at)
            children = []
            idx += 2
            for _ in range(ARITY[op]):
                child, idx = parse(idx)
                children.append(child)
            if idx >= len(tokens) or tokens[idx][0] != ")":
                raise ParseError(f"expected ')' closing {op!r}", tokens[idx - 1][1])
            return OpNode(op, tuple(children)), idx + 1
        if tok == ")":
            raise ParseError("unexpected ')'", at)
        if tok.startswith("x") and tok[1:].isdigit():
            return CoordNode(int(tok[1:])), idx + 1
        try:
            return ConstNode(float(tok)), idx + 1
        except ValueError:
            raise ParseError(f"unrecognized token {tok!r}", at) from None

    root, pos = parse(pos)
    if pos != len(tokens):
        raise ParseError("trailing tokens after expression", tokens[pos][1])
    try:
        return ExprTree(root=root, dimension=dimension)
    except ParameterError as exc:
        raise ParseError(str(exc), 0) from exc


def _tokenize(text: str):
    tokens = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "()":
            tokens.append((ch, i))
            i += 1
        else:
            j = i
            while j < len(text) and not text[j].isspace() and text[j] not in "()":
                j += 1
            tokens.append((text[i:j], i))
            i = j
    if not tokens:
        raise ParseError("empty expression", 0)
    return tokens


def write_batch(trees, dimension: int) -> str:
    """Batch file: header line then one serialized tree per line."""
    lines = [f"rgf-v1 d={dimension}"]
    lines.extend(serialize_tree(t) for t in trees)
    return "\n".join(lines) + "\n"


def read_batch(text: str):
    lines = text.splitlines()
    if not lines or not lines[0].startswith("rgf-v1 d="):
        raise ParseError("missing 'rgf-v1 d=<dim>' header", 0)
    try:
        dimension = int(lines[0].split("=", 1)[1])
    except ValueError:
        raise ParseError("malformed dimension in header", 0) from None
    return [deserialize_tree(line, dimension) for line in lines[1:] if line.strip()]


# -- generation --------------------------------------------------------------

@dataclass(frozen=True)
class RgfGenParams:
    max_depth: int = 8
    p_operator: float = 0.6
    p_coordinate: float = 0.7
    constant_low: float = -5.0
    constant_high: float = 5.0
    seed: int = 0

    def __post_init__(self):
        if self.max_depth < 2:
            raise ParameterError(f"max_depth must be >= 2, got {self.max_depth}")
        for name in ("p_operator", "p_coordinate"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ParameterError(f"{name} must be in (0, 1), got {v}")
        if not self.constant_high > self.constant_low:
            raise ParameterError("constant range must be non-empty")


_MAX_RETRIES = 100


def generate_tree(params: RgfGenParams, dimension: int) -> ExprTree:
    """Generate one random tree containing at least one coordinate operand."""
    if dimension < 1:
        raise ParameterError(f"dimension must be positive, got {dimension}")
    rng = np.random.default_rng(derive_seed(params.seed, "rgf-gen"))
    for _ in range(_MAX_RETRIES):
        root = _grow(rng, params, dimension, depth=1)
        tree = ExprTree(root=root, dimension=dimension)
        if tree.has_coordinate():
            return tree
    raise GenerationExhaustedError(
        f"no tree with a coordinate operand within {_MAX_RETRIES} attempts"
    )


def _grow(rng: np.random.Generator, params: RgfGenParams, dimension: int, depth: int):
    if depth < params.max_depth and rng.uniform() < params.p_operator:
        op = OPERATORS[rng.integers(len(OPERATORS))]
        children = tuple(
            _grow(rng, params, dimension, depth + 1) for _ in range(ARITY[op])
        )
        return OpNode(op, children)
    if rng.uniform() < params.p_coordinate:
        return CoordNode(int(rng.integers(dimension)))
    return ConstNode(float(rng.uniform(params.constant_low, params.constant_high)))


class RgfFunction(ObjectiveFunction):
    """Objective-function wrapper around a generated or parsed tree."""

    def __init__(
        self,
        tree: ExprTree,
        id: str | None = None,
        protection: Protection = DEFAULT_PROTECTION,
    ):
        super().__init__(
            id=id or "rgf",
            dimension=tree.dimension,
            known_optimum=None,
        )
        self.tree = tree
        self.protection = protection

    def _eval_rows(self, X: np.ndarray) -> np.ndarray:
        return evaluate_tree_batch(self.tree, X, self.protection)


def generate_rgf(params: RgfGenParams, dimension: int) -> RgfFunction:
    """Generate a random tree function behind the common interface."""
    tree = generate_tree(params, dimension)
    return RgfFunction(tree, id=f"rgf-d{dimension}-s{params.seed}")
