"""Tests for random expression tree generation, evaluation, serialization."""

import math

import numpy as np
import pytest

from autocma.errors import ParameterError, ParseError
from autocma.rgf import (
    DEFAULT_PROTECTION,
    ConstNode,
    CoordNode,
    ExprTree,
    OpNode,
    RgfGenParams,
    deserialize_tree,
    evaluate_tree,
    evaluate_tree_batch,
    generate_rgf,
    generate_tree,
    read_batch,
    serialize_tree,
    write_batch,
)


def test_degenerate_depth_yields_coordinate():
    params = RgfGenParams(max_depth=2, p_operator=1e-9, seed=4)
    tree = generate_tree(params, 5)
    assert isinstance(tree.root, CoordNode)


def test_generation_determinism():
    params = RgfGenParams(max_depth=8, seed=123)
    t1 = generate_tree(params, 5)
    t2 = generate_tree(params, 5)
    assert serialize_tree(t1) == serialize_tree(t2)


def test_finiteness_sweep_1000_functions():
    X = np.random.default_rng(0).uniform(-5, 5, (250, 5))
    for seed in range(1000):
        f = generate_rgf(RgfGenParams(max_depth=8, seed=seed), 5)
        vals = f.evaluate_batch(X)
        assert np.all(np.isfinite(vals)), seed
        assert np.all(np.abs(vals) <= DEFAULT_PROTECTION.value_clamp)


def test_direct_arithmetic():
    tree = deserialize_tree("(add x0 x1)", 2)
    assert evaluate_tree(tree, [2.0, 3.0]) == 5.0


def test_protected_division_returns_one():
    tree = deserialize_tree("(div x0 (mul 0.0 x1))", 2)
    assert evaluate_tree(tree, [7.0, 3.0]) == 1.0
    assert evaluate_tree(tree, [-123.0, 0.5]) == 1.0


def test_protected_log_sqrt_exp():
    assert evaluate_tree(deserialize_tree("(log 0.0)", 1), [0.0]) == math.log(1e-10)
    assert evaluate_tree(deserialize_tree("(sqrt -4.0)", 1), [0.0]) == 2.0
    # exp argument capped at 50, then the node clamp at 1e12 applies
    big = evaluate_tree(deserialize_tree("(exp 1000.0)", 1), [0.0])
    assert big == min(math.exp(50.0), DEFAULT_PROTECTION.value_clamp)
    assert evaluate_tree(deserialize_tree("(exp 2.0)", 1), [0.0]) == math.exp(2.0)


def _interpret(node, x):
    """Second, straightforward scalar interpreter used as an oracle."""
    if isinstance(node, CoordNode):
        v = x[node.index]
    elif isinstance(node, ConstNode):
        v = node.value
    else:
        args = [_interpret(c, x) for c in node.children]
        op = node.op
        if op == "add":
            v = args[0] + args[1]
        elif op == "sub":
            v = args[0] - args[1]
        elif op == "mul":
            v = args[0] * args[1]
        elif op == "div":
            v = args[0] / args[1] if abs(args[1]) > 1e-10 else 1.0
        elif op == "sin":
            v = np.sin(args[0])
        elif op == "cos":
            v = np.cos(args[0])
        elif op == "exp":
            v = np.exp(min(args[0], 50.0))
        elif op == "log":
            v = np.log(abs(args[0]) + 1e-10)
        elif op == "sqrt":
            v = np.sqrt(abs(args[0]))
        elif op == "square":
            v = args[0] * args[0]
        elif op == "abs":
            v = abs(args[0])
        else:
            v = -args[0]
    return min(max(float(v), -1e12), 1e12)


def test_batch_evaluation_matches_scalar_oracle():
    X = np.random.default_rng(3).uniform(-5, 5, (100, 4))
    for seed in (1, 2, 3, 4, 5):
        tree = generate_tree(RgfGenParams(max_depth=6, seed=seed), 4)
        batch = evaluate_tree_batch(tree, X)
        oracle = np.array([_interpret(tree.root, x) for x in X])
        assert np.array_equal(batch, oracle), seed


def test_serialize_round_trips():
    for text in ("(add x0 1.5)", "(sin (mul x1 x1))", "x3", "-2.25"):
        tree = deserialize_tree(text, 4)
        assert serialize_tree(tree) == text


def test_sin_of_zero():
    tree = deserialize_tree("(sin (mul x1 x1))", 2)
    assert evaluate_tree(tree, [5.0, 0.0]) == 0.0


def test_thousand_random_trees_round_trip_byte_identically():
    for seed in range(1000):
        tree = generate_tree(RgfGenParams(max_depth=7, seed=seed), 5)
        text = serialize_tree(tree)
        again = serialize_tree(deserialize_tree(text, 5))
        assert text == again, seed


def test_parse_errors_carry_position():
    with pytest.raises(ParseError):
        deserialize_tree("(add x0", 2)
    with pytest.raises(ParseError):
        deserialize_tree("(frobnicate x0 x1)", 2)
    with pytest.raises(ParseError):
        deserialize_tree("", 2)
    with pytest.raises(ParseError):
        deserialize_tree("(add x0 x1) trailing", 2)
    err = None
    try:
        deserialize_tree("(add x0 (boom x1 x2))", 3)
    except ParseError as exc:
        err = exc
    assert err is not None and err.position == 9


def test_coordinate_index_validation():
    with pytest.raises(ParseError):
        deserialize_tree("(add x0 x9)", 2)
    with pytest.raises(ParameterError):
        ExprTree(root=OpNode("add", (CoordNode(0), CoordNode(5))), dimension=2)


def test_arity_validation():
    with pytest.raises(ParameterError):
        OpNode("add", (CoordNode(0),))
    with pytest.raises(ParameterError):
        OpNode("sin", (CoordNode(0), CoordNode(0)))


def test_batch_file_round_trip():
    trees = [generate_tree(RgfGenParams(max_depth=5, seed=s), 3) for s in range(10)]
    text = write_batch(trees, 3)
    assert text.startswith("rgf-v1 d=3\n")
    back = read_batch(text)
    assert [serialize_tree(t) for t in back] == [serialize_tree(t) for t in trees]
    with pytest.raises(ParseError):
        read_batch("no header\n(add x0 x1)\n")


def test_depth_bound_and_coordinate_presence():
    for seed in range(100):
        params = RgfGenParams(max_depth=4, seed=seed)
        tree = generate_tree(params, 3)
        assert tree.depth <= 4
        assert tree.has_coordinate()


def test_params_validation():
    with pytest.raises(ParameterError):
        RgfGenParams(max_depth=1)
    with pytest.raises(ParameterError):
        RgfGenParams(p_operator=0.0)
    with pytest.raises(ParameterError):
        RgfGenParams(p_coordinate=1.0)
