"""Closed-form field expressions over grid coordinates ``x1..xd``.

Only arithmetic (``+ - * / **``), ``sin``, ``cos``, ``exp``, numeric
literals and the constants ``pi`` and ``e`` are accepted.
"""
import ast
import math

import numpy as np

from .errors import ConfigurationError
from .grid import Grid, ScalarField

_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}
_CONSTS = {"pi": math.pi, "e": math.e}
_BINOPS = {ast.Add: np.add, ast.Sub: np.subtract, ast.Mult: np.multiply,
           ast.Div: np.divide, ast.Pow: np.power}


def evaluate(expr, names: dict):
    """Evaluate ``expr`` (a string or number) with the given variable bindings."""
    if isinstance(expr, (int, float)):
        return float(expr)
    try:
        tree = ast.parse(str(expr), mode="eval")
    except SyntaxError as exc:
        raise ConfigurationError(f"cannot parse expression {expr!r}: {exc.msg}") from exc

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
                and not isinstance(node.value, bool):
            return float(node.value)
        if isinstance(node, ast.Name):
            if node.id in names:
                return names[node.id]
            if node.id in _CONSTS:
                return _CONSTS[node.id]
            raise ConfigurationError(f"unknown name {node.id!r} in {expr!r}")
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) \
                and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords:
            return _FUNCS[node.func.id](ev(node.args[0]))
        raise ConfigurationError(f"unsupported construct in expression {expr!r}")

    return ev(tree)


def constant(expr) -> float:
    value = evaluate(expr, {})
    if np.ndim(value) != 0:
        raise ConfigurationError(f"expected a constant, got {expr!r}")
    return float(value)


def field_from_expression(grid: Grid, expr) -> ScalarField:
    names = {f"x{i + 1}": x for i, x in enumerate(grid.coordinates)}
    value = evaluate(expr, names)
    return ScalarField(grid, np.broadcast_to(np.asarray(value, dtype=float), grid.shape))
