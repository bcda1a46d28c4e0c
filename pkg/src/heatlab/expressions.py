"""Small arithmetic/trig expression grammar shared by charts and twists.

Grammar (Python syntax, parsed with :mod:`ast`, never evaluated):

    expr   := number | name | expr (+ - * /) expr | -expr | expr ** rational
            | func(expr)
    func   := sin | cos | tan | exp | sqrt | log
    name   := a declared coordinate | pi | i (imaginary unit)

Complex literals such as ``0.2j`` are accepted.  Expressions are converted
to :mod:`sympy` objects so that charts get exact symbolic jets.
"""

from __future__ import annotations

import ast
import math

import numpy as np
import sympy as sp

from .exceptions import AliasingError, SchemaError

FUNCTIONS = {"sin": sp.sin, "cos": sp.cos, "tan": sp.tan, "exp": sp.exp, "sqrt": sp.sqrt, "log": sp.log}
CONSTANTS = {"pi": sp.pi, "i": sp.I, "I": sp.I}
DEFAULT_COORDINATES = ("x", "y", "z", "w")


def default_coordinates(dim: int) -> tuple[str, ...]:
    if dim <= len(DEFAULT_COORDINATES):
        return DEFAULT_COORDINATES[:dim]
    return tuple(f"x{k + 1}" for k in range(dim))


def parse_expression(text: str | float | int, coordinates) -> sp.Expr:
    """Parse ``text`` into a sympy expression in the given coordinate symbols."""
    if isinstance(text, (int, float, complex)) and not isinstance(text, bool):
        return sp.sympify(text)
    if not isinstance(text, str):
        raise SchemaError(f"expression must be a string or number, got {type(text).__name__}")
    symbols = {name: sp.Symbol(name, real=True) for name in coordinates}
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise SchemaError(f"cannot parse expression {text!r}: {exc.msg}") from None
    return _convert(tree.body, symbols, text)


def _convert(node, symbols, text):
    if isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float, complex)):
            raise SchemaError(f"unsupported literal in {text!r}")
        if isinstance(node.value, complex):
            return sp.Float(node.value.real) + sp.I * sp.Float(node.value.imag)
        if isinstance(node.value, int):
            return sp.Integer(node.value)
        return sp.Float(node.value)
    if isinstance(node, ast.Name):
        if node.id in symbols:
            return symbols[node.id]
        if node.id in CONSTANTS:
            return CONSTANTS[node.id]
        raise SchemaError(f"unknown name {node.id!r} in {text!r}")
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        arg = _convert(node.operand, symbols, text)
        return -arg if isinstance(node.op, ast.USub) else arg
    if isinstance(node, ast.BinOp):
        left = _convert(node.left, symbols, text)
        right = _convert(node.right, symbols, text)
        if isinstance(node.op, ast.Add):
            return left + right
        if isinstance(node.op, ast.Sub):
            return left - right
        if isinstance(node.op, ast.Mult):
            return left * right
        if isinstance(node.op, ast.Div):
            return left / right
        if isinstance(node.op, ast.Pow):
            if not (right.is_Integer or right.is_Rational):
                raise SchemaError(f"only rational exponents are allowed in {text!r}")
            return left ** right
        raise SchemaError(f"unsupported operator in {text!r}")
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
            raise SchemaError(f"unsupported function in {text!r}")
        if len(node.args) != 1 or node.keywords:
            raise SchemaError(f"{node.func.id} takes exactly one argument")
        return FUNCTIONS[node.func.id](_convert(node.args[0], symbols, text))
    raise SchemaError(f"unsupported syntax in {text!r}")


def lambdify(expr: sp.Expr, coordinates):
    """Vectorised numpy evaluator ``f(*coords)`` that broadcasts constants."""
    syms = [sp.Symbol(name, real=True) for name in coordinates]
    fn = sp.lambdify(syms, expr, modules="numpy")

    def evaluate(*args):
        out = fn(*args)
        shape = np.broadcast(*args).shape if args else ()
        return np.broadcast_to(np.asarray(out), shape).copy() if np.ndim(out) == 0 else np.asarray(out)

    return evaluate


def trig_coefficients(exprs, coordinates, periods, grid: int = 64, tol: float = 1e-13):
    """Fourier coefficients of trigonometric-polynomial expressions.

    ``exprs`` is one expression per 1-form component (or a single string).
    Returns ``{mode: array of component coefficients}`` with
    ``f(x) = sum_k c_k exp(2 pi i k.x / period)``.  The expression is sampled
    on a ``grid``-point lattice per axis and transformed with the FFT; a
    random-point re-evaluation rejects anything that is not a trigonometric
    polynomial of bandwidth below ``grid / 2``.
    """
    single = isinstance(exprs, (str, int, float, complex))
    if single:
        exprs = [exprs]
    dim = len(coordinates)
    periods = tuple(float(p) for p in periods)
    axes = [np.arange(grid) * p / grid for p in periods]
    mesh = np.meshgrid(*axes, indexing="ij")
    coeffs = {}
    parsed = [parse_expression(e, coordinates) for e in exprs]
    fns = [lambdify(p, coordinates) for p in parsed]
    samples = [np.asarray(f(*mesh), dtype=complex) for f in fns]
    spectra = [np.fft.fftn(s) / s.size for s in samples]
    scale = max(1.0, max(float(np.max(np.abs(s))) for s in samples))
    nyq = grid // 2
    stacked = np.stack(spectra)
    for idx in map(tuple, np.argwhere(np.max(np.abs(stacked), axis=0) > tol * scale)):
        vals = stacked[(slice(None),) + idx]
        mode = tuple(int(i) if i < nyq else int(i) - grid for i in idx)
        if any(abs(k) >= nyq - 1 for k in mode):
            raise AliasingError("expression bandwidth too large for a trigonometric twist")
        coeffs[mode] = vals
    rng = np.random.default_rng(12345)
    pts = [rng.uniform(0, p, size=7) for p in periods]
    for comp, f in enumerate(fns):
        direct = np.asarray(f(*pts), dtype=complex)
        recon = np.zeros(7, dtype=complex)
        for mode, vals in coeffs.items():
            phase = sum(2 * math.pi * k * x / p for k, x, p in zip(mode, pts, periods))
            recon += vals[comp] * np.exp(1j * phase)
        if np.max(np.abs(direct - recon)) > 1e-9 * scale:
            raise SchemaError(f"{exprs[comp]!r} is not a periodic trigonometric polynomial")
    if single:
        return {k: v[0] for k, v in coeffs.items()}
    return coeffs
