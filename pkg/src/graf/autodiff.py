"""Define-by-run reverse-mode differentiation over complex and real arrays.

Cotangent convention
--------------------
For a real loss ``L`` the cotangent stored for a complex node ``z`` is the
conjugate Wirtinger derivative ``g = dL/dz*``, so that::

    dL = 2 * Re(sum(conj(g) * dz))
    dL/dRe(z) = 2 * Re(g),   dL/dIm(z) = 2 * Im(g)

For a real node the cotangent is the ordinary derivative ``dL/dx``.
With this convention the backward rule of ``|z|**2`` is simply ``g * z`` and
the adjoint of a linear map ``A`` is its conjugate transpose.

Usage::

    tape = Tape()
    s = tape.leaf(samples)
    loss = op_sum(op_abs2(s))
    grads = tape.backward(loss)
    grads[s]                     # dL/ds*

Ops applied to values that are not on a tape just compute forward values, so
the same loss code serves both gradient runs and gradient-free evaluation.
"""

import functools

import numpy as np

from . import complex_core as cc
from .errors import InvalidArgumentError, NumericalError, UsageError


class Var:
    """A value, optionally recorded on a :class:`Tape`."""

    __slots__ = ("value", "tape", "id")

    def __init__(self, value, tape=None, id=None):
        self.value = value
        self.tape = tape
        self.id = id

    @property
    def shape(self):
        return self.value.shape

    @property
    def is_complex(self):
        return np.iscomplexobj(self.value)

    def item(self):
        return self.value.item()

    def numpy(self):
        return self.value

    def __repr__(self):
        where = f"node {self.id}" if self.tape is not None else "constant"
        return f"Var({where}, shape={self.value.shape}, dtype={self.value.dtype})"

    def __add__(self, other):
        return op_add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return op_sub(self, other)

    def __rsub__(self, other):
        return op_sub(other, self)

    def __mul__(self, other):
        return op_mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return op_div_scalar(self, other)

    def __neg__(self):
        return op_mul_scalar(self, -1.0)


class Node:
    __slots__ = ("id", "op", "value", "parents", "vjp")

    def __init__(self, id, op, value, parents, vjp):
        self.id = id
        self.op = op
        self.value = value
        self.parents = parents
        self.vjp = vjp


class Gradients(dict):
    """Map node id -> cotangent; also indexable by the :class:`Var` itself.

    Leaves that the root does not depend on get a zero cotangent.
    """

    def __init__(self, data, tape):
        super().__init__(data)
        self._tape = tape

    def __getitem__(self, key):
        if isinstance(key, Var):
            if key.tape is not self._tape:
                raise UsageError("variable does not belong to this tape")
            if key.id not in self:
                return np.zeros_like(key.value)
            key = key.id
        return super().__getitem__(key)


class Tape:
    """Append-only record of ops; built per evaluation and then discarded.

    With ``debug=True`` every recorded op checks its output for NaN/Inf and
    raises :class:`NumericalError` naming the op.
    """

    def __init__(self, debug=False):
        self.nodes = []
        self.root = None
        self.debug = debug

    def __len__(self):
        return len(self.nodes)

    def leaf(self, value):
        value = np.array(value, dtype=np.result_type(value, np.float64))
        return self._record("leaf", value, (), None)

    def _record(self, op, value, parents, vjp):
        if self.debug and not np.all(np.isfinite(value)):
            raise NumericalError(f"non-finite output from op '{op}' (node {len(self.nodes)})", op=op)
        node = Node(len(self.nodes), op, value, parents, vjp)
        self.nodes.append(node)
        return Var(value, self, node.id)

    def set_root(self, var):
        if var.tape is not self:
            raise UsageError("root must be recorded on this tape")
        self.root = var.id

    def backward(self, root=None):
        if root is not None:
            self.set_root(root)
        return backward(self)


def backward(tape):
    """Propagate cotangents from ``tape.root`` (seeded with 1) to every node.

    Returns a :class:`Gradients` map covering every node the root depends on.
    Nodes are visited once, in reverse recording order.
    """
    if tape.root is None:
        raise UsageError("backward() needs a root; call tape.set_root(loss) first")
    root = tape.nodes[tape.root]
    if np.iscomplexobj(root.value) or root.value.size != 1:
        raise UsageError(f"root must be a real scalar, got {root.value.dtype} of shape {root.value.shape}")
    cot = {root.id: np.ones_like(root.value)}
    for node in reversed(tape.nodes[: root.id + 1]):
        g = cot.get(node.id)
        if g is None or node.vjp is None:
            continue
        parent_cots = node.vjp(g)
        for pid, pg in zip(node.parents, parent_cots):
            if pid is None or pg is None:
                continue
            if pid in cot:
                cot[pid] = cot[pid] + pg
            else:
                cot[pid] = pg
    return Gradients(cot, tape)


# ------------------------------------------------------------------ helpers


def as_var(x):
    """Wrap a raw array as an untracked constant; Vars pass through."""
    if isinstance(x, Var):
        return x
    x = np.asarray(x)
    return Var(x.astype(np.result_type(x, np.float64), copy=False))


def _tape_of(*vs):
    tape = None
    for v in vs:
        if v.tape is not None:
            if tape is not None and v.tape is not tape:
                raise UsageError("cannot combine variables from different tapes")
            tape = v.tape
    return tape


def _emit(op, value, inputs, vjp):
    """Record ``value`` if any input is tracked, else return a constant."""
    tape = _tape_of(*inputs)
    if tape is None:
        return Var(value)
    parents = tuple(v.id if v.tape is tape else None for v in inputs)
    return tape._record(op, value, parents, vjp)


def _unbroadcast(g, shape):
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def _match_kind(g, like):
    # a real parent feeding a complex output: dL/dx = 2 Re(g)
    if np.iscomplexobj(like) or not np.iscomplexobj(g):
        return g
    return 2.0 * np.real(g)


def op_to_complex(x):
    """Promote a real array to complex; backward is ``2 * Re(g)``."""
    x = as_var(x)
    if np.iscomplexobj(x.value):
        return x

    def vjp(g):
        return (2.0 * np.real(g),)

    return _emit("to_complex", x.value.astype(np.complex128), (x,), vjp)


def _complex(x):
    return op_to_complex(as_var(x))


@functools.lru_cache(maxsize=32)
def _shift_index(n):
    k = np.arange(n)
    idx = (k[None, :] - k[:, None]) % n
    idx.setflags(write=False)
    return idx


# --------------------------------------------------------- GRAF pipeline ops


def op_shift_matrix(s):
    """Circulant shift matrix ``S[k, n] = s[(n - k) mod N]``."""
    s = _complex(s)
    if s.value.ndim != 1 or s.value.size < 1:
        raise InvalidArgumentError("op_shift_matrix: expected a non-empty vector")
    n = s.value.size
    idx = _shift_index(n)

    def vjp(g):
        flat = idx.ravel()
        gr = np.bincount(flat, weights=g.real.ravel(), minlength=n)
        gi = np.bincount(flat, weights=g.imag.ravel(), minlength=n)
        return (gr + 1j * gi,)

    return _emit("shift_matrix", s.value[idx], (s,), vjp)


def op_conj_product(s, S):
    """``R[k, n] = s[n] * conj(S[k, n])`` with ``s`` broadcast over rows."""
    s, S = _complex(s), _complex(S)
    if S.value.ndim != 2 or s.value.shape != S.value.shape[1:]:
        raise InvalidArgumentError(
            f"op_conj_product: shape mismatch {s.value.shape} vs {S.value.shape}"
        )
    sv, Sv = s.value, S.value

    def vjp(g):
        return (np.sum(g * Sv, axis=0), np.conj(g) * sv)

    return _emit("conj_product", sv * np.conj(Sv), (s, S), vjp)


def op_fft_rows(R):
    """Unnormalized DFT of every row."""
    R = _complex(R)
    n = R.value.shape[-1]

    def vjp(g):
        # adjoint of the unnormalized DFT is N * IDFT
        return (n * cc.ifft(g),)

    return _emit("fft_rows", cc.fft(R.value), (R,), vjp)


def op_abs2(X):
    """``|X|**2`` as a real array."""
    X = _complex(X)
    xv = X.value

    def vjp(g):
        return (g * xv,)

    return _emit("abs2", xv.real**2 + xv.imag**2, (X,), vjp)


def op_fftshift2(chi):
    chi = as_var(chi)

    def vjp(g):
        return (cc.ifftshift2(g),)

    return _emit("fftshift2", cc.fftshift2(chi.value), (chi,), vjp)


def op_power_spectrum(s):
    """Fused ``|fft(s)|**2`` for a vector ``s``."""
    s = _complex(s)
    spec = cc.fft(s.value)
    n = spec.shape[-1]

    def vjp(g):
        return (n * cc.ifft(g * spec),)

    return _emit("power_spectrum", spec.real**2 + spec.imag**2, (s,), vjp)


def op_phase_to_signal(theta):
    """``exp(1j * theta)`` for real phases."""
    theta = as_var(theta)
    if np.iscomplexobj(theta.value):
        raise InvalidArgumentError("op_phase_to_signal: phases must be real")
    sig = np.exp(1j * theta.value)

    def vjp(g):
        # dL/dtheta = 2 Re(conj(g) * j * s) = -2 Im(conj(g) * s)
        return (-2.0 * np.imag(np.conj(g) * sig),)

    return _emit("phase_to_signal", sig, (theta,), vjp)


def op_abs(z):
    """Magnitude ``|z|`` (complex -> real). Subgradient 0 at ``z == 0``."""
    z = _complex(z)
    zv = z.value
    mag = np.abs(zv)

    def vjp(g):
        safe = np.where(mag > 0, mag, 1.0)
        return (np.where(mag > 0, g * zv / (2.0 * safe), 0.0),)

    return _emit("abs", mag, (z,), vjp)


def op_wrapped_diff(theta):
    """Circular first difference wrapped to ``(-pi, pi]``: ``wrap(theta[n+1] - theta[n])``."""
    theta = as_var(theta)
    d = np.roll(theta.value, -1) - theta.value
    wrapped = np.pi - np.mod(np.pi - d, 2.0 * np.pi)

    def vjp(g):
        # wrapping subtracts a locally constant multiple of 2*pi
        return (np.roll(g, 1) - g,)

    return _emit("wrapped_diff", wrapped, (theta,), vjp)


# ------------------------------------------------------- reductions / scalars


def _require_nonempty(x, name):
    if x.value.size == 0:
        raise InvalidArgumentError(f"{name}: empty selection")


def op_take(x, index):
    """Gather ``x[index]`` (basic, fancy or boolean index)."""
    x = as_var(x)
    xv = x.value
    out = np.asarray(xv[index])

    def vjp(g):
        full = np.zeros_like(xv, dtype=np.result_type(xv, g))
        np.add.at(full, index, g)
        return (full,)

    return _emit("take", out, (x,), vjp)


def op_sum(x):
    x = as_var(x)
    shape = x.value.shape

    def vjp(g):
        return (np.broadcast_to(g, shape).copy(),)

    return _emit("sum", np.asarray(x.value.sum()), (x,), vjp)


def op_mean(x):
    x = as_var(x)
    _require_nonempty(x, "op_mean")
    shape, n = x.value.shape, x.value.size

    def vjp(g):
        return (np.full(shape, g / n, dtype=np.result_type(g, x.value)),)

    return _emit("mean", np.asarray(x.value.mean()), (x,), vjp)


def op_variance(x):
    """Population variance (divide by the element count) of a real array."""
    x = as_var(x)
    _require_nonempty(x, "op_variance")
    if np.iscomplexobj(x.value):
        raise InvalidArgumentError("op_variance: real input required")
    dev = x.value - x.value.mean()
    n = x.value.size

    def vjp(g):
        return (2.0 * g * dev / n,)

    return _emit("variance", np.asarray(np.mean(dev * dev)), (x,), vjp)


def op_max_with_argmax(x):
    """Maximum of a real array and the multi-index where it is attained.

    The whole cotangent flows to that single cell; ties resolve to the
    lowest row-major index.
    """
    x = as_var(x)
    _require_nonempty(x, "op_max_with_argmax")
    flat = int(np.argmax(x.value))
    where = np.unravel_index(flat, x.value.shape)
    shape = x.value.shape

    def vjp(g):
        full = np.zeros(shape)
        full.flat[flat] = g
        return (full,)

    return _emit("max", np.asarray(x.value.flat[flat]), (x,), vjp), tuple(int(i) for i in where)


def op_sigmoid(x):
    x = as_var(x)
    # e = exp(-|x|) keeps both tails free of cancellation
    e = np.exp(-np.abs(x.value))
    y = np.where(x.value >= 0, 1.0, e) / (1.0 + e)
    slope = e / (1.0 + e) ** 2

    def vjp(g):
        return (g * slope,)

    return _emit("sigmoid", y, (x,), vjp)


def op_mul_scalar(x, c):
    """Multiply by a constant (scalar or array of matching shape)."""
    x = as_var(x)
    c = np.asarray(c)

    def vjp(g):
        return (_match_kind(_unbroadcast(g * np.conj(c), x.value.shape), x.value),)

    return _emit("mul_scalar", x.value * c, (x,), vjp)


def op_add(a, b):
    a, b = as_var(a), as_var(b)

    def vjp(g):
        return (
            _match_kind(_unbroadcast(g, a.value.shape), a.value),
            _match_kind(_unbroadcast(g, b.value.shape), b.value),
        )

    return _emit("add", a.value + b.value, (a, b), vjp)


def op_sub(a, b):
    a, b = as_var(a), as_var(b)

    def vjp(g):
        return (
            _match_kind(_unbroadcast(g, a.value.shape), a.value),
            _match_kind(_unbroadcast(-g, b.value.shape), b.value),
        )

    return _emit("sub", a.value - b.value, (a, b), vjp)


def op_mul(a, b):
    """Elementwise product of two real arrays (broadcasting allowed)."""
    a, b = as_var(a), as_var(b)
    if np.iscomplexobj(a.value) or np.iscomplexobj(b.value):
        raise InvalidArgumentError("op_mul: real operands required; use op_conj_product for complex")
    av, bv = a.value, b.value

    def vjp(g):
        return (_unbroadcast(g * bv, av.shape), _unbroadcast(g * av, bv.shape))

    return _emit("mul", av * bv, (a, b), vjp)


def op_div_scalar(x, d):
    """Divide an array by a real scalar (constant or tracked)."""
    x, d = as_var(x), as_var(d)
    if d.value.size != 1 or np.iscomplexobj(d.value):
        raise InvalidArgumentError("op_div_scalar: divisor must be a real scalar")
    dv = d.value.reshape(())
    if dv == 0:
        raise InvalidArgumentError("op_div_scalar: division by zero")
    out = x.value / dv

    def vjp(g):
        # dout = -out / d * dd
        if np.iscomplexobj(out):
            gd = -2.0 * np.real(np.sum(np.conj(g) * out)) / dv
        else:
            gd = -np.sum(g * out) / dv
        return (g / dv, np.asarray(gd).reshape(d.value.shape))

    return _emit("div_scalar", out, (x, d), vjp)


# ---------------------------------------------------------------- checking


def grad_check(f, s, eps=1e-5):
    """Worst relative error between tape gradients and central differences.

    ``f`` maps a :class:`Var` holding ``s`` to a real scalar :class:`Var`.
    For complex ``s`` both ``2*Re(g)`` and ``2*Im(g)`` are checked against
    differences along ``Re(s[n])`` and ``Im(s[n])``; for real ``s`` the
    cotangent is compared directly. The per-element error uses the
    denominator ``max(|analytic|, |numeric|, 1e-12)``.
    """
    if not eps > 0:
        raise InvalidArgumentError("grad_check: eps must be positive")
    s = np.asarray(s)
    is_complex = np.iscomplexobj(s)
    s = s.astype(np.complex128 if is_complex else np.float64)

    tape = Tape(debug=True)
    x = tape.leaf(s)
    loss = f(x)
    g = tape.backward(loss)[x]

    def evaluate(v):
        out = f(Var(v)).value
        if not np.all(np.isfinite(out)):
            raise NumericalError("non-finite loss during finite differencing", op="loss")
        return float(np.real(out))

    if is_complex:
        analytic = np.concatenate([2.0 * g.real.ravel(), 2.0 * g.imag.ravel()])
        directions = (1.0, 1j)
    else:
        analytic = np.asarray(g, dtype=np.float64).ravel()
        directions = (1.0,)

    numeric = []
    for step in directions:
        for i in range(s.size):
            plus = s.copy()
            minus = s.copy()
            plus.flat[i] += step * eps
            minus.flat[i] -= step * eps
            numeric.append((evaluate(plus) - evaluate(minus)) / (2.0 * eps))
    numeric = np.array(numeric)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-12)
    return float(np.max(np.abs(analytic - numeric) / denom))
