"""Numeric reference of the selective comparison projector.

Previous-scene tokens pass through either an affine map or a selective gated
linear recurrence (input-dependent gates with squashed decay), then fuse into
the current-scene tokens by elementwise addition or multiplication. The output
keeps the current scene's token budget. Analytic gradients of a sum-of-squares
loss are provided and checked against central finite differences in fp64.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from typing import Optional

import numpy as np


class ProjectorError(Exception):
    pass


def validate_tokens(x: np.ndarray, name: str = "tokens") -> np.ndarray:
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
        raise ProjectorError(f"{name} must be a (N>=1, D>=1) matrix, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise ProjectorError(f"{name} contains non-finite values")
    return x


MODE_SELECT = ("linear", "scan")
MODE_FUSE = ("add", "star")


@dataclass
class ProjectorParams:
    mode_select: str
    mode_fuse: str
    dim: int
    state: int = 1
    weight: Optional[np.ndarray] = None  # (D, D)
    bias: Optional[np.ndarray] = None  # (D,)
    w_a: Optional[np.ndarray] = None  # (D, D*S) input -> decay gate
    w_b: Optional[np.ndarray] = None  # (D, D*S) input -> state input gate
    w_c: Optional[np.ndarray] = None  # (D, D*S) input -> state output gate
    a_base: Optional[np.ndarray] = None  # (D, S) decay logits
    b_bias: Optional[np.ndarray] = None  # (D, S)
    c_bias: Optional[np.ndarray] = None  # (D, S)

    def __post_init__(self):
        if self.mode_select not in MODE_SELECT:
            raise ProjectorError(f"mode_select must be one of {MODE_SELECT}")
        if self.mode_fuse not in MODE_FUSE:
            raise ProjectorError(f"mode_fuse must be one of {MODE_FUSE}")
        d, s = self.dim, self.state
        if self.mode_select == "linear":
            if self.weight is None or self.weight.shape != (d, d):
                raise ProjectorError(f"linear weight must be ({d}, {d})")
            if self.bias is None or self.bias.shape != (d,):
                raise ProjectorError(f"linear bias must be ({d},)")
        else:
            for name in ("w_a", "w_b", "w_c"):
                arr = getattr(self, name)
                if arr is None or arr.shape != (d, d * s):
                    raise ProjectorError(f"{name} must be ({d}, {d * s})")
            for name in ("a_base", "b_bias", "c_bias"):
                arr = getattr(self, name)
                if arr is None or arr.shape != (d, s):
                    raise ProjectorError(f"{name} must be ({d}, {s})")

    def arrays(self) -> dict[str, np.ndarray]:
        if self.mode_select == "linear":
            return {"weight": self.weight, "bias": self.bias}
        return {
            "w_a": self.w_a,
            "w_b": self.w_b,
            "w_c": self.w_c,
            "a_base": self.a_base,
            "b_bias": self.b_bias,
            "c_bias": self.c_bias,
        }

    def astype(self, dtype) -> "ProjectorParams":
        kwargs = {k: (v.astype(dtype) if v is not None else None) for k, v in self.arrays().items()}
        return ProjectorParams(
            mode_select=self.mode_select, mode_fuse=self.mode_fuse, dim=self.dim, state=self.state,
            **kwargs,
        )


def init_params(
    dim: int,
    state: int = 4,
    mode_select: str = "scan",
    mode_fuse: str = "star",
    seed: int = 0,
    scale: float = 0.4,
) -> ProjectorParams:
    rng = np.random.default_rng(seed)
    if mode_select == "linear":
        return ProjectorParams(
            mode_select, mode_fuse, dim, state,
            weight=rng.normal(0.0, scale, (dim, dim)),
            bias=rng.normal(0.0, scale, (dim,)),
        )
    return ProjectorParams(
        mode_select, mode_fuse, dim, state,
        w_a=rng.normal(0.0, scale, (dim, dim * state)),
        w_b=rng.normal(0.0, scale, (dim, dim * state)),
        w_c=rng.normal(0.0, scale, (dim, dim * state)),
        a_base=rng.normal(0.0, scale, (dim, state)),
        b_bias=rng.normal(0.0, scale, (dim, state)),
        c_bias=rng.normal(0.0, scale, (dim, state)),
    )


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _scan_forward(x: np.ndarray, p: ProjectorParams, want_cache: bool = False):
    n, d = x.shape
    s = p.state
    y = np.zeros_like(x)
    h = np.zeros((d, s), dtype=x.dtype)
    cache = {"a": [], "b": [], "c": [], "h_prev": [], "h": []} if want_cache else None
    for t in range(n):
        xt = x[t]
        a = _sigmoid((xt @ p.w_a).reshape(d, s) + p.a_base)
        b = (xt @ p.w_b).reshape(d, s) + p.b_bias
        c = (xt @ p.w_c).reshape(d, s) + p.c_bias
        h_prev = h
        h = a * h_prev + b * xt[:, None]
        y[t] = (c * h).sum(axis=1)
        if want_cache:
            cache["a"].append(a)
            cache["b"].append(b)
            cache["c"].append(c)
            cache["h_prev"].append(h_prev)
            cache["h"].append(h)
    return (y, cache) if want_cache else y


def select_prev(prev: np.ndarray, params: ProjectorParams) -> np.ndarray:
    """Token selection over the previous scene; output matches the input shape."""
    prev = validate_tokens(prev, "prev")
    if prev.shape[1] != params.dim:
        raise ProjectorError(f"token dim {prev.shape[1]} does not match params dim {params.dim}")
    if params.mode_select == "linear":
        return prev @ params.weight + params.bias
    return _scan_forward(prev, params)


def fuse(prev_sel: np.ndarray, curr: np.ndarray, mode: str) -> np.ndarray:
    """Parameter-free fusion; the output token count equals the current scene's."""
    if mode not in MODE_FUSE:
        raise ProjectorError(f"fuse mode must be one of {MODE_FUSE}")
    prev_sel = validate_tokens(prev_sel, "prev_sel")
    curr = validate_tokens(curr, "curr")
    if prev_sel.shape != curr.shape:
        raise ProjectorError(f"shape mismatch: {prev_sel.shape} vs {curr.shape}")
    if mode == "add":
        return prev_sel + curr
    return prev_sel * curr


def forward(prev: np.ndarray, curr: np.ndarray, params: ProjectorParams) -> np.ndarray:
    """Selected previous tokens fused into current tokens (one scene's budget)."""
    prev = validate_tokens(prev, "prev")
    curr = validate_tokens(curr, "curr")
    if prev.shape != curr.shape:
        raise ProjectorError(f"prev and curr must share a shape: {prev.shape} vs {curr.shape}")
    return fuse(select_prev(prev, params), curr, params.mode_fuse)


def loss_and_grads(
    prev: np.ndarray, curr: np.ndarray, params: ProjectorParams
) -> tuple[float, dict[str, np.ndarray], np.ndarray, np.ndarray]:
    """Sum-of-squares loss of the forward output with analytic gradients for
    every parameter and both inputs."""
    prev = validate_tokens(prev, "prev").astype(np.float64)
    curr = validate_tokens(curr, "curr").astype(np.float64)
    p = params.astype(np.float64)
    if p.mode_select == "linear":
        sel = prev @ p.weight + p.bias
        scan_cache = None
    else:
        sel, scan_cache = _scan_forward(prev, p, want_cache=True)
    z = sel + curr if p.mode_fuse == "add" else sel * curr
    loss = float((z**2).sum())
    dz = 2.0 * z
    if p.mode_fuse == "add":
        dsel = dz
        dcurr = dz.copy()
    else:
        dsel = dz * curr
        dcurr = dz * sel

    grads: dict[str, np.ndarray] = {}
    if p.mode_select == "linear":
        grads["weight"] = prev.T @ dsel
        grads["bias"] = dsel.sum(axis=0)
        dprev = dsel @ p.weight.T
    else:
        n, d = prev.shape
        s = p.state
        dprev = np.zeros_like(prev)
        d_wa = np.zeros_like(p.w_a)
        d_wb = np.zeros_like(p.w_b)
        d_wc = np.zeros_like(p.w_c)
        d_abase = np.zeros_like(p.a_base)
        d_bbias = np.zeros_like(p.b_bias)
        d_cbias = np.zeros_like(p.c_bias)
        dh_next = np.zeros((d, s))
        for t in range(n - 1, -1, -1):
            xt = prev[t]
            a = scan_cache["a"][t]
            b = scan_cache["b"][t]
            c = scan_cache["c"][t]
            h = scan_cache["h"][t]
            h_prev = scan_cache["h_prev"][t]
            dyt = dsel[t]
            dc = dyt[:, None] * h
            dh = dh_next + dyt[:, None] * c
            da = dh * h_prev
            db = dh * xt[:, None]
            dx = (dh * b).sum(axis=1)
            dh_next = dh * a
            dga = da * a * (1.0 - a)
            d_abase += dga
            d_wa += np.outer(xt, dga.reshape(-1))
            dx = dx + p.w_a @ dga.reshape(-1)
            d_bbias += db
            d_wb += np.outer(xt, db.reshape(-1))
            dx = dx + p.w_b @ db.reshape(-1)
            d_cbias += dc
            d_wc += np.outer(xt, dc.reshape(-1))
            dx = dx + p.w_c @ dc.reshape(-1)
            dprev[t] += dx
        grads = {
            "w_a": d_wa, "w_b": d_wb, "w_c": d_wc,
            "a_base": d_abase, "b_bias": d_bbias, "c_bias": d_cbias,
        }
    return loss, grads, dprev, dcurr


def grad_check(
    params: ProjectorParams, prev: np.ndarray, curr: np.ndarray, eps: float = 1e-5
) -> float:
    """Max relative error of analytic vs central finite-difference gradients,
    over all parameters and both inputs (fp64)."""
    if eps <= 0:
        raise ProjectorError("eps must be positive")
    prev = validate_tokens(prev, "prev").astype(np.float64)
    curr = validate_tokens(curr, "curr").astype(np.float64)
    p = params.astype(np.float64)
    _, grads, dprev, dcurr = loss_and_grads(prev, curr, p)

    def loss_of(p_, prev_, curr_) -> float:
        out = forward(prev_, curr_, p_)
        return float((out**2).sum())

    worst = 0.0

    def compare(analytic: float, plus: float, minus: float) -> float:
        numeric = (plus - minus) / (2.0 * eps)
        return abs(analytic - numeric) / max(1.0, abs(analytic), abs(numeric))

    for name, arr in p.arrays().items():
        flat = arr.reshape(-1)
        gflat = grads[name].reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            plus = loss_of(p, prev, curr)
            flat[i] = orig - eps
            minus = loss_of(p, prev, curr)
            flat[i] = orig
            worst = max(worst, compare(gflat[i], plus, minus))
    for tensor, grad in ((prev, dprev), (curr, dcurr)):
        flat = tensor.reshape(-1)
        gflat = grad.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            plus = loss_of(p, prev, curr)
            flat[i] = orig - eps
            minus = loss_of(p, prev, curr)
            flat[i] = orig
            worst = max(worst, compare(gflat[i], plus, minus))
    return worst


# ---------------------------------------------------------------------------
# Parameter files: fixed 16-byte header then row-major fp32 arrays

_MAGIC = b"SCPJ"
_HEADER = struct.Struct("<4sHBBII")
_ARRAY_ORDER = {
    "linear": ("weight", "bias"),
    "scan": ("w_a", "w_b", "w_c", "a_base", "b_bias", "c_bias"),
}


def save_params(params: ProjectorParams, path) -> None:
    header = _HEADER.pack(
        _MAGIC,
        1,
        MODE_SELECT.index(params.mode_select),
        MODE_FUSE.index(params.mode_fuse),
        params.dim,
        params.state,
    )
    chunks = [header]
    arrays = params.arrays()
    for name in _ARRAY_ORDER[params.mode_select]:
        chunks.append(np.ascontiguousarray(arrays[name], dtype=np.float32).tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(chunks))


def load_params(path) -> ProjectorParams:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size or blob[:4] != _MAGIC:
        raise ProjectorError("not a projector parameter file")
    magic, version, sel_idx, fuse_idx, dim, state = _HEADER.unpack(blob[: _HEADER.size])
    if version != 1:
        raise ProjectorError(f"unsupported parameter file version {version}")
    mode_select = MODE_SELECT[sel_idx]
    mode_fuse = MODE_FUSE[fuse_idx]
    shapes = {
        "weight": (dim, dim), "bias": (dim,),
        "w_a": (dim, dim * state), "w_b": (dim, dim * state), "w_c": (dim, dim * state),
        "a_base": (dim, state), "b_bias": (dim, state), "c_bias": (dim, state),
    }
    offset = _HEADER.size
    kwargs = {}
    for name in _ARRAY_ORDER[mode_select]:
        count = int(np.prod(shapes[name]))
        arr = np.frombuffer(blob, dtype=np.float32, count=count, offset=offset).reshape(shapes[name])
        kwargs[name] = arr.astype(np.float64)
        offset += count * 4
    return ProjectorParams(mode_select, mode_fuse, dim, state, **kwargs)


def constant_gate_params(
    dim: int, state: int, a: float, b: float, c: float, mode_fuse: str = "add"
) -> ProjectorParams:
    """Scan parameters with input-independent gates: decay fixed at `a` (via the
    logit), state-input at `b`, state-output at `c`. Useful as a hand-checkable
    degenerate configuration."""
    if not (0.0 < a < 1.0):
        raise ProjectorError("constant decay must lie in (0, 1)")
    logit = math.log(a / (1.0 - a))
    return ProjectorParams(
        "scan", mode_fuse, dim, state,
        w_a=np.zeros((dim, dim * state)),
        w_b=np.zeros((dim, dim * state)),
        w_c=np.zeros((dim, dim * state)),
        a_base=np.full((dim, state), logit),
        b_bias=np.full((dim, state), b),
        c_bias=np.full((dim, state), c),
    )
