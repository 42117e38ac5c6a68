"""Plain-text model files shared by every model kind.

Layout: a format-version line, a ``kind`` line, ``key value`` header lines,
then named blocks (a line with the block name followed by rows of
space-separated numbers). Floats are written with ``repr`` so a save/load
round trip is exact.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .data import DataError, ScaleParams
from .elm import ElmModel, init_hidden_layer
from .linear import LinearModel
from .svm import KernelParams, SvmModel

MAGIC = "envelope-learn-model"
VERSION = 1
KINDS = ("logistic", "linear_ls", "elm", "svm")


def _row(values) -> str:
    return " ".join(repr(float(v)) for v in np.ravel(values))


def _scale_block(scale: ScaleParams) -> list[str]:
    return ["scale_means", _row(scale.means), "scale_scales", _row(scale.scales)]


def model_to_text(model) -> str:
    kind = getattr(model, "kind", None)
    lines = [f"{MAGIC} {VERSION}", f"kind {kind}"]
    if isinstance(model, LinearModel):
        lines += [f"n {model.n}", f"beta0 {model.beta0!r}", "beta1", _row(model.beta1)]
    elif isinstance(model, ElmModel):
        h = model.hidden
        lines += [f"n {model.n}", f"n_h {model.n_h}", f"seed {h.seed}", f"lambda {model.lam!r}", "W_r"]
        lines += [_row(r) for r in h.W_r]
        lines += ["b_r", _row(h.b_r), "W", _row(model.W)]
    elif isinstance(model, SvmModel):
        lines += [f"n {model.n}", f"sigma {model.kernel.sigma!r}", f"b {model.bias!r}", f"n_sv {model.n_sv}",
                  "support_vectors"]
        lines += [_row(np.concatenate(([c], sv))) for c, sv in zip(model.coefficients, model.support_vectors)]
    else:
        raise DataError(f"cannot serialise object of type {type(model).__name__}")
    lines += _scale_block(model.scale)
    return "\n".join(lines) + "\n"


def save_model(model, path: str | Path) -> None:
    Path(path).write_text(model_to_text(model), encoding="utf-8")


class _Reader:
    def __init__(self, text: str):
        self.lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        self.i = 0

    def next(self) -> str:
        if self.i >= len(self.lines):
            raise DataError("model file truncated")
        ln = self.lines[self.i]
        self.i += 1
        return ln

    def field(self, key: str) -> str:
        parts = self.next().split(None, 1)
        if parts[0] != key or len(parts) != 2:
            raise DataError(f"model file: expected '{key} <value>', got {' '.join(parts)!r}")
        return parts[1]

    def int(self, key: str) -> int:
        try:
            return int(self.field(key))
        except ValueError:
            raise DataError(f"model file: {key} must be an integer") from None

    def float(self, key: str) -> float:
        try:
            return float(self.field(key))
        except ValueError:
            raise DataError(f"model file: {key} must be a number") from None

    def block(self, name: str, rows: int, cols: int) -> np.ndarray:
        if self.next() != name:
            raise DataError(f"model file: expected block {name!r}")
        out = np.empty((rows, cols))
        for r in range(rows):
            line = self.next()
            try:
                vals = [float(t) for t in line.split()]
            except ValueError:
                raise DataError(f"model file: non-numeric value in block {name!r}") from None
            if len(vals) != cols:
                raise DataError(f"model file: block {name!r} row {r} has {len(vals)} values, expected {cols}")
            out[r] = vals
        return out


def model_from_text(text: str):
    rd = _Reader(text)
    head = rd.next().split()
    if len(head) != 2 or head[0] != MAGIC:
        raise DataError("not a model file")
    if head[1] != str(VERSION):
        raise DataError(f"unsupported model format version {head[1]}")
    kind = rd.field("kind")
    if kind not in KINDS:
        raise DataError(f"unknown model kind {kind!r}")
    n = rd.int("n")
    if n < 1:
        raise DataError("model file: n must be >= 1")

    def scale():
        means = rd.block("scale_means", 1, n)[0]
        scales = rd.block("scale_scales", 1, n)[0]
        return ScaleParams(means, scales)

    if kind in ("logistic", "linear_ls"):
        beta0 = rd.float("beta0")
        beta1 = rd.block("beta1", 1, n)[0]
        return LinearModel(beta1, beta0, scale(), kind)
    if kind == "elm":
        n_h = rd.int("n_h")
        seed = rd.int("seed")
        lam = rd.float("lambda")
        W_r = rd.block("W_r", n, n_h)
        b_r = rd.block("b_r", 1, n_h)[0]
        W = rd.block("W", 1, n_h)[0]
        hidden = init_hidden_layer(n, n_h, seed)
        if not (np.array_equal(hidden.W_r, W_r) and np.array_equal(hidden.b_r, b_r)):
            raise DataError("model file: hidden layer does not match the one regenerated from its seed")
        W.setflags(write=False)
        return ElmModel(hidden, W, lam, scale())
    sigma = rd.float("sigma")
    b = rd.float("b")
    n_sv = rd.int("n_sv")
    if n_sv < 0:
        raise DataError("model file: n_sv must be >= 0")
    block = rd.block("support_vectors", n_sv, n + 1)
    coef = np.ascontiguousarray(block[:, 0])
    sv = np.ascontiguousarray(block[:, 1:])
    coef.setflags(write=False)
    sv.setflags(write=False)
    return SvmModel(sv, coef, b, KernelParams(sigma), scale())


def load_model(path: str | Path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read model file {path}: {exc.strerror}") from None
    return model_from_text(text)
