"""Numerical kernels for the small multilayer networks.

Two interchangeable backends expose the same three functions:

- ``forward(Ws, bs, X)`` — batched forward pass
- ``qsel_loss_grad(Ws, bs, X, actions, targets)`` — squared error on the
  selected action-values, with gradients
- ``ce_loss_grad(Ws, bs, X, labels)`` — softmax cross-entropy, with gradients

The compiled extension is preferred when it was built; the pure NumPy
backend is the fallback.  Set TRAJSYNTH_KERNELS=pure or =compiled to force
a choice (``compiled`` raises if the extension is unavailable).
"""
from __future__ import annotations

import os

from . import pure

_VALID = ("auto", "compiled", "pure")


def _load_compiled():
    from . import _mlpcore
    return _mlpcore


def _select():
    choice = os.environ.get("TRAJSYNTH_KERNELS", "auto").lower()
    if choice not in _VALID:
        raise ValueError(f"TRAJSYNTH_KERNELS must be one of {_VALID}, not {choice!r}")
    if choice == "pure":
        return pure, "pure"
    try:
        return _load_compiled(), "compiled"
    except ImportError:
        if choice == "compiled":
            raise ImportError(
                "TRAJSYNTH_KERNELS=compiled but the extension is not built; "
                "reinstall the package with a C compiler available") from None
        return pure, "pure"


_backend, BACKEND = _select()

forward = _backend.forward
qsel_loss_grad = _backend.qsel_loss_grad
ce_loss_grad = _backend.ce_loss_grad


def backend_name() -> str:
    """Name of the backend selected at import time."""
    return BACKEND


def get_backend(name: str):
    """Fetch a specific backend module (for tests and benchmarks)."""
    if name == "pure":
        return pure
    if name == "compiled":
        return _load_compiled()
    raise ValueError(f"unknown backend {name!r}")
