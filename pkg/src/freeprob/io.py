"""JSON encoding for algebras, jets, moment data, models and reports.

Every complex scalar is written as a two-element list ``[re, im]``.
Coefficient tensors ``T[o, i_1, ..., i_n]`` are flattened row-major, so the
output index varies slowest and the last argument index fastest.
"""

import json

import numpy as np


def encode_complex(a):
    """Nested lists of ``[re, im]`` pairs with the shape of ``a``."""
    a = np.asarray(a, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def decode_complex(data):
    arr = np.asarray(data, dtype=float)
    if arr.shape[-1:] != (2,):
        raise ValueError("complex scalars must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def encode_tensor(t):
    """Flat row-major list of ``[re, im]`` pairs."""
    return encode_complex(np.asarray(t).reshape(-1))


def decode_tensor(data, dim, order):
    flat = decode_complex(data)
    expected = dim ** (order + 1)
    if flat.shape != (expected,):
        raise ValueError(f"order-{order} tensor over dim {dim} needs {expected} entries, got {flat.size}")
    return flat.reshape((dim,) * (order + 1))


def jet_to_dict(jet):
    return {
        "algebra": jet.algebra.to_spec(),
        "degree": jet.degree,
        "terms": [encode_tensor(t) for t in jet.terms],
    }


def jet_from_dict(data):
    from freeprob.algebra import Algebra
    from freeprob.series import Jet

    alg = Algebra.from_spec(data["algebra"])
    terms = [decode_tensor(t, alg.dim, n) for n, t in enumerate(data["terms"])]
    if "degree" in data and int(data["degree"]) != len(terms) - 1:
        raise ValueError("degree field disagrees with number of terms")
    return Jet(alg, terms)


def moments_to_dict(m):
    return {
        "algebra": m.algebra.to_spec(),
        "order": m.order,
        "moments": [encode_tensor(t) for t in m.mu],
    }


def moments_from_dict(data):
    from freeprob.algebra import Algebra
    from freeprob.transforms import MomentData

    alg = Algebra.from_spec(data["algebra"])
    mu = [decode_tensor(t, alg.dim, n + 1) for n, t in enumerate(data["moments"])]
    if "order" in data and int(data["order"]) != len(mu):
        raise ValueError("order field disagrees with number of moment tensors")
    return MomentData(alg, mu)


def model_to_dict(model):
    return {
        "algebra": model.algebra.to_spec(),
        "index": model.index,
        "flavor": model.flavor,
        "coeffs": [encode_tensor(t) for t in model.coeffs],
    }


def model_from_dict(data, algebra=None):
    from freeprob.algebra import Algebra
    from freeprob.fock import RvModel

    alg = algebra if algebra is not None else Algebra.from_spec(data["algebra"])
    coeffs = [decode_tensor(t, alg.dim, n) for n, t in enumerate(data["coeffs"])]
    return RvModel(alg, int(data["index"]), data["flavor"], coeffs)


def transform_result_to_dict(result):
    out = jet_to_dict(result.jet)
    out["diagnostics"] = {k: float(v) for k, v in result.diagnostics.items()}
    return out


def _dump(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1)


def _load(path):
    with open(path) as fh:
        return json.load(fh)


def save_jet(jet, path):
    _dump(jet_to_dict(jet), path)


def load_jet(path):
    return jet_from_dict(_load(path))


def save_moments(m, path):
    _dump(moments_to_dict(m), path)


def load_moments(path):
    return moments_from_dict(_load(path))


def save_model(model, path):
    _dump(model_to_dict(model), path)


def load_model(path):
    return model_from_dict(_load(path))
