"""Finite-dimensional unital algebras given by structure constants.

An element of an algebra of dimension ``d`` is a complex vector of length
``d``. The product of basis vectors is ``e_p e_q = sum_r c[p, q, r] e_r``.
"""

from __future__ import annotations

import itertools

import numpy as np

ASSOC_TOL = 1e-12
INV_RESIDUAL_TOL = 1e-10
COND_GATE = 1e-8


class AlgebraValidationError(ValueError):
    """Custom structure constants violate associativity or the unit laws."""

    def __init__(self, message, triple=None):
        super().__init__(message)
        self.triple = triple


class NotInvertible(ArithmeticError):
    """An element (or linear map) failed the invertibility gate."""

    def __init__(self, message, condition=np.inf):
        super().__init__(message)
        self.condition = condition


class Algebra:
    """A unital associative algebra over the complex numbers.

    Parameters
    ----------
    structure : array_like, shape (d, d, d)
        Structure constants ``c[p, q, r]``.
    unit : array_like, shape (d,)
        Coordinates of the unit element.
    kind : str
        ``"matrix"``, ``"diagonal"`` or ``"custom"``.
    param : int, optional
        ``k`` for ``matrix(k)`` and ``d`` for ``diagonal(d)``.
    validate : bool
        Check associativity and unit laws eagerly.
    """

    def __init__(self, structure, unit, kind="custom", param=None, validate=True):
        c = np.array(structure, dtype=complex)
        if c.ndim != 3 or not (c.shape[0] == c.shape[1] == c.shape[2]):
            raise AlgebraValidationError(f"structure tensor must be d x d x d, got {c.shape}")
        u = np.array(unit, dtype=complex)
        if u.shape != (c.shape[0],):
            raise AlgebraValidationError(f"unit must have length {c.shape[0]}, got {u.shape}")
        c.setflags(write=False)
        u.setflags(write=False)
        self.structure = c
        self.unit = u
        self.kind = kind
        self.param = param
        if validate:
            self.validate()

    # -- constructors ------------------------------------------------------

    @classmethod
    def matrix(cls, k):
        """Full matrix algebra M_k with matrix-unit basis ``E_ij`` at ``i*k + j``."""
        if not 1 <= k <= 4:
            raise ValueError(f"matrix(k) requires 1 <= k <= 4, got {k}")
        d = k * k
        c = np.zeros((d, d, d))
        for i, j, m in itertools.product(range(k), repeat=3):
            c[i * k + j, j * k + m, i * k + m] = 1.0
        unit = np.eye(k).reshape(d)
        return cls(c, unit, kind="matrix", param=k, validate=False)

    @classmethod
    def diagonal(cls, d):
        """Commutative algebra C^d with componentwise product."""
        if not 1 <= d <= 16:
            raise ValueError(f"diagonal(d) requires 1 <= d <= 16, got {d}")
        c = np.zeros((d, d, d))
        for p in range(d):
            c[p, p, p] = 1.0
        return cls(c, np.ones(d), kind="diagonal", param=d, validate=False)

    @classmethod
    def custom(cls, structure, unit):
        return cls(structure, unit, kind="custom")

    @classmethod
    def from_spec(cls, spec):
        """Build an algebra from a JSON-style dict or a ``"matrix:2"`` string."""
        if isinstance(spec, str):
            kind, _, arg = spec.partition(":")
            if kind == "matrix":
                return cls.matrix(int(arg))
            if kind == "diagonal":
                return cls.diagonal(int(arg))
            raise ValueError(f"unknown algebra spec {spec!r}")
        kind = spec["kind"]
        if kind == "matrix":
            return cls.matrix(int(spec["k"]))
        if kind == "diagonal":
            return cls.diagonal(int(spec["d"]))
        if kind == "custom":
            from freeprob.io import decode_complex

            structure = decode_complex(spec["structure"])
            unit = decode_complex(spec["unit"])
            alg = cls.custom(structure, unit)
            if "dim" in spec and int(spec["dim"]) != alg.dim:
                raise AlgebraValidationError(f"dim {spec['dim']} disagrees with structure tensor")
            return alg
        raise ValueError(f"unknown algebra kind {kind!r}")

    def to_spec(self):
        if self.kind == "matrix":
            return {"kind": "matrix", "k": self.param}
        if self.kind == "diagonal":
            return {"kind": "diagonal", "d": self.param}
        from freeprob.io import encode_complex

        return {
            "kind": "custom",
            "dim": self.dim,
            "unit": encode_complex(self.unit),
            "structure": encode_complex(self.structure),
        }

    # -- structure ---------------------------------------------------------

    @property
    def dim(self):
        return self.structure.shape[0]

    def __repr__(self):
        if self.kind in ("matrix", "diagonal"):
            return f"Algebra.{self.kind}({self.param})"
        return f"Algebra.custom(dim={self.dim})"

    def __eq__(self, other):
        if not isinstance(other, Algebra):
            return NotImplemented
        return (
            self.dim == other.dim
            and np.array_equal(self.structure, other.structure)
            and np.array_equal(self.unit, other.unit)
        )

    def __hash__(self):
        return hash((self.dim, self.structure.tobytes(), self.unit.tobytes()))

    def validate(self, tol=ASSOC_TOL):
        c = self.structure
        d = self.dim
        # (e_p e_q) e_s vs e_p (e_q e_s)
        lhs = np.einsum("pqr,rst->pqst", c, c)
        rhs = np.einsum("qsr,prt->pqst", c, c)
        bad = np.argwhere(np.abs(lhs - rhs).max(axis=-1) > tol)
        if len(bad):
            p, q, s = (int(v) for v in bad[0])
            raise AlgebraValidationError(
                f"associativity fails for basis triple (e_{p}, e_{q}, e_{s})", triple=(p, q, s)
            )
        eye = np.eye(d)
        left = np.einsum("p,pqr->qr", self.unit, c)
        right = np.einsum("q,pqr->pr", self.unit, c)
        for name, m in (("left", left), ("right", right)):
            dev = np.abs(m - eye).max(axis=-1)
            if dev.max() > tol:
                p = int(np.argmax(dev))
                raise AlgebraValidationError(
                    f"{name} unit law fails for basis element e_{p}", triple=(p,)
                )

    @property
    def is_commutative(self):
        return np.allclose(self.structure, self.structure.transpose(1, 0, 2), atol=ASSOC_TOL)

    # -- elements ----------------------------------------------------------

    def zero(self):
        return np.zeros(self.dim, dtype=complex)

    def one(self):
        return self.unit.copy()

    def basis(self, p):
        e = self.zero()
        e[p] = 1.0
        return e

    def element(self, coords):
        x = np.asarray(coords, dtype=complex)
        if x.shape != (self.dim,):
            raise ValueError(f"expected {self.dim} coordinates, got shape {x.shape}")
        return x

    def mul(self, x, y):
        return np.einsum("p,q,pqr->r", x, y, self.structure)

    def prod(self, *xs):
        out = self.one()
        for x in xs:
            out = self.mul(out, x)
        return out

    def left_matrix(self, x):
        """Matrix of ``y -> x y`` acting on coordinates."""
        return np.einsum("p,pqr->rq", x, self.structure)

    def right_matrix(self, x):
        """Matrix of ``y -> y x`` acting on coordinates."""
        return np.einsum("q,pqr->rp", x, self.structure)

    def inv(self, x):
        lm = self.left_matrix(x)
        s = np.linalg.svd(lm, compute_uv=False)
        if s[0] == 0 or s[-1] <= COND_GATE * s[0]:
            cond = np.inf if s[-1] == 0 else s[0] / s[-1]
            raise NotInvertible(f"element is singular (condition estimate {cond:.3g})", cond)
        y = np.linalg.solve(lm, self.unit)
        res = max(
            np.abs(self.mul(x, y) - self.unit).max(), np.abs(self.mul(y, x) - self.unit).max()
        )
        if res > INV_RESIDUAL_TOL * max(1.0, np.abs(y).max()):
            raise NotInvertible(f"inverse residual {res:.3g} too large", s[0] / s[-1])
        return y

    def random(self, seed, radius=1.0):
        """Seeded random element whose largest coordinate magnitude is ``radius``."""
        if radius <= 0:
            raise ValueError("radius must be positive")
        rng = np.random.default_rng(seed)
        x = rng.standard_normal(self.dim) + 1j * rng.standard_normal(self.dim)
        return x * (radius / np.abs(x).max())

    def to_matrix(self, x):
        """k x k matrix of an element of ``matrix(k)``."""
        if self.kind != "matrix":
            raise TypeError("to_matrix is only defined for matrix algebras")
        return np.asarray(x).reshape(self.param, self.param)

    def from_matrix(self, m):
        if self.kind != "matrix":
            raise TypeError("from_matrix is only defined for matrix algebras")
        return np.asarray(m, dtype=complex).reshape(self.dim)
