"""Power-structure state types and the law of motion.

A power structure pairs a size vector (each state's stock of power, in
billions of constant-2020 USD) with a tactic matrix describing how every
state splits that stock between constructive transfers, destructive
transfers and retention. One application of :func:`step` advances the
structure by a year::

    s(t+1) = Ramp((beta*T+ - mu*T- + lambda*T0) @ s(t))

Self-directed destruction (civil war) cannot sit on the diagonal of T-,
which is reserved for retention, so it is carried as a separate per-state
fraction and subtracted as ``(1 + mu) * x`` after the matrix product.
"""

from __future__ import annotations

from dataclasses import InitVar, dataclass, field
from typing import Iterable, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from powerflow.errors import ModelError

COLUMN_TOL = 1e-9

Scalar = Union[float, NDArray[np.float64]]


@dataclass(frozen=True)
class CountryRegistry:
    """Sorted, de-duplicated ISO-3166 alpha-3 codes with index lookup."""

    codes: tuple[str, ...]
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        codes = tuple(self.codes)
        if list(codes) != sorted(set(codes)):
            raise ModelError("registry codes must be unique and sorted")
        object.__setattr__(self, "codes", codes)
        object.__setattr__(self, "_index", {c: i for i, c in enumerate(codes)})

    @classmethod
    def from_codes(cls, codes: Iterable[str]) -> "CountryRegistry":
        return cls(tuple(sorted(set(codes))))

    def __len__(self) -> int:
        return len(self.codes)

    def __iter__(self):
        return iter(self.codes)

    def __contains__(self, code: object) -> bool:
        return code in self._index

    def index(self, code: str) -> int:
        try:
            return self._index[code]
        except KeyError:
            raise ModelError(f"unknown country code {code!r}") from None

    def indices(self, codes: Iterable[str]) -> list[int]:
        return [self.index(c) for c in codes]

    def subset(self, codes: Iterable[str]) -> "CountryRegistry":
        keep = set(codes)
        missing = keep.difference(self.codes)
        if missing:
            raise ModelError(f"unknown country codes {sorted(missing)}")
        return CountryRegistry(tuple(c for c in self.codes if c in keep))


def _frozen(a: ArrayLike, ndim: int, name: str) -> NDArray[np.float64]:
    arr = np.array(a, dtype=float)
    if arr.ndim != ndim:
        raise ModelError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TacticMatrix:
    """Column-stochastic allocation of each state's power.

    Column ``j`` is state ``j``'s foreign policy: ``constructive[i, j]`` and
    ``destructive[i, j]`` are the fractions of its stock sent to ``i``, and
    ``retained[j, j]`` is the fraction kept. ``self_destruction[j]`` is the
    fraction spent on internal conflict; it is not part of the column sum.
    """

    constructive: NDArray[np.float64]
    destructive: NDArray[np.float64]
    retained: NDArray[np.float64]
    self_destruction: NDArray[np.float64] = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        object.__setattr__(self, "constructive", _frozen(self.constructive, 2, "constructive"))
        object.__setattr__(self, "destructive", _frozen(self.destructive, 2, "destructive"))
        object.__setattr__(self, "retained", _frozen(self.retained, 2, "retained"))
        n = self.constructive.shape[0]
        if self.self_destruction is None:
            object.__setattr__(self, "self_destruction", _frozen(np.zeros(n), 1, "self_destruction"))
        else:
            object.__setattr__(
                self, "self_destruction", _frozen(self.self_destruction, 1, "self_destruction")
            )
        shapes = {self.constructive.shape, self.destructive.shape, self.retained.shape}
        if len(shapes) != 1 or self.constructive.shape != (n, n):
            raise ModelError(f"tactic matrices must share one square shape, got {shapes}")
        if self.self_destruction.shape != (n,):
            raise ModelError("self_destruction length must match matrix size")

    @property
    def n(self) -> int:
        return self.constructive.shape[0]

    @classmethod
    def isolated(cls, n: int) -> "TacticMatrix":
        z = np.zeros((n, n))
        return cls(z, z, np.eye(n))

    def column_sums(self) -> NDArray[np.float64]:
        return (
            self.constructive.sum(axis=0)
            + self.destructive.sum(axis=0)
            + np.diag(self.retained)
        )

    def combined(self, params: "Parameters") -> NDArray[np.float64]:
        """Signed transition matrix ``beta*T+ - mu*T- + lambda*T0``."""
        n = self.n
        beta = params.beta_vector(n)
        lam = params.lambda_vector(n)
        return (
            beta[:, None] * self.constructive
            - params.mu * self.destructive
            + lam[:, None] * self.retained
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TacticMatrix):
            return NotImplemented
        return all(
            np.array_equal(a, b)
            for a, b in zip(
                (self.constructive, self.destructive, self.retained, self.self_destruction),
                (other.constructive, other.destructive, other.retained, other.self_destruction),
            )
        )


@dataclass(frozen=True, eq=False)
class Parameters:
    """Model multipliers.

    ``beta`` and ``lam`` may be scalars or per-country vectors; a vector
    ``beta`` is indexed by the *receiving* state. ``lam`` stands in for
    lambda, which is a Python keyword.

    Pass ``strict=False`` to skip the ``1 < beta < mu``, ``lam > 0`` checks,
    e.g. to probe the conservative ``beta = lam = 1`` limit.
    """

    beta: Scalar = 1.392
    mu: float = 30.0
    lam: Scalar = 1.025
    strict: InitVar[bool] = True

    def __post_init__(self, strict: bool) -> None:
        for name in ("beta", "lam"):
            value = getattr(self, name)
            if np.ndim(value) == 0:
                object.__setattr__(self, name, float(value))
            else:
                object.__setattr__(self, name, _frozen(value, 1, name))
        object.__setattr__(self, "mu", float(self.mu))
        if strict:
            problems = self.violations()
            if problems:
                raise ModelError("invalid parameters: " + "; ".join(problems))

    def violations(self) -> list[str]:
        out = []
        beta = np.atleast_1d(self.beta)
        lam = np.atleast_1d(self.lam)
        if not np.all(np.isfinite(beta)) or not np.isfinite(self.mu) or not np.all(np.isfinite(lam)):
            out.append("parameters must be finite")
        if np.any(beta <= 1):
            out.append("beta must exceed 1")
        if np.any(self.mu <= beta):
            out.append("mu must exceed beta")
        if np.any(lam <= 0):
            out.append("lambda must be positive")
        return out

    def _vector(self, value: Scalar, n: int, name: str) -> NDArray[np.float64]:
        if np.ndim(value) == 0:
            return np.full(n, float(value))
        if len(value) != n:
            raise ModelError(f"{name} has {len(value)} entries but the registry has {n}")
        return np.asarray(value)

    def beta_vector(self, n: int) -> NDArray[np.float64]:
        return self._vector(self.beta, n, "beta")

    def lambda_vector(self, n: int) -> NDArray[np.float64]:
        return self._vector(self.lam, n, "lambda")

    def to_dict(self) -> dict:
        def plain(v):
            return float(v) if np.ndim(v) == 0 else [float(x) for x in v]

        return {"beta": plain(self.beta), "mu": self.mu, "lambda": plain(self.lam)}

    @classmethod
    def from_dict(cls, data: dict, strict: bool = True) -> "Parameters":
        unknown = set(data).difference({"beta", "mu", "lambda"})
        if unknown:
            raise ModelError(f"unknown parameter fields {sorted(unknown)}")
        missing = {"beta", "mu", "lambda"}.difference(data)
        if missing:
            raise ModelError(f"missing parameter fields {sorted(missing)}")
        return cls(beta=data["beta"], mu=data["mu"], lam=data["lambda"], strict=strict)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Parameters):
            return NotImplemented
        return self.to_dict() == other.to_dict()


DEFAULT_PARAMETERS = Parameters(beta=1.392, mu=30.0, lam=1.025)


@dataclass(frozen=True, eq=False)
class PowerStructure:
    registry: CountryRegistry
    sizes: NDArray[np.float64]
    tactics: TacticMatrix

    def __post_init__(self) -> None:
        object.__setattr__(self, "sizes", _frozen(self.sizes, 1, "sizes"))
        n = len(self.registry)
        if self.sizes.shape != (n,) or self.tactics.n != n:
            raise ModelError(
                f"dimension mismatch: registry {n}, sizes {self.sizes.shape}, tactics {self.tactics.n}"
            )

    def with_sizes(self, sizes: ArrayLike) -> "PowerStructure":
        return PowerStructure(self.registry, sizes, self.tactics)


@dataclass(frozen=True)
class Violation:
    rule: str
    message: str
    column: int | None = None
    row: int | None = None
    magnitude: float = 0.0


def validate(ps: PowerStructure, tol: float = COLUMN_TOL) -> list[Violation]:
    """Return every invariant violation of ``ps``; an empty list means valid."""
    t = ps.tactics
    out: list[Violation] = []
    codes = ps.registry.codes

    for j, total in enumerate(t.column_sums()):
        if abs(total - 1.0) > tol:
            excess = float(total - 1.0)
            out.append(
                Violation(
                    "column-sum",
                    f"column {j} ({codes[j]}) sums to {total!r}, excess {excess:+.6g}",
                    column=j,
                    magnitude=excess,
                )
            )

    for name, mat in (("T+", t.constructive), ("T-", t.destructive)):
        for i in np.flatnonzero(np.diag(mat)):
            out.append(
                Violation(
                    "diagonal",
                    f"nonzero diagonal in {name} at {i} ({codes[i]})",
                    column=int(i),
                    row=int(i),
                    magnitude=float(mat[i, i]),
                )
            )

    off = t.retained - np.diag(np.diag(t.retained))
    for i, j in zip(*np.nonzero(off)):
        out.append(
            Violation(
                "off-diagonal",
                f"nonzero off-diagonal in T0 at ({i}, {j})",
                column=int(j),
                row=int(i),
                magnitude=float(off[i, j]),
            )
        )

    for name, mat in (("T+", t.constructive), ("T-", t.destructive), ("T0", t.retained)):
        bad = (mat < 0) | (mat > 1) | ~np.isfinite(mat)
        for i, j in zip(*np.nonzero(bad)):
            out.append(
                Violation(
                    "range",
                    f"{name}[{i}][{j}] = {mat[i, j]!r} outside [0, 1]",
                    column=int(j),
                    row=int(i),
                    magnitude=float(mat[i, j]),
                )
            )

    sd = t.self_destruction
    for j in np.flatnonzero((sd < 0) | (sd > 1) | ~np.isfinite(sd)):
        out.append(
            Violation(
                "range",
                f"self-destruction fraction of {codes[j]} = {sd[j]!r} outside [0, 1]",
                column=int(j),
                magnitude=float(sd[j]),
            )
        )

    for i in np.flatnonzero((ps.sizes < 0) | ~np.isfinite(ps.sizes)):
        out.append(
            Violation(
                "size",
                f"size of {codes[i]} is {ps.sizes[i]!r}",
                row=int(i),
                magnitude=float(ps.sizes[i]),
            )
        )
    return out


def ramp(x: ArrayLike) -> NDArray[np.float64]:
    return np.maximum(np.asarray(x, dtype=float), 0.0)


def pre_ramp(ps: PowerStructure, params: Parameters) -> NDArray[np.float64]:
    """Next-year sizes before the Ramp floor is applied."""
    s = ps.sizes
    t = ps.tactics
    return t.combined(params) @ s - (1.0 + params.mu) * t.self_destruction * s


def step(ps: PowerStructure, params: Parameters) -> NDArray[np.float64]:
    """Advance sizes by one year under the law of motion."""
    return ramp(pre_ramp(ps, params))


def constructive_delta(x: float, beta: float) -> tuple[float, float]:
    """Size changes ``(sender, receiver)`` when ``x`` is sent constructively."""
    if x < 0:
        raise ModelError("transfer amount must be non-negative")
    return -x, beta * x


def destructive_delta(x: float, mu: float) -> tuple[float, float]:
    """Size changes ``(sender, receiver)`` when ``x`` is spent destructively."""
    if x < 0:
        raise ModelError("transfer amount must be non-negative")
    return -x, -mu * x
