"""Atom distributions and Wigner / iid matrix ensembles.

Every ensemble in the catalog is described by an :class:`EnsembleSpec`
holding the law of the off-diagonal entries (a :class:`ComplexAtom` with
independent real and imaginary parts) and the law of the diagonal.  The
entry laws carry their exact moments up to order four so that moment
matching between ensembles can be checked in closed form.

==========================  ==============  =====================================  ======
catalog name                family          off-diagonal                           sigma2
==========================  ==============  =====================================  ======
gue                         wigner          N(0,1/2) + i N(0,1/2)                  1
goe                         wigner          N(0,1)                                 2
bernoulli-complex           wigner          (+-1 +- i)/sqrt(2)                     1
bernoulli-symmetric         wigner          +-1                                    1
iid-gaussian-real           iid-square      N(0,1)                                 1
iid-gaussian-complex        iid-square      N(0,1/2) + i N(0,1/2)                  1
gue-matched-threepoint      wigner          three-point parts matching GUE         1
goe-matched-threepoint      wigner          three-point law matching GOE           2
==========================  ==============  =====================================  ======
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "AtomDistribution",
    "ComplexAtom",
    "EnsembleSpec",
    "MatchReport",
    "CatalogError",
    "CATALOG",
    "three_point_matched",
    "make_ensemble",
    "sample_matrix",
    "atom_moments",
    "verify_matching",
    "is_hermitian",
    "as_generator",
    "replicate_rng",
]

MOMENT_TOL = 1e-12


class CatalogError(KeyError):
    """Raised for an ensemble name that is not in the catalog."""


def as_generator(rng=None) -> np.random.Generator:
    """Coerce a seed, ``SeedSequence`` or ``Generator`` into a ``Generator``."""
    return np.random.default_rng(rng)


def replicate_rng(root_seed: int, replicate: int) -> np.random.Generator:
    """Generator for replicate ``replicate`` of an experiment seeded by ``root_seed``.

    The stream is ``PCG64(SeedSequence(root_seed, spawn_key=(replicate,)))``,
    i.e. numpy's SeedSequence hash of the pair.  It depends only on the two
    integers, so replicates can be evaluated in any order or on any worker.
    """
    ss = np.random.SeedSequence(int(root_seed), spawn_key=(int(replicate),))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class AtomDistribution:
    """A centred real scalar law with exact moments ``m1..m4``.

    Use the constructors :meth:`gaussian`, :meth:`discrete` and :meth:`zero`
    rather than the raw initializer.
    """

    kind: str
    variance: float = 0.0
    points: tuple[float, ...] = ()
    probs: tuple[float, ...] = ()
    moments: tuple[float, float, float, float] = field(init=False)

    def __post_init__(self):
        if self.kind == "gaussian-real":
            if self.variance < 0:
                raise ValueError("variance must be nonnegative")
            v = float(self.variance)
            m = (0.0, v, 0.0, 3.0 * v * v)
        elif self.kind == "discrete-real":
            if len(self.points) != len(self.probs) or not self.points:
                raise ValueError("points and probs must be nonempty and of equal length")
            if any(p < 0 for p in self.probs):
                raise ValueError("probabilities must be nonnegative")
            if abs(math.fsum(self.probs) - 1.0) > MOMENT_TOL:
                raise ValueError("probabilities must sum to 1")
            m = tuple(
                math.fsum(p * x**k for x, p in zip(self.points, self.probs)) for k in range(1, 5)
            )
            object.__setattr__(self, "variance", m[1] - m[0] ** 2)
        else:
            raise ValueError(f"unknown atom kind {self.kind!r}")
        if abs(m[0]) > MOMENT_TOL:
            raise ValueError("atom distributions must have mean zero")
        object.__setattr__(self, "moments", m)

    @classmethod
    def gaussian(cls, variance: float) -> "AtomDistribution":
        return cls("gaussian-real", variance=float(variance))

    @classmethod
    def discrete(cls, points, probs) -> "AtomDistribution":
        return cls(
            "discrete-real",
            points=tuple(float(x) for x in points),
            probs=tuple(float(p) for p in probs),
        )

    @classmethod
    def zero(cls) -> "AtomDistribution":
        return cls.discrete([0.0], [1.0])

    @property
    def is_degenerate(self) -> bool:
        return self.moments[1] == 0.0

    def moment(self, k: int) -> float:
        """Exact ``E X**k`` for ``0 <= k <= 4``."""
        if k == 0:
            return 1.0
        if not 1 <= k <= 4:
            raise ValueError("moments are tabulated up to order 4")
        return self.moments[k - 1]

    def sample(self, rng, size=None) -> np.ndarray:
        rng = as_generator(rng)
        if self.kind == "gaussian-real":
            return rng.normal(0.0, math.sqrt(self.variance), size=size)
        if len(self.points) == 1:
            return np.full(size if size is not None else (), self.points[0])
        return rng.choice(np.asarray(self.points), size=size, p=np.asarray(self.probs))


@dataclass(frozen=True)
class ComplexAtom:
    """Law of an off-diagonal entry: independent real and imaginary parts."""

    re: AtomDistribution
    im: AtomDistribution

    @property
    def variance(self) -> float:
        return self.re.variance + self.im.variance

    @property
    def is_real(self) -> bool:
        return self.im.is_degenerate and self.im.points == (0.0,)

    def sample(self, rng, size=None) -> np.ndarray:
        rng = as_generator(rng)
        x = self.re.sample(rng, size)
        if self.is_real:
            return np.asarray(x, dtype=float)
        return x + 1j * self.im.sample(rng, size)


@dataclass(frozen=True)
class EnsembleSpec:
    """A Wigner Hermitian or iid square ensemble.

    For ``family == "iid-square"`` every entry is drawn from ``offdiag``; the
    ``diag`` field then only records the variance of a single entry.
    """

    family: str
    offdiag: ComplexAtom
    diag: AtomDistribution
    sigma2: float
    label: str

    def __post_init__(self):
        if self.family not in ("wigner-hermitian", "iid-square"):
            raise ValueError(f"unknown family {self.family!r}")
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be positive")
        if abs(self.offdiag.variance - 1.0) > MOMENT_TOL:
            raise ValueError("off-diagonal entries must have unit variance")
        if abs(self.diag.variance - self.sigma2) > MOMENT_TOL:
            raise ValueError("diagonal variance must equal sigma2")

    @property
    def is_real(self) -> bool:
        return self.offdiag.is_real


def three_point_matched(variance: float, fourth: float) -> AtomDistribution:
    """Symmetric law on ``{-s, 0, s}`` with given second and fourth moments.

    With weights ``(p, 1-2p, p)`` one needs ``2 p s**2 = variance`` and
    ``2 p s**4 = fourth``, hence ``s**2 = fourth / variance`` and
    ``p = variance**2 / (2 fourth)``.  Requires ``fourth >= variance**2``.
    """
    if variance <= 0 or fourth < variance**2:
        raise ValueError("need variance > 0 and fourth >= variance**2")
    s = math.sqrt(fourth / variance)
    p = variance**2 / (2.0 * fourth)
    return AtomDistribution.discrete([-s, 0.0, s], [p, 1.0 - 2.0 * p, p])


def _sign_atom(variance: float) -> AtomDistribution:
    s = math.sqrt(variance)
    return AtomDistribution.discrete([-s, s], [0.5, 0.5])


def _build(kind: str) -> EnsembleSpec:
    g = AtomDistribution.gaussian
    zero = AtomDistribution.zero()
    if kind == "gue":
        return EnsembleSpec("wigner-hermitian", ComplexAtom(g(0.5), g(0.5)), g(1.0), 1.0, kind)
    if kind == "goe":
        return EnsembleSpec("wigner-hermitian", ComplexAtom(g(1.0), zero), g(2.0), 2.0, kind)
    if kind == "bernoulli-complex":
        part = _sign_atom(0.5)
        return EnsembleSpec("wigner-hermitian", ComplexAtom(part, part), _sign_atom(1.0), 1.0, kind)
    if kind == "bernoulli-symmetric":
        return EnsembleSpec(
            "wigner-hermitian", ComplexAtom(_sign_atom(1.0), zero), _sign_atom(1.0), 1.0, kind
        )
    if kind == "iid-gaussian-real":
        return EnsembleSpec("iid-square", ComplexAtom(g(1.0), zero), g(1.0), 1.0, kind)
    if kind == "iid-gaussian-complex":
        return EnsembleSpec("iid-square", ComplexAtom(g(0.5), g(0.5)), g(1.0), 1.0, kind)
    if kind == "gue-matched-threepoint":
        part = three_point_matched(0.5, 0.75)
        return EnsembleSpec("wigner-hermitian", ComplexAtom(part, part), _sign_atom(1.0), 1.0, kind)
    if kind == "goe-matched-threepoint":
        return EnsembleSpec(
            "wigner-hermitian",
            ComplexAtom(three_point_matched(1.0, 3.0), zero),
            _sign_atom(2.0),
            2.0,
            kind,
        )
    raise CatalogError(kind)


CATALOG = (
    "gue",
    "goe",
    "bernoulli-complex",
    "bernoulli-symmetric",
    "iid-gaussian-real",
    "iid-gaussian-complex",
    "gue-matched-threepoint",
    "goe-matched-threepoint",
)


def make_ensemble(kind: str) -> EnsembleSpec:
    """Look up an ensemble by its catalog name.

    Raises
    ------
    CatalogError
        If ``kind`` is not one of :data:`CATALOG`.
    """
    if kind not in CATALOG:
        raise CatalogError(f"unknown ensemble {kind!r}; choose from {', '.join(CATALOG)}")
    return _build(kind)


def sample_matrix(spec: EnsembleSpec, n: int, rng=None) -> np.ndarray:
    """Draw one ``n x n`` matrix from ``spec``.

    Draw order is fixed: for Wigner ensembles the ``n`` diagonal entries,
    then the real parts of the strict upper triangle in row-major order, then
    the imaginary parts.  For iid ensembles the real parts of all ``n**2``
    entries in row-major order, then the imaginary parts.  The result is
    real when the off-diagonal law is real.
    """
    if n < 1:
        raise ValueError("n must be positive")
    rng = as_generator(rng)
    dtype = float if spec.is_real else complex
    if spec.family == "iid-square":
        re = spec.offdiag.re.sample(rng, (n, n))
        if spec.is_real:
            return np.asarray(re, dtype=float)
        return re + 1j * spec.offdiag.im.sample(rng, (n, n))

    out = np.zeros((n, n), dtype=dtype)
    out[np.diag_indices(n)] = spec.diag.sample(rng, n)
    iu = np.triu_indices(n, 1)
    upper = spec.offdiag.re.sample(rng, iu[0].size)
    if not spec.is_real:
        upper = upper + 1j * spec.offdiag.im.sample(rng, iu[0].size)
    out[iu] = upper
    out[(iu[1], iu[0])] = np.conj(upper)
    return out


def is_hermitian(H: np.ndarray, atol: float = 1e-14) -> bool:
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        return False
    return bool(np.allclose(H, H.conj().T, rtol=0.0, atol=atol))


def _as_complex_atom(atom) -> ComplexAtom:
    if isinstance(atom, AtomDistribution):
        return ComplexAtom(atom, AtomDistribution.zero())
    return atom


def atom_moments(atom, order: int) -> dict[tuple[int, int], float]:
    """Mixed moments ``E (Re z)**a (Im z)**b`` for ``a + b <= order``.

    The parts are independent, so each entry is a product of one-dimensional
    moments.  A real :class:`AtomDistribution` is treated as having a zero
    imaginary part.
    """
    if order not in (1, 2, 3, 4):
        raise ValueError("order must be 1, 2, 3 or 4")
    atom = _as_complex_atom(atom)
    return {
        (a, b): atom.re.moment(a) * atom.im.moment(b)
        for a in range(order + 1)
        for b in range(order + 1 - a)
    }


@dataclass(frozen=True)
class MatchReport:
    order: int
    discrepancies: dict
    max_discrepancy: float
    matched: bool


def verify_matching(a, b, order: int) -> MatchReport:
    """Compare the moment tables of two atoms up to ``order``."""
    ta, tb = atom_moments(a, order), atom_moments(b, order)
    diff = {key: abs(ta[key] - tb[key]) for key in ta}
    worst = max(diff.values())
    return MatchReport(order, diff, worst, worst <= MOMENT_TOL)
