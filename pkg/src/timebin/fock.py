"""Truncated Fock-space algebra over labeled bosonic modes.

States are stored sparsely in the occupation basis: a basis vector is a tuple
of integer occupations, one entry per mode in ``modes``.

``PureState`` keeps a dict from occupation tuples to amplitudes.
``MixedState`` keeps the list of occupied basis vectors together with a
factor ``F`` such that ``rho = F @ F^dagger``; every linear map acts on ``F``
column by column, so propagation stays exact without ever forming ``rho``.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

import numpy as np
from scipy import sparse

MODE_NAMES = ("a", "b", "c", "d", "c'", "d'", "e", "f")
DEFAULT_CUTOFF = 3
_EIG_FLOOR = -1e-10


class ModeLookupError(KeyError):
    """A mode label was requested that the state does not carry."""


class CompositionError(ValueError):
    """Two states (or a transform and a state) disagree about their modes."""


@dataclass(frozen=True, order=True)
class ModeLabel:
    name: str
    bin: int = 0

    def __post_init__(self):
        if self.name not in MODE_NAMES:
            raise ValueError(f"unknown mode name {self.name!r}; expected one of {MODE_NAMES}")
        if int(self.bin) != self.bin:
            raise ValueError("bin index must be an integer")

    def shifted(self, name: str | None = None, dbin: int = 0) -> "ModeLabel":
        return ModeLabel(self.name if name is None else name, self.bin + dbin)

    def __str__(self):
        return f"{self.name}[{self.bin}]"


def mode(name: str, bin: int = 0) -> ModeLabel:
    return ModeLabel(name, bin)


@dataclass(frozen=True)
class TruncationPolicy:
    max_photons_per_mode: int = DEFAULT_CUTOFF

    def __post_init__(self):
        if self.max_photons_per_mode < 1:
            raise ValueError("max_photons_per_mode must be >= 1")

    def require_pairs(self):
        """Two-photon observables need room for |2>."""
        if self.max_photons_per_mode < 2:
            raise ValueError("two-photon observables need max_photons_per_mode >= 2")


def _check_modes(modes: Sequence[ModeLabel]) -> tuple[ModeLabel, ...]:
    modes = tuple(modes)
    if len(set(modes)) != len(modes):
        raise CompositionError(f"duplicate mode labels in {[str(m) for m in modes]}")
    return modes


@dataclass(frozen=True, eq=False)
class PureState:
    """Sparse ket: ``amplitudes[occ]`` is the coefficient of ``|occ>``."""

    modes: tuple[ModeLabel, ...]
    amplitudes: Mapping[tuple[int, ...], complex]
    cutoff: int = DEFAULT_CUTOFF
    dropped: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "modes", _check_modes(self.modes))
        amps = {}
        for occ, amp in self.amplitudes.items():
            occ = tuple(int(n) for n in occ)
            if len(occ) != len(self.modes):
                raise CompositionError("occupation vector length does not match mode count")
            if min(occ, default=0) < 0 or max(occ, default=0) > self.cutoff:
                raise ValueError(f"occupation {occ} violates cutoff {self.cutoff}")
            if amp != 0:
                amps[occ] = complex(amp)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def vacuum(cls, modes: Sequence[ModeLabel], cutoff: int = DEFAULT_CUTOFF) -> "PureState":
        modes = tuple(modes)
        return cls(modes, {(0,) * len(modes): 1.0}, cutoff)

    @classmethod
    def fock(cls, modes: Sequence[ModeLabel], occupation: Sequence[int],
             cutoff: int = DEFAULT_CUTOFF) -> "PureState":
        return cls(tuple(modes), {tuple(occupation): 1.0}, cutoff)

    def norm(self) -> float:
        return math.sqrt(sum(abs(a) ** 2 for a in self.amplitudes.values()))

    def normalized(self) -> "PureState":
        nrm = self.norm()
        if nrm == 0:
            raise ValueError("cannot normalize the zero vector")
        return PureState(self.modes, {k: v / nrm for k, v in self.amplitudes.items()},
                         self.cutoff, self.dropped)

    def amplitude(self, occupation: Sequence[int]) -> complex:
        return self.amplitudes.get(tuple(occupation), 0j)

    def to_mixed(self) -> "MixedState":
        basis = tuple(self.amplitudes)
        factor = np.array([[self.amplitudes[b]] for b in basis], dtype=complex).reshape(len(basis), 1)
        return MixedState(self.modes, basis, factor, self.cutoff, self.dropped)


@dataclass(frozen=True, eq=False)
class MixedState:
    """Density operator ``rho = factor @ factor.conj().T`` over ``basis``.

    ``basis[k]`` is the occupation tuple labelling row ``k`` of ``factor``.
    Basis vectors absent from ``basis`` carry zero weight.
    """

    modes: tuple[ModeLabel, ...]
    basis: tuple[tuple[int, ...], ...]
    factor: np.ndarray
    cutoff: int = DEFAULT_CUTOFF
    dropped: float = 0.0
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "modes", _check_modes(self.modes))
        basis = tuple(tuple(int(n) for n in b) for b in self.basis)
        factor = np.asarray(self.factor, dtype=complex)
        if factor.ndim == 1:
            factor = factor[:, None]
        if factor.shape[0] != len(basis):
            raise CompositionError("factor rows do not match basis size")
        for b in basis:
            if len(b) != len(self.modes):
                raise CompositionError("occupation vector length does not match mode count")
            if b and (min(b) < 0 or max(b) > self.cutoff):
                raise ValueError(f"occupation {b} violates cutoff {self.cutoff}")
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "factor", factor)
        object.__setattr__(self, "_index", {b: k for k, b in enumerate(basis)})
        if len(self._index) != len(basis):
            raise CompositionError("duplicate basis vectors")

    # construction -------------------------------------------------------
    @classmethod
    def from_pure(cls, psi: PureState) -> "MixedState":
        return psi.to_mixed()

    @classmethod
    def from_matrix(cls, modes: Sequence[ModeLabel], basis: Sequence[Sequence[int]],
                    matrix: np.ndarray, cutoff: int = DEFAULT_CUTOFF,
                    dropped: float = 0.0, rtol: float = 1e-14) -> "MixedState":
        """Factor a Hermitian PSD matrix; eigenvalues below ``rtol * trace`` are dropped."""
        matrix = np.asarray(matrix, dtype=complex)
        matrix = 0.5 * (matrix + matrix.conj().T)
        w, v = np.linalg.eigh(matrix)
        if w.size and w.min() < _EIG_FLOOR:
            raise ValueError(f"matrix is not positive semidefinite (min eigenvalue {w.min():.3e})")
        keep = w > rtol * max(float(np.real(np.trace(matrix))), 1e-300)
        factor = v[:, keep] * np.sqrt(w[keep])
        if factor.shape[1] == 0:
            factor = np.zeros((len(basis), 1), dtype=complex)
        return cls(tuple(modes), tuple(map(tuple, basis)), factor, cutoff, dropped)

    @classmethod
    def vacuum(cls, modes: Sequence[ModeLabel], cutoff: int = DEFAULT_CUTOFF) -> "MixedState":
        return PureState.vacuum(modes, cutoff).to_mixed()

    # views --------------------------------------------------------------
    @property
    def matrix(self) -> np.ndarray:
        return self.factor @ self.factor.conj().T

    @property
    def rank_bound(self) -> int:
        return self.factor.shape[1]

    def trace(self) -> float:
        return float(np.sum(np.abs(self.factor) ** 2))

    def probabilities(self) -> np.ndarray:
        """Diagonal of rho, aligned with ``basis``."""
        return np.sum(np.abs(self.factor) ** 2, axis=1)

    def element(self, row: Sequence[int], col: Sequence[int]) -> complex:
        i = self._index.get(tuple(row))
        j = self._index.get(tuple(col))
        if i is None or j is None:
            return 0j
        return complex(self.factor[i] @ self.factor[j].conj())

    def dense(self) -> tuple[list[tuple[int, ...]], np.ndarray]:
        """Full matrix over every occupation vector allowed by the cutoff."""
        full = [tuple(o) for o in np.ndindex(*([self.cutoff + 1] * len(self.modes)))]
        pos = {b: k for k, b in enumerate(full)}
        F = np.zeros((len(full), self.factor.shape[1]), dtype=complex)
        for k, b in enumerate(self.basis):
            F[pos[b]] = self.factor[k]
        return full, F @ F.conj().T

    def normalized(self) -> "MixedState":
        tr = self.trace()
        if tr <= 0:
            raise ValueError("cannot normalize a zero-trace state")
        return MixedState(self.modes, self.basis, self.factor / math.sqrt(tr), self.cutoff, self.dropped)

    def check(self, atol: float = 1e-12) -> None:
        """Verification-path check of trace, Hermiticity and positivity."""
        rho = self.matrix
        if abs(np.trace(rho).real - 1.0) > atol:
            raise AssertionError(f"trace {np.trace(rho).real!r} != 1")
        if np.max(np.abs(rho - rho.conj().T), initial=0.0) > atol:
            raise AssertionError("density matrix is not Hermitian")
        w = np.linalg.eigvalsh(rho)
        if w.size and w.min() < _EIG_FLOOR:
            raise AssertionError(f"negative eigenvalue {w.min():.3e}")

    @property
    def occupations(self) -> np.ndarray:
        """Basis as an integer array of shape (len(basis), len(modes))."""
        occ = self.__dict__.get("_occ")
        if occ is None:
            occ = np.array(self.basis, dtype=np.int64).reshape(len(self.basis), len(self.modes))
            object.__setattr__(self, "_occ", occ)
        return occ

    def mode_index(self, m: ModeLabel) -> int:
        return _index_of(self.modes, m)

    def compressed(self) -> "MixedState":
        """Re-factor through the dense matrix when the factor has more columns than rows."""
        if self.factor.shape[1] <= max(len(self.basis), 1):
            return self
        return MixedState.from_matrix(self.modes, self.basis, self.matrix, self.cutoff, self.dropped)


State = Union[PureState, MixedState]


def _index_of(modes: Sequence[ModeLabel], m: ModeLabel) -> int:
    try:
        return modes.index(m)
    except ValueError:
        raise ModeLookupError(f"mode {m} not in state (has {[str(x) for x in modes]})") from None


def as_mixed(state: State) -> MixedState:
    return state.to_mixed() if isinstance(state, PureState) else state


# generic linear maps on the occupation basis ---------------------------------

def _apply_basis_map(state: State, new_modes: Sequence[ModeLabel], fn, cutoff: int | None = None,
                     unitary: bool = False) -> State:
    """Apply ``|occ> -> sum_k amp_k |new_occ_k>`` defined by ``fn(occ) -> (dict, dropped_any)``.

    For unitary maps the dropped truncation weight is the trace lost.
    """
    cutoff = state.cutoff if cutoff is None else cutoff
    any_drop = False
    if isinstance(state, PureState):
        out: dict = defaultdict(complex)
        for occ, amp in state.amplitudes.items():
            images, dropped = fn(occ)
            any_drop |= dropped
            for new_occ, c in images.items():
                out[new_occ] += amp * c
        res = PureState(tuple(new_modes), {k: v for k, v in out.items() if abs(v) > 1e-300}, cutoff, state.dropped)
        if any_drop and unitary:
            lost = max(state.norm() ** 2 - res.norm() ** 2, 0.0)
            res = PureState(res.modes, res.amplitudes, cutoff, state.dropped + lost)
        return res

    index: dict = {}
    rows, cols, vals = [], [], []
    for k, occ in enumerate(state.basis):
        images, dropped = fn(occ)
        any_drop |= dropped
        for new_occ, c in images.items():
            j = index.setdefault(new_occ, len(index))
            rows.append(j)
            cols.append(k)
            vals.append(c)
    new_basis = tuple(index)
    M = sparse.csr_matrix((np.asarray(vals, dtype=complex), (rows, cols)),
                          shape=(len(new_basis), len(state.basis)))
    factor = M @ state.factor
    if len(new_basis) == 0:
        new_basis = ((0,) * len(new_modes),)
        factor = np.zeros((1, state.factor.shape[1]), dtype=complex)
    res = MixedState(tuple(new_modes), new_basis, factor, cutoff, state.dropped)
    if any_drop and unitary:
        lost = max(state.trace() - res.trace(), 0.0)
        res = MixedState(res.modes, res.basis, res.factor, cutoff, state.dropped + lost)
    return res


def apply_ladder(state: State, m: ModeLabel, direction: str) -> State:
    """Apply a creation (``"raise"``) or annihilation (``"lower"``) operator to ``m``.

    The result is not renormalized. Raising an occupation already at the
    cutoff drops that amplitude; its weight is added to ``state.dropped``.
    """
    if direction not in ("raise", "lower"):
        raise ValueError("direction must be 'raise' or 'lower'")
    i = _index_of(state.modes, m)
    cutoff = state.cutoff
    dropped_weight = 0.0

    def fn(occ):
        n = occ[i]
        if direction == "lower":
            if n == 0:
                return {}, False
            new = occ[:i] + (n - 1,) + occ[i + 1:]
            return {new: math.sqrt(n)}, False
        if n + 1 > cutoff:
            return {}, True
        new = occ[:i] + (n + 1,) + occ[i + 1:]
        return {new: math.sqrt(n + 1)}, False

    if direction == "raise":
        if isinstance(state, PureState):
            dropped_weight = sum(abs(a) ** 2 * (cutoff + 1) for o, a in state.amplitudes.items()
                                 if o[i] == cutoff)
        else:
            p = state.probabilities()
            dropped_weight = float(sum(p[k] * (cutoff + 1) for k, o in enumerate(state.basis)
                                       if o[i] == cutoff))
    res = _apply_basis_map(state, state.modes, fn)
    if dropped_weight:
        if isinstance(res, PureState):
            res = PureState(res.modes, res.amplitudes, res.cutoff, res.dropped + dropped_weight)
        else:
            res = MixedState(res.modes, res.basis, res.factor, res.cutoff, res.dropped + dropped_weight)
    return res


def tensor(a: State, b: State) -> State:
    """Tensor product; modes of ``b`` are appended after those of ``a``."""
    overlap = set(a.modes) & set(b.modes)
    if overlap:
        raise CompositionError(f"overlapping modes {[str(m) for m in sorted(overlap)]}")
    cutoff = max(a.cutoff, b.cutoff)
    modes = a.modes + b.modes
    dropped = a.dropped + b.dropped
    if isinstance(a, PureState) and isinstance(b, PureState):
        amps = {oa + ob: xa * xb for oa, xa in a.amplitudes.items() for ob, xb in b.amplitudes.items()}
        return PureState(modes, amps, cutoff, dropped)
    a, b = as_mixed(a), as_mixed(b)
    basis = tuple(oa + ob for oa in a.basis for ob in b.basis)
    factor = np.einsum("ir,js->ijrs", a.factor, b.factor).reshape(len(basis), -1)
    return MixedState(modes, basis, factor, cutoff, dropped)


def reorder(state: State, modes: Sequence[ModeLabel]) -> State:
    """Permute the mode order."""
    modes = tuple(modes)
    if set(modes) != set(state.modes) or len(modes) != len(state.modes):
        raise CompositionError("reorder needs a permutation of the existing modes")
    perm = [state.modes.index(m) for m in modes]
    return _apply_basis_map(state, modes, lambda occ: ({tuple(occ[p] for p in perm): 1.0}, False))


def relabel(state: State, mapping: Mapping[ModeLabel, ModeLabel]) -> State:
    """Rename modes without touching amplitudes."""
    for old in mapping:
        _index_of(state.modes, old)
    new_modes = tuple(mapping.get(m, m) for m in state.modes)
    _check_modes(new_modes)
    if isinstance(state, PureState):
        return PureState(new_modes, state.amplitudes, state.cutoff, state.dropped)
    return MixedState(new_modes, state.basis, state.factor, state.cutoff, state.dropped)


def _expand_monomial(n_in: Sequence[int], U: np.ndarray, cutoff: int) -> tuple[dict, bool]:
    """Expand prod_j (sum_o U[j,o] o^dag)^{n_j} / sqrt(n_j!) |0> over output occupations."""
    n_out = U.shape[1]
    poly = {(0,) * n_out: 1.0 + 0j}
    for j, n in enumerate(n_in):
        for _ in range(n):
            nxt: dict = defaultdict(complex)
            for occ, c in poly.items():
                for o in range(n_out):
                    u = U[j, o]
                    if u == 0:
                        continue
                    new = occ[:o] + (occ[o] + 1,) + occ[o + 1:]
                    nxt[new] += c * u
            poly = nxt
    norm_in = math.prod(math.factorial(n) for n in n_in)
    out, dropped = {}, False
    for occ, c in poly.items():
        if abs(c) < 1e-15:
            continue
        if max(occ) > cutoff:
            dropped = True
            continue
        out[occ] = c * math.sqrt(math.prod(math.factorial(k) for k in occ) / norm_in)
    return out, dropped


def linear_transform(state: State, in_modes: Sequence[ModeLabel], out_modes: Sequence[ModeLabel],
                     U: np.ndarray) -> State:
    """Passive linear-optics map on creation operators.

    ``in_modes[j]^dag -> sum_o U[j, o] out_modes[o]^dag``. Input modes are
    removed, output modes are appended and must be fresh. Occupations above
    the cutoff are dropped and accounted in ``dropped``.
    """
    in_modes, out_modes = tuple(in_modes), tuple(out_modes)
    U = np.asarray(U, dtype=complex)
    if U.shape != (len(in_modes), len(out_modes)):
        raise CompositionError("transform matrix shape does not match mode lists")
    idx = [_index_of(state.modes, m) for m in in_modes]
    rest = [k for k in range(len(state.modes)) if k not in idx]
    kept = tuple(state.modes[k] for k in rest)
    clash = set(out_modes) & set(kept)
    if clash or len(set(out_modes)) != len(out_modes):
        raise CompositionError(f"output modes collide: {[str(m) for m in clash] or 'duplicates'}")
    cache: dict = {}
    cutoff = state.cutoff

    def fn(occ):
        key = tuple(occ[k] for k in idx)
        if key not in cache:
            cache[key] = _expand_monomial(key, U, cutoff)
        images, dropped = cache[key]
        base = tuple(occ[k] for k in rest)
        return {base + o: c for o, c in images.items()}, dropped

    return _apply_basis_map(state, kept + out_modes, fn, unitary=True)


def _encode(occ: np.ndarray, base: int) -> np.ndarray:
    """Integer code of each occupation row (exact while base**ncols < 2**63)."""
    if occ.shape[1] * math.log2(base) >= 63:
        return np.unique(occ, axis=0, return_inverse=True)[1].ravel()
    weights = base ** np.arange(occ.shape[1], dtype=np.int64)
    return occ @ weights


def partial_trace(state: State, keep: Iterable[ModeLabel]) -> MixedState:
    """Reduced state on ``keep`` (kept in the state's mode order)."""
    keep_set = set(keep)
    if not keep_set:
        raise ValueError("partial_trace needs a non-empty set of modes to keep")
    for m in keep_set:
        _index_of(state.modes, m)
    st = as_mixed(state)
    kidx = [k for k, m in enumerate(st.modes) if m in keep_set]
    tidx = [k for k, m in enumerate(st.modes) if m not in keep_set]
    kmodes = tuple(st.modes[k] for k in kidx)
    if not tidx:
        return st
    occ = st.occupations
    base = st.cutoff + 1
    kcodes, first, ka = np.unique(_encode(occ[:, kidx], base), return_index=True, return_inverse=True)
    kept = occ[first][:, kidx]
    _, tg = np.unique(_encode(occ[:, tidx], base), return_inverse=True)
    ka, tg = ka.ravel(), tg.ravel()
    nk, nt = len(kcodes), int(tg.max()) + 1
    r = st.factor.shape[1]
    # X[a, t*r + s] = F[(a, t), s] so that rho_keep = X X^dagger
    rows = np.repeat(ka, r)
    cols = (tg[:, None] * r + np.arange(r)[None, :]).ravel()
    X = sparse.csr_matrix((st.factor.ravel(), (rows, cols)), shape=(nk, nt * r))
    basis = tuple(map(tuple, kept.tolist()))
    if nk <= 1024:
        rho = (X @ X.conj().T).toarray()
        return MixedState.from_matrix(kmodes, basis, rho, st.cutoff, st.dropped)
    return MixedState(kmodes, basis, X.toarray(), st.cutoff, st.dropped).compressed()


# observables -----------------------------------------------------------------

def _falling(n: np.ndarray, k: int) -> np.ndarray:
    out = np.ones_like(n, dtype=float)
    for j in range(k):
        out = out * (n - j)
    return out


def _diag(state: State) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(state, PureState):
        occ = np.array(list(state.amplitudes), dtype=int).reshape(len(state.amplitudes), len(state.modes))
        p = np.array([abs(a) ** 2 for a in state.amplitudes.values()])
        return occ, p
    return state.occupations, state.probabilities()


def normally_ordered_moment(state: State, modes: Sequence[ModeLabel]) -> float:
    """``<x1^dag ... xk^dag xk ... x1>`` for the listed (possibly repeated) modes.

    These operators are diagonal in the occupation basis, so the value is a
    sum of falling factorials weighted by the diagonal of the state.
    """
    counts: dict = defaultdict(int)
    for m in modes:
        counts[_index_of(state.modes, m)] += 1
    occ, p = _diag(state)
    w = p.astype(float).copy()
    for i, k in counts.items():
        w = w * _falling(occ[:, i], k)
    return float(np.sum(w))


def expectation_number(state: State, m: ModeLabel) -> float:
    """``<n>`` on mode ``m`` (the state is assumed normalized)."""
    return normally_ordered_moment(state, [m])


def normally_ordered_pair(state: State, x: ModeLabel, y: ModeLabel) -> float:
    """``<x^dag y^dag y x>``; equals ``<n(n-1)>`` when ``x == y``."""
    return normally_ordered_moment(state, [x, y])


def occupation_distribution(state: State, modes: Sequence[ModeLabel]) -> dict[tuple[int, ...], float]:
    """Joint photon-number distribution of ``modes`` (diagonal of the reduced state)."""
    idx = [_index_of(state.modes, m) for m in modes]
    occ, p = _diag(state)
    out: dict = defaultdict(float)
    for row, w in zip(occ, p):
        out[tuple(int(row[i]) for i in idx)] += float(w)
    return dict(out)
