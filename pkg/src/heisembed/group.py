"""Exact arithmetic in the discrete Heisenberg group and in Z^d.

The Heisenberg group is identified with Z^3 through the upper-triangular
matrix entries (a, b, c), with product

    (a, b, c) * (a', b', c') = (a + a', b + b', c + c' + a * b').

Coordinates are kept inside the signed 64-bit range; leaving it raises
:class:`ArithmeticOverflow` instead of wrapping.

Words are stored as numpy arrays of signed letter codes ``sign * (index + 1)``
so that roads with millions of letters stay compact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np

from heisembed.errors import ArithmeticOverflow, ValidationError

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1
# vectorized traces keep a safety margin so intermediate sums cannot wrap
_TRACE_LIMIT = 2**62

_COMPONENTS = "abc"


class GroupElement(NamedTuple):
    a: int
    b: int
    c: int

    def __repr__(self) -> str:
        return f"({self.a},{self.b},{self.c})"


IDENTITY = GroupElement(0, 0, 0)


def _checked(a: int, b: int, c: int) -> GroupElement:
    for name, v in zip(_COMPONENTS, (a, b, c)):
        if v < INT64_MIN or v > INT64_MAX:
            raise ArithmeticOverflow(name, v)
    return GroupElement(a, b, c)


def mul(p: Sequence[int], q: Sequence[int]) -> GroupElement:
    """Heisenberg product ``p * q``."""
    pa, pb, pc = p
    qa, qb, qc = q
    return _checked(pa + qa, pb + qb, pc + qc + pa * qb)


def inv(p: Sequence[int]) -> GroupElement:
    a, b, c = p
    return _checked(-a, -b, -c + a * b)


def lam(k: int, p: Sequence[int]) -> GroupElement:
    """Expansion homomorphism (a, b, c) -> (k a, k b, k^2 c)."""
    if k < 1:
        raise ValueError(f"expansion factor must be >= 1, got {k}")
    a, b, c = p
    return _checked(k * a, k * b, k * k * c)


class GeneratorLabel(NamedTuple):
    """Letter of a word: generator index and exponent sign (+1 / -1)."""

    index: int
    sign: int

    @property
    def code(self) -> int:
        return self.sign * (self.index + 1)

    @classmethod
    def from_code(cls, code: int) -> "GeneratorLabel":
        code = int(code)
        if code == 0:
            raise ValueError("letter code 0 is not a letter")
        return cls(abs(code) - 1, 1 if code > 0 else -1)

    def inverse(self) -> "GeneratorLabel":
        return GeneratorLabel(self.index, -self.sign)


_CODE_DTYPE = np.int16


class Word:
    """Immutable finite word over a generating set and its inverses."""

    __slots__ = ("codes",)

    def __init__(self, codes: Iterable[int] | np.ndarray = ()):
        arr = np.array(codes, dtype=_CODE_DTYPE).reshape(-1)
        if arr.size and not arr.all():
            raise ValueError("letter code 0 is not a letter")
        arr.flags.writeable = False
        self.codes = arr

    @classmethod
    def from_labels(cls, labels: Iterable[Sequence[int]]) -> "Word":
        codes = []
        for index, sign in labels:
            if sign not in (1, -1):
                raise ValidationError(f"letter sign must be +1 or -1, got {sign}")
            if index < 0:
                raise ValidationError(f"negative generator index {index}")
            codes.append(sign * (index + 1))
        return cls(codes)

    @classmethod
    def letter(cls, index: int, sign: int = 1, count: int = 1) -> "Word":
        if count < 0:
            raise ValueError("count must be non-negative")
        return cls(np.full(count, sign * (index + 1), dtype=_CODE_DTYPE))

    def __len__(self) -> int:
        return int(self.codes.size)

    def __iter__(self) -> Iterator[GeneratorLabel]:
        for code in self.codes.tolist():
            yield GeneratorLabel.from_code(code)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return Word(self.codes[i])
        return GeneratorLabel.from_code(self.codes[i])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Word):
            return NotImplemented
        return np.array_equal(self.codes, other.codes)

    def __hash__(self) -> int:
        return hash(self.codes.tobytes())

    def __add__(self, other: "Word") -> "Word":
        return Word(np.concatenate([self.codes, other.codes]))

    def __repr__(self) -> str:
        if len(self) > 12:
            head = " ".join(_fmt_code(c) for c in self.codes[:12].tolist())
            return f"Word({head} ... [{len(self)} letters])"
        return f"Word({' '.join(_fmt_code(c) for c in self.codes.tolist())})"

    def inverse(self) -> "Word":
        return Word(-self.codes[::-1])

    def power(self, n: int) -> "Word":
        if n < 0:
            return self.inverse().power(-n)
        return Word(np.tile(self.codes, n))

    def stretch(self, m: int) -> "Word":
        """Repeat every letter ``m`` times in place."""
        return Word(np.repeat(self.codes, m))

    def substitute(self, table: Mapping[int, "Word"]) -> "Word":
        """Replace each letter code by ``table[code]`` (vectorized)."""
        present = np.unique(self.codes)
        missing = [int(c) for c in present if int(c) not in table]
        if missing:
            raise ValidationError(f"no substitution for letter codes {missing}")
        if not len(self):
            return Word()
        keys = sorted(int(c) for c in present)
        lens = np.array([len(table[c]) for c in keys], dtype=np.int64)
        flat = np.concatenate([table[c].codes for c in keys] + [np.zeros(0, _CODE_DTYPE)])
        starts = np.concatenate(([0], np.cumsum(lens)[:-1]))
        slot = np.searchsorted(np.array(keys), self.codes)
        seg_len = lens[slot]
        total = int(seg_len.sum())
        seg_start = np.repeat(starts[slot], seg_len)
        out_offset = np.repeat(np.cumsum(seg_len) - seg_len, seg_len)
        idx = seg_start + (np.arange(total) - out_offset)
        return Word(flat[idx])

    def labels(self) -> list[list[int]]:
        return [[abs(c) - 1, 1 if c > 0 else -1] for c in self.codes.tolist()]


def _fmt_code(code: int) -> str:
    return f"g{abs(code) - 1}" + ("" if code > 0 else "^-1")


class Heisenberg:
    """The discrete Heisenberg group on integer triples."""

    name = "H"
    rank = 3
    growth_order = 4
    identity = IDENTITY
    standard_names = {"x": (1, 0, 0), "y": (0, 1, 0), "z": (0, 0, 1)}

    mul = staticmethod(mul)
    inv = staticmethod(inv)

    def element(self, coords: Sequence[int]) -> GroupElement:
        if len(coords) != 3:
            raise ValidationError(f"Heisenberg element needs 3 coordinates, got {list(coords)}")
        return _checked(*(int(v) for v in coords))

    def trace(self, start: Sequence[int], steps: np.ndarray) -> np.ndarray:
        """Vertices of the walk start, start*s1, start*s1*s2, ... as an (L+1, 3) array."""
        a0, b0, c0 = (int(v) for v in start)
        steps = np.asarray(steps, dtype=np.int64).reshape(-1, 3)
        da, db, dc = steps[:, 0], steps[:, 1], steps[:, 2]
        bound_a = abs(a0) + int(np.abs(da).sum())
        bound_b = abs(b0) + int(np.abs(db).sum())
        bound_c = abs(c0) + int(np.abs(dc).sum()) + bound_a * int(np.abs(db).sum())
        for name, bound in zip(_COMPONENTS, (bound_a, bound_b, bound_c)):
            if bound > _TRACE_LIMIT:
                raise ArithmeticOverflow(name, bound)
        out = np.empty((steps.shape[0] + 1, 3), dtype=np.int64)
        out[0] = (a0, b0, c0)
        out[1:, 0] = a0 + np.cumsum(da)
        out[1:, 1] = b0 + np.cumsum(db)
        out[1:, 2] = c0 + np.cumsum(dc + out[:-1, 0] * db)
        return out

    def mul_many(self, p: np.ndarray, q: np.ndarray) -> np.ndarray:
        """Row-wise products of broadcastable (..., 3) int64 arrays."""
        p = np.asarray(p, dtype=np.int64)
        q = np.asarray(q, dtype=np.int64)
        est = [p[..., i].astype(np.float64) + q[..., i] for i in range(2)]
        est.append(p[..., 2].astype(np.float64) + q[..., 2] + p[..., 0].astype(np.float64) * q[..., 1])
        for name, e in zip(_COMPONENTS, est):
            if e.size and np.abs(e).max() > _TRACE_LIMIT:
                raise ArithmeticOverflow(name, float(np.abs(e).max()))
        return np.stack([p[..., 0] + q[..., 0], p[..., 1] + q[..., 1],
                         p[..., 2] + q[..., 2] + p[..., 0] * q[..., 1]], axis=-1)

    def inv_many(self, p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=np.int64)
        e = -p[..., 2].astype(np.float64) + p[..., 0].astype(np.float64) * p[..., 1]
        if e.size and np.abs(e).max() > _TRACE_LIMIT:
            raise ArithmeticOverflow("c", float(np.abs(e).max()))
        return np.stack([-p[..., 0], -p[..., 1], -p[..., 2] + p[..., 0] * p[..., 1]], axis=-1)

    def left_quotient(self, p: np.ndarray, q: np.ndarray) -> np.ndarray:
        """Row-wise p^-1 q for broadcastable (..., 3) arrays."""
        pa, pb, pc = p[..., 0], p[..., 1], p[..., 2]
        qa, qb, qc = q[..., 0], q[..., 1], q[..., 2]
        return np.stack([qa - pa, qb - pb, qc - pc - pa * (qb - pb)], axis=-1)

    def proxy_norm(self, g: np.ndarray) -> np.ndarray:
        """|a| + |b| + ceil(sqrt|c|), bi-Lipschitz to any word norm."""
        c = np.abs(g[..., 2])
        # exact integer sqrt: float estimate, then correct by one either way
        root = np.floor(np.sqrt(c.astype(np.float64))).astype(np.int64)
        root -= root * root > c
        root += (root + 1) * (root + 1) <= c
        root += root * root < c
        return np.abs(g[..., 0]) + np.abs(g[..., 1]) + root

    def __repr__(self) -> str:
        return "Heisenberg()"

    def __eq__(self, other) -> bool:
        return isinstance(other, Heisenberg)

    def __hash__(self) -> int:
        return hash("Heisenberg")


HEISENBERG = Heisenberg()


class Lattice:
    """The free abelian group Z^d, used for the lattice conversion and cross-checks."""

    def __init__(self, d: int):
        if d < 1:
            raise ValueError("lattice dimension must be >= 1")
        self.rank = d
        self.growth_order = d
        self.name = f"Z{d}"
        self.identity = (0,) * d
        self.standard_names = {f"e{i + 1}": tuple(int(i == j) for j in range(d)) for i in range(d)}

    def element(self, coords: Sequence[int]) -> tuple[int, ...]:
        if len(coords) != self.rank:
            raise ValidationError(f"Z{self.rank} element needs {self.rank} coordinates, got {list(coords)}")
        return self._checked(int(v) for v in coords)

    def _checked(self, values: Iterable[int]) -> tuple[int, ...]:
        out = tuple(values)
        for i, v in enumerate(out):
            if v < INT64_MIN or v > INT64_MAX:
                raise ArithmeticOverflow(f"x{i + 1}", v)
        return out

    def mul(self, p: Sequence[int], q: Sequence[int]) -> tuple[int, ...]:
        return self._checked(u + v for u, v in zip(p, q))

    def inv(self, p: Sequence[int]) -> tuple[int, ...]:
        return self._checked(-u for u in p)

    def trace(self, start: Sequence[int], steps: np.ndarray) -> np.ndarray:
        steps = np.asarray(steps, dtype=np.int64).reshape(-1, self.rank)
        for i in range(self.rank):
            bound = abs(int(start[i])) + int(np.abs(steps[:, i]).sum())
            if bound > _TRACE_LIMIT:
                raise ArithmeticOverflow(f"x{i + 1}", bound)
        out = np.empty((steps.shape[0] + 1, self.rank), dtype=np.int64)
        out[0] = start
        out[1:] = np.asarray(start, dtype=np.int64) + np.cumsum(steps, axis=0)
        return out

    def mul_many(self, p: np.ndarray, q: np.ndarray) -> np.ndarray:
        return np.asarray(p, dtype=np.int64) + np.asarray(q, dtype=np.int64)

    def inv_many(self, p: np.ndarray) -> np.ndarray:
        return -np.asarray(p, dtype=np.int64)

    def left_quotient(self, p: np.ndarray, q: np.ndarray) -> np.ndarray:
        return q - p

    def proxy_norm(self, g: np.ndarray) -> np.ndarray:
        return np.abs(g).sum(axis=-1)

    def __repr__(self) -> str:
        return f"Lattice({self.rank})"

    def __eq__(self, other) -> bool:
        return isinstance(other, Lattice) and other.rank == self.rank

    def __hash__(self) -> int:
        return hash(("Lattice", self.rank))


def group_from_name(name: str):
    if name == "H":
        return HEISENBERG
    if name.startswith("Z") and name[1:].isdigit():
        return Lattice(int(name[1:]))
    raise ValidationError(f"unknown group {name!r}")


@dataclass(frozen=True, eq=False)
class GeneratingSet:
    """Ordered generators; inverses are implicit through the letter sign."""

    elements: tuple
    names: tuple = ()
    group: object = field(default=HEISENBERG)

    def __post_init__(self):
        group = self.group
        elements = tuple(group.element(e) for e in self.elements)
        object.__setattr__(self, "elements", elements)
        if not elements:
            raise ValidationError("generating set is empty")
        seen = set()
        for e in elements:
            if e == group.identity:
                raise ValidationError("generating set contains the identity")
            if e in seen:
                raise ValidationError(f"duplicate generator {list(e)}")
            if group.inv(e) in seen:
                raise ValidationError(f"generator {list(e)} is the inverse of another generator")
            seen.add(e)
        if len(elements) > np.iinfo(_CODE_DTYPE).max:
            raise ValidationError("too many generators")
        names = tuple(self.names)
        if not names:
            reverse = {v: k for k, v in group.standard_names.items()}
            names = tuple(reverse.get(tuple(e), ":".join(map(str, e))) for e in elements)
        elif len(names) != len(elements):
            raise ValidationError("names must align with elements")
        object.__setattr__(self, "names", names)

    def __len__(self) -> int:
        return len(self.elements)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GeneratingSet):
            return NotImplemented
        return self.group == other.group and self.elements == other.elements

    def __hash__(self) -> int:
        return hash((self.group, self.elements))

    def __str__(self) -> str:
        return ",".join(self.names)

    def step(self, label: GeneratorLabel | int):
        """The group element s or s^-1 that a letter multiplies by."""
        if not isinstance(label, GeneratorLabel):
            label = GeneratorLabel.from_code(label)
        if not 0 <= label.index < len(self.elements):
            raise ValidationError(f"letter index {label.index} out of range for {len(self)} generators")
        s = self.elements[label.index]
        return s if label.sign > 0 else self.group.inv(s)

    def step_table(self) -> np.ndarray:
        """Row ``code + len(self)`` holds the step element of letter ``code``."""
        n = len(self.elements)
        table = np.zeros((2 * n + 1, self.group.rank), dtype=np.int64)
        for i in range(n):
            table[n + i + 1] = self.step(GeneratorLabel(i, 1))
            table[n - i - 1] = self.step(GeneratorLabel(i, -1))
        return table

    def label_of(self, element) -> GeneratorLabel | None:
        """Letter whose step equals ``element``, if any."""
        element = tuple(element)
        for i, s in enumerate(self.elements):
            if s == element:
                return GeneratorLabel(i, 1)
            if self.group.inv(s) == element:
                return GeneratorLabel(i, -1)
        return None

    def validate_word(self, w: Word) -> None:
        if len(w) and int(np.abs(w.codes).max()) > len(self.elements):
            bad = int(np.abs(w.codes).max()) - 1
            raise ValidationError(f"letter index {bad} out of range for {len(self)} generators")

    def trace(self, start, w: Word) -> np.ndarray:
        self.validate_word(w)
        table = self.step_table()
        return self.group.trace(start, table[w.codes.astype(np.int64) + len(self.elements)])

    def to_json(self) -> list[list[int]]:
        return [list(e) for e in self.elements]


def parse_genset(text: str, group=HEISENBERG) -> GeneratingSet:
    """Parse ``"x,y"``, ``"x,y,z"``, ``"x,y,1:0:2"`` (or ``"e1,e2,1:1:0"`` for Z^d)."""
    items = [item.strip() for item in text.split(",")]
    if not text.strip() or any(not item for item in items):
        raise ValidationError(f"empty item in generating set {text!r}")
    elements, names = [], []
    for item in items:
        if item in group.standard_names:
            elements.append(group.standard_names[item])
            names.append(item)
            continue
        parts = item.split(":")
        try:
            coords = [int(p) for p in parts]
        except ValueError:
            raise ValidationError(f"cannot parse generator {item!r}") from None
        if len(coords) != group.rank:
            raise ValidationError(f"generator {item!r} needs {group.rank} coordinates")
        elements.append(tuple(coords))
        names.append(item)
    return GeneratingSet(tuple(elements), tuple(names), group)


def standard_genset(names: str = "x,y") -> GeneratingSet:
    return parse_genset(names, HEISENBERG)


def eval_word(start, w: Word | Iterable[Sequence[int]], S: GeneratingSet):
    """Left-to-right product start * s1^(+-1) * ... * sn^(+-1)."""
    if not isinstance(w, Word):
        w = Word.from_labels(w)
    S.validate_word(w)
    group = S.group
    start = group.element(start)
    if len(w) > 64:
        end = S.trace(start, w)[-1]
        return group.element(end.tolist())
    g = start
    for code in w.codes.tolist():
        g = group.mul(g, S.step(code))
    return g
