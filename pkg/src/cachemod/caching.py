"""Decentralized cache placement and clique-cover delivery planning.

Users prefetch random subsets of the library bits; delivery then broadcasts
one XOR message per user subset.  Each message is chopped into m-bit symbol
labels under one of two padding schemes:

* ``proposed``  -- every subfile is split evenly over the subset's blocks and
  each piece is right-aligned inside its label, so the bits a user already
  knows sit at the front (most significant end) of the label.
* ``zero_padding`` -- subfiles are zero-extended to the longest subfile first
  and then chopped sequentially, so a user's pieces fill whole labels until a
  single possibly-partial final one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations

import numpy as np

from .bits import as_bits
from .errors import ConfigurationError, UselessBlockError

PROPOSED = "proposed"
ZERO_PADDING = "zero_padding"
SCHEMES = (PROPOSED, ZERO_PADDING)

# sample_placement enumerates individual bits; keep instances tractable
MAX_ENUMERATED_BITS = 10**7


def largest_remainder(targets, total: int) -> list[int]:
    """Integer apportionment of `total` proportional to `targets`.

    Floors every share and hands the leftover units to the largest fractional
    remainders (ties broken by position).  Preserves the exact total.
    """
    floors = [math.floor(t) for t in targets]
    deficit = total - sum(floors)
    if deficit < 0:
        raise ValueError("targets exceed total")
    order = sorted(range(len(targets)), key=lambda i: (-(targets[i] - floors[i]), i))
    for i in order[:deficit]:
        floors[i] += 1
    return floors


@dataclass(frozen=True)
class Library:
    """File-size fractions plus the total library size in bits."""

    file_fractions: tuple
    total_bits: int

    def __post_init__(self):
        fractions = tuple(float(f) for f in self.file_fractions)
        object.__setattr__(self, "file_fractions", fractions)
        if not fractions or any(f <= 0 for f in fractions):
            raise ConfigurationError("file fractions must be positive")
        if abs(sum(fractions) - 1.0) > 1e-12:
            raise ConfigurationError(f"file fractions sum to {sum(fractions):g}")
        if self.total_bits < 1:
            raise ConfigurationError("total_bits must be >= 1")

    @property
    def num_files(self) -> int:
        return len(self.file_fractions)

    @cached_property
    def file_bits(self) -> tuple:
        """Per-file integer bit counts summing exactly to total_bits."""
        targets = [f * self.total_bits for f in self.file_fractions]
        return tuple(largest_remainder(targets, self.total_bits))


@dataclass(frozen=True)
class CacheProfile:
    """Normalized cache sizes, one per user, sorted non-decreasing."""

    mus: tuple

    def __post_init__(self):
        mus = tuple(float(m) for m in self.mus)
        object.__setattr__(self, "mus", mus)
        if not mus:
            raise ConfigurationError("at least one user required")
        if any(m < 0 or m > 1 for m in mus):
            raise ConfigurationError("cache fractions must lie in [0, 1]")
        if any(a > b for a, b in zip(mus, mus[1:])):
            raise ConfigurationError("cache fractions must be sorted non-decreasing")

    @property
    def num_users(self) -> int:
        return len(self.mus)


@dataclass(frozen=True)
class DemandVector:
    """Demanded file index (1-based) per user; duplicates are rejected."""

    demands: tuple

    def __post_init__(self):
        demands = tuple(int(d) for d in self.demands)
        object.__setattr__(self, "demands", demands)
        if len(set(demands)) != len(demands):
            raise ConfigurationError("duplicate demands are not supported")

    def validate(self, num_files: int, num_users: int):
        if len(self.demands) != num_users:
            raise ConfigurationError("one demand per user required")
        if any(d < 1 or d > num_files for d in self.demands):
            raise ConfigurationError("demand indices must lie in [1, N]")

    def file_for(self, user: int) -> int:
        return self.demands[user - 1]


def all_subsets(num_users: int):
    """Non-empty user subsets in canonical order (by size, then members)."""
    users = range(1, num_users + 1)
    for size in range(1, num_users + 1):
        for combo in combinations(users, size):
            yield frozenset(combo)


@dataclass(frozen=True)
class SubfileMap:
    """Lengths |W_{i,S}| in bits for every (file, caching-subset) pair."""

    lengths: dict
    kind: str  # "expected" | "realized"
    num_users: int
    num_files: int

    def length(self, file_index: int, subset: frozenset) -> float:
        return self.lengths.get((file_index, frozenset(subset)), 0.0)

    def file_total(self, file_index: int) -> float:
        return sum(v for (i, _), v in self.lengths.items() if i == file_index)

    def is_integral(self) -> bool:
        return all(float(v).is_integer() for v in self.lengths.values())


def expected_subfile_lengths(library: Library, caches: CacheProfile) -> SubfileMap:
    """Law-of-large-numbers subfile lengths for independent random caching.

    lengths(i, S) = F_i * B * prod_{j in S} mu_j * prod_{k not in S} (1 - mu_k)
    """
    mus = caches.mus
    k = caches.num_users
    lengths = {}
    for i, frac in enumerate(library.file_fractions, start=1):
        base = frac * library.total_bits
        for code in range(2**k):
            subset = frozenset(u for u in range(1, k + 1) if code & (1 << (u - 1)))
            p = 1.0
            for u in range(1, k + 1):
                p *= mus[u - 1] if u in subset else (1.0 - mus[u - 1])
            lengths[(i, subset)] = base * p
    return SubfileMap(lengths=lengths, kind="expected", num_users=k, num_files=library.num_files)


def quantize_expected_map(subfiles: SubfileMap, library: Library) -> SubfileMap:
    """Round an expected map to integer lengths, conserving per-file totals.

    Largest-remainder rounding within each file keeps the subset lengths
    summing exactly to the file's integer bit count.
    """
    if subfiles.kind != "expected":
        return subfiles
    k = subfiles.num_users
    lengths = {}
    for i in range(1, subfiles.num_files + 1):
        subsets = [frozenset(s) for s in _all_subsets_with_empty(k)]
        raw = [subfiles.length(i, s) for s in subsets]
        rounded = largest_remainder(raw, library.file_bits[i - 1])
        for s, v in zip(subsets, rounded):
            lengths[(i, s)] = v
    return SubfileMap(lengths=lengths, kind="expected", num_users=k, num_files=subfiles.num_files)


def _all_subsets_with_empty(num_users: int):
    yield frozenset()
    yield from all_subsets(num_users)


@dataclass(frozen=True)
class PlacementRealization:
    """Concrete seeded cache contents: which user cached which library bit."""

    library: Library
    caches: CacheProfile
    # per file: uint8 bit values of shape (file_bits,) and bool cache mask of
    # shape (num_users, file_bits)
    bit_values: tuple
    cached_by: tuple
    seed: int | None = None

    @property
    def num_users(self) -> int:
        return self.caches.num_users

    @cached_property
    def _subset_codes(self) -> tuple:
        out = []
        for mask in self.cached_by:
            codes = np.zeros(mask.shape[1], dtype=np.int64)
            for u in range(mask.shape[0]):
                codes += mask[u].astype(np.int64) << u
            out.append(codes)
        return tuple(out)

    def subset_codes(self, file_index: int) -> np.ndarray:
        """Per-bit caching subset encoded as a bitmask over users."""
        return self._subset_codes[file_index - 1]

    def subfile_positions(self, file_index: int, subset: frozenset) -> np.ndarray:
        code = sum(1 << (u - 1) for u in subset)
        return np.nonzero(self.subset_codes(file_index) == code)[0]

    def subfile_bits(self, file_index: int, subset: frozenset) -> np.ndarray:
        return self.bit_values[file_index - 1][self.subfile_positions(file_index, subset)]


def sample_placement(library: Library, caches: CacheProfile, seed: int) -> PlacementRealization:
    """Draw a random placement: user k caches each bit independently w.p. mu_k."""
    if library.total_bits > MAX_ENUMERATED_BITS:
        raise ConfigurationError(
            f"total_bits {library.total_bits} exceeds the enumeration guard "
            f"({MAX_ENUMERATED_BITS})"
        )
    rng = np.random.default_rng(seed)
    mus = np.array(caches.mus)
    values, masks = [], []
    for nbits in library.file_bits:
        values.append(rng.integers(0, 2, size=nbits, dtype=np.uint8))
        u = rng.random(size=(caches.num_users, nbits))
        masks.append(u < mus[:, None])
    return PlacementRealization(
        library=library,
        caches=caches,
        bit_values=tuple(values),
        cached_by=tuple(masks),
        seed=seed,
    )


def realized_subfile_map(placement: PlacementRealization) -> SubfileMap:
    """Exact subfile lengths of a placement realization."""
    k = placement.num_users
    lengths = {}
    for i in range(1, placement.library.num_files + 1):
        codes = placement.subset_codes(i)
        counts = np.bincount(codes, minlength=2**k)
        for code in range(2**k):
            subset = frozenset(u for u in range(1, k + 1) if code & (1 << (u - 1)))
            lengths[(i, subset)] = int(counts[code])
    return SubfileMap(
        lengths=lengths, kind="realized", num_users=k, num_files=placement.library.num_files
    )


# ---------------------------------------------------------------------------
# Delivery plans
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MulticastBlockSpec:
    """One m-bit XOR block of the multicast message for a user subset."""

    subset: frozenset
    block_index: int  # 1-based within the subset's message
    per_user_piece_len: dict  # user -> bits of its subfile in this block
    label_len: int
    scheme: str

    def piece_len(self, user: int) -> int:
        if user not in self.subset:
            raise ConfigurationError(f"user {user} not in subset {sorted(self.subset)}")
        return self.per_user_piece_len[user]

    def piece_start(self, user: int) -> int:
        """Label position where the user's piece begins."""
        n = self.piece_len(user)
        if self.scheme == PROPOSED:
            return self.label_len - n  # right-aligned, known bits in front
        return 0  # zero padding fills from the front


@dataclass(frozen=True)
class SubsetSchedule:
    """Per-subset symbol counts: message length, blocks, useful blocks per user."""

    ell: int
    n_blocks: int
    subfile_len: dict  # user -> |W_{d_k, S\{k}}|
    n_useful: dict  # user -> blocks carrying at least one of its bits


@dataclass(frozen=True)
class DeliveryPlan:
    """All multicast blocks for one demand vector under one padding scheme."""

    scheme: str
    label_len: int
    num_users: int
    blocks: tuple
    per_subset: dict  # frozenset -> SubsetSchedule
    load: float  # transmitted bits / B
    _index: dict = field(repr=False, default_factory=dict)

    def block(self, subset: frozenset, block_index: int) -> MulticastBlockSpec:
        key = (frozenset(subset), block_index)
        if key not in self._index:
            raise ConfigurationError(f"no block {block_index} for subset {sorted(subset)}")
        return self._index[key]

    def useful_symbols(self, user: int) -> int:
        return sum(s.n_useful.get(user, 0) for s in self.per_subset.values())


def proposed_piece_len(subfile_len: int, n_blocks: int, block_index: int) -> int:
    """Even split of a subfile over the blocks; earlier blocks get the extras."""
    q, r = divmod(subfile_len, n_blocks)
    return q + 1 if block_index <= r else q


def zero_padding_piece_len(subfile_len: int, label_len: int, block_index: int) -> int:
    """Sequential fill: full labels, then one partial, then nothing."""
    remaining = subfile_len - (block_index - 1) * label_len
    return max(0, min(label_len, remaining))


def build_delivery_plan(
    subfiles: SubfileMap,
    demands: DemandVector,
    scheme: str,
    label_len: int,
    library: Library | None = None,
) -> DeliveryPlan:
    """Compile a subfile map and demand vector into labeled multicast blocks.

    Expected maps are quantized to integers first (largest-remainder per
    file); pass the library to pin the per-file totals, otherwise they are
    inferred from the map's own sums.
    """
    if scheme not in SCHEMES:
        raise ConfigurationError(f"unknown scheme {scheme!r}")
    if label_len < 1:
        raise ConfigurationError("bits per symbol must be >= 1")
    k = subfiles.num_users
    demands.validate(subfiles.num_files, k)

    if not subfiles.is_integral():
        if library is None:
            totals = [subfiles.file_total(i) for i in range(1, subfiles.num_files + 1)]
            grand = sum(totals)
            library = Library(tuple(t / grand for t in totals), round(grand))
        subfiles = quantize_expected_map(subfiles, library)

    total_bits = sum(subfiles.lengths.values())
    blocks = []
    per_subset = {}
    index = {}
    sent_bits = 0
    for subset in all_subsets(k):
        sub_lens = {
            u: int(subfiles.length(demands.file_for(u), subset - {u})) for u in subset
        }
        ell = max(sub_lens.values())
        if ell == 0:
            continue
        n_blocks = -(-ell // label_len)  # ceil
        n_useful = {}
        for u in subset:
            if scheme == PROPOSED:
                n_useful[u] = sum(
                    proposed_piece_len(sub_lens[u], n_blocks, i) > 0
                    for i in range(1, n_blocks + 1)
                )
            else:
                n_useful[u] = -(-sub_lens[u] // label_len)
        for i in range(1, n_blocks + 1):
            if scheme == PROPOSED:
                pieces = {u: proposed_piece_len(sub_lens[u], n_blocks, i) for u in subset}
            else:
                pieces = {u: zero_padding_piece_len(sub_lens[u], label_len, i) for u in subset}
            spec = MulticastBlockSpec(
                subset=subset,
                block_index=i,
                per_user_piece_len=pieces,
                label_len=label_len,
                scheme=scheme,
            )
            blocks.append(spec)
            index[(subset, i)] = spec
        per_subset[subset] = SubsetSchedule(
            ell=ell, n_blocks=n_blocks, subfile_len=sub_lens, n_useful=n_useful
        )
        sent_bits += ell
    return DeliveryPlan(
        scheme=scheme,
        label_len=label_len,
        num_users=k,
        blocks=tuple(blocks),
        per_subset=per_subset,
        load=sent_bits / total_bits if total_bits else 0.0,
        _index=index,
    )


def encode_block(block: MulticastBlockSpec, piece_bits: dict) -> np.ndarray:
    """XOR the (zero-extended) per-user pieces into an m-bit label."""
    label = np.zeros(block.label_len, dtype=np.uint8)
    for user in block.subset:
        if user not in piece_bits:
            raise ConfigurationError(f"missing piece for user {user}")
        piece = as_bits(piece_bits[user])
        want = block.piece_len(user)
        if len(piece) != want:
            raise ConfigurationError(
                f"user {user} piece has {len(piece)} bits, block expects {want}"
            )
        start = block.piece_start(user)
        label[start : start + want] ^= piece
    return label


def decode_block(
    label, block: MulticastBlockSpec, user: int, cached_pieces: dict
) -> np.ndarray:
    """Strip the other users' pieces off a label and return `user`'s piece."""
    label = as_bits(label)
    if len(label) != block.label_len:
        raise ConfigurationError("label width mismatch")
    residual = label.copy()
    for other in block.subset:
        if other == user:
            continue
        if other not in cached_pieces:
            raise ConfigurationError(f"missing cached piece for user {other}")
        piece = as_bits(cached_pieces[other])
        want = block.piece_len(other)
        if len(piece) != want:
            raise ConfigurationError(
                f"user {other} piece has {len(piece)} bits, block expects {want}"
            )
        start = block.piece_start(other)
        residual[start : start + want] ^= piece
    start = block.piece_start(user)
    return residual[start : start + block.piece_len(user)]


def known_bit_mask(plan: DeliveryPlan, subset, block_index: int, user: int):
    """(prefix_known, suffix_known) label-bit counts for `user` on a block.

    Raises UselessBlockError when the block carries none of the user's bits;
    that is distinct from a useful block with nothing known, which is (0, 0).
    """
    block = plan.block(frozenset(subset), block_index)
    n = block.piece_len(user)
    if n == 0:
        raise UselessBlockError(
            f"block {block_index} of subset {sorted(block.subset)} carries no bits "
            f"for user {user}"
        )
    if plan.scheme == PROPOSED:
        return (block.label_len - n, 0)
    return (0, block.label_len - n)
