"""Geometric and measure-theoretic ground data for the self-similar string.

The unit interval I = [0, 1] is self-similar with respect to the two
contractions

    psi_1(x) = alpha * x,            image [0, alpha]
    psi_2(x) = alpha + (1 - alpha)x, image [alpha, 1]

and carries the unique self-similar probability measure that gives weight
w1 = 1 - alpha to the psi_1 cell and w2 = alpha to the psi_2 cell.  This
weight choice makes the operator d/dm d/dx look the same on every cell of
every level, which is what the whole renormalization analysis rests on.

An infinite {1,2}-sequence (the blow-up) dictates how I is successively
enlarged: level n of the blow-up is the interval obtained by undoing the
first n contractions,

    I_n = psi_{omega_1}^{-1} o ... o psi_{omega_n}^{-1} (I),

so I_0 = I and I_n grows into a half-line or the whole line depending on
the tail of the sequence.  Cells are always addressed combinatorially (a
blow-up level plus a {1,2}-word), never by floating-point endpoints, so
cell masses are exact products of the two weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .errors import DomainError, LevelMismatchError

Symbol = int  # 1 or 2


class Tail(Enum):
    """Declared infinite tail of a blow-up sequence."""

    UNDECLARED = "undeclared"
    ALL_ONES = "all_ones"
    ALL_TWOS = "all_twos"
    NONSTATIONARY = "nonstationary"


class BlowupClass(Enum):
    STATIONARY_TO_1 = "stationary_to_1"
    STATIONARY_TO_2 = "stationary_to_2"
    NON_STATIONARY = "non_stationary"
    UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class ModelParams:
    """All derived constants of the model for a given alpha.

    delta = alpha/(1-alpha) is the stiffness ratio between the two cells,
    gamma = 1/(alpha(1-alpha)) is the spectral scaling factor, w1/w2 are
    the measure weights of the two level-1 cells and first_moment is the
    first moment of the self-similar measure on I.
    """

    alpha: float
    delta: float
    gamma: float
    w1: float
    w2: float
    first_moment: float

    def __post_init__(self) -> None:
        a = self.alpha
        if not (0.0 < a < 1.0) or not math.isfinite(a):
            raise DomainError(f"alpha must lie in (0, 1), got {a}")
        # Under the weight choice w1 = 1 - alpha the asymptotic factor of
        # the off-diagonal product is alpha*(1 + 1/delta) = 1.  Binary
        # floats cannot always represent it exactly; 4 ulp is the honest
        # version of "exact" here.
        if abs(self.alpha * (1.0 + 1.0 / self.delta) - 1.0) > 4e-16:
            raise DomainError("weight normalization alpha*(1 + 1/delta) != 1")

    @property
    def delta_inv(self) -> float:
        return self.w1 / self.alpha

    @property
    def sqrt_delta(self) -> float:
        return math.sqrt(self.delta)


def derive_params(alpha: float) -> ModelParams:
    """Derive every model constant from alpha.

    The first moment solves the fixed-point equation obtained by splitting
    the integral of x over the two level-1 cells:
    m1 = w1*alpha*m1 + w2*(alpha + (1-alpha)*m1).
    """
    if not isinstance(alpha, (int, float)) or not (0.0 < alpha < 1.0):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    alpha = float(alpha)
    w1 = 1.0 - alpha
    w2 = alpha
    delta = alpha / w1
    gamma = 1.0 / (alpha * w1)
    first_moment = alpha * alpha / (1.0 - 2.0 * alpha * w1)
    return ModelParams(alpha, delta, gamma, w1, w2, first_moment)


def contraction(params: ModelParams, symbol: Symbol, x: float) -> float:
    """Apply psi_1 or psi_2 to a point."""
    if symbol == 1:
        return params.alpha * x
    if symbol == 2:
        return params.alpha + params.w1 * x
    raise DomainError(f"symbol must be 1 or 2, got {symbol}")


def contraction_inverse(params: ModelParams, symbol: Symbol, x: float) -> float:
    if symbol == 1:
        return x / params.alpha
    if symbol == 2:
        return (x - params.alpha) / params.w1
    raise DomainError(f"symbol must be 1 or 2, got {symbol}")


@dataclass(frozen=True)
class BlowupPrefix:
    """A finite prefix of a blow-up sequence plus its declared tail.

    The spectral results depend on the infinite tail, which a finite
    prefix can never determine; the tail is therefore an explicit
    declaration by the caller, never an inference.
    """

    symbols: tuple[Symbol, ...] = ()
    tail: Tail = Tail.UNDECLARED

    def __post_init__(self) -> None:
        for s in self.symbols:
            if s not in (1, 2):
                raise DomainError(f"blow-up symbols must be 1 or 2, got {s}")

    def __len__(self) -> int:
        return len(self.symbols)


@dataclass(frozen=True)
class CellAddress:
    """A cell: blow-up level n plus a {1,2}-word addressing a subcell.

    The cell is psi_{omega_1}^{-1} o ... o psi_{omega_n}^{-1} applied to
    the word cell psi_{j_1} o ... o psi_{j_p}(I).  The word may be empty
    (the cell is then I_n itself) and may be longer than n.
    """

    level: int
    word: tuple[Symbol, ...] = ()

    def __post_init__(self) -> None:
        if self.level < 0:
            raise DomainError("level must be nonnegative")
        for s in self.word:
            if s not in (1, 2):
                raise DomainError(f"word symbols must be 1 or 2, got {s}")


def blowup_affine(params: ModelParams, prefix: Sequence[Symbol]) -> tuple[float, float]:
    """Scale and offset of the inverse-contraction composition of a prefix.

    Returns (scale, offset) such that the blow-up map is x -> scale*x + offset.
    """
    scale, offset = 1.0, 0.0
    # psi_{omega_1}^{-1} is applied last, so process the prefix from the
    # innermost symbol outwards.
    for sym in reversed(tuple(prefix)):
        if sym == 1:
            scale, offset = scale / params.alpha, offset / params.alpha
        elif sym == 2:
            scale, offset = scale / params.w1, (offset - params.alpha) / params.w1
        else:
            raise DomainError(f"symbol must be 1 or 2, got {sym}")
    return scale, offset


def blowup_interval(params: ModelParams, prefix: Sequence[Symbol]) -> tuple[float, float]:
    """Endpoints of I_n for the given prefix (n = len(prefix))."""
    scale, offset = blowup_affine(params, prefix)
    return offset, scale + offset


def cell_interval(
    params: ModelParams, prefix: BlowupPrefix | Sequence[Symbol], address: CellAddress
) -> tuple[float, float]:
    """Endpoints of the addressed cell inside I_n.

    Raises LevelMismatchError if the address asks for more blow-up levels
    than the prefix provides.
    """
    symbols = prefix.symbols if isinstance(prefix, BlowupPrefix) else tuple(prefix)
    if address.level > len(symbols):
        raise LevelMismatchError(
            f"address level {address.level} exceeds prefix length {len(symbols)}"
        )
    left, right = 0.0, 1.0
    # Word cell psi_{j_1} o ... o psi_{j_p}(I): innermost symbol first.
    for sym in reversed(address.word):
        left_new = contraction(params, sym, left)
        right_new = contraction(params, sym, right)
        left, right = left_new, right_new
    scale, offset = blowup_affine(params, symbols[: address.level])
    return scale * left + offset, scale * right + offset


def cell_mass(
    params: ModelParams, prefix: BlowupPrefix | Sequence[Symbol], address: CellAddress
) -> float:
    """Mass of the addressed cell under the blown-up self-similar measure.

    The mass is an exact product: each blow-up level multiplies by the
    inverse weight of its symbol, each word letter multiplies by the
    weight of that letter.
    """
    symbols = prefix.symbols if isinstance(prefix, BlowupPrefix) else tuple(prefix)
    if address.level > len(symbols):
        raise LevelMismatchError(
            f"address level {address.level} exceeds prefix length {len(symbols)}"
        )
    weights = {1: params.w1, 2: params.w2}
    mass = 1.0
    for sym in symbols[: address.level]:
        mass /= weights[sym]
    for sym in address.word:
        mass *= weights[sym]
    return mass


def classify_blowup(
    params: ModelParams,
    symbols: Sequence[Symbol],
    declared_tail: Tail = Tail.UNDECLARED,
) -> tuple[BlowupClass, tuple[float, ...]]:
    """Classify the limiting geometry of the blow-up.

    Returns the classification together with the boundary points of the
    limit set (one point for a stationary tail, none otherwise).  A bare
    prefix without a declared tail is Undetermined: the limit geometry is
    a property of the infinite sequence alone.
    """
    symbols = tuple(symbols)
    if declared_tail is Tail.UNDECLARED:
        return BlowupClass.UNDETERMINED, ()
    if declared_tail is Tail.NONSTATIONARY:
        return BlowupClass.NON_STATIONARY, ()
    scale, offset = blowup_affine(params, symbols)
    if declared_tail is Tail.ALL_ONES:
        # Appending 1-symbols fixes the left endpoint of the deep interval,
        # so the limit is a half-line bounded on the left by the image of 0.
        return BlowupClass.STATIONARY_TO_1, (offset,)
    # All-twos tail: half-line bounded on the right by the image of 1.
    return BlowupClass.STATIONARY_TO_2, (scale + offset,)
