"""Constant-product AMM ledger: replay a pool's order stream and track its state.

A liquidity pool holds a base token (the one with independent USD value) and a
paired token. Swaps preserve the product of the two reserves (x * y = k);
deposits and withdrawals move both legs and re-anchor the product. On top of
the reserve math the ledger maintains the USD accounting used by the fraud
analytics downstream:

  * pool_value_usd   -- running base-token value of the pool, updated by the
                        signed base leg of every order (inflow for buys and
                        deposits, outflow for sells and withdrawals);
  * owner_share      -- the deployer's fraction of the pool, updated only on
                        deposit/withdraw orders: every provider's stake is
                        rescaled by old_value/new_value, and the acting
                        provider additionally gains/loses moved_value/new_value;
  * cumulative flow counters (user paired buys/sells, owner USD withdrawn).

Reserve math runs on whatever numeric type the state carries: floats for bulk
replay, fractions.Fraction for exact verification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, List, Optional, Tuple, Union

Number = Union[float, Fraction]

SECONDS_PER_DAY = 86_400

# Relative tolerance for the constant-product invariant under float reserves.
K_REL_TOL = 1e-9
# Recorded post-order balances disagreeing with reconstructed ones beyond this
# relative gap raise a data-quality warning (real logs may embed fee effects).
BALANCE_REL_TOL = 1e-6


class LedgerError(Exception):
    """Base class for replay failures."""


class ZeroReserve(LedgerError):
    """Swap attempted against an empty reserve."""


class SwapOverflow(LedgerError):
    """Reserve product left the representable floating-point range."""


class NonMonotonicTime(LedgerError):
    """Order timestamp precedes the last applied order."""


class NegativePoolValue(LedgerError):
    """Recorded flows would drive the pool's base value below zero."""


class PreconditionViolated(LedgerError):
    """A scenario breaks the assumptions of the guarantee check."""


class Dex(str, Enum):
    UNISWAP = "Uniswap"
    SUSHISWAP = "SushiSwap"
    BALANCER = "Balancer"
    CURVE = "Curve"
    PANCAKESWAP = "PancakeSwap"
    BANCORSWAP = "BancorSwap"
    SYNTHETIC = "Synthetic"


class Category(str, Enum):
    BUY = "Buy"
    SELL = "Sell"
    DEPOSIT = "Deposit"
    WITHDRAW = "Withdraw"


class SwapDirection(str, Enum):
    BUY_PAIRED = "BuyPaired"    # trader pays base, receives paired
    SELL_PAIRED = "SellPaired"  # trader pays paired, receives base


@dataclass(frozen=True)
class PoolRecord:
    """Static identity of one liquidity pool."""

    pool_address: str
    base_address: str
    paired_address: str
    owner_address: str
    created_time_pool: int
    created_time_token: int
    dex: str = Dex.SYNTHETIC.value
    name: str = ""
    lpt_burned: bool = False
    deployment_gas_usd: float = 0.0

    def __post_init__(self):
        if self.created_time_token > self.created_time_pool:
            raise ValueError(
                f"pool {self.pool_address}: token created after pool "
                f"({self.created_time_token} > {self.created_time_pool})"
            )
        if self.base_address == self.paired_address:
            raise ValueError(f"pool {self.pool_address}: base and paired token identical")


@dataclass(frozen=True)
class DexOrder:
    """One timestamped DEX activity against a pool.

    y_* legs are unsigned token amounts; the direction comes from `category`.
    x_* are the recorded post-order pool balances (None when the source did
    not record them, e.g. reconstructed-only synthetic streams).
    """

    block: int
    timestamp: int
    hash: str
    category: Category
    pool_address: str
    sender: str
    x_paired: Optional[float]
    x_base: Optional[float]
    y_paired: float
    y_base: float
    price_paired: float
    price_base: float
    gas_fee_usd: float = 0.0

    def __post_init__(self):
        if self.y_base < 0 or self.y_paired < 0:
            raise ValueError(f"order {self.hash}: negative token leg")
        if self.price_base <= 0:
            raise ValueError(f"order {self.hash}: price_base must be positive")
        if self.price_paired < 0:
            raise ValueError(f"order {self.hash}: negative price_paired")

    def sort_key(self) -> Tuple[int, int, str]:
        return (self.timestamp, self.block, self.hash)


class LedgerState:
    """Evolving pool state over a replay.

    Value-semantic: `copy()` yields an independent snapshot. Reserves use the
    numeric type they were initialised with (float or Fraction).
    """

    __slots__ = (
        "pool_value_usd", "owner_share", "reserve_base", "reserve_paired", "k",
        "cum_user_buys", "cum_user_sells", "cum_owner_withdrawn_usd",
        "order_index", "price_series", "volume_series",
        "last_timestamp", "drained", "balance_warnings",
    )

    def __init__(self, reserve_paired: Number = 0.0, reserve_base: Number = 0.0,
                 track_series: bool = True):
        self.pool_value_usd: float = 0.0
        self.owner_share: float = 0.0
        self.reserve_base: Number = reserve_base
        self.reserve_paired: Number = reserve_paired
        self.k: Number = reserve_paired * reserve_base
        self.cum_user_buys: float = 0.0
        self.cum_user_sells: float = 0.0
        self.cum_owner_withdrawn_usd: float = 0.0
        self.order_index: int = 0
        self.price_series: Optional[List[Tuple[int, float]]] = [] if track_series else None
        self.volume_series: Optional[List[Tuple[int, float]]] = [] if track_series else None
        self.last_timestamp: int = -(2 ** 62)
        self.drained: bool = False
        self.balance_warnings: int = 0

    def copy(self) -> "LedgerState":
        dup = LedgerState.__new__(LedgerState)
        for name in self.__slots__:
            setattr(dup, name, getattr(self, name))
        if self.price_series is not None:
            dup.price_series = list(self.price_series)
            dup.volume_series = list(self.volume_series)
        return dup

    def __eq__(self, other) -> bool:
        if not isinstance(other, LedgerState):
            return NotImplemented
        return all(getattr(self, n) == getattr(other, n) for n in self.__slots__)

    def __repr__(self) -> str:
        return (f"LedgerState(value={self.pool_value_usd!r}, share={self.owner_share!r}, "
                f"reserves=({self.reserve_paired!r}, {self.reserve_base!r}), "
                f"t={self.order_index})")

    @property
    def implied_paired_price(self) -> float:
        """Paired-token price implied by reserves, in base-token units."""
        if not self.reserve_paired:
            return 0.0
        return float(self.reserve_base) / float(self.reserve_paired)


# ---------------------------------------------------------------------------
# Swap math
# ---------------------------------------------------------------------------

def swap_amount_out(reserve_in: Number, reserve_out: Number, k: Number,
                    amount_in: Number) -> Tuple[Number, Number, Number]:
    """Pure constant-product fill: returns (amount_out, reserve_in', reserve_out').

    The output reserve is recomputed from k so the product stays anchored to
    within one rounding step per swap (exact under Fraction inputs).
    """
    if reserve_in <= 0 or reserve_out <= 0:
        raise ZeroReserve(f"swap against empty reserve ({reserve_in}, {reserve_out})")
    if amount_in <= 0:
        raise ValueError("amount_in must be positive")
    new_in = reserve_in + amount_in
    new_out = k / new_in
    if isinstance(new_out, float) and not math.isfinite(new_out):
        raise SwapOverflow("reserve product not representable")
    return reserve_out - new_out, new_in, new_out


def swap_quote(state: LedgerState, direction: SwapDirection,
               amount_in: Number) -> Tuple[Number, LedgerState]:
    """Quote a swap and return the post-swap state (input state untouched)."""
    if isinstance(state.reserve_paired, float):
        if not math.isfinite(state.reserve_paired * state.reserve_base):
            raise SwapOverflow("reserve product not representable")
    new_state = state.copy()
    if direction == SwapDirection.BUY_PAIRED:
        out, new_base, new_paired = swap_amount_out(
            state.reserve_base, state.reserve_paired, state.k, amount_in)
    elif direction == SwapDirection.SELL_PAIRED:
        out, new_paired, new_base = swap_amount_out(
            state.reserve_paired, state.reserve_base, state.k, amount_in)
    else:
        raise ValueError(f"unknown swap direction {direction!r}")
    new_state.reserve_paired = new_paired
    new_state.reserve_base = new_base
    return out, new_state


# ---------------------------------------------------------------------------
# Order replay
# ---------------------------------------------------------------------------

def advance_state(state: LedgerState, timestamp: int, category: str,
                  is_owner: bool, y_paired: float, y_base: float,
                  price_base: float, x_paired: Optional[float] = None,
                  x_base: Optional[float] = None, price_paired: float = 0.0) -> None:
    """Apply one order in place. Hot path shared by replay and streaming.

    `category` is the Category value string ("Buy"/"Sell"/"Deposit"/"Withdraw").
    Positional calling keeps the per-order overhead low on big streams.
    """
    if timestamp < state.last_timestamp:
        raise NonMonotonicTime(
            f"order at {timestamp} before last applied {state.last_timestamp}")
    state.last_timestamp = timestamp

    inflow = category == "Buy" or category == "Deposit"
    y_usd = y_base * price_base
    signed = y_usd if inflow else -y_usd

    x_prev = state.pool_value_usd
    x_new = x_prev + signed
    if x_new < 0.0:
        if x_new < -max(1e-6, 1e-9 * x_prev):
            raise NegativePoolValue(
                f"pool value {x_prev} + {signed} < 0 at t={state.order_index + 1}")
        x_new = 0.0
    state.pool_value_usd = x_new

    # Owner-share update applies to liquidity events only; swaps move value
    # but not provider proportions.
    if category == "Deposit" or category == "Withdraw":
        if x_new == 0.0:
            state.drained = True  # share frozen at its prior value
        else:
            share = state.owner_share * (x_prev / x_new)
            if is_owner:
                share += signed / x_new
            if share < 0.0:
                share = 0.0
            elif share > 1.0:
                share = 1.0
            state.owner_share = share
        if is_owner and category == "Withdraw":
            state.cum_owner_withdrawn_usd += y_usd
    elif not is_owner:
        if category == "Buy":
            state.cum_user_buys += y_paired
        else:
            state.cum_user_sells += y_paired

    # Reserve bookkeeping: trust recorded post-order balances, reconstruct
    # when absent, and flag disagreements beyond tolerance.
    if category == "Buy":
        rec_paired = state.reserve_paired - y_paired
        rec_base = state.reserve_base + y_base
    elif category == "Sell":
        rec_paired = state.reserve_paired + y_paired
        rec_base = state.reserve_base - y_base
    elif category == "Deposit":
        rec_paired = state.reserve_paired + y_paired
        rec_base = state.reserve_base + y_base
    else:
        rec_paired = state.reserve_paired - y_paired
        rec_base = state.reserve_base - y_base

    if x_paired is not None and x_base is not None:
        if rec_paired or rec_base:
            dp = abs(x_paired - rec_paired)
            db = abs(x_base - rec_base)
            if (dp > BALANCE_REL_TOL * max(abs(rec_paired), abs(x_paired), 1e-12)
                    or db > BALANCE_REL_TOL * max(abs(rec_base), abs(x_base), 1e-12)):
                state.balance_warnings += 1
                state.k = x_paired * x_base
        state.reserve_paired = x_paired
        state.reserve_base = x_base
    else:
        state.reserve_paired = rec_paired if rec_paired > 0 else 0.0
        state.reserve_base = rec_base if rec_base > 0 else 0.0
    if category == "Deposit" or category == "Withdraw":
        state.k = state.reserve_paired * state.reserve_base

    state.order_index += 1
    if state.price_series is not None:
        p = price_paired if price_paired > 0 else state.implied_paired_price * price_base
        state.price_series.append((timestamp, p))
        state.volume_series.append((timestamp, y_usd))


def apply_order(state: LedgerState, order: DexOrder, is_owner: bool) -> LedgerState:
    """Apply one order and return the successor state (input untouched)."""
    new_state = state.copy()
    advance_state(
        new_state,
        timestamp=order.timestamp,
        category=order.category.value if isinstance(order.category, Category) else order.category,
        is_owner=is_owner,
        y_paired=order.y_paired,
        y_base=order.y_base,
        price_base=order.price_base,
        x_paired=order.x_paired,
        x_base=order.x_base,
        price_paired=order.price_paired,
    )
    return new_state


def replay(pool: PoolRecord, orders: Iterable[DexOrder],
           track_series: bool = True) -> LedgerState:
    """Replay a pool's full (sorted) order stream from an empty state."""
    state = LedgerState(track_series=track_series)
    owner = pool.owner_address
    for order in orders:
        if order.pool_address != pool.pool_address:
            raise ValueError(
                f"order {order.hash} targets {order.pool_address}, not {pool.pool_address}")
        advance_state(
            state,
            timestamp=order.timestamp,
            category=order.category.value if isinstance(order.category, Category) else order.category,
            is_owner=order.sender == owner,
            y_paired=order.y_paired,
            y_base=order.y_base,
            price_base=order.price_base,
            x_paired=order.x_paired,
            x_base=order.x_base,
            price_paired=order.price_paired,
        )
    return state


# ---------------------------------------------------------------------------
# Owner financial guarantee
# ---------------------------------------------------------------------------

def verify_owner_guarantee(scenario: List[DexOrder], rel_tol: float = 1e-9,
                           exact: bool = False) -> bool:
    """Check that round-trip investor flows leave the owner's base stake intact.

    The scenario must start with the owner's deposit of (paired, base) and the
    owner must monopolise the paired supply: investors can only sell paired
    tokens they previously bought from this pool. When every investor's net
    paired position returns to zero, the base reserve must equal the initial
    deposit again.
    """
    if not scenario:
        raise PreconditionViolated("empty scenario")
    first = scenario[0]
    if first.category != Category.DEPOSIT:
        raise PreconditionViolated("scenario must start with the owner deposit")

    conv = Fraction if exact else float
    rp: Number = conv(first.y_paired)
    rb: Number = conv(first.y_base)
    y0 = rb
    if rp <= 0 or rb <= 0:
        raise PreconditionViolated("initial deposit must fund both reserves")
    k = rp * rb

    outstanding: Number = conv(0)  # paired tokens held outside the pool
    for order in scenario[1:]:
        if order.category == Category.BUY:
            out, rb, rp = swap_amount_out(rb, rp, k, conv(order.y_base))
            outstanding += out
        elif order.category == Category.SELL:
            amount = conv(order.y_paired)
            if amount > outstanding and (
                    exact or float(amount - outstanding) > 1e-9 * max(float(outstanding), 1.0)):
                raise PreconditionViolated(
                    "investors sold more paired tokens than they acquired")
            _, rp, rb = swap_amount_out(rp, rb, k, amount)
            outstanding -= amount
        else:
            raise PreconditionViolated("guarantee scenarios admit swaps only")

    net = float(outstanding)
    if abs(net) > 1e-9 * max(1.0, float(first.y_paired)):
        raise PreconditionViolated(
            f"scenario leaves a net paired position of {net}; investors must sell back all")
    return abs(float(rb) - float(y0)) <= rel_tol * float(y0)
