"""Shared builders for the test suite."""

import itertools

import pytest

from slidscan.ledger import Category, DexOrder, PoolRecord

_hash_counter = itertools.count(1)

OWNER = "0xowner00000000000000000000000000000000001"
USER = "0xuser000000000000000000000000000000000002"
POOL = "0xpool000000000000000000000000000000000003"
T0 = 1_700_000_000


def make_pool(owner=OWNER, lpt_burned=False, created=T0, pool_address=POOL,
              deployment_gas_usd=0.0) -> PoolRecord:
    return PoolRecord(
        pool_address=pool_address,
        base_address="0xbase",
        paired_address="0xpaired",
        owner_address=owner,
        created_time_pool=created,
        created_time_token=created - 3600,
        lpt_burned=lpt_burned,
        deployment_gas_usd=deployment_gas_usd,
    )


def make_order(category, y_base, y_paired=0.0, sender=OWNER, ts=None,
               price_base=1.0, gas=0.0, pool_address=POOL,
               x_paired=None, x_base=None, block=None) -> DexOrder:
    n = next(_hash_counter)
    if ts is None:
        ts = T0 + n
    return DexOrder(
        block=block if block is not None else ts // 12,
        timestamp=ts,
        hash=f"0x{n:06x}",
        category=Category(category),
        pool_address=pool_address,
        sender=sender,
        x_paired=x_paired,
        x_base=x_base,
        y_paired=y_paired,
        y_base=y_base,
        price_paired=0.0,
        price_base=price_base,
        gas_fee_usd=gas,
    )


class UnitShareOracle:
    """Direct LP-token-unit accounting: the independent owner-share model.

    Deposits mint units pro rata to pool value, withdrawals burn them; the
    owner's share is simply units_owner / units_total. Used to cross-check
    the incremental rescaling update.
    """

    def __init__(self):
        self.value = 0.0
        self.units_total = 0.0
        self.units_owner = 0.0
        self.share = 0.0

    def apply(self, category: str, usd: float, is_owner: bool) -> None:
        before = self.value
        if category in ("Buy", "Deposit"):
            self.value = before + usd
        else:
            self.value = max(before - usd, 0.0)
        if category == "Deposit":
            if before <= 0:
                self.units_total = 0.0
                self.units_owner = 0.0
                minted = usd
            elif self.units_total == 0:
                minted = usd
            else:
                minted = self.units_total * usd / before
            self.units_total += minted
            if is_owner:
                self.units_owner += minted
        elif category == "Withdraw" and before > 0 and self.units_total > 0:
            burned = min(self.units_total * usd / before, self.units_total)
            self.units_total -= burned
            if is_owner:
                self.units_owner = max(self.units_owner - burned, 0.0)
        if self.units_total > 0 and self.value > 0:
            self.share = self.units_owner / self.units_total


@pytest.fixture
def pool():
    return make_pool()
