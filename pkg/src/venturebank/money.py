"""Fixed-point currency helpers.

All currency and limit arithmetic in this package runs on Decimal with an
explicit scale of 9 fractional digits. Binary floats are allowed only inside
the money-multiplier evaluators, which are pure ratios. Converting a float
into money goes through str() so the value seen is the value stored.
"""

from decimal import Decimal, ROUND_HALF_EVEN, ROUND_FLOOR

MONEY_SCALE = Decimal("0.000000001")  # 9 fractional digits

ZERO = Decimal(0)
ONE = Decimal(1)


def money(value) -> Decimal:
    """Coerce int/str/float/Decimal to a money Decimal at the working scale."""
    if isinstance(value, Decimal):
        d = value
    elif isinstance(value, float):
        d = Decimal(str(value))
    else:
        d = Decimal(value)
    return d.quantize(MONEY_SCALE, rounding=ROUND_HALF_EVEN)


def money_floor(value) -> Decimal:
    """Quantize toward negative infinity. Used for cap fills so a rounded
    booking can never exceed the cap it was computed from."""
    if not isinstance(value, Decimal):
        value = Decimal(str(value))
    return value.quantize(MONEY_SCALE, rounding=ROUND_FLOOR)


def compound(principal, rate, periods: int) -> Decimal:
    """principal * (1 + rate)^periods, quantized once at the end."""
    if periods < 0:
        raise ValueError("periods must be >= 0")
    if not isinstance(principal, Decimal):
        principal = Decimal(str(principal))
    if not isinstance(rate, Decimal):
        rate = Decimal(str(rate))
    growth = (ONE + rate) ** periods
    return money(principal * growth)


def fmt(value: Decimal) -> str:
    """Canonical string form used in every CSV cell holding money."""
    return str(money(value))
