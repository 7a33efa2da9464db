"""Note registry (primary/secondary cross-references) and portfolio audits."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import random
from dataclasses import dataclass, field, replace
from decimal import Decimal

from scipy.stats import mannwhitneyu

from .contracts import LIVE_STATES, DinState
from .errors import (
    DanglingReferenceError,
    DoubleLinkError,
    DuplicateIdError,
    InvalidParameterError,
    MissingSectorError,
    PackagingError,
)
from .money import money

PRIMARY = "primary"
SECONDARY = "secondary"

MAX_PUBLIC_FRACTION = Decimal("0.70")
OBLIGOR_CAP_SHARE = Decimal("0.10")
DEFAULT_SIGNIFICANCE = 0.05


def make_terms_digest(*parts) -> str:
    joined = "|".join(str(p) for p in parts)
    return hashlib.sha256(joined.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class RegistryRecord:
    din_id: str
    kind: str
    underwriter_id: str
    bank_id: str
    investment_id: str
    principal: Decimal
    sector: str
    vintage_year: int
    terms_digest: str = ""
    attached: bool = True
    status: DinState = DinState.ACTIVE
    counterpart_ref: str | None = None
    expected_multiple: Decimal | None = None

    def __post_init__(self) -> None:
        if self.kind not in (PRIMARY, SECONDARY):
            raise InvalidParameterError(f"record kind must be primary/secondary, got {self.kind!r}")
        object.__setattr__(self, "principal", money(self.principal))
        if self.principal < 0:
            raise InvalidParameterError("principal must be >= 0")
        if self.expected_multiple is not None:
            object.__setattr__(
                self, "expected_multiple", Decimal(str(self.expected_multiple))
            )


class Registry:
    """Single-writer record store.  Audits read snapshots; only the
    registry's own methods mutate record state."""

    def __init__(self) -> None:
        self._records: dict[str, RegistryRecord] = {}

    def register(self, record: RegistryRecord) -> None:
        if record.din_id in self._records:
            raise DuplicateIdError(f"din_id {record.din_id!r} already registered")
        self._records[record.din_id] = record

    def get(self, din_id: str) -> RegistryRecord:
        try:
            return self._records[din_id]
        except KeyError:
            raise DanglingReferenceError(f"no record {din_id!r}") from None

    def snapshot(self) -> tuple[RegistryRecord, ...]:
        return tuple(self._records[k] for k in sorted(self._records))

    def link_secondary(self, primary_id: str, secondary_id: str) -> None:
        """Install the mutual reference between a primary and its secondary.

        Both records are updated together or not at all.
        """
        primary = self.get(primary_id)
        secondary = self.get(secondary_id)
        if primary.kind != PRIMARY or secondary.kind != SECONDARY:
            raise InvalidParameterError("link must join a primary to a secondary")
        if primary.counterpart_ref is not None:
            raise DoubleLinkError(f"{primary_id!r} already has a secondary")
        if secondary.counterpart_ref is not None:
            raise DoubleLinkError(f"{secondary_id!r} already references a primary")
        self._records[primary_id] = replace(primary, counterpart_ref=secondary_id)
        self._records[secondary_id] = replace(secondary, counterpart_ref=primary_id)

    def set_status(self, din_id: str, status: DinState) -> None:
        self._records[din_id] = replace(self.get(din_id), status=status)

    def set_attached(self, din_id: str, attached: bool) -> None:
        self._records[din_id] = replace(self.get(din_id), attached=attached)

    def true_outstanding(self) -> Decimal:
        """Net notional: secondaries mirror their primaries, so only
        primary principal counts."""
        return sum(
            (r.principal for r in self._records.values() if r.kind == PRIMARY),
            Decimal("0"),
        )

    def gross_notional(self) -> Decimal:
        return sum((r.principal for r in self._records.values()), Decimal("0"))


@dataclass(frozen=True)
class AttachmentViolation:
    din_id: str
    status_before: DinState
    reason: str = "transferred without its note"


def audit_attachment(registry: Registry) -> list[AttachmentViolation]:
    """Flag live notes whose investment moved on without them and void them.

    Terminal notes are left alone; the audit reports, it never throws.
    """
    violations: list[AttachmentViolation] = []
    for record in registry.snapshot():
        if not record.attached and record.status in LIVE_STATES:
            violations.append(
                AttachmentViolation(din_id=record.din_id, status_before=record.status)
            )
            registry.set_status(record.din_id, DinState.VOID)
    return violations


@dataclass(frozen=True)
class ForwardPeriod:
    """Take every note issued in [from_year, to_year], decided up front."""

    from_year: int
    to_year: int | None = None


@dataclass(frozen=True)
class RandomN:
    """Take a seeded random sample of n notes, decided up front."""

    n: int
    seed: int


@dataclass(frozen=True)
class PortfolioPackage:
    package_id: str
    underwriter_id: str
    din_ids: tuple[str, ...]
    public_fraction: Decimal
    retained_fraction: Decimal
    selection_rule: ForwardPeriod | RandomN

    def __post_init__(self) -> None:
        object.__setattr__(self, "din_ids", tuple(self.din_ids))


def build_package(
    registry: Registry,
    underwriter_id: str,
    rule,
    public_fraction,
    package_id: str = "pkg",
) -> PortfolioPackage:
    """Assemble a public offering from an underwriter's live primaries.

    The selection rule object is the up-front declaration; hand-picked
    membership has no entry point.  At most 70% may be sold on, keeping a
    controlling 30% with the underwriter.
    """
    fraction = Decimal(str(public_fraction))
    if fraction < 0:
        raise PackagingError("public_fraction must be >= 0")
    if fraction > MAX_PUBLIC_FRACTION:
        raise PackagingError(
            f"public_fraction {fraction} exceeds the 0.70 ceiling"
        )
    if not isinstance(rule, (ForwardPeriod, RandomN)):
        raise PackagingError(
            "selection must be declared as ForwardPeriod or RandomN before building"
        )

    candidates = [
        r
        for r in registry.snapshot()
        if r.underwriter_id == underwriter_id
        and r.kind == PRIMARY
        and r.status in LIVE_STATES
    ]
    if isinstance(rule, ForwardPeriod):
        hi = rule.to_year if rule.to_year is not None else 10**9
        chosen = [r for r in candidates if rule.from_year <= r.vintage_year <= hi]
    else:
        if rule.n > len(candidates):
            raise PackagingError(
                f"asked for {rule.n} notes, only {len(candidates)} available"
            )
        ids = sorted(r.din_id for r in candidates)
        picked = set(random.Random(rule.seed).sample(ids, rule.n))
        chosen = [r for r in candidates if r.din_id in picked]

    return PortfolioPackage(
        package_id=package_id,
        underwriter_id=underwriter_id,
        din_ids=tuple(sorted(r.din_id for r in chosen)),
        public_fraction=fraction,
        retained_fraction=Decimal("1") - fraction,
        selection_rule=rule,
    )


@dataclass(frozen=True)
class RepresentativenessReport:
    package_id: str
    n_package: int
    n_portfolio: int
    statistic: float
    p_value: float
    threshold: float
    flagged: bool

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(
            ["package_id", "n_package", "n_portfolio", "statistic",
             "p_value", "threshold", "flagged"]
        )
        w.writerow(
            [self.package_id, self.n_package, self.n_portfolio,
             f"{self.statistic:.6f}", f"{self.p_value:.6f}",
             f"{self.threshold:.6f}", str(self.flagged).lower()]
        )
        return buf.getvalue()


def audit_representativeness(
    package: PortfolioPackage,
    registry: Registry,
    threshold: float = DEFAULT_SIGNIFICANCE,
) -> RepresentativenessReport:
    """Rank-sum check that the packaged notes are not the portfolio's dregs.

    Compares the package's fund multiples against the underwriter's whole
    book; flags when the package is stochastically dominated at the given
    significance level.
    """
    book = [
        r
        for r in registry.snapshot()
        if r.underwriter_id == package.underwriter_id
        and r.kind == PRIMARY
        and r.expected_multiple is not None
    ]
    inside = set(package.din_ids)
    package_multiples = [float(r.expected_multiple) for r in book if r.din_id in inside]
    portfolio_multiples = [float(r.expected_multiple) for r in book]

    if not package_multiples or not portfolio_multiples:
        return RepresentativenessReport(
            package.package_id, len(package_multiples), len(portfolio_multiples),
            float("nan"), 1.0, threshold, False,
        )

    result = mannwhitneyu(
        package_multiples,
        portfolio_multiples,
        alternative="less",
        method="asymptotic",
    )
    p = float(result.pvalue)
    return RepresentativenessReport(
        package_id=package.package_id,
        n_package=len(package_multiples),
        n_portfolio=len(portfolio_multiples),
        statistic=float(result.statistic),
        p_value=p,
        threshold=threshold,
        flagged=p < threshold,
    )


def _pearson(xs, ys) -> float:
    n = len(xs)
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    cov = sum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    var_x = sum((x - mean_x) ** 2 for x in xs)
    var_y = sum((y - mean_y) ** 2 for y in ys)
    if var_x == 0.0 or var_y == 0.0:
        return float("nan")  # constant series: correlation undefined
    return cov / math.sqrt(var_x * var_y)


@dataclass(frozen=True)
class CorrelationReport:
    pairs: dict
    disclosed: float
    flagged: bool


def correlation_disclosure(series_by_sector: dict, disclosed: float) -> CorrelationReport:
    """Pairwise correlation of sector outcome series against the disclosed level."""
    sectors = sorted(series_by_sector)
    if len(sectors) < 2:
        raise InvalidParameterError("correlation needs at least two sectors")
    lengths = {len(series_by_sector[s]) for s in sectors}
    if len(lengths) != 1:
        raise InvalidParameterError("sector series must have equal length")

    pairs: dict[tuple[str, str], float] = {}
    flagged = False
    for i, a in enumerate(sectors):
        for b in sectors[i + 1 :]:
            r = _pearson(
                [float(v) for v in series_by_sector[a]],
                [float(v) for v in series_by_sector[b]],
            )
            pairs[(a, b)] = r
            if not math.isnan(r) and r > disclosed:
                flagged = True
    return CorrelationReport(pairs=pairs, disclosed=disclosed, flagged=flagged)


@dataclass(frozen=True)
class SectorExposure:
    sector: str
    invested: Decimal
    tam_multiple: Decimal
    sam_multiple: Decimal


def sector_concentration(holdings, tam_sam: dict) -> dict:
    """Per-sector invested totals as multiples of TAM and SAM.

    holdings: iterable of (sector, amount).  Every sector present must have
    a (tam, sam) row or the audit cannot run.
    """
    invested: dict[str, Decimal] = {}
    for sector, amount in holdings:
        invested[sector] = invested.get(sector, Decimal("0")) + money(amount)

    out: dict[str, SectorExposure] = {}
    for sector in sorted(invested):
        if sector not in tam_sam:
            raise MissingSectorError(f"no TAM/SAM entry for sector {sector!r}")
        tam, sam = (Decimal(str(v)) for v in tam_sam[sector])
        if tam <= 0 or sam <= 0:
            raise InvalidParameterError(f"TAM/SAM for {sector!r} must be > 0")
        out[sector] = SectorExposure(
            sector=sector,
            invested=invested[sector],
            tam_multiple=money(invested[sector] / tam),
            sam_multiple=money(invested[sector] / sam),
        )
    return out


def obligor_limit_flags(exposures: dict, bank_capital) -> list[str]:
    """Obligors drawing more than 10% of bank capital, for supervisory review."""
    cap = money(bank_capital) * OBLIGOR_CAP_SHARE
    return sorted(name for name, amount in exposures.items() if money(amount) > cap)


def export_records(registry: Registry) -> str:
    """Line-delimited export, one JSON object per record, key-sorted."""
    lines = []
    for r in registry.snapshot():
        lines.append(
            json.dumps(
                {
                    "din_id": r.din_id,
                    "kind": r.kind,
                    "underwriter_id": r.underwriter_id,
                    "bank_id": r.bank_id,
                    "investment_id": r.investment_id,
                    "principal": str(r.principal),
                    "sector": r.sector,
                    "vintage_year": r.vintage_year,
                    "terms_digest": r.terms_digest,
                    "attached": r.attached,
                    "status": r.status.value,
                    "counterpart_ref": r.counterpart_ref,
                    "expected_multiple": (
                        str(r.expected_multiple)
                        if r.expected_multiple is not None
                        else None
                    ),
                },
                sort_keys=True,
            )
        )
    return "\n".join(lines) + ("\n" if lines else "")


def import_records(text: str) -> Registry:
    registry = Registry()
    deferred_links: list[tuple[str, str]] = []
    for line in text.splitlines():
        if not line.strip():
            continue
        raw = json.loads(line)
        record = RegistryRecord(
            din_id=raw["din_id"],
            kind=raw["kind"],
            underwriter_id=raw["underwriter_id"],
            bank_id=raw["bank_id"],
            investment_id=raw["investment_id"],
            principal=raw["principal"],
            sector=raw["sector"],
            vintage_year=raw["vintage_year"],
            terms_digest=raw.get("terms_digest", ""),
            attached=raw.get("attached", True),
            status=DinState(raw.get("status", "active")),
            counterpart_ref=None,
            expected_multiple=raw.get("expected_multiple"),
        )
        registry.register(record)
        ref = raw.get("counterpart_ref")
        if ref is not None and raw["kind"] == PRIMARY:
            deferred_links.append((raw["din_id"], ref))
    for primary_id, secondary_id in deferred_links:
        registry.link_secondary(primary_id, secondary_id)
    return registry
