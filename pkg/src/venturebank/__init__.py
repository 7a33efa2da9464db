"""venturebank: deterministic venture-banking portfolio simulator."""

from .contracts import (
    ClawbackLien,
    ClawbackPolicy,
    DinContract,
    DinState,
    TriggerEvent,
    apply_trigger,
    exit_equity_split,
    settle_clawback,
)
from .errors import VentureBankError
from .ledger import Account, CapitalAccount, Ledger, book_din_to_capital
from .multipliers import (
    CapitalLimits,
    KrakenParams,
    capital_limits,
    classical_multiplier,
    din_capital_fraction,
    kraken_multiplier,
    moc_schedule,
)
from .registry import (
    Registry,
    RegistryRecord,
    audit_attachment,
    audit_representativeness,
    build_package,
)
from .returns import SpreadParams, synthesize_distribution
from .simulation import (
    ScenarioConfig,
    SimulationReport,
    replay,
    run_scenario,
    sweep_classical_return,
)

__version__ = "0.1.0"

__all__ = [
    "Account",
    "CapitalAccount",
    "CapitalLimits",
    "ClawbackLien",
    "ClawbackPolicy",
    "DinContract",
    "DinState",
    "KrakenParams",
    "Ledger",
    "Registry",
    "RegistryRecord",
    "ScenarioConfig",
    "SimulationReport",
    "SpreadParams",
    "TriggerEvent",
    "VentureBankError",
    "apply_trigger",
    "audit_attachment",
    "audit_representativeness",
    "book_din_to_capital",
    "build_package",
    "capital_limits",
    "classical_multiplier",
    "din_capital_fraction",
    "exit_equity_split",
    "kraken_multiplier",
    "moc_schedule",
    "replay",
    "run_scenario",
    "settle_clawback",
    "sweep_classical_return",
    "synthesize_distribution",
]
