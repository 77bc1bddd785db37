"""Hybrid prediction markets for forecasting replication-study outcomes.

Core pieces: an LMSR market state machine (`market`), similarity-gated
trading agents (`agents`), a genetic training loop (`evolution`), study
dataset handling (`dataset`), batch evaluation with paired statistics
(`evaluation`), scripted human-like traders (`scripted`), and a live
HTTP trading service (`service`).
"""

from .agents import AgentGenome, PoolEvaluator, load_pool, sample_agents, save_pool
from .errors import (
    AlreadyClosedError,
    AlreadyRunningError,
    DatasetError,
    DimensionMismatchError,
    DuplicateEventIdError,
    EmptyDatasetError,
    EmptyTrainingSetError,
    InvalidTokenError,
    MalformedRowError,
    MarketClosedError,
    MarketError,
    MarketsStillOpenError,
    MissingOutcomeError,
    PoolFormatError,
    PoolSchemaMismatchError,
    ReplimarketError,
    SchemaMismatchError,
    ServiceError,
    SettleBeforeCloseError,
    TooFewPairsError,
    UnfittedSchemaError,
    UnknownEventError,
    UnknownMarketError,
    UnpairedResultsError,
)
from .dataset import (
    FeatureSchema,
    PaperRecord,
    default_schema,
    fit_normalization,
    generate_synthetic,
    load_dataset,
    load_schema,
    normalize,
    save_dataset,
    save_schema,
)
from .evaluation import (
    DIFF_DECIMALS,
    EvalRun,
    MarketResult,
    PairedRow,
    PredictionLabel,
    RunConfig,
    Summary,
    WilcoxonResult,
    absolute_error,
    classify,
    load_results,
    run_artificial_market,
    run_scripted_hybrid,
    save_results,
    save_trade_log,
    score_market,
    summarize,
    wilcoxon_signed_rank,
)
from .evolution import (
    AgentWealth,
    TrainingConfig,
    TrainingRun,
    evolve,
    init_population,
    mutate,
    run_training_market,
    train_pool,
)
from .market import (
    Account,
    AssetSide,
    Direction,
    Ledger,
    MarketState,
    MarketStatus,
    Order,
    Outcome,
    RejectReason,
    TradeRecord,
    TraderKind,
    close_market,
    cost,
    execute_order,
    price,
    quote_trade,
    settle,
    step_iteration,
)
from .runner import MarketSession, run_bot_market
from .scripted import ScriptedTrader, Strategy

__version__ = "0.1.0"

__all__ = [
    "Account",
    "AgentGenome",
    "AgentWealth",
    "AlreadyClosedError",
    "AlreadyRunningError",
    "AssetSide",
    "DatasetError",
    "DimensionMismatchError",
    "Direction",
    "DuplicateEventIdError",
    "EmptyDatasetError",
    "DIFF_DECIMALS",
    "EmptyTrainingSetError",
    "EvalRun",
    "FeatureSchema",
    "InvalidTokenError",
    "Ledger",
    "MalformedRowError",
    "MarketClosedError",
    "MarketError",
    "MarketsStillOpenError",
    "MissingOutcomeError",
    "PoolFormatError",
    "PoolSchemaMismatchError",
    "ReplimarketError",
    "SchemaMismatchError",
    "ServiceError",
    "SettleBeforeCloseError",
    "TooFewPairsError",
    "UnfittedSchemaError",
    "UnknownEventError",
    "UnknownMarketError",
    "UnpairedResultsError",
    "MarketResult",
    "MarketSession",
    "MarketState",
    "MarketStatus",
    "Order",
    "Outcome",
    "PairedRow",
    "PaperRecord",
    "PoolEvaluator",
    "PredictionLabel",
    "RejectReason",
    "RunConfig",
    "ScriptedTrader",
    "Strategy",
    "Summary",
    "TradeRecord",
    "TraderKind",
    "TrainingConfig",
    "TrainingRun",
    "WilcoxonResult",
    "absolute_error",
    "classify",
    "close_market",
    "cost",
    "default_schema",
    "evolve",
    "execute_order",
    "fit_normalization",
    "generate_synthetic",
    "init_population",
    "load_dataset",
    "load_pool",
    "load_results",
    "load_schema",
    "mutate",
    "normalize",
    "price",
    "quote_trade",
    "run_artificial_market",
    "run_bot_market",
    "run_scripted_hybrid",
    "run_training_market",
    "sample_agents",
    "save_dataset",
    "save_pool",
    "save_results",
    "save_schema",
    "save_trade_log",
    "score_market",
    "settle",
    "step_iteration",
    "summarize",
    "train_pool",
    "wilcoxon_signed_rank",
]
