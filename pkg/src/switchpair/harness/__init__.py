from .bench import benchmark_hash
from .campaigns import CAMPAIGNS, TrialResult, run_campaign
from .config import ExperimentConfig
from .keystore import KeyStore

__all__ = ["CAMPAIGNS", "ExperimentConfig", "KeyStore", "TrialResult", "benchmark_hash", "run_campaign"]
