"""Differential campaign harness."""

from .adapter import (AdapterConfig, AdapterProtocolError, AdapterSpawnError, LocalizationUnavailable,
                      adapter_compile, stub_command, swap_mix_arguments)
from .campaign import (AnomalyReport, CampaignConfig, CampaignResult, CampaignStats, Engine, read_reports,
                       run_campaign, variant_seed, write_reports)
from .classify import AnomalyKind, CompileOutcome, classify_result
from .corpus import CorpusEntry, CorpusError, default_manifest, load_corpus
from .localize import Localization, localize
from .reduce import NonReproducible, minimize

__all__ = [
    "AdapterConfig", "AdapterProtocolError", "AdapterSpawnError", "LocalizationUnavailable",
    "adapter_compile", "stub_command", "swap_mix_arguments", "AnomalyReport", "CampaignConfig",
    "CampaignResult", "CampaignStats", "Engine", "read_reports", "run_campaign", "variant_seed",
    "write_reports", "AnomalyKind", "CompileOutcome", "classify_result", "CorpusEntry", "CorpusError",
    "default_manifest", "load_corpus", "Localization", "localize", "NonReproducible", "minimize",
]
