"""The verify-all acceptance suite."""

from nilflow.verification.acceptance import CheckResult, run_acceptance

__all__ = ["CheckResult", "run_acceptance"]
