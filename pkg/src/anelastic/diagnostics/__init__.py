"""Diagnostics: weighted norms, energy bookkeeping, Hardy checks and experiments."""
