#!/usr/bin/env python3
"""
Excepciones comunes del toolkit BSS.

Dos familias: errores de validación (entradas mal formadas, precondiciones
violadas) y fallas numéricas (tolerancias no alcanzadas, embeddings no PSD).
El CLI traduce la primera familia a exit code 1 y la segunda a exit code 2.

Todas guardan en ``args`` los argumentos de su constructor, de modo que
cruzan intactas la frontera de procesos de joblib (pickle).
"""

from __future__ import annotations

from typing import List, Optional


class BSSValidationError(ValueError):
    """Entrada inválida. ``diagnostics`` lista cada condición violada."""

    def __init__(self, message: str, diagnostics: Optional[List[str]] = None):
        super().__init__(message, diagnostics)
        self.message = message
        self.diagnostics = list(diagnostics) if diagnostics else [message]

    def __str__(self) -> str:
        return self.message


class NumericalFailure(RuntimeError):
    """Falla numérica; ``operation`` nombra la operación que falló."""

    def __init__(self, operation: str, message: str):
        super().__init__(operation, message)
        self.operation = operation
        self.message = message

    def __str__(self) -> str:
        return f"{self.operation}: {self.message}"


class QuadratureError(NumericalFailure):
    pass


class EmbeddingError(NumericalFailure):
    pass


class SeriesCertificationError(NumericalFailure):
    pass


class DegenerateInputError(BSSValidationError):
    """Camino degenerado (QV nula a alguna frecuencia)."""


class ReplicationFailure(NumericalFailure):
    """Falla de una réplica Monte Carlo; registra su índice y su semilla."""

    def __init__(self, replication: int, seed: int, message: str):
        super().__init__('replication', f"replication {replication} (seed {seed}) failed: {message}")
        self.args = (replication, seed, message)
        self.replication = replication
        self.seed = seed
