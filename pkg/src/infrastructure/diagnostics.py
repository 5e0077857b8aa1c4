"""
Проверки физичности матрицы плотности.
"""

from typing import Dict, Iterable
import logging

import numpy as np

logger = logging.getLogger(__name__)

HERMITICITY_BUDGET = 1e-9
TRACE_BUDGET = 1e-3
POPULATION_BUDGET = 1e-9
# Во сколько раз можно превысить бюджет до NonPhysicalState
FAIL_FACTOR = 100.0


def check_density(rho: np.ndarray, reference_trace: float = 1.0, fail_factor: float = FAIL_FACTOR) -> Dict:
    """
    Проверка одной матрицы ρ: эрмитовость, след, диагональ в [0, 1].

    Нарушение фиксируется при превышении fail_factor·бюджет; fail_factor=1 даёт сами бюджеты.
    """
    hermiticity = float(np.max(np.abs(rho - rho.conj().T), initial=0.0))
    trace_drift = float(abs(np.trace(rho).real - reference_trace))
    diag = np.real(np.diag(rho))
    min_diag = float(diag.min(initial=0.0))
    max_diag = float(diag.max(initial=0.0))

    violations = []
    if hermiticity > fail_factor * HERMITICITY_BUDGET:
        violations.append(f"hermiticity error {hermiticity:.3e}")
    if trace_drift > fail_factor * TRACE_BUDGET:
        violations.append(f"trace drift {trace_drift:.3e}")
    if min_diag < -fail_factor * POPULATION_BUDGET or max_diag > 1.0 + fail_factor * POPULATION_BUDGET:
        violations.append(f"populations outside [0, 1]: [{min_diag:.3e}, {max_diag:.6f}]")

    return {
        "status": "healthy" if not violations else "unhealthy",
        "hermiticity": hermiticity,
        "trace_drift": trace_drift,
        "min_diag": min_diag,
        "max_diag": max_diag,
        "violations": violations,
    }


def full_density_check(samples: Iterable[np.ndarray], reference_trace: float = 1.0) -> Dict:
    """Свести проверки по всей траектории к худшим значениям."""
    results = [check_density(rho, reference_trace) for rho in samples]
    if not results:
        return {"status": "healthy", "samples": 0}

    all_healthy = all(r["status"] == "healthy" for r in results)
    summary = {
        "status": "healthy" if all_healthy else "unhealthy",
        "samples": len(results),
        "max_hermiticity": max(r["hermiticity"] for r in results),
        "max_trace_drift": max(r["trace_drift"] for r in results),
        "min_diag": min(r["min_diag"] for r in results),
        "max_diag": max(r["max_diag"] for r in results),
    }
    if not all_healthy:
        logger.warning(f"Density check failed on {sum(r['status'] != 'healthy' for r in results)} samples")
    return summary
