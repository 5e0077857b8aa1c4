"""
Запись наборов данных.

Generates:
- TSV с самоописывающим заголовком (`# key=value`) для каждого эксперимента
- JSON-сводки (отчёт согласованности, диагностика)

Вывод детерминирован: никаких временных меток, фиксированный формат чисел.
"""

import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from src.core.perturbation import Heatmap, LevelTable
from src.core.spectroscopy import SweepResult
from src.core.steadystate import SteadyStateResult
from src.core.lindblad import DensityTrajectory


def format_value(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.12g}"
    return str(value)


class DatasetWriter:
    """Генератор TSV-файлов в output_dir."""

    def __init__(self, output_dir: Optional[Path] = None):
        """
        Args:
            output_dir: Директория для файлов (по умолчанию out/)
        """
        self.output_dir = Path(output_dir or "out")
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def write_table(
        self,
        name: str,
        header: Dict[str, Any],
        columns: Sequence[str],
        rows: Iterable[Sequence[Any]],
        preamble: Sequence[str] = (),
    ) -> Path:
        """
        Записать TSV.

        Args:
            name: Имя файла без расширения
            header: Пары для строк `# key=value`
            columns: Заголовки колонок
            rows: Строки данных
            preamble: Дополнительные строки после заголовка (например `#block ...`)

        Returns:
            Путь к файлу
        """
        lines = [f"# {key}={format_value(value)}" for key, value in header.items()]
        lines.extend(preamble)
        lines.append("\t".join(columns))
        lines.extend("\t".join(format_value(v) for v in row) for row in rows)
        return self._write(f"{name}.tsv", lines)

    def write_summary(self, name: str, payload: Dict[str, Any]) -> Path:
        filepath = self.output_dir / f"{name}.json"
        filepath.write_text(json.dumps(payload, indent=2, sort_keys=True, default=format_value) + "\n", encoding="utf-8")
        return filepath

    # ───────────────────────────────────────────────────────────
    # Эксперименты
    # ───────────────────────────────────────────────────────────

    def write_modes(self, name: str, header: Dict[str, Any], table: List[tuple]) -> Path:
        rows = [
            [g, m.omega_up, m.omega_down, m.g_tilde, m.drive[0], m.drive[1]]
            for g, m in table
        ]
        return self.write_table(name, header, ["g", "omega_up", "omega_down", "g_tilde", "v_up", "v_down"], rows)

    def write_levels(self, name: str, header: Dict[str, Any], table: LevelTable) -> Path:
        return self.write_table(name, {**header, "order": table.order}, table.columns(), table.to_rows())

    def write_heatmap(self, name: str, header: Dict[str, Any], heatmap: Heatmap) -> Path:
        lines = [f"# {key}={format_value(value)}" for key, value in header.items()]
        lines.extend(heatmap.to_lines())
        return self._write(f"{name}.tsv", lines)

    def write_sweep(self, name: str, result: SweepResult) -> Path:
        return self.write_table(name, result.header, result.columns(), result.rows())

    def write_steady(self, name: str, header: Dict[str, Any], steady: SteadyStateResult) -> Path:
        scalars = {
            **header,
            "convention": steady.model.convention.value,
            "eps_tilde21": steady.center,
            "delta21": steady.linewidth,
            "tau_us": steady.tau * 1e-3,
        }
        rows = [
            [omega, rho22, sz, env.real, env.imag]
            for omega, rho22, sz, env in zip(steady.omega, steady.rho22, steady.sz, steady.rho12_envelope)
        ]
        return self.write_table(
            name, scalars, ["Omega_GHz", "rho22_inf", "Sz_inf", "re_rho12_env", "im_rho12_env"], rows
        )

    def write_trajectory(self, name: str, header: Dict[str, Any], trajectory: DensityTrajectory) -> Path:
        diag = trajectory.diagnostics
        scalars = {
            **header,
            "levels": ",".join(str(k) for k in trajectory.levels),
            "max_trace_drift": diag.get("max_trace_drift", 0.0),
            "max_hermiticity_error": diag.get("max_hermiticity", 0.0),
            "trace_leak": diag.get("trace_leak", 0.0),
        }
        return self.write_table(name, scalars, trajectory.columns(), trajectory.rows())

    def _write(self, filename: str, lines: List[str]) -> Path:
        filepath = self.output_dir / filename
        filepath.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return filepath
