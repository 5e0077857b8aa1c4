"""
CLI интерфейс schwinger-sim.

Использует Rich для вывода; каждый эксперимент это отдельная команда.
"""

from functools import wraps
from pathlib import Path
from typing import Callable, List, Optional, Tuple
import logging
import sys

import numpy as np
from rich.console import Console
from rich.table import Table
import typer

from src.config import (
    DeviceConfig,
    RunOverrides,
    check_log_level,
    get_settings,
    list_presets,
    load_run_config,
    validate_layer,
)
from src.core.device import MHZ, critical_coupling, derive_modes, modes_vs_g, weak_coupling_check
from src.core.errors import ConfigError, SimulationError
from src.core.lindblad import DriveTone, DriveWaveform, evolve
from src.core.perturbation import heatmap as build_heatmap
from src.core.perturbation import complete_spin, levels_vs_g
from src.core.spectroscopy import (
    fit_lorentzian,
    prepare_system,
    run_g_sweep,
    run_ladder,
    run_two_state,
)
from src.core.steadystate import consistency_check, steady_state
from src.core.types import Experiment, SteadyStateConvention
from src.infrastructure.orchestrator import SweepOrchestrator
from src.reports.generator import DatasetWriter

app = typer.Typer(
    name="schwinger-sim",
    help="schwinger-sim: трансмон + резонатор в базисе Швингера, спектроскопия Раби",
    no_args_is_help=True,
)
console = Console()

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

# Длина траектории для `rabi2 --trajectory` и `steady --check`, если t_end_us не задан
DEFAULT_TRAJECTORY_US = 300.0
# Сетка g для `levels` по умолчанию
DEFAULT_G_MAX_MHZ = 500.0
DEFAULT_G_POINTS = 51


def fail(error: SimulationError) -> None:
    """Одна машиночитаемая строка в stderr и код выхода."""
    message = " ".join(str(error).split())
    typer.echo(f"ERROR code={error.code} msg={message}", err=True)
    raise typer.Exit(error.exit_code)


def guarded(fn: Callable) -> Callable:
    @wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except SimulationError as e:
            fail(e)

    return wrapper


@app.callback()
def main(
    log_level: Optional[str] = typer.Option(None, "--log-level", help="DEBUG, INFO, WARNING, ERROR"),
):
    """Настроить логирование до запуска команды."""
    try:
        settings = get_settings()
        level = check_log_level(log_level) if log_level is not None else settings.log_level
    except ConfigError as e:
        fail(e)
    except ValueError as e:
        fail(ConfigError(f"--log-level: {e}"))
    logging.basicConfig(level=getattr(logging, level), format=LOG_FORMAT, stream=sys.stderr)


# ═══════════════════════════════════════════════════════════════
# Общие опции
# ═══════════════════════════════════════════════════════════════

CONFIG_OPTION = typer.Option(None, "--config", "-c", help="Файл устройства/запуска (key = value)")
PRESET_OPTION = typer.Option(None, "--preset", "-p", help="Имя пресета (fig2, fig3a..fig3d, fig4)")
SET_OPTION = typer.Option([], "--set", "-s", help="Переопределение key=value (можно повторять)")
OUT_OPTION = typer.Option(None, "--out", "-o", help="Директория для TSV")
JOBS_OPTION = typer.Option(None, "--jobs", "-j", envvar="SCHWINGER_SIM_JOBS", help="Число процессов")
ORDER_OPTION = typer.Option(None, "--order", help="Порядок теории возмущений 0/1/2")
DT_OPTION = typer.Option(None, "--dt", help="Шаг RK4, нс")
T_END_OPTION = typer.Option(None, "--t-end", help="Конец траектории, мкс")
STRIDE_OPTION = typer.Option(None, "--stride", help="Сохранять каждый N-й шаг")
S_MAX_OPTION = typer.Option(None, "--s-max", help="Максимальный спин физического блока")


def load(
    config: Optional[Path],
    preset: Optional[str],
    sets: List[str],
    **knobs,
) -> Tuple[DeviceConfig, RunOverrides]:
    device, run = load_run_config(config, preset, sets)
    cli_values = {
        "order": knobs.get("order"),
        "dt_ns": knobs.get("dt"),
        "t_end_us": knobs.get("t_end"),
        "stride": knobs.get("stride"),
        "s_max": knobs.get("s_max"),
    }
    cli_layer = validate_layer(RunOverrides, {k: v for k, v in cli_values.items() if v is not None}, "command line")
    run = run.merged(cli_layer)
    return device, run


def writer_for(out: Optional[Path]) -> DatasetWriter:
    target = out or get_settings().output_dir
    try:
        return DatasetWriter(target)
    except OSError as e:
        raise ConfigError(f"output directory {target} is not writable: {e}") from e


def orchestrator_for(jobs: Optional[int]) -> SweepOrchestrator:
    jobs = jobs or get_settings().jobs
    if jobs < 1:
        raise ConfigError(f"--jobs must be >= 1, got {jobs}")
    return SweepOrchestrator(jobs=jobs)


def device_header(device: DeviceConfig) -> dict:
    return {k: v for k, v in device.model_dump().items() if v is not None}


# ═══════════════════════════════════════════════════════════════
# Эксперименты
# ═══════════════════════════════════════════════════════════════


def do_modes(device: DeviceConfig, writer: Optional[DatasetWriter], g_points: int) -> None:
    params = device.to_params()
    modes = derive_modes(params)
    g_c = critical_coupling(params)
    residuals = weak_coupling_check(modes)

    table = Table(title="🔧 Canonical modes")
    table.add_column("Quantity", style="cyan")
    table.add_column("Value", justify="right")
    table.add_column("Unit", style="dim")
    rows = [
        ("ω+", modes.omega_plus, "GHz"),
        ("ω−", modes.omega_minus, "GHz"),
        ("ω↑", modes.omega_up, "GHz"),
        ("ω↓", modes.omega_down, "GHz"),
        ("g", params.g, "GHz"),
        ("g̃", modes.g_tilde, "GHz"),
        ("g_c", g_c, "GHz"),
        ("Z", params.impedance, "Ω"),
        ("v↑", modes.drive[0], "GHz/nV"),
        ("v↓", modes.drive[1], "GHz/nV"),
        ("weak-coupling residual", residuals.worst, "GHz"),
    ]
    for name, value, unit in rows:
        table.add_row(name, f"{value:.6g}", unit)
    console.print(table)
    console.print(
        f"omega_plus={modes.omega_plus:.4f} omega_minus={modes.omega_minus:.4f} g_c={g_c:.4f}",
        soft_wrap=True,
    )

    if writer is not None and g_points > 0:
        grid = np.linspace(0.0, g_c, g_points, endpoint=False)
        path = writer.write_modes("modes", {**device_header(device), "g_c": g_c}, modes_vs_g(params, grid))
        console.print(f"[green]✅ {path}[/]")


def do_levels(
    device: DeviceConfig,
    run: RunOverrides,
    writer: DatasetWriter,
    g_max_mhz: float = DEFAULT_G_MAX_MHZ,
    g_points: int = DEFAULT_G_POINTS,
    exact: bool = False,
) -> None:
    if g_points < 1:
        raise ConfigError("--g-points must be >= 1")
    grid = np.linspace(0.0, g_max_mhz * MHZ, g_points)
    s_max = 3.0 if run.s_max is None else run.s_max
    table = levels_vs_g(
        device.to_params(),
        grid,
        2 if run.order is None else run.order,
        s_max=s_max,
        exact=exact,
    )
    header = {**device_header(device), "s_max": s_max, "complete_s_max": complete_spin(s_max)}
    console.print(f"[green]✅ {writer.write_levels('levels', header, table)}[/]")


def do_heatmap(device: DeviceConfig, run: RunOverrides, writer: DatasetWriter) -> None:
    system = prepare_system(
        device.to_params(),
        2 if run.order is None else run.order,
        3.0 if run.s_max is None else run.s_max,
    )
    hm = build_heatmap(system.eigsys, system.hamiltonians.dh)
    header = {
        **device_header(device),
        "order": system.eigsys.order,
        "s_max": system.basis.s_max,
        "complete_s_max": complete_spin(system.basis.s_max),
    }
    console.print(f"[green]✅ {writer.write_heatmap('heatmap', header, hm)}[/]")


def do_rabi2(device: DeviceConfig, run: RunOverrides, writer: DatasetWriter, jobs: Optional[int], trajectory: bool):
    params = device.to_params()
    plan = run.to_plan(Experiment.TWO_STATE_SWEEP)
    system = prepare_system(params, plan.order, plan.s_max)
    with console.status("[bold green]Integrating sweep..."):
        result = run_two_state(params, plan, orchestrator_for(jobs), system=system)
    result.header.update(device_header(device))
    console.print(f"[green]✅ {writer.write_sweep('rabi2', result)}[/]")

    if trajectory:
        lam = system.lambda_for(plan.levels)
        eps21 = system.eigsys.transition(plan.levels[1], plan.levels[0])
        drive = DriveWaveform((DriveTone(plan.amplitude, eps21 + plan.detuning),))
        t_end = run.t_end_us * 1e3 if run.t_end_us else DEFAULT_TRAJECTORY_US * 1e3
        traj = evolve(
            system.eigsys, system.hamiltonians.theta, lam, drive,
            t_end=t_end, dt=plan.dt, stride=plan.stride, spin=system.spin,
        )
        header = {**result.header, "Omega": eps21 + plan.detuning, "t_end_ns": t_end}
        console.print(f"[green]✅ {writer.write_trajectory('rabi2_trajectory', header, traj)}[/]")


def do_gsweep(device: DeviceConfig, run: RunOverrides, writer: DatasetWriter, jobs: Optional[int]):
    plan = run.to_plan(Experiment.G_SWEEP)
    with console.status("[bold green]Integrating g sweep..."):
        result = run_g_sweep(device.to_params(), plan, orchestrator_for(jobs))
    result.header.update({k: v for k, v in device_header(device).items() if not k.startswith("g_")})
    console.print(f"[green]✅ {writer.write_sweep('gsweep', result)}[/]")


def do_ladder(device: DeviceConfig, run: RunOverrides, writer: DatasetWriter):
    plan = run.to_plan(Experiment.LADDER)
    with console.status("[bold green]Integrating ladder..."):
        result = run_ladder(device.to_params(), plan)
    result.header.update(device_header(device))
    console.print(f"[green]✅ {writer.write_sweep('ladder', result)}[/]")
    console.print(f"[green]✅ {writer.write_trajectory('ladder_trajectory', result.header, result.trajectory)}[/]")

    table = Table(title="📊 Long-time populations")
    for k in result.levels:
        table.add_column(f"ρ{k}{k}", justify="right")
    table.add_row(*(f"{p:.4f}" for p in result.records[0].populations))
    console.print(table)


def do_steady(
    device: DeviceConfig,
    run: RunOverrides,
    writer: DatasetWriter,
    convention: Optional[SteadyStateConvention],
    check: bool,
    jobs: Optional[int],
):
    params = device.to_params()
    plan = run.to_plan(Experiment.TWO_STATE_SWEEP)
    if plan.levels != (1, 2):
        raise ConfigError(f"steady state needs state_set 1,2, got {plan.levels}")
    convention = convention or plan.convention
    system = prepare_system(params, plan.order, plan.s_max)
    lam = system.lambda_for(plan.levels)
    theta = system.theta_for(plan.levels)
    eps21 = system.eigsys.transition(2, 1)

    probe = steady_state(lam, theta[0, 1], theta[1, 0], eps21, plan.amplitude, np.array([eps21]), convention)
    half = plan.span_linewidths * probe.linewidth
    grid = np.linspace(probe.center - half, probe.center + half, plan.n_points) if plan.n_points > 1 else np.array([probe.center])
    result = steady_state(lam, theta[0, 1], theta[1, 0], eps21, plan.amplitude, grid, convention)
    header = {**device_header(device), "order": plan.order, "V_nV": plan.amplitude, "eps21": eps21}
    console.print(f"[green]✅ {writer.write_steady('steady', header, result)}[/]")

    table = Table(title="📈 Steady state")
    table.add_column("Quantity", style="cyan")
    table.add_column("Value", justify="right")
    table.add_row("ε̃21 (GHz)", f"{result.center:.9f}")
    table.add_row("Δ21 (GHz)", f"{result.linewidth:.4e}")
    table.add_row("τ (μs)", f"{result.tau * 1e-3:.4f}")
    console.print(table)

    if not check:
        return
    omega = result.center + plan.detuning
    t_end = run.t_end_us * 1e3 if run.t_end_us else max(DEFAULT_TRAJECTORY_US * 1e3, 5.0 * result.tau)
    drive = DriveWaveform((DriveTone(plan.amplitude, omega),))
    with console.status("[bold green]Integrating consistency trajectory..."):
        traj = evolve(system.eigsys, system.hamiltonians.theta, lam, drive, t_end=t_end, dt=plan.dt, stride=plan.stride)
    report = consistency_check(traj, result.model).to_dict()
    report.update({"Omega": omega, "t_end_ns": t_end, "convention": convention.value})

    if plan.n_points >= 4:
        sweep = run_two_state(params, plan, orchestrator_for(jobs), system=system)
        fit = fit_lorentzian(*sweep.lineshape())
        report.update({"fit_center": fit.center, "fit_hwhm": fit.hwhm, "predicted_hwhm": result.linewidth})
    console.print(f"[green]✅ {writer.write_summary('steady_check', report)}[/]")


# ═══════════════════════════════════════════════════════════════
# Команды
# ═══════════════════════════════════════════════════════════════


@app.command()
@guarded
def modes(
    config: Optional[Path] = CONFIG_OPTION,
    preset: Optional[str] = PRESET_OPTION,
    set_: List[str] = SET_OPTION,
    out: Optional[Path] = OUT_OPTION,
    g_points: int = typer.Option(0, "--g-points", help="Записать ω↑(g), ω↓(g) на N точках в [0, g_c)"),
):
    """🔧 Производные величины мод и критическая связь g_c."""
    device, _ = load(config, preset, set_)
    do_modes(device, writer_for(out) if g_points > 0 else None, g_points)


@app.command()
@guarded
def levels(
    config: Optional[Path] = CONFIG_OPTION,
    preset: Optional[str] = PRESET_OPTION,
    set_: List[str] = SET_OPTION,
    out: Optional[Path] = OUT_OPTION,
    order: Optional[int] = ORDER_OPTION,
    s_max: Optional[float] = S_MAX_OPTION,
    g_max_mhz: float = typer.Option(DEFAULT_G_MAX_MHZ, "--g-max-mhz", help="Верхняя граница сетки g, МГц"),
    g_points: int = typer.Option(DEFAULT_G_POINTS, "--g-points", help="Число точек по g"),
    exact: bool = typer.Option(False, "--exact", help="Добавить точную диагонализацию"),
):
    """📉 Первые четыре уровня εk(g) с уровнями нулевого порядка."""
    device, run = load(config, preset, set_, order=order, s_max=s_max)
    do_levels(device, run, writer_for(out), g_max_mhz, g_points, exact)


@app.command()
@guarded
def heatmap(
    config: Optional[Path] = CONFIG_OPTION,
    preset: Optional[str] = PRESET_OPTION,
    set_: List[str] = SET_OPTION,
    out: Optional[Path] = OUT_OPTION,
    order: Optional[int] = ORDER_OPTION,
    s_max: Optional[float] = S_MAX_OPTION,
):
    """🔥 Тепловая карта |⟨ψk|dH|ψk′⟩| с разметкой блоков S."""
    device, run = load(config, preset, set_, order=order, s_max=s_max)
    do_heatmap(device, run, writer_for(out))


@app.command()
@guarded
def rabi2(
    config: Optional[Path] = CONFIG_OPTION,
    preset: Optional[str] = PRESET_OPTION,
    set_: List[str] = SET_OPTION,
    out: Optional[Path] = OUT_OPTION,
    jobs: Optional[int] = JOBS_OPTION,
    order: Optional[int] = ORDER_OPTION,
    dt: Optional[float] = DT_OPTION,
    t_end: Optional[float] = T_END_OPTION,
    stride: Optional[int] = STRIDE_OPTION,
    s_max: Optional[float] = S_MAX_OPTION,
    trajectory: bool = typer.Option(False, "--trajectory", help="Также записать ρ(t) на резонансе"),
):
    """📡 Развёртка Раби по двум нижним уровням: ⟨S⟩(t2) от Ω."""
    device, run = load(config, preset, set_, order=order, dt=dt, t_end=t_end, stride=stride, s_max=s_max)
    do_rabi2(device, run, writer_for(out), jobs, trajectory)


@app.command()
@guarded
def gsweep(
    config: Optional[Path] = CONFIG_OPTION,
    preset: Optional[str] = PRESET_OPTION,
    set_: List[str] = SET_OPTION,
    out: Optional[Path] = OUT_OPTION,
    jobs: Optional[int] = JOBS_OPTION,
    dt: Optional[float] = DT_OPTION,
    s_max: Optional[float] = S_MAX_OPTION,
):
    """🧭 Линии ⟨Sz⟩(Ω) для набора связей g (второй порядок)."""
    device, run = load(config, preset, set_, dt=dt, s_max=s_max)
    do_gsweep(device, run, writer_for(out), jobs)


@app.command()
@guarded
def ladder(
    config: Optional[Path] = CONFIG_OPTION,
    preset: Optional[str] = PRESET_OPTION,
    set_: List[str] = SET_OPTION,
    out: Optional[Path] = OUT_OPTION,
    order: Optional[int] = ORDER_OPTION,
    dt: Optional[float] = DT_OPTION,
    t_end: Optional[float] = T_END_OPTION,
    stride: Optional[int] = STRIDE_OPTION,
    s_max: Optional[float] = S_MAX_OPTION,
):
    """🪜 Двухтоновая накачка лестницы 1 → 2 → 3."""
    device, run = load(config, preset, set_, order=order, dt=dt, t_end=t_end, stride=stride, s_max=s_max)
    do_ladder(device, run, writer_for(out))


@app.command()
@guarded
def steady(
    config: Optional[Path] = CONFIG_OPTION,
    preset: Optional[str] = PRESET_OPTION,
    set_: List[str] = SET_OPTION,
    out: Optional[Path] = OUT_OPTION,
    jobs: Optional[int] = JOBS_OPTION,
    order: Optional[int] = ORDER_OPTION,
    dt: Optional[float] = DT_OPTION,
    t_end: Optional[float] = T_END_OPTION,
    stride: Optional[int] = STRIDE_OPTION,
    convention: Optional[SteadyStateConvention] = typer.Option(None, "--convention", help="as_printed, real_part, magnitude"),
    check: bool = typer.Option(False, "--check", help="Сверить с RK4 и аппроксимацией Лоренца"),
):
    """📈 Асимптотика ρ22(Ω), ⟨Sz⟩(Ω) и (опционально) сверка с RK4."""
    device, run = load(config, preset, set_, order=order, dt=dt, t_end=t_end, stride=stride)
    do_steady(device, run, writer_for(out), convention, check, jobs)


EXPERIMENTS = ("modes", "levels", "heatmap", "rabi2", "gsweep", "ladder", "steady")


@app.command("run")
@guarded
def run_preset(
    preset: Optional[str] = PRESET_OPTION,
    config: Optional[Path] = CONFIG_OPTION,
    set_: List[str] = SET_OPTION,
    out: Optional[Path] = OUT_OPTION,
    jobs: Optional[int] = JOBS_OPTION,
):
    """🚀 Запустить эксперимент, указанный ключом experiment в пресете/файле."""
    device, run = load(config, preset, set_)
    experiment = run.experiment
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"'experiment' must name one of {', '.join(EXPERIMENTS)}, got {experiment!r}")
    writer = writer_for(out)
    if experiment == "rabi2":
        do_rabi2(device, run, writer, jobs, trajectory=False)
    elif experiment == "gsweep":
        do_gsweep(device, run, writer, jobs)
    elif experiment == "ladder":
        do_ladder(device, run, writer)
    elif experiment == "steady":
        do_steady(device, run, writer, None, False, jobs)
    elif experiment == "levels":
        do_levels(device, run, writer)
    elif experiment == "heatmap":
        do_heatmap(device, run, writer)
    else:
        do_modes(device, writer, 0)


@app.command()
def presets():
    """📋 Список встроенных пресетов."""
    table = Table(title="📋 Presets")
    table.add_column("Name", style="cyan")
    for name in list_presets():
        table.add_row(name)
    console.print(table)


if __name__ == "__main__":
    app()
