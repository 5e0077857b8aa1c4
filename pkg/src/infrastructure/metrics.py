"""
Prometheus метрики для прогонов симуляции.
"""

try:
    from prometheus_client import Counter, Gauge, Histogram
    PROMETHEUS_AVAILABLE = True
except ImportError:
    PROMETHEUS_AVAILABLE = False

    # Mock для случая когда prometheus_client не установлен
    class _MockMetric:
        def __init__(self, *args, **kwargs):
            pass

        def labels(self, **kwargs):
            return self

        def inc(self, *args, **kwargs):
            pass

        def observe(self, *args, **kwargs):
            pass

        def set(self, *args, **kwargs):
            pass

    Counter = Histogram = Gauge = _MockMetric


# Точки развёртки
sweep_points_total = Counter(
    "schwinger_sim_sweep_points_total",
    "Sweep points integrated",
    ["experiment"],
)

# Шаги интегратора
rk4_steps_total = Counter(
    "schwinger_sim_rk4_steps_total",
    "RK4 steps taken (per batch)",
    ["experiment"],
)

# Длительность интегрирования
trajectory_seconds = Histogram(
    "schwinger_sim_trajectory_seconds",
    "Wall time of one batched integration",
    ["experiment"],
    buckets=[0.1, 1.0, 10.0, 60.0, 300.0, 1800.0],
)

# Утечка следа из усечённого подпространства
trace_leak = Gauge(
    "schwinger_sim_trace_leak",
    "Max |sum_k Lambda_kk| of the truncated dissipator",
    ["experiment"],
)
