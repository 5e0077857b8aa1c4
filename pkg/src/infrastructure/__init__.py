"""
Инфраструктура прогонов: пул процессов, проверки ρ, метрики.
"""
