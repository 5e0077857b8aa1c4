"""
Физическая модель и численные эксперименты schwinger-sim.
"""
