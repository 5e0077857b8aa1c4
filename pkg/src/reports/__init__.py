from src.reports.generator import DatasetWriter

__all__ = ["DatasetWriter"]
