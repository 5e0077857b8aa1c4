"""CLI пакет schwinger-sim."""
