"""Фазы Флоке, периодические инварианты и неабелевы геометрические фазы."""

__version__ = "0.1.0"
