"""Outage reliability indices, Hawkes outage forecasting and PV adoption models."""

__version__ = "0.1.0"


class GridPVError(Exception):
    """Base class for data and validation errors raised by gridpv."""


class IngestError(GridPVError):
    pass


class ModelError(GridPVError):
    pass
