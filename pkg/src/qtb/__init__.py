"""Thermodynamic work costs and benefits of quantum channels and measurements."""
from . import channels, measure, postselect, qmath, thermo, weight
from .channels import AccountingMode, ChoiMatrix, KrausChannel
from .errors import QtbError
from .measure import Measurement
from .thermo import ThermalContext

__version__ = "0.1.0"

__all__ = [
    "channels", "measure", "postselect", "qmath", "thermo", "weight",
    "AccountingMode", "ChoiMatrix", "KrausChannel", "Measurement", "QtbError", "ThermalContext",
]
