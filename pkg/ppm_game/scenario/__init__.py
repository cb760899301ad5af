__all__ = ['load_scenario',
           'load_profile',
           'build_report',
           'write_report',
           ]

from .scenario_file import load_scenario, load_profile
from .report import build_report, write_report
