"""File formats: meshes, cochains, VTK and JSON reports."""

from .cochains import read_cochain, read_dual_path, write_cochain
from .meshes import detect_format, load_complex, save_native_json
from .reports import validate_report, write_report
from .vtk import write_vtk

__all__ = [
    "detect_format",
    "load_complex",
    "save_native_json",
    "read_cochain",
    "read_dual_path",
    "write_cochain",
    "validate_report",
    "write_report",
    "write_vtk",
]
