"""Execution engines and emitters."""
from .cgen import c_signature, emit_c99, find_compiler, run_emitted
from .gridio import read_grid, write_grid, write_json

__all__ = ["c_signature", "emit_c99", "find_compiler", "run_emitted", "read_grid", "write_grid",
           "write_json"]
