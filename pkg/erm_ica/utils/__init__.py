from .io import (
    atomic_write_text,
    write_matrix_csv,
    read_matrix_csv,
    write_json,
    read_json,
    ensure_writable_dir,
)

__all__ = [
    "atomic_write_text",
    "write_matrix_csv",
    "read_matrix_csv",
    "write_json",
    "read_json",
    "ensure_writable_dir",
]
