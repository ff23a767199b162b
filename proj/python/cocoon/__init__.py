"""MiniCilk compiler: explicit continuation-passing tasks and HardCilk PEs."""

from ._core import (
    Compilation,
    CompileError,
    ExecutionError,
    InternalError,
    bench,
    cli,
    compile,
    generate_tree,
    schema,
    validate,
)

__all__ = [
    "Compilation",
    "CompileError",
    "ExecutionError",
    "InternalError",
    "bench",
    "cli",
    "compile",
    "generate_tree",
    "schema",
    "validate",
]
