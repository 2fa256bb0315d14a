"""Generate, build, and load specialized solvers from Python.

Thin orchestration over plan() and emit(): generate_solver writes the
source tree for a problem instance, build_solver compiles it in place
with the interpreter's own toolchain, and load_solver imports the built
extension directly from its shared object so several generated solvers
with distinct module names can coexist in one process.
"""

from __future__ import annotations

import importlib.util
import pathlib
import subprocess
import sys

from .ir import OP_BUDGET_DEFAULT
from .plan import GenPlan, GenSpec, plan
from .emit import emit


def generate_solver(prob, out_dir, module_name: str = "cfsolver",
                    with_runtest: bool = True,
                    op_budget: int = OP_BUDGET_DEFAULT) -> GenPlan:
    """Plan and emit a specialized solver for prob into out_dir."""
    spec = GenSpec.from_problem(prob, module_name=module_name,
                                out_dir=str(out_dir),
                                with_runtest=with_runtest,
                                op_budget=op_budget)
    genplan = plan(spec)
    emit(genplan)
    return genplan


def build_solver(out_dir) -> pathlib.Path:
    """Compile the generated tree in place; returns the extension path."""
    out = pathlib.Path(out_dir)
    proc = subprocess.run(
        [sys.executable, "setup.py", "build_ext", "--inplace"],
        cwd=str(out), capture_output=True, text=True)
    if proc.returncode != 0:
        raise RuntimeError(
            f"solver build failed in {out}:\n{proc.stdout}\n{proc.stderr}")
    hits = sorted(out.glob("*.so")) + sorted(out.glob("*.pyd"))
    if not hits:
        raise RuntimeError(f"build produced no extension module in {out}")
    return hits[0]


def load_solver(out_dir, module_name: str = "cfsolver"):
    """Import a built solver module straight from its shared object."""
    out = pathlib.Path(out_dir)
    hits = sorted(out.glob(f"{module_name}.*.so"))
    hits += sorted(out.glob(f"{module_name}.so"))
    hits += sorted(out.glob(f"{module_name}.*.pyd"))
    if not hits:
        raise FileNotFoundError(
            f"no built extension for {module_name!r} in {out}")
    mspec = importlib.util.spec_from_file_location(module_name, hits[0])
    mod = importlib.util.module_from_spec(mspec)
    mspec.loader.exec_module(mod)
    return mod
