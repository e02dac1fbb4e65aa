"""Workload generation and benchmark orchestration."""
from .bench import BenchRow, correlate_report, read_csv, run_benchmark, write_csv
from .io import read_ppm, read_rays, write_ppm, write_rays
from .render import BounceBatch, RenderConfig, RenderResult, path_trace_wavefront, reordering_trace
from .scene import Scene, gen_procedural_scene, load_obj, load_scene, parse_obj

__all__ = [
    "BenchRow", "correlate_report", "read_csv", "run_benchmark", "write_csv",
    "read_ppm", "read_rays", "write_ppm", "write_rays",
    "BounceBatch", "RenderConfig", "RenderResult", "path_trace_wavefront", "reordering_trace",
    "Scene", "gen_procedural_scene", "load_obj", "load_scene", "parse_obj",
]
