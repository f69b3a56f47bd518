"""MCP server exposing simulation, linearity tests and Monte Carlo experiments."""

import json
from dataclasses import replace
from typing import Any

from mcp.server import Server
from mcp.types import Resource, TextContent, Tool

from .database import Database
from .dgp import DgpSpec, simulate
from .figures import emit_figure_data
from .linearity import BootstrapConfig, TestMethod, run_test
from .montecarlo import ExperimentConfig, TableLayout, preset_grid, run_experiment, summarize
from .utils import cache_dir, configure_logging, series_to_csv


# Initialize MCP server
server = Server("tvlinearity")

# Global state
_db: Database | None = None


def get_db() -> Database:
    """Get or create the results cache database."""
    global _db
    if _db is None:
        _db = Database(cache_dir() / "results.db")
        _db.init_schema()
    return _db


def init_for_testing(db: Database | None) -> None:
    """Initialize server with a test database."""
    global _db
    _db = db


def _text(result: Any) -> list[TextContent]:
    return [TextContent(type="text", text=json.dumps(result, ensure_ascii=False, indent=2))]


# ============================================================================
# Tools
# ============================================================================

DGP_SCHEMA = {
    "type": "object",
    "description": "DgpSpec: kind, mean {alpha0,beta0,alpha1,beta1,transition{gamma,c}}, "
                   "variance (null = unit normal) {a0,b0,a1,b1,transition}, sample_size, burn_in, threshold_fraction",
}

BOOTSTRAP_SCHEMA = {
    "type": "object",
    "properties": {
        "iterations": {"type": "integer", "default": 1000},
        "multiplier": {"type": "string", "enum": ["standard_normal", "rademacher"]},
        "scheme": {"type": "string", "enum": ["fixed", "recursive"]},
        "variance_lag": {"type": "string", "enum": ["bootstrap", "observed"]},
        "seed": {"type": "integer"},
    },
}


@server.list_tools()
async def list_tools() -> list[Tool]:
    """List available tools."""
    return [
        Tool(
            name="simulate_series",
            description="Simulate one series from a data-generating process. Returns t,y CSV.",
            inputSchema={
                "type": "object",
                "properties": {
                    "dgp": DGP_SCHEMA,
                    "seed": {"type": "integer", "description": "RNG seed"},
                    "diagnostics": {"type": "boolean", "default": False, "description": "Include h2 column"},
                },
                "required": ["dgp"],
            },
        ),
        Tool(
            name="run_linearity_test",
            description="Test a series for time-varying mean (ma, mwb) or variance (va, vb, vwb, tr2).",
            inputSchema={
                "type": "object",
                "properties": {
                    "values": {"type": "array", "items": {"type": "number"}},
                    "methods": {
                        "type": "array",
                        "items": {"type": "string", "enum": [m.value for m in TestMethod]},
                        "description": "Default: all methods",
                    },
                    "bootstrap": BOOTSTRAP_SCHEMA,
                    "seed": {"type": "integer"},
                },
                "required": ["values"],
            },
        ),
        Tool(
            name="run_experiment",
            description="Monte Carlo rejection frequencies for a preset table (1-4) or an ExperimentConfig. "
                        "Results are stored in the cache.",
            inputSchema={
                "type": "object",
                "properties": {
                    "table": {"type": "integer", "enum": [1, 2, 3, 4]},
                    "config": {"type": "object", "description": "ExperimentConfig JSON"},
                    "replications": {"type": "integer", "default": 100},
                    "bootstrap_iterations": {"type": "integer", "default": 199},
                    "sample_sizes": {"type": "array", "items": {"type": "integer"}},
                    "seed": {"type": "integer", "default": 0},
                },
            },
        ),
        Tool(
            name="summarize_experiment",
            description="Render a stored experiment as a table (CSV and text).",
            inputSchema={
                "type": "object",
                "properties": {
                    "experiment_id": {"type": "integer", "description": "Default: last experiment"},
                    "layout": {"type": "string", "default": "custom"},
                },
            },
        ),
        Tool(
            name="transition_figure",
            description="Transition function values for t = 1..T as CSV (c defaults to T/2).",
            inputSchema={
                "type": "object",
                "properties": {
                    "T": {"type": "integer", "default": 200},
                    "gammas": {"type": "array", "items": {"type": "number"}, "default": [0.01, 0.1]},
                    "c": {"type": "number"},
                },
            },
        ),
    ]


def _experiment_config(arguments: dict[str, Any]) -> tuple[ExperimentConfig, TableLayout | str]:
    if arguments.get("config") is not None:
        return ExperimentConfig.from_dict(arguments["config"]), "custom"
    table = arguments.get("table")
    if table is None:
        raise ValueError("run_experiment needs either 'table' or 'config'")
    specs, layout = preset_grid(int(table))
    cfg = ExperimentConfig.from_dict({
        "dgp_grid": [s.to_dict() for s in specs],
        "sample_sizes": arguments.get("sample_sizes", list(layout.sample_sizes)),
        "replications": arguments.get("replications", 100),
        "bootstrap": {"iterations": arguments.get("bootstrap_iterations", 199)},
        "master_seed": arguments.get("seed", 0),
    })
    return cfg, replace(layout, sample_sizes=cfg.sample_sizes)


def _bootstrap_config(arguments: dict[str, Any]) -> BootstrapConfig:
    """BootstrapConfig from the `bootstrap` object; a top-level `seed` overrides one given inside it."""
    settings = dict(arguments.get("bootstrap") or {})
    if arguments.get("seed") is not None:
        settings["seed"] = arguments["seed"]
    return BootstrapConfig(**settings)


@server.call_tool()
async def call_tool(name: str, arguments: dict[str, Any]) -> list[TextContent]:
    """Handle tool calls."""
    if name == "simulate_series":
        spec = DgpSpec.from_dict(arguments["dgp"])
        series = simulate(spec, arguments.get("seed"))
        return [TextContent(type="text", text=series_to_csv(series, arguments.get("diagnostics", False)))]

    elif name == "run_linearity_test":
        cfg = _bootstrap_config(arguments)
        methods = arguments.get("methods") or [m.value for m in TestMethod]
        result = [run_test(m, arguments["values"], cfg).to_dict() for m in methods]
        return _text(result)

    elif name == "run_experiment":
        cfg, layout = _experiment_config(arguments)
        table = run_experiment(cfg)
        layout_name = layout if isinstance(layout, str) else layout.name
        experiment_id = get_db().save_experiment(cfg, table, layout_name)
        return _text({
            "experiment_id": experiment_id,
            "cells": table.to_dict(),
            "table": summarize(table, layout).text,
        })

    elif name == "summarize_experiment":
        db = get_db()
        experiment_id = arguments.get("experiment_id") or db.last_experiment_id()
        if experiment_id is None:
            raise ValueError("no stored experiments")
        formatted = summarize(db.load_table(int(experiment_id)), arguments.get("layout", "custom"))
        return _text({"experiment_id": experiment_id, "csv": formatted.csv, "text": formatted.text})

    elif name == "transition_figure":
        T = arguments.get("T", 200)
        csv_text = emit_figure_data(T, arguments.get("gammas", [0.01, 0.1]), arguments.get("c"))
        return [TextContent(type="text", text=csv_text)]

    else:
        raise ValueError(f"Unknown tool: {name}")


# ============================================================================
# Resources
# ============================================================================

@server.list_resources()
async def list_resources() -> list[Resource]:
    """List available resources."""
    return [
        Resource(
            uri="tvlinearity://experiments",
            name="Experiments",
            description="Stored Monte Carlo experiments",
            mimeType="application/json",
        ),
        Resource(
            uri="tvlinearity://presets",
            name="Presets",
            description="DGP grids of the four rejection-frequency tables",
            mimeType="application/json",
        ),
    ]


@server.read_resource()
async def read_resource(uri: str) -> str:
    """Read resource content."""
    if str(uri) == "tvlinearity://experiments":
        result: Any = get_db().list_experiments()
    elif str(uri) == "tvlinearity://presets":
        result = {}
        for k in (1, 2, 3, 4):
            specs, layout = preset_grid(k)
            result[layout.name] = {"title": layout.title, "dgp_grid": [s.to_dict() for s in specs]}
    else:
        raise ValueError(f"Unknown resource: {uri}")

    return json.dumps(result, ensure_ascii=False, indent=2)


# ============================================================================
# Main
# ============================================================================

def main() -> None:
    """Run the MCP server."""
    import asyncio

    from mcp.server.stdio import stdio_server

    configure_logging()

    async def run():
        async with stdio_server() as (read_stream, write_stream):
            await server.run(read_stream, write_stream, server.create_initialization_options())

    asyncio.run(run())


if __name__ == "__main__":
    main()
