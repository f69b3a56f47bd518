"""Tests for MCP tools and resources."""

import io
import json

import pandas as pd
import pytest

from tvlinearity.database import Database
from tvlinearity.server import call_tool, list_resources, list_tools, read_resource


def _json(result) -> object:
    return json.loads(result[0].text)


SMALL_CONFIG = {
    "dgp_grid": [{"kind": "ar_homoskedastic", "mean": {"alpha0": 1.0, "beta0": 0.3}}],
    "sample_sizes": [40],
    "tests": ["ma", "va"],
    "replications": 100,
    "master_seed": 3,
}


class TestListing:
    async def test_tools(self):
        """Test that every tool is listed."""
        names = {tool.name for tool in await list_tools()}
        assert names == {
            "simulate_series",
            "run_linearity_test",
            "run_experiment",
            "summarize_experiment",
            "transition_figure",
        }

    async def test_resources(self):
        """Test that both resources are listed."""
        uris = {str(resource.uri) for resource in await list_resources()}
        assert uris == {"tvlinearity://experiments", "tvlinearity://presets"}


class TestSimulateSeries:
    """Test the simulate_series tool."""

    async def test_csv_output(self):
        """Test the CSV text of a simulated series."""
        result = await call_tool("simulate_series", {
            "dgp": {"kind": "ar_homoskedastic", "sample_size": 50},
            "seed": 1,
        })
        frame = pd.read_csv(io.StringIO(result[0].text))
        assert list(frame.columns) == ["t", "y"]
        assert len(frame) == 50

    async def test_diagnostics(self):
        """Test the h2 column of an ARCH series."""
        result = await call_tool("simulate_series", {
            "dgp": {"kind": "ar_arch", "variance": {"a0": 1.0, "b0": 0.3}, "sample_size": 30},
            "seed": 1,
            "diagnostics": True,
        })
        frame = pd.read_csv(io.StringIO(result[0].text))
        assert list(frame.columns) == ["t", "y", "h2"]
        assert (frame["h2"] >= 1.0).all()

    async def test_seeded_output_is_stable(self):
        """Test that a seed fixes the tool output."""
        args = {"dgp": {"kind": "ar_homoskedastic", "sample_size": 20}, "seed": 9}
        assert (await call_tool("simulate_series", args))[0].text == (await call_tool("simulate_series", args))[0].text


class TestRunLinearityTest:
    """Test the run_linearity_test tool."""

    async def test_selected_methods(self, ar_series):
        """Test that only the requested methods run, in order."""
        result = _json(await call_tool("run_linearity_test", {
            "values": ar_series.values.tolist(),
            "methods": ["ma", "vwb"],
            "bootstrap": {"iterations": 99},
            "seed": 4,
        }))
        assert [r["method"] for r in result] == ["ma", "vwb"]
        assert result[0]["df"] == [2, 195]
        assert result[1]["bootstrap_iterations"] == 99

    async def test_all_methods_by_default(self, ar_series):
        """Test that every method runs when none is requested."""
        result = _json(await call_tool("run_linearity_test", {
            "values": ar_series.values.tolist(),
            "bootstrap": {"iterations": 99},
            "seed": 4,
        }))
        assert [r["method"] for r in result] == ["ma", "mwb", "va", "vb", "vwb", "tr2"]

    async def test_seed_inside_bootstrap(self, ar_series):
        """Test that a seed given inside the bootstrap object is used."""
        args = {
            "values": ar_series.values.tolist(),
            "methods": ["mwb", "vwb"],
            "bootstrap": {"iterations": 99, "seed": 3},
        }
        first = _json(await call_tool("run_linearity_test", args))
        second = _json(await call_tool("run_linearity_test", args))
        assert first == second

    async def test_top_level_seed_overrides_bootstrap_seed(self, ar_series):
        """Test that a top-level seed wins over one inside the bootstrap object."""
        values = ar_series.values.tolist()
        both = _json(await call_tool("run_linearity_test", {
            "values": values,
            "methods": ["vwb"],
            "bootstrap": {"iterations": 99, "seed": 3},
            "seed": 8,
        }))
        top_level = _json(await call_tool("run_linearity_test", {
            "values": values,
            "methods": ["vwb"],
            "bootstrap": {"iterations": 99},
            "seed": 8,
        }))
        assert both == top_level

    async def test_observed_variance_lag(self, arch_series):
        """Test that the variance lag setting reaches the variance bootstraps."""
        args = {
            "values": arch_series.values.tolist(),
            "methods": ["vb"],
            "bootstrap": {"iterations": 99, "variance_lag": "observed"},
            "seed": 5,
        }
        result = _json(await call_tool("run_linearity_test", args))
        assert result == _json(await call_tool("run_linearity_test", args))
        assert 0.0 <= result[0]["p_value"] <= 1.0

    async def test_unknown_bootstrap_setting(self, ar_series):
        """Test that an unknown bootstrap field is refused."""
        with pytest.raises(TypeError):
            await call_tool("run_linearity_test", {
                "values": ar_series.values.tolist(),
                "methods": ["mwb"],
                "bootstrap": {"iterations": 99, "draws": 5},
            })


class TestExperimentTools:
    """Test run_experiment and summarize_experiment against the cache."""

    async def test_run_config(self, server_db: Database):
        """Test running and caching an explicit config."""
        result = _json(await call_tool("run_experiment", {"config": SMALL_CONFIG}))
        assert result["experiment_id"] == 1
        assert len(result["cells"]) == 2
        assert "M_a" in result["table"]
        assert server_db.count_table("cells") == 2

    async def test_run_preset_with_small_sizes(self, server_db: Database):
        """Test a preset table with overridden sample sizes."""
        result = _json(await call_tool("run_experiment", {
            "table": 1,
            "replications": 100,
            "bootstrap_iterations": 99,
            "sample_sizes": [20],
        }))
        assert len(result["cells"]) == 2 * 5
        assert result["table"].startswith("Rejection frequencies under AR with homoskedastic error")
        assert server_db.list_experiments()[0]["layout"] == "table1"

    async def test_needs_table_or_config(self, server_db: Database):
        """Test that run_experiment needs a table or a config."""
        with pytest.raises(ValueError, match="table"):
            await call_tool("run_experiment", {})

    async def test_summarize_last(self, server_db: Database):
        """Test that summarize_experiment defaults to the newest experiment."""
        await call_tool("run_experiment", {"config": SMALL_CONFIG})
        result = _json(await call_tool("summarize_experiment", {}))
        assert result["experiment_id"] == 1
        assert result["csv"].splitlines()[0] == "dgp,T,M_a,V_a"

    async def test_summarize_empty_cache(self, server_db: Database):
        """Test summarize_experiment on an empty cache."""
        with pytest.raises(ValueError, match="no stored experiments"):
            await call_tool("summarize_experiment", {})


class TestTransitionFigure:
    async def test_defaults(self):
        """Test the default transition figure."""
        result = await call_tool("transition_figure", {})
        lines = result[0].text.splitlines()
        assert lines[0] == "t,F_gamma_0.01,F_gamma_0.1"
        assert len(lines) == 201


class TestResources:
    """Test resource reads."""

    async def test_experiments(self, server_db: Database):
        """Test the experiments resource."""
        await call_tool("run_experiment", {"config": SMALL_CONFIG})
        rows = json.loads(await read_resource("tvlinearity://experiments"))
        assert len(rows) == 1
        assert rows[0]["cells"] == 2

    async def test_presets(self):
        """Test the presets resource."""
        presets = json.loads(await read_resource("tvlinearity://presets"))
        assert set(presets) == {"table1", "table2", "table3", "table4"}
        assert len(presets["table2"]["dgp_grid"]) == 8

    async def test_unknown(self):
        """Test that an unknown resource raises."""
        with pytest.raises(ValueError, match="Unknown resource"):
            await read_resource("tvlinearity://nothing")

    async def test_unknown_tool(self):
        """Test that an unknown tool raises."""
        with pytest.raises(ValueError, match="Unknown tool"):
            await call_tool("nothing", {})
