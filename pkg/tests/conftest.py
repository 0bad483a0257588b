import pytest

from threshdiff import harness


@pytest.fixture(scope="session")
def tables_small(tmp_path_factory):
    """Low-resolution quantile tables, enough for decision plumbing tests."""
    out = tmp_path_factory.mktemp("tables")
    cfg = harness.config_from_json({
        "kind": "tables", "seed": 7, "replicates": 10000,
        "out": str(out), "flags": {"grid_step": 2e-3,
                                   "tags": ["IntW2_01", "SupAbsW_01",
                                            "IntW2Exp"]},
    })
    harness.build_tables(cfg)
    return out
