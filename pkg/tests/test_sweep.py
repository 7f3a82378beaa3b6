import csv
import importlib
import json
import statistics

import pytest

from ignn.errors import ConfigError
from ignn.experiment.config import DataConfig, TrainConfig
from ignn.experiment.sweep import (
    CSV_COLUMNS,
    cell_key,
    expand_grid,
    format_suite,
    load_sweep,
    run_variant_suite,
    sweep,
    write_csv,
)
from ignn.models import ModelConfig
from ignn.objective import LossConfig

sweep_mod = importlib.import_module("ignn.experiment.sweep")

TINY = DataConfig(num_cliques=3, clique_size=4, inter_prob=0.3, seed=0)


def tiny_cfg(**kw):
    base = dict(
        model=ModelConfig("GCN", num_layers=2, hidden_dim=4, output_dim=4),
        data=TINY,
        max_epochs=3,
        kt_monitor_pairs=50,
    )
    base.update(kw)
    return TrainConfig(**base)


GRID = {"learning_rate": ["0.0001", "0.001", "0.01"], "loss.lambda_mse": ["0", "0.1", "1.0", "10.0"]}


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_grid_product_count(tmp_path):
    res = sweep(tiny_cfg(), GRID, seeds=[0], cells_dir=tmp_path / "cells")
    assert len(res.cells) == 12
    write_csv(tmp_path / "out.csv", res.cells)
    rows = read_rows(tmp_path / "out.csv")
    assert len(rows) == 12
    assert tuple(rows[0]) == CSV_COLUMNS
    assert sorted(float(r["lr"]) for r in rows) == sorted([0.0001, 0.001, 0.01] * 4)
    assert len(list((tmp_path / "cells").glob("*.json"))) == 12


def test_resume_skips_finished_cells(tmp_path, monkeypatch):
    cells = tmp_path / "cells"
    first = sweep(tiny_cfg(), {"learning_rate": ["0.01", "0.001"]}, seeds=[0, 1], cells_dir=cells)
    # drop one cell file, as if the run had stopped before it finished
    victim = cells / f"{first.cells[2].key}.json"
    victim.unlink()
    calls = []
    real = sweep_mod.run_cell
    monkeypatch.setattr(sweep_mod, "run_cell", lambda cfg: calls.append(cfg) or real(cfg))
    second = sweep(tiny_cfg(), {"learning_rate": ["0.01", "0.001"]}, seeds=[0, 1], cells_dir=cells)
    assert len(calls) == 1 and cell_key(calls[0]) == first.cells[2].key
    assert [c.to_dict() for c in second.cells[:2]] == [c.to_dict() for c in first.cells[:2]]
    assert victim.exists()


def test_reruns_give_identical_csv(tmp_path):
    grid = {"variant": ["base", "both"], "loss.lambda_mse": ["1.0"]}
    a = sweep(tiny_cfg(), grid, seeds=[0, 1], cells_dir=tmp_path / "a")
    b = sweep(tiny_cfg(), grid, seeds=[0, 1], cells_dir=tmp_path / "b")
    write_csv(tmp_path / "a.csv", a.cells)
    write_csv(tmp_path / "b.csv", b.cells)
    ra, rb = read_rows(tmp_path / "a.csv"), read_rows(tmp_path / "b.csv")
    # wall-clock time is the only column that depends on the machine's load
    for row in ra + rb:
        row.pop("wall_time_s")
    assert ra == rb
    # resuming from the first run's cells reproduces its CSV byte for byte
    c = sweep(tiny_cfg(), grid, seeds=[0, 1], cells_dir=tmp_path / "a")
    write_csv(tmp_path / "c.csv", c.cells)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "c.csv").read_bytes()


def test_parallel_matches_serial(tmp_path):
    grid = {"learning_rate": ["0.01", "0.001"]}
    serial = sweep(tiny_cfg(), grid, seeds=[0], cells_dir=tmp_path / "s")
    parallel = sweep(tiny_cfg(), grid, seeds=[0], cells_dir=tmp_path / "p", workers=2)
    for s, p in zip(serial.cells, parallel.cells):
        ds, dp = s.record.to_dict(), p.record.to_dict()
        ds.pop("wall_time"), dp.pop("wall_time")
        assert ds == dp


def test_empty_grid_rejected():
    with pytest.raises(ConfigError):
        expand_grid(tiny_cfg(), {"learning_rate": []})
    with pytest.raises(ConfigError):
        expand_grid(tiny_cfg(), {"learning_rate": ["0.01"]}, seeds=[])


def test_invalid_cells_are_skipped():
    configs, skipped = expand_grid(tiny_cfg(variant="both", loss=LossConfig(1.0, 2.0)), {"loss.lambda_mse": ["0", "1"]}, seeds=[0])
    assert len(configs) == 1 and configs[0].loss.lambda_mse == 1.0
    assert len(skipped) == 1 and skipped[0]["loss.lambda_mse"] == "0"
    with pytest.raises(ConfigError):
        expand_grid(tiny_cfg(variant="both", loss=LossConfig(1.0, 2.0)), {"loss.lambda_mse": ["0"]}, seeds=[0])


def test_best_selection_per_model_variant(tmp_path):
    res = sweep(tiny_cfg(), {"variant": ["base", "both"], "learning_rate": ["0.01", "0.0001"],
                             "loss.lambda_mse": ["1.0"]}, seeds=[0, 1])
    assert set(res.best) == {("GCN", "base"), ("GCN", "both")}
    for (arch, variant), row in res.best.items():
        group = [c for c in res.cells if c.config.variant == variant]
        by_lr = {}
        for c in group:
            by_lr.setdefault(c.config.learning_rate, []).append(c.val_auc)
        best_lr = max(by_lr, key=lambda lr: statistics.fmean(by_lr[lr]))
        assert row["lr"] == best_lr and row["seeds"] == [0, 1]


def test_load_sweep(tmp_path):
    p = tmp_path / "grid.ini"
    p.write_text(
        "[train]\nmax_epochs = 2\n[sweep]\nlearning_rate = 0.01, 0.001\nmodel.arch = GCN, GIN\nseeds = 4, 5\nworkers = 3\n"
    )
    base, axes, seeds, workers = load_sweep(p)
    assert base.max_epochs == 2
    assert axes == {"learning_rate": ["0.01", "0.001"], "model.arch": ["GCN", "GIN"]}
    assert seeds == [4, 5] and workers == 3
    p.write_text("[sweep]\nnot_a_key = 1\n")
    with pytest.raises(ConfigError):
        load_sweep(p)


def test_variant_suite(tmp_path):
    rows = run_variant_suite(TINY, "GCN", seeds=[0, 1, 2], base_cfg=tiny_cfg())
    assert [r.variant for r in rows] == ["base", "hash", "mse", "both"]
    for r in rows:
        taus = [rec.kendall_tau for rec in r.records]
        assert r.n == 3 and r.mean["kendall_tau"] == pytest.approx(statistics.fmean(taus))
        assert r.std["kendall_tau"] == pytest.approx(statistics.stdev(taus))
    text = format_suite("GCN", rows)
    assert text.splitlines()[1].startswith("GCN") and "+ Both" in text and "3 seeds" in text


def test_variant_suite_single_seed_has_zero_std():
    rows = run_variant_suite(TINY, "SAGE", seeds=[0], base_cfg=tiny_cfg(), variants=("both", "base"))
    assert [r.variant for r in rows] == ["base", "both"]
    assert all(r.std["auc"] == 0.0 and r.std["kendall_tau"] == 0.0 for r in rows)
    assert all(rec.model == "SAGE" for r in rows for rec in r.records)


def test_cell_json_round_trip(tmp_path):
    res = sweep(tiny_cfg(), {"learning_rate": ["0.01"]}, seeds=[0], cells_dir=tmp_path)
    doc = json.loads((tmp_path / f"{res.cells[0].key}.json").read_text())
    assert doc["config"] == res.cells[0].config.to_dict()
    assert doc["metrics"]["model"] == "GCN"
