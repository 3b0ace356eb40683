"""Run planted-halfspace learning experiments and persist one record per grid point."""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor

from ..analysis import smoothed_error
from ..cube import Dataset, generate_dataset
from ..lp import L1FitError
from ..regression import PlantedSource, evaluate, learn
from ..rng import derive_seed
from .config import ExperimentConfig, build_data_config, build_learn_config, load_config
from .records import RECORD_SCHEMA, write_records


class ExperimentFailed(RuntimeError):
    def __init__(self, message, records):
        super().__init__(message)
        self.records = records


def point_seeds(seed: int) -> dict:
    return {"learn": seed, "test": derive_seed(seed, "test"), "benchmark": derive_seed(seed, "benchmark")}


def regenerate_test_data(record: dict) -> Dataset:
    """The exact test set a record was evaluated on."""
    cfg = record["config"]
    return generate_dataset(build_data_config(cfg["data"]), cfg["experiment"]["test_size"],
                            record["seeds"]["test"])


def run_point(point: dict, timing: bool = True) -> dict:
    start = time.perf_counter()
    cfg = {k: v for k, v in point.items() if k != "sweep_point"}
    seed = int(cfg["experiment"]["seed"])
    seeds = point_seeds(seed)
    data_cfg = build_data_config(cfg["data"])
    lc = build_learn_config(cfg["learn"])
    record = {
        "schema": RECORD_SCHEMA,
        "name": cfg["experiment"]["name"],
        "config": cfg,
        "sweep_point": point.get("sweep_point", {}),
        "seed": seed,
        "seeds": seeds,
        "learn": {"d": lc.d, "N": lc.N, "r": lc.r, "V": lc.V, "epsilon": lc.epsilon, "delta": lc.delta},
    }
    try:
        h = learn(PlantedSource(data_cfg), lc, seed=seeds["learn"])
    except L1FitError as exc:
        record.update(status="failed", error=str(exc),
                      best_incumbent={"objective": exc.best.objective, "lower_bound": exc.best.lower_bound})
        return record
    meta = h.metadata
    test = generate_dataset(data_cfg, cfg["experiment"]["test_size"], seeds["test"])
    bench = cfg["benchmark"]
    est = smoothed_error(data_cfg.planted, test, bench["sigma"], mode=bench["mode"],
                         budget=bench["budget"], seed=seeds["benchmark"])
    test_err = evaluate(h, test)
    record.update(
        status="ok",
        rep_seeds=meta["batch_seeds"],
        validation_seed=meta["validation_seed"],
        chosen=meta["chosen"],
        errors={
            "train": meta["train_errors"][meta["chosen"]],
            "validation": meta["validation_errors"][meta["chosen"]],
            "test": test_err,
        },
        candidate_validation_errors=meta["validation_errors"],
        max_certified_gap=max(meta["certified_gaps"]),
        benchmark={"sigma": bench["sigma"], "value": est.value, "half_width": est.half_width,
                   "method": est.method, "n_samples": est.n_samples, "level": est.level},
        excess=test_err - est.value,
    )
    if timing:
        record["timing"] = {"wall_clock_s": time.perf_counter() - start}
    return record


def _run(args):
    return run_point(*args)


def run_experiment(config, out=None, jobs: int = 1, timing: bool = True) -> list[dict]:
    """Run every grid point; records come back (and are written) in grid order.

    ``timing=False`` leaves out the wall-clock field so that repeated runs
    produce byte-identical files.
    """
    if not isinstance(config, ExperimentConfig):
        config = load_config(config)
    points = config.points()
    tasks = [(p, timing) for p in points]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run, tasks))
    else:
        records = [_run(t) for t in tasks]
    if out is not None:
        write_records(out, records)
    failed = [r for r in records if r["status"] != "ok"]
    if failed:
        raise ExperimentFailed(f"{len(failed)} of {len(records)} runs failed: {failed[0]['error']}", records)
    return records
