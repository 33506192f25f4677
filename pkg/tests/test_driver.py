"""Run orchestration: termination, budgets, checkpoints, stepped runs."""

import pickle
import shutil

import numpy as np
import pytest

from hygopt import (CheckpointError, Driver, EvaluationError, RunConfig,
                    StageSpec, check_convergence, checkpoint_load,
                    checkpoint_save, read_checkpoint, resume, run,
                    run_stepped, write_checkpoint)
from hygopt.driver import CHECKPOINT_MAGIC
from hygopt.genetic import GaConfig
from hygopt.problems import get_benchmark
from hygopt.space import ParameterSpace


def sphere_space(bits=10):
    return ParameterSpace(np.array([-5.0, -5.0]), np.array([5.0, 5.0]),
                          np.array([bits, bits]))


def sphere_cost(p):
    return float(np.sum(np.asarray(p, float) ** 2))


def nan_cost(p):
    return float("nan")


def constant_cost(p):
    return 1.0


def small_config(**kw):
    defaults = dict(mode="ga", space=sphere_space(), seed=11, init_size=20,
                    n_explor=20, n_exploit=6, max_generations=4,
                    max_evaluations=2000)
    defaults.update(kw)
    return RunConfig(**defaults)


class TestCheckConvergence:
    def cfg(self, **kw):
        return small_config(**kw)

    def test_flat_window_stagnates(self):
        cfg = self.cfg(stagnation_window=4)
        assert check_convergence([5.0] * 5, cfg) == "stagnated"

    def test_window_not_yet_full(self):
        cfg = self.cfg(stagnation_window=4)
        assert check_convergence([5.0] * 4, cfg) is None

    def test_improving_series_continues(self):
        cfg = self.cfg(stagnation_window=4)
        assert check_convergence([5.0, 4.0, 3.0, 2.0, 1.0], cfg) is None

    def test_generation_cap(self):
        cfg = self.cfg(max_generations=7)
        assert check_convergence([1.0], cfg, generation=7) == "generation-cap"
        assert check_convergence([1.0], cfg, generation=6) is None

    def test_evaluation_cap(self):
        cfg = self.cfg(max_evaluations=100)
        assert check_convergence([1.0], cfg,
                                 evaluations=100) == "evaluation-cap"
        assert check_convergence([1.0], cfg, evaluations=99) is None

    def test_known_optimum_wins(self):
        cfg = self.cfg(known_optima=[np.array([0.0, 0.0])], max_generations=1)
        got = check_convergence([0.0], cfg,
                                best_phenotype=np.array([0.0, 0.0]),
                                generation=1)
        assert got == "converged"


class TestRunBasics:
    def test_deterministic_for_seed(self):
        cfg = small_config()
        a = run(cfg, sphere_cost)
        b = run(small_config(), sphere_cost)
        assert [r.to_dict() for r in a.records] == \
               [r.to_dict() for r in b.records]
        assert a.best_cost == b.best_cost

    def test_best_series_non_increasing(self):
        cfg = small_config(max_generations=6)
        result = run(cfg, sphere_cost)
        series = result.best_costs
        assert len(series) >= 1
        assert all(b <= a + 1e-15 for a, b in zip(series, series[1:]))
        assert result.best_cost == series[-1]

    def test_generation_cap_termination(self):
        result = run(small_config(max_generations=3), sphere_cost)
        assert result.termination == "generation-cap"
        assert result.generations == 3
        assert not result.converged

    def test_evaluation_cap_termination(self):
        result = run(small_config(max_evaluations=35, max_generations=50),
                     sphere_cost)
        assert result.termination == "evaluation-cap"
        assert result.evaluations == 35
        assert len(result.records) == 35
        assert result.best is not None

    def test_stagnation_termination(self):
        result = run(small_config(hybrid=False, stagnation_window=3,
                                  max_generations=50), constant_cost)
        assert result.termination == "stagnated"
        assert result.generations < 50

    def test_exact_grid_convergence(self):
        f = get_benchmark("sphere")
        space = f.space(2, 8)
        cfg = RunConfig(mode="ga", space=space, seed=3, init_size=30,
                        n_explor=30, n_exploit=10, max_generations=50,
                        max_evaluations=5000,
                        known_optima=f.grid_optima(space))
        result = run(cfg, f)
        assert result.converged
        assert result.termination == "converged"
        assert result.best_cost == pytest.approx(f.optimum_cost(2), abs=1e-12)

    def test_eval_indices_gap_free(self):
        result = run(small_config(), sphere_cost)
        assert [r.eval_index for r in result.records] == \
               list(range(len(result.records)))

    def test_elites_not_reevaluated(self):
        cfg = small_config(hybrid=False, max_generations=3,
                           ga=GaConfig(n_elite=2, tournament_size=3))
        result = run(cfg, sphere_cost)
        later = [r for r in result.records if r.generation >= 2]
        assert later
        assert all(r.origin != "elitism" for r in later)
        per_gen = {g: sum(1 for r in later if r.generation == g)
                   for g in {r.generation for r in later}}
        # two elites per generation carry their cost forward
        assert all(n == cfg.n_explor - 2 for n in per_gen.values())

    def test_lhs_initialization(self):
        result = run(small_config(init_method="lhs", max_generations=1),
                     sphere_cost)
        first = [r for r in result.records if r.generation == 1
                 and r.origin == "lhs"]
        assert len(first) == 20


class TestFlaggedAndFailures:
    def test_non_finite_cost_penalized_and_flagged(self):
        cfg = small_config(hybrid=False, max_generations=1)
        result = run(cfg, nan_cost)
        assert all(r.flagged for r in result.records)
        assert all(r.cost == cfg.penalty_cost for r in result.records)

    def test_flagged_duplicates_penalized(self):
        # a 1-bit genome exhausts its search space immediately, so the
        # second generation can only admit flagged duplicates
        space = ParameterSpace(np.array([0.0]), np.array([1.0]),
                               np.array([1]))
        cfg = RunConfig(mode="ga", space=space, hybrid=False, seed=0,
                        init_size=2, n_explor=4, max_generations=2,
                        penalize_flagged=True,
                        ga=GaConfig(n_elite=0, tournament_size=1,
                                    p_crossover=0.0, p_mutation=1.0,
                                    p_replication=0.0,
                                    max_regeneration_attempts=3))
        result = run(cfg, sphere_cost)
        gen2 = [r for r in result.records if r.generation == 2]
        assert gen2
        assert all(r.flagged for r in gen2)
        assert all(r.cost == cfg.penalty_cost for r in gen2)

    def test_evaluator_failure_without_checkpoint(self):
        def boom(p):
            raise RuntimeError("device on fire")

        with pytest.raises(EvaluationError) as info:
            run(small_config(), boom)
        assert info.value.checkpoint_path is None

    def test_evaluator_failure_writes_resume_token(self, tmp_path):
        path = str(tmp_path / "run.ckpt")
        calls = {"n": 0}

        def flaky(p):
            calls["n"] += 1
            if calls["n"] > 30:
                raise RuntimeError("transient outage")
            return sphere_cost(p)

        with pytest.raises(EvaluationError) as info:
            run(small_config(checkpoint_path=path), flaky)
        assert info.value.checkpoint_path == path
        assert "resume from" in str(info.value)
        result = resume(path, sphere_cost)
        assert result.termination in ("generation-cap", "converged",
                                      "stagnated", "evaluation-cap")
        assert np.isfinite(result.best_cost)


class TestCheckpoints:
    def test_blob_round_trip(self):
        payload = {"config": {"seed": 1}, "state": {"x": [1, 2, 3]}}
        blob = checkpoint_save(payload)
        assert blob.startswith(CHECKPOINT_MAGIC)
        assert checkpoint_load(blob) == payload

    def test_save_load_save_identical(self, tmp_path):
        path = str(tmp_path / "a.ckpt")
        run(small_config(checkpoint_path=path, max_generations=2),
            sphere_cost)
        payload = read_checkpoint(path)
        blob1 = checkpoint_save(payload)
        blob2 = checkpoint_save(checkpoint_load(blob1))
        assert blob1 == blob2

    def test_not_a_checkpoint(self):
        with pytest.raises(CheckpointError, match="not a checkpoint"):
            checkpoint_load(b"definitely not")

    def test_version_mismatch(self):
        blob = CHECKPOINT_MAGIC[:-2] + b"9\n" + b"\0" * 40
        with pytest.raises(CheckpointError, match="version"):
            checkpoint_load(blob)

    def test_corruption_detected(self):
        blob = bytearray(checkpoint_save({"k": "v"}))
        blob[-1] ^= 0xFF
        with pytest.raises(CheckpointError, match="corrupt"):
            checkpoint_load(bytes(blob))

    def test_truncated_file(self, tmp_path):
        path = tmp_path / "trunc.ckpt"
        path.write_bytes(checkpoint_save({"k": "v"})[:20])
        with pytest.raises(CheckpointError):
            read_checkpoint(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(CheckpointError, match="cannot read"):
            read_checkpoint(str(tmp_path / "nope.ckpt"))

    def test_write_checkpoint_atomic_replace(self, tmp_path):
        path = str(tmp_path / "w.ckpt")
        write_checkpoint(path, {"a": 1})
        write_checkpoint(path, {"a": 2})
        assert read_checkpoint(path) == {"a": 2}
        assert list(tmp_path.iterdir()) == [tmp_path / "w.ckpt"]

    def test_resume_of_finished_run_is_noop(self, tmp_path):
        path = str(tmp_path / "done.ckpt")
        ref = run(small_config(checkpoint_path=path), sphere_cost)
        again = resume(path, sphere_cost)
        assert again.termination == "already terminated"
        assert again.best_cost == ref.best_cost
        assert again.evaluations == ref.evaluations

    def test_interrupted_run_replays_bit_for_bit(self, tmp_path):
        """Resuming the snapshot taken at a generation boundary must
        reproduce the uninterrupted run exactly."""
        cfg = small_config(max_generations=5)
        ref = run(cfg, sphere_cost)

        live = tmp_path / "live.ckpt"
        frozen = tmp_path / "frozen.ckpt"
        calls = {"n": 0}

        class CopyAt:
            # copies the on-disk snapshot once evaluation 50 is reached,
            # simulating a process killed mid-generation 3
            def __call__(self, p):
                calls["n"] += 1
                if calls["n"] == 50:
                    shutil.copy(live, frozen)
                return sphere_cost(p)

        run(small_config(max_generations=5, checkpoint_path=str(live)),
            CopyAt())
        resumed = resume(str(frozen), sphere_cost)
        assert resumed.best_cost == ref.best_cost
        assert resumed.evaluations == ref.evaluations
        assert [r.to_dict() for r in resumed.records] == \
               [r.to_dict() for r in ref.records]

    def test_checkpoint_payload_carries_config_and_metadata(self, tmp_path):
        path = str(tmp_path / "meta.ckpt")
        run(small_config(checkpoint_path=path, max_generations=2),
            sphere_cost, metadata={"note": "hello"})
        payload = read_checkpoint(path)
        assert payload["metadata"] == {"note": "hello"}
        rebuilt = RunConfig.from_dict(payload["config"])
        assert rebuilt.seed == 11
        assert rebuilt.space.ndim == 2


class TestParallel:
    def test_jobs_equivalence(self):
        f = get_benchmark("sphere")
        space = f.space(2, 10)
        base = dict(mode="ga", space=space, seed=5, init_size=16,
                    n_explor=16, n_exploit=4, max_generations=3,
                    max_evaluations=2000)
        serial = run(RunConfig(**base, jobs=1), f)
        parallel = run(RunConfig(**base, jobs=2), f)
        assert [r.to_dict() for r in serial.records] == \
               [r.to_dict() for r in parallel.records]

    def test_evaluator_serial_forces_one_worker(self):
        # a stateful, unpicklable evaluator works when serial is forced
        state = {"n": 0}

        def counting(p):
            state["n"] += 1
            return sphere_cost(p)

        result = run(small_config(jobs=4, evaluator_serial=True,
                                  max_generations=2), counting)
        assert state["n"] == result.evaluations


class TestSteppedRuns:
    def space4(self):
        return ParameterSpace(np.full(4, -2.0), np.full(4, 2.0),
                              np.full(4, 8))

    def base_config(self, space):
        return RunConfig(mode="ga", space=space, seed=21, init_size=12,
                         n_explor=12, n_exploit=4, max_generations=2,
                         max_evaluations=5000)

    def test_two_stage_run(self):
        space = self.space4()
        cfg = self.base_config(space)
        stages = [StageSpec(frozen={2: 0.5, 3: 0.5}, generations=2),
                  StageSpec(generations=2)]
        result = run_stepped(stages, cfg, sphere_cost)
        assert [r.eval_index for r in result.records] == \
               list(range(len(result.records)))
        assert {r.stage for r in result.records} == {0, 1}
        assert result.best.phenotype.size == 4
        assert np.isfinite(result.best_cost)

    def test_second_stage_starts_from_seeds_exactly(self):
        space = self.space4()
        cfg = self.base_config(space)
        seeds = [np.array([0.3, -0.7, 1.1, -1.9]),
                 np.array([1.0, 1.0, 1.0, 1.0])]
        stages = [StageSpec(frozen={3: 0.0}, generations=1),
                  StageSpec(seeds=seeds, generations=1)]
        result = run_stepped(stages, cfg, sphere_cost)
        stage2 = [r for r in result.records if r.stage == 1]
        # seeds first, then the previous stage's best, all grid snapped
        assert stage2[0].origin == "seeded"
        for rec, seed in zip(stage2, seeds):
            assert np.array_equal(np.asarray(rec.phenotype),
                                  space.snap(seed))
        assert stage2[len(seeds)].origin == "seeded"

    def test_seed_builder_receives_previous_best(self):
        space = self.space4()
        cfg = self.base_config(space)
        seen = []

        def builder(prev_best):
            seen.append(np.asarray(prev_best).copy())
            return [prev_best]

        stages = [StageSpec(frozen={2: 0.5, 3: 0.5}, generations=1),
                  StageSpec(seed_builder=builder, generations=1)]
        run_stepped(stages, cfg, sphere_cost)
        assert len(seen) == 1
        assert seen[0].size == 4
        assert seen[0][2] == 0.5 and seen[0][3] == 0.5

    def test_seed_outside_domain_rejected(self):
        space = self.space4()
        cfg = self.base_config(space)
        stages = [StageSpec(seeds=[np.array([9.0, 0.0, 0.0, 0.0])])]
        with pytest.raises(ValueError, match="outside the domain"):
            run_stepped(stages, cfg, sphere_cost)

    def test_frozen_validation(self):
        space = self.space4()
        cfg = self.base_config(space)
        with pytest.raises(ValueError, match="out of range"):
            run_stepped([StageSpec(frozen={7: 0.0})], cfg, sphere_cost)
        with pytest.raises(ValueError, match="outside bounds"):
            run_stepped([StageSpec(frozen={0: 99.0})], cfg, sphere_cost)
        with pytest.raises(ValueError, match="at least one dimension"):
            run_stepped([StageSpec(frozen={i: 0.0 for i in range(4)})],
                        cfg, sphere_cost)
        with pytest.raises(ValueError, match="at least one stage"):
            run_stepped([], cfg, sphere_cost)

    def test_stage_budgets_are_cumulative(self):
        space = self.space4()
        cfg = self.base_config(space)
        stages = [StageSpec(frozen={3: 0.0}, max_evaluations=15,
                            generations=10),
                  StageSpec(max_evaluations=15, generations=10)]
        result = run_stepped(stages, cfg, sphere_cost)
        assert result.evaluations == 30
        n_stage0 = sum(1 for r in result.records if r.stage == 0)
        assert n_stage0 == 15


class TestConfigSerialization:
    def test_round_trip(self):
        cfg = small_config(known_optima=[np.array([0.0, 0.0])],
                           stagnation_window=5, jobs=3)
        again = RunConfig.from_dict(cfg.to_dict())
        assert again.to_dict() == cfg.to_dict()

    def test_config_dict_is_picklable(self):
        cfg = small_config()
        blob = pickle.dumps(cfg.to_dict())
        assert RunConfig.from_dict(pickle.loads(blob)).seed == cfg.seed

    def test_invalid_configs_rejected(self):
        with pytest.raises(ValueError, match="mode"):
            RunConfig(mode="annealing", space=sphere_space())
        with pytest.raises(ValueError, match="parameter space"):
            RunConfig(mode="ga")
        with pytest.raises(ValueError, match="init_method"):
            RunConfig(mode="ga", space=sphere_space(), init_method="grid")
        with pytest.raises(ValueError, match="n_explor"):
            RunConfig(mode="ga", space=sphere_space(), n_explor=2)
