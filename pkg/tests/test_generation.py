from __future__ import annotations

import json

import numpy as np
import pytest

from parsynth.augment import DiscardList, apply_discards
from parsynth.degrade import DegradeParams
from parsynth.generation import (PlanError, STATUS_FAILED,
                                 STATUS_PENDING, STATUS_REJECTED_DETECTOR,
                                 crop_person, pick_person_box, plan_from_base,
                                 plan_augmentation, read_ledger,
                                 run_generation_batch, round_half_up,
                                 submit_job)
from parsynth.images import ImageBuffer
from parsynth.manifest import AttributeSchema, DatasetManifest, ImageRecord
from parsynth.prompts import compile_prompt, default_template, default_wildcard_table
from parsynth.services import (DetectorBox, DimensionMismatchError,
                               GenerationJob, MockDetectorClient,
                               MockDiffusionClient, NoDetectionError,
                               RetryPolicy, TransportError)

TEMPLATE = default_template()
TABLE = default_wildcard_table()

# small canvas + cheap degrade so batch tests stay fast
FAST_CANVAS = (128, 64)
FAST_PARAMS = DegradeParams(noise_size=(64, 64), blur_radius=2)


def small_manifest(target_count=5):
    schema = AttributeSchema(("hs-BaldHead", "AgeLess16", "action-Holding"))
    records = [ImageRecord(f"r{i}", f"{i}.png", "train", "real",
                           (1 if i < target_count else 0, 0, 0))
               for i in range(target_count + 3)]
    return DatasetManifest(schema, tuple(records))


def make_job(seed=123456789, canvas=FAST_CANVAS):
    spec = compile_prompt(TEMPLATE, TABLE, "hs-BaldHead", seed)
    return GenerationJob(spec=spec, job_id=f"t-{seed}", canvas=canvas)


def run_batch(plan, tmp_path, diffusion=None, detector=None, **kw):
    return run_generation_batch(
        plan, TEMPLATE, TABLE,
        diffusion or MockDiffusionClient(),
        detector or MockDetectorClient(),
        FAST_PARAMS, tmp_path, canvas=FAST_CANVAS,
        retry=RetryPolicy(sleep=lambda s: None), **kw)


class TestPlan:
    def test_five_hundred_percent_of_391(self):
        plan = plan_from_base("hs-BaldHead", 391, 500)
        assert plan.n_images == 1955

    def test_hundred_percent_doubles(self):
        plan = plan_from_base("hs-BaldHead", 122, 100)
        assert plan.n_images == 122

    def test_half_percent_rounds_half_up(self):
        assert plan_from_base("x", 122, 50).n_images == 61
        assert round_half_up(0.5) == 1
        assert round_half_up(1.5) == 2
        assert round_half_up(1.49) == 1

    def test_candidate_count_ceils_oversample(self):
        plan = plan_from_base("x", 10, 100, oversample_factor=1.3)
        assert plan.candidate_count == 13
        plan = plan_from_base("x", 10, 110, oversample_factor=1.3)
        assert plan.candidate_count == 15  # ceil(11 * 1.3)

    def test_from_manifest_counts_positives(self):
        plan = plan_augmentation(small_manifest(5), "hs-BaldHead", 100)
        assert plan.base_count == 5
        assert plan.n_images == 5

    def test_zero_base_count_rejected(self):
        with pytest.raises(PlanError, match="no positive"):
            plan_augmentation(small_manifest(0), "hs-BaldHead", 100)

    def test_seed_sequence_is_consecutive(self):
        plan = plan_from_base("x", 10, 100, batch_size=4, initial_seed=1000)
        assert [plan.seed_at(i) for i in range(10)] == list(range(1000, 1010))

    def test_prefix_nesting_of_percentages(self):
        pcts = (50, 100, 200, 300, 400, 500)
        plans = [plan_from_base("x", 122, p) for p in pcts]
        seed_lists = [[pl.seed_at(i) for i in range(pl.n_images)]
                      for pl in plans]
        for small, big in zip(seed_lists, seed_lists[1:]):
            assert big[: len(small)] == small
            assert len(big) > len(small)


class TestSubmit:
    def test_mock_produces_canvas_sized_image(self):
        img, attempts = submit_job(make_job(), MockDiffusionClient())
        assert (img.width, img.height) == FAST_CANVAS
        assert attempts == 1

    def test_dimension_mismatch_surfaces(self):
        class WrongSize:
            def generate(self, job):
                return ImageBuffer.full(50, 50, 0.5)

        with pytest.raises(DimensionMismatchError):
            submit_job(make_job(), WrongSize())

    def test_transient_failures_retry_with_attempt_count(self):
        service = MockDiffusionClient(fail_first=3)
        img, attempts = submit_job(make_job(), service,
                                   RetryPolicy(attempts=5, sleep=lambda s: None))
        assert attempts == 4

    def test_retry_budget_exhausted(self):
        service = MockDiffusionClient(fail_first=10)
        with pytest.raises(TransportError, match="gave up"):
            submit_job(make_job(), service,
                       RetryPolicy(attempts=5, sleep=lambda s: None))

    def test_same_seed_reproduces_image(self):
        a, _ = submit_job(make_job(seed=42), MockDiffusionClient())
        b, _ = submit_job(make_job(seed=42), MockDiffusionClient())
        assert np.array_equal(a.data, b.data)
        c, _ = submit_job(make_job(seed=43), MockDiffusionClient())
        assert not np.array_equal(a.data, c.data)


class TestCrop:
    def test_full_frame_box_is_identity(self):
        img = ImageBuffer.full(40, 20, 0.5)
        det = MockDetectorClient(boxes_by_call={
            0: [DetectorBox(0, 0, 40, 20, 0.9)]})
        out = crop_person(img, det)
        assert (out.width, out.height) == (40, 20)

    def test_box_crop_dims(self):
        img = ImageBuffer.full(2784 // 8, 1024 // 8, 0.5)
        det = MockDetectorClient(boxes_by_call={
            0: [DetectorBox(100, 50, 200, 60, 0.9)]})
        out = crop_person(img, det)
        assert (out.width, out.height) == (200, 60)

    def test_no_boxes_raises_no_detection(self):
        det = MockDetectorClient(boxes_by_call={0: []})
        with pytest.raises(NoDetectionError):
            crop_person(ImageBuffer.full(10, 10, 0.5), det)

    def test_highest_confidence_wins_then_area(self):
        a = DetectorBox(0, 0, 5, 5, 0.5)
        b = DetectorBox(0, 0, 5, 5, 0.9)
        c = DetectorBox(0, 0, 9, 9, 0.9)
        assert pick_person_box([a, b]) is b
        assert pick_person_box([b, c]) is c


class TestBatchRun:
    def test_all_success(self, tmp_path):
        plan = plan_from_base("hs-BaldHead", 5, 100, oversample_factor=1.0)
        ledger = run_batch(plan, tmp_path)
        assert len(ledger.rows) == 5
        assert all(r.status == STATUS_PENDING for r in ledger.rows)
        for row in ledger.rows:
            assert (tmp_path / row.image).exists()

    def test_resume_skips_completed(self, tmp_path):
        plan = plan_from_base("hs-BaldHead", 5, 100, oversample_factor=1.0)

        class CountingDiffusion(MockDiffusionClient):
            pass

        first = CountingDiffusion()
        interrupted = plan_from_base("hs-BaldHead", 3, 100,
                                     oversample_factor=1.0)
        run_batch(interrupted, tmp_path, diffusion=first,
                  batch_id="hs-BaldHead-100")
        assert first.calls == 3
        second = CountingDiffusion()
        ledger = run_batch(plan, tmp_path, diffusion=second,
                           batch_id="hs-BaldHead-100")
        assert second.calls == 2  # only the two missing indices ran
        assert sorted(r.index for r in ledger.rows) == [0, 1, 2, 3, 4]

    def test_detector_rejection_recorded(self, tmp_path):
        plan = plan_from_base("hs-BaldHead", 5, 100, oversample_factor=1.0)
        det = MockDetectorClient(boxes_by_call={2: []})
        ledger = run_batch(plan, tmp_path, detector=det)
        by_index = ledger.by_index()
        assert by_index[2].status == STATUS_REJECTED_DETECTOR
        assert by_index[2].image == ""
        pending = [i for i, r in by_index.items() if r.status == STATUS_PENDING]
        assert len(pending) == 4
        assert len(list((tmp_path / "images").glob("*.png"))) == 4

    def test_persistent_failure_recorded_best_effort(self, tmp_path):
        plan = plan_from_base("hs-BaldHead", 2, 100, oversample_factor=1.0)
        ledger = run_batch(plan, tmp_path,
                           diffusion=MockDiffusionClient(fail_first=100))
        assert all(r.status == STATUS_FAILED for r in ledger.rows)
        assert all("TransportError" in r.error for r in ledger.rows)

    def test_single_index_rerun_is_bit_identical(self, tmp_path):
        plan = plan_from_base("hs-BaldHead", 3, 100, oversample_factor=1.0)
        ledger = run_batch(plan, tmp_path / "a", batch_id="b1")
        target_row = ledger.by_index()[1]
        # replay index 1 alone in a fresh directory
        solo = plan_from_base("hs-BaldHead", 2, 100, oversample_factor=1.0)
        ledger2 = run_batch(solo, tmp_path / "b", batch_id="b1")
        row2 = ledger2.by_index()[1]
        assert row2.seed == target_row.seed
        assert ((tmp_path / "a" / target_row.image).read_bytes()
                == (tmp_path / "b" / row2.image).read_bytes())

    def test_parallel_run_matches_serial(self, tmp_path):
        plan = plan_from_base("hs-BaldHead", 4, 100, oversample_factor=1.0)
        serial = run_batch(plan, tmp_path / "serial", batch_id="x")
        parallel = run_batch(plan, tmp_path / "parallel", batch_id="x",
                             parallelism=4)
        for i in range(4):
            a = (tmp_path / "serial" / serial.by_index()[i].image).read_bytes()
            b = (tmp_path / "parallel" / parallel.by_index()[i].image).read_bytes()
            assert a == b

    def test_ledger_rows_carry_prompts(self, tmp_path):
        plan = plan_from_base("hs-BaldHead", 2, 100, oversample_factor=1.0)
        ledger = run_batch(plan, tmp_path)
        for row in ledger.rows:
            assert row.prompt["target_attribute"] == "hs-BaldHead"
            assert row.prompt["seed"] == row.seed
            assert "bald asian person" in row.prompt["positive"]

    def test_ledger_file_is_append_only_json_lines(self, tmp_path):
        plan = plan_from_base("hs-BaldHead", 2, 100, oversample_factor=1.0)
        run_batch(plan, tmp_path)
        lines = (tmp_path / "ledger.jsonl").read_text().strip().splitlines()
        assert len(lines) == 2
        for line in lines:
            json.loads(line)


class TestDiscardIntegration:
    def make_ledger(self, tmp_path, n=5, reject_at=None):
        plan = plan_from_base("hs-BaldHead", n, 100, oversample_factor=1.0)
        det = MockDetectorClient(
            boxes_by_call={reject_at: []} if reject_at is not None else {})
        return run_batch(plan, tmp_path, detector=det, batch_id="B")

    def test_reject_one_of_five(self, tmp_path):
        ledger = self.make_ledger(tmp_path)
        accepted = apply_discards(ledger, DiscardList("B", (2,)), 4)
        assert accepted == [0, 1, 3, 4]

    def test_no_rejections_keeps_all(self, tmp_path):
        ledger = self.make_ledger(tmp_path)
        assert apply_discards(ledger, DiscardList("B", ()), 5) == [0, 1, 2, 3, 4]

    def test_oversample_absorbs_rejection(self, tmp_path):
        ledger = self.make_ledger(tmp_path, n=7)
        accepted = apply_discards(ledger, DiscardList("B", (0,)), 5)
        assert accepted == [1, 2, 3, 4, 5]

    def test_batch_mismatch_rejected(self, tmp_path):
        ledger = self.make_ledger(tmp_path)
        with pytest.raises(ValueError, match="batch"):
            apply_discards(ledger, DiscardList("OTHER", (0,)), 5)

    def test_out_of_range_index_rejected(self, tmp_path):
        ledger = self.make_ledger(tmp_path)
        with pytest.raises(ValueError, match="not in batch"):
            apply_discards(ledger, DiscardList("B", (99,)), 5)

    def test_idempotent_and_order_insensitive(self, tmp_path):
        ledger = self.make_ledger(tmp_path)
        a = apply_discards(ledger, DiscardList("B", (3, 1)), 5)
        b = apply_discards(ledger, DiscardList("B", (1, 3, 3, 1)), 5)
        assert a == b == [0, 2, 4]
