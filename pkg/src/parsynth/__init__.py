"""Data-centric synthetic augmentation toolkit for pedestrian-attribute
datasets: weakness scoring, seeded prompt compilation, generation
orchestration, surveillance-style degradation, extended-label merging, and
the augmented BCE loss."""

from .augment import (AcceptedImage, DiscardList, annotate_synthetic,
                      apply_discards, merge_manifests)
from .degrade import (DegradeParams, brightness_contrast, degrade_chain,
                      gaussian_blur, generate_noise, pixelate,
                      soft_light_blend)
from .generation import (AugmentationPlan, BatchLedger, plan_augmentation,
                         run_generation_batch, submit_job)
from .images import ImageBuffer, load_png
from .loss import bce_augmented, bce_augmented_grad, emit_weight_matrix
from .manifest import (AttributeSchema, DatasetManifest, ImageRecord,
                       ManifestError, SplitStats, load_manifest,
                       save_manifest, split_stats)
from .metrics import (AttributeMetrics, ConfusionCounts, ExampleMetrics,
                      attribute_metrics, binarize, confusion, example_metrics)
from .prompts import (PromptSpec, PromptTemplate, SeedPlan, WildcardTable,
                      batch_prompts, compile_prompt, default_template,
                      default_wildcard_table, implied_attributes, seed_for)
from .scoring import (AttributeScore, CriteriaThresholds, RankingReport,
                      aggregate_cross_dataset, rank_attributes,
                      score_attribute)

__version__ = "0.1.0"
