"""Distilling graph representations into MLP students with a diffusion assistant."""

__version__ = "0.1.0"

from .core import Mlp, Optimizer, load_checkpoint, make_rng, save_checkpoint
from .diffusion import DiffusionSchedule, NoisePredictor, build_schedule, forward_noise, train_assistant
from .distill import DistillConfig, make_student, train_student, train_student_mse_baseline
from .graph import Graph, generate_sbm, load_dataset, stratified_split
from .pipeline import PipelineConfig
from .teacher import EmbeddingSet, standardize, train_gae
