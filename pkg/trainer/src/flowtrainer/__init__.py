"""Soft-label flow classifier training, prediction export, and score serving."""

from .dataset import Dataset, TraceRow, TrainingExample, build_dataset, read_trace
from .export import export_predictions, predict_per_flow
from .features import soft_label, tokenize_header
from .models import LogisticModel, TransformerModel, load_model, save_model, score_batch
from .train import TrainerConfig, TrainingError, TrainResult, train

__version__ = "0.1.0"
