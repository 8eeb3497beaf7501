"""Desk-scale GAN trained on the recommender's output."""
from .adam import AdamState, adam_step
from .estimator import DeskGAN
from .nn import MLP, backward, bce_loss, forward, forward_discriminator, forward_generator
from .schedule import (SplitDatasets, TrainingSchedule, build_schedule, load_split, save_split,
                       split_datasets)
from .train import (GanConfig, GanModel, LossRecord, generate_samples, load_model, prepare_image,
                    sample_images, save_model, train_gan, train_gan_arrays, train_step,
                    write_loss_log)

__all__ = [
    "AdamState", "adam_step", "DeskGAN", "MLP", "backward", "bce_loss", "forward",
    "forward_discriminator", "forward_generator", "SplitDatasets", "TrainingSchedule",
    "build_schedule", "load_split", "save_split", "split_datasets", "GanConfig", "GanModel",
    "LossRecord", "generate_samples", "load_model", "prepare_image", "sample_images",
    "save_model", "train_gan", "train_gan_arrays", "train_step", "write_loss_log",
]
