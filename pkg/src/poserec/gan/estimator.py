"""scikit-learn style wrapper around the GAN trainer."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from ..exceptions import ValidationError
from .train import GanConfig, sample_images, train_gan_arrays


class DeskGAN(BaseEstimator):
    """Small fully connected GAN trained on two image sets.

    ``fit(X)`` takes images scaled to [-1, 1] as rows of length
    ``image_side**2 * channels`` (or as ``(n, side, side[, 3])`` arrays).
    The first half of ``X`` is set A, the second half set B, and each epoch
    visits every (A_i, B_j) pair once. Pass ``X_b`` to give set B explicitly.
    """

    def __init__(self, image_side=16, channels=1, latent_dim=64, g_hidden=(128,),
                 d_hidden=(128,), learning_rate=2e-4, beta1=0.9, beta2=0.999, eps=1e-8,
                 epochs=2000, seed=0):
        self.image_side = image_side
        self.channels = channels
        self.latent_dim = latent_dim
        self.g_hidden = g_hidden
        self.d_hidden = d_hidden
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.epochs = epochs
        self.seed = seed

    def _config(self) -> GanConfig:
        return GanConfig(**self.get_params())

    def _rows(self, X, dim):
        X = np.asarray(X, dtype=np.float64)
        X = check_array(X.reshape(len(X), -1), ensure_min_samples=1)
        if X.shape[1] != dim:
            raise ValidationError(f"expected rows of {dim} pixel values, got {X.shape[1]}")
        if X.min() < -1 or X.max() > 1:
            raise ValidationError("training pixels must be scaled to [-1, 1]")
        return X

    def fit(self, X, y=None, X_b=None):
        config = self._config()
        X = self._rows(X, config.image_dim)
        if X_b is None:
            if len(X) < 2 or len(X) % 2:
                raise ValidationError("X must hold an even number (>= 2) of images to split in half")
            half = len(X) // 2
            a, b = X[:half], X[half:]
        else:
            a, b = X, self._rows(X_b, config.image_dim)
        self.model_, self.losses_ = train_gan_arrays(a, b, config)
        self.n_features_in_ = config.image_dim
        return self

    def sample(self, n_samples=1, seed=0):
        """Generated images as floats in [-1, 1], shaped like the training images."""
        check_is_fitted(self, "model_")
        px = sample_images(self.model_, n_samples, seed)
        return px.astype(np.float64) / 127.5 - 1.0

    def discriminate(self, X):
        """Discriminator probability that each row of ``X`` is real."""
        from .nn import forward_discriminator
        check_is_fitted(self, "model_")
        return forward_discriminator(self.model_.discriminator,
                                     self._rows(X, self.n_features_in_))
