"""The mixed-type tabular diffusion model as a scikit-learn style estimator."""

from __future__ import annotations

import json
import logging
import math
from pathlib import Path

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .data import EncodedMatrix, TableEncoder, TableSchema
from .denoiser import Adam, Denoiser
from .gaussian import gauss_loss, gauss_loss_grad, p_sample_gauss, q_sample_gauss
from .multinomial import cat_kl_terms, p_sample_cat, q_sample_cat, sample_categorical
from .schedule import NoiseSchedule, make_schedule

logger = logging.getLogger(__name__)

MODEL_FORMAT = "tabddpm-model/1"


class TabDDPM(BaseEstimator):
    """Gaussian + multinomial denoising diffusion over a declared table schema.

    Continuous features are diffused with Gaussian noise and categorical
    features with uniform-resampling noise; one MLP predicts the Gaussian
    noise and the clean-category logits. If the schema declares a target
    the reverse process is conditioned on the class label.

    Parameters
    ----------
    schema : TableSchema
    T : int
        Number of diffusion steps.
    schedule, beta_start, beta_end
        Variance schedule family (``"linear"`` or ``"cosine"``) and the
        linear endpoints.
    hidden_dims : tuple of int
    embed_dim : int
        Width of the timestep/class embedding and of the input projection.
    lr, epochs, batch_size
        Adam learning rate and training budget.
    random_state : int
        Seeds parameter initialisation and all training randomness.
    argmax_final : bool
        Decode categorical columns by argmax at the last reverse step
        instead of sampling.
    """

    def __init__(self, schema: TableSchema = None, T: int = 1000, schedule: str = "linear",
                 beta_start: float = 1e-4, beta_end: float = 0.02, hidden_dims=(256, 256),
                 embed_dim: int = 128, lr: float = 1e-3, epochs: int = 500, batch_size: int = 256,
                 random_state: int = 0, argmax_final: bool = True):
        self.schema = schema
        self.T = T
        self.schedule = schedule
        self.beta_start = beta_start
        self.beta_end = beta_end
        self.hidden_dims = hidden_dims
        self.embed_dim = embed_dim
        self.lr = lr
        self.epochs = epochs
        self.batch_size = batch_size
        self.random_state = random_state
        self.argmax_final = argmax_final

    # -- training -----------------------------------------------------------

    def fit(self, X: pd.DataFrame, y=None):
        """Fit the encoder on ``X`` and train the denoiser on its encoding."""
        if self.schema is None:
            raise ValueError("TabDDPM needs a schema")
        encoder = TableEncoder(self.schema).fit(X)
        return self.fit_encoded(encoder.encode(X), encoder)

    def fit_encoded(self, data: EncodedMatrix, encoder: TableEncoder):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        X = np.asarray(data.values, dtype=np.float64)
        n = X.shape[0]
        if n == 0:
            raise ValueError("empty training matrix")
        if X.shape[1] != encoder.n_features_out_:
            raise ValueError("encoded width does not match the encoder")
        conditional = encoder.n_classes_ > 0
        if conditional != (data.labels is not None):
            raise ValueError("labels must be given exactly when the schema declares a target")

        self.encoder_ = encoder
        self.schedule_ = make_schedule(self.T, self.schedule, self.beta_start, self.beta_end)
        net = Denoiser(encoder.n_cont_, encoder.cat_sizes_, encoder.n_classes_,
                       self.hidden_dims, self.embed_dim).init_params(self.random_state)
        self.denoiser_ = net
        if conditional:
            counts = np.bincount(data.labels, minlength=encoder.n_classes_)
            self.class_prior_ = counts / counts.sum()
        else:
            self.class_prior_ = None

        rng = np.random.default_rng([self.random_state, 1])
        opt = Adam(lr=self.lr)
        self.loss_history_ = []
        for epoch in range(self.epochs):
            perm = rng.permutation(n)
            total = 0.0
            for b, start in enumerate(range(0, n, self.batch_size)):
                idx = perm[start:start + self.batch_size]
                labels = data.labels[idx] if conditional else None
                loss, grads = self._batch_loss(X[idx], labels, rng)
                if not math.isfinite(loss):
                    raise FloatingPointError(f"non-finite loss at epoch {epoch + 1}, batch {b + 1}")
                opt.step(net.params, grads)
                total += loss * len(idx)
            self.loss_history_.append(total / n)
            logger.debug("epoch %d loss %.6f", epoch + 1, total / n)
        return self

    def _batch_loss(self, x0, labels, rng):
        """Combined loss for one minibatch and its parameter gradients."""
        net, sched, enc = self.denoiser_, self.schedule_, self.encoder_
        b = x0.shape[0]
        t = rng.integers(1, sched.T + 1, size=b)
        nc = enc.n_cont_
        eps = rng.standard_normal((b, nc))
        parts = [q_sample_gauss(x0[:, :nc], t, eps, sched)]
        blocks = enc.blocks()
        for lo, hi in blocks:
            parts.append(q_sample_cat(x0[:, lo:hi], t, sched, rng))
        x_t = np.concatenate(parts, axis=1)

        out, cache = net.forward(x_t, t, labels)
        loss = gauss_loss(eps, out.eps_hat) if nc else 0.0
        d_eps = gauss_loss_grad(eps, out.eps_hat) if nc else np.zeros((b, 0))
        d_logits = []
        C = len(blocks)
        for (lo, hi), logits in zip(blocks, out.cat_logits):
            terms, g = cat_kl_terms(x0[:, lo:hi], x_t[:, lo:hi], logits, t, sched, with_grad=True)
            loss += terms.mean() / C
            d_logits.append(g / (b * C))
        return float(loss), net.backward(cache, d_eps, d_logits)

    # -- generation ---------------------------------------------------------

    def _check_fitted(self):
        if not hasattr(self, "denoiser_"):
            raise NotFittedError("TabDDPM is not fitted yet")

    @property
    def conditional(self) -> bool:
        self._check_fitted()
        return self.encoder_.n_classes_ > 0

    def sample_labels(self, n: int, balanced: bool, rng) -> np.ndarray | None:
        if not self.conditional:
            if balanced:
                raise ValueError("balanced sampling needs a model with a target column")
            return None
        K = self.encoder_.n_classes_
        if balanced:
            return np.repeat(np.arange(K), -(-n // K))[:n]
        return rng.choice(K, size=n, p=self.class_prior_)

    def sample_encoded(self, n: int, balanced: bool = False, random_state: int = 0) -> EncodedMatrix:
        """Run the reverse chain for ``n`` rows; continuous values end clipped to [0, 1]."""
        self._check_fitted()
        if n < 1:
            raise ValueError("n must be >= 1")
        rng = np.random.default_rng(random_state)
        labels = self.sample_labels(n, balanced, rng)
        net, sched, enc = self.denoiser_, self.schedule_, self.encoder_
        nc = enc.n_cont_
        blocks = enc.blocks()
        x_cont = rng.standard_normal((n, nc))
        x_cat = [sample_categorical(np.full((n, hi - lo), 1.0 / (hi - lo)), rng) for lo, hi in blocks]
        for t in range(sched.T, 0, -1):
            x = np.concatenate([x_cont] + x_cat, axis=1)
            out, _ = net.forward(x, t, labels)
            z = rng.standard_normal((n, nc)) if t > 1 else None
            x_cont = p_sample_gauss(x_cont, t, out.eps_hat, sched, z)
            x_cat = [p_sample_cat(xc, lg, t, sched, rng, self.argmax_final)
                     for xc, lg in zip(x_cat, out.cat_logits)]
        values = np.concatenate([np.clip(x_cont, 0.0, 1.0)] + x_cat, axis=1)
        return EncodedMatrix(values, labels)

    def sample(self, n: int, balanced: bool = False, random_state: int = 0) -> pd.DataFrame:
        """Generate ``n`` decoded rows; ``balanced`` gives ceil(n/K) rows per class, truncated to n."""
        m = self.sample_encoded(n, balanced, random_state)
        return self.encoder_.inverse_transform(m.values, m.labels)

    # -- persistence --------------------------------------------------------

    def to_dict(self) -> dict:
        self._check_fitted()
        params = self.get_params()
        params.pop("schema")
        params["hidden_dims"] = list(params["hidden_dims"])
        return {
            "format": MODEL_FORMAT,
            "config": params,
            "encoder": self.encoder_.to_dict(),
            "schedule": self.schedule_.to_dict(),
            "denoiser": self.denoiser_.to_dict(),
            "class_prior": None if self.class_prior_ is None else self.class_prior_.tolist(),
            "loss_history": list(self.loss_history_),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TabDDPM":
        if d.get("format") != MODEL_FORMAT:
            raise ValueError(f"not a model file (format {d.get('format')!r})")
        encoder = TableEncoder.from_dict(d["encoder"])
        cfg = dict(d["config"])
        cfg["hidden_dims"] = tuple(cfg["hidden_dims"])
        model = cls(schema=encoder.schema, **cfg)
        model.encoder_ = encoder
        model.schedule_ = NoiseSchedule.from_dict(d["schedule"])
        model.denoiser_ = Denoiser.from_dict(d["denoiser"])
        prior = d.get("class_prior")
        model.class_prior_ = None if prior is None else np.array(prior, dtype=np.float64)
        model.loss_history_ = list(d.get("loss_history", []))
        return model

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "TabDDPM":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))
