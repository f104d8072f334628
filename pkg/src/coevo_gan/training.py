"""Adversarial losses and the per-couple training routine."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import nn
from .nn import AdamState, ForwardCache, NetworkParams

PROB_CLAMP = 1e-7
GENERATOR_LOSSES = ("non_saturating", "minimax")


class TrainingError(RuntimeError):
    """Training produced a non-finite loss.  Carries where it happened."""

    def __init__(self, message: str, *, epoch: int | None = None, batch: int | None = None,
                 generation: int | None = None):
        self.epoch = epoch
        self.batch = batch
        self.generation = generation
        super().__init__(message)

    def __str__(self) -> str:
        where = ", ".join(f"{k}={v}" for k, v in
                          (("generation", self.generation), ("epoch", self.epoch), ("batch", self.batch))
                          if v is not None)
        base = super().__str__()
        return f"{base} ({where})" if where else base


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 3e-4
    batch_size: int = 100
    n_t: int = 5
    latent_dim: int = 32
    generator_loss: str = "non_saturating"

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise nn.ConfigError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise nn.ConfigError("batch_size must be >= 1")
        if self.n_t < 0:
            raise nn.ConfigError("n_t must be >= 0")
        if self.latent_dim < 1:
            raise nn.ConfigError("latent_dim must be >= 1")
        if self.generator_loss not in GENERATOR_LOSSES:
            raise nn.ConfigError(f"generator_loss must be one of {GENERATOR_LOSSES}")


@dataclass
class GanPair:
    generator: NetworkParams
    gen_opt: AdamState
    discriminator: NetworkParams
    disc_opt: AdamState


@dataclass
class LossTrace:
    disc_loss: list[float] = field(default_factory=list)
    gen_loss: list[float] = field(default_factory=list)
    disc_steps: int = 0
    gen_steps: int = 0


def _clamp(p: np.ndarray) -> np.ndarray:
    return np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)


def discriminator_loss(d_real: np.ndarray, d_fake: np.ndarray) -> float:
    """-(mean log D(x) + mean log(1 - D(G(z))))."""
    d_real = np.asarray(d_real, dtype=np.float64)
    d_fake = np.asarray(d_fake, dtype=np.float64)
    if d_real.size == 0 or d_fake.size == 0:
        raise ValueError("discriminator_loss needs non-empty batches")
    return float(-(np.log(_clamp(d_real)).mean() + np.log(1.0 - _clamp(d_fake)).mean()))


def generator_loss(d_fake: np.ndarray, kind: str = "non_saturating") -> float:
    """Non-saturating ``-mean log D(G(z))``; ``kind="minimax"`` gives ``mean log(1 - D(G(z)))``."""
    d_fake = np.asarray(d_fake, dtype=np.float64)
    if d_fake.size == 0:
        raise ValueError("generator_loss needs a non-empty batch")
    p = _clamp(d_fake)
    if kind == "minimax":
        return float(np.log(1.0 - p).mean())
    return float(-np.log(p).mean())


def latent(rng: np.random.Generator, n: int, latent_dim: int) -> np.ndarray:
    return rng.standard_normal((n, latent_dim))


def disc_step(pair: GanPair, real: np.ndarray, z: np.ndarray) -> float:
    """One discriminator Adam step; returns the loss before the update."""
    b = len(real)
    fake = nn.forward(pair.generator, z)
    cache = ForwardCache()
    p = nn.forward(pair.discriminator, np.vstack([real, fake]), cache)
    p_real, p_fake = p[:b], p[b:]
    loss = discriminator_loss(p_real, p_fake)
    # gradients taken on the logits: d(-log s)/dl = s - 1, d(-log(1 - s))/dl = s
    g_logit = np.empty_like(p)
    g_logit[:b] = (p_real - 1.0) / b
    g_logit[b:] = p_fake / len(fake)
    grads, _ = nn.backward(pair.discriminator, None, g_logit, cache,
                           wrt_pre_activation=True, input_grad=False)
    nn.adam_step(pair.discriminator, grads, pair.disc_opt)
    return loss


def gen_step(pair: GanPair, z: np.ndarray, kind: str = "non_saturating") -> float:
    """One generator Adam step through a frozen discriminator."""
    n = len(z)
    g_cache = ForwardCache()
    fake = nn.forward(pair.generator, z, g_cache)
    d_cache = ForwardCache()
    p = nn.forward(pair.discriminator, fake, d_cache)
    loss = generator_loss(p, kind)
    g_logit = (p - 1.0) / n if kind == "non_saturating" else -p / n
    _, g_fake = nn.backward(pair.discriminator, None, g_logit, d_cache,
                            wrt_pre_activation=True, param_grad=False)
    grads, _ = nn.backward(pair.generator, None, g_fake, g_cache, input_grad=False)
    nn.adam_step(pair.generator, grads, pair.gen_opt)
    return loss


def train_pair(pair: GanPair, data: np.ndarray, cfg: TrainConfig, rng: np.random.Generator,
               n_epochs: int | None = None) -> tuple[GanPair, LossTrace]:
    """Train a couple for ``cfg.n_t`` epochs in place.

    Each epoch shuffles ``data`` and walks it in full batches (a trailing
    partial batch is dropped); every batch does one discriminator step and
    then one generator step, each on fresh latent noise.
    """
    epochs = cfg.n_t if n_epochs is None else n_epochs
    n, bs = len(data), cfg.batch_size
    if n < bs:
        raise ValueError(f"need at least batch_size={bs} training rows, got {n}")
    n_batches = n // bs
    trace = LossTrace()
    for epoch in range(epochs):
        order = rng.permutation(n)
        d_sum = g_sum = 0.0
        for b in range(n_batches):
            real = data[order[b * bs:(b + 1) * bs]]
            try:
                d_loss = disc_step(pair, real, latent(rng, bs, cfg.latent_dim))
                g_loss = gen_step(pair, latent(rng, bs, cfg.latent_dim), cfg.generator_loss)
            except nn.NumericError as exc:
                raise TrainingError(str(exc), epoch=epoch, batch=b) from exc
            if not (np.isfinite(d_loss) and np.isfinite(g_loss)):
                raise TrainingError("non-finite loss", epoch=epoch, batch=b)
            d_sum += d_loss
            g_sum += g_loss
        trace.disc_loss.append(d_sum / n_batches)
        trace.gen_loss.append(g_sum / n_batches)
        trace.disc_steps += n_batches
        trace.gen_steps += n_batches
    return pair, trace


def new_pair(rng: np.random.Generator, cfg: TrainConfig) -> GanPair:
    g = nn.init_network(nn.generator_topology(cfg.latent_dim), rng)
    d = nn.init_network(nn.discriminator_topology(), rng)
    return GanPair(g, AdamState.for_network(g, cfg.learning_rate),
                   d, AdamState.for_network(d, cfg.learning_rate))
