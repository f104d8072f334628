"""Coevolutionary GAN training: (mu, lambda), (mu + lambda) and the MG-MD baseline.

All variants share one loop (``run_coea``):

1. initialise mu generators and mu discriminators and evaluate them
   against each other;
2. each generation select lambda offspring per role (tournament or
   truncation), pair them randomly and train every couple for n_t epochs;
3. merge the offspring into the population (for the comma variant the
   parents are dropped first), re-evaluate the merged populations and
   keep the mu best of each role.

MG-MD (``run_mgmd``) keeps its mu couples fixed and only re-pairs them.
Fitness is a mean adversarial loss, so lower is better everywhere.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from . import nn, seeding
from .datasets import DatasetSplit
from .metrics import MetricsReport, evaluate_generator
from .nn import AdamState, ConfigError, NetworkParams
from .training import (GanPair, TrainConfig, TrainingError, discriminator_loss, generator_loss,
                       latent, train_pair)

log = logging.getLogger(__name__)

VARIANTS = ("comma_tournament", "plus_elitist", "plus_tournament", "mg_md")
COEA_VARIANTS = VARIANTS[:3]

# metric stream key for the terminal report
FINAL = 1 << 32


@dataclass
class Individual:
    id: int
    params: NetworkParams
    optimizer: AdamState
    fitness: float = float("nan")

    def clone(self, new_id: int) -> "Individual":
        params, opt = nn.clone_network(self.params, self.optimizer)
        return Individual(new_id, params, opt, self.fitness)


@dataclass
class Population:
    role: str
    members: list[Individual]
    capacity: int
    ids: Iterator[int] = field(default_factory=itertools.count, repr=False)

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def spawn(self, parent: Individual) -> Individual:
        """Clone ``parent`` under a fresh id."""
        return parent.clone(next(self.ids))

    def best(self) -> Individual:
        return min(self.members, key=lambda ind: (ind.fitness, ind.id))

    def with_members(self, members: list[Individual]) -> "Population":
        return Population(self.role, members, self.capacity, self.ids)


@dataclass
class LossMatrix:
    """``gen_losses[i, j]`` / ``disc_losses[i, j]``: generator i against discriminator j."""
    gen_losses: np.ndarray
    disc_losses: np.ndarray
    gen_ids: list[int]
    disc_ids: list[int]


@dataclass(frozen=True)
class StrategyConfig:
    variant: str
    mu: int
    lam: int | None = None
    tournament_size: int = 2
    n_e: int = 10
    budget: int | None = None  # total training epochs; None means 250 * lambda

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {', '.join(VARIANTS)}, got {self.variant!r}")
        if self.mu < 1:
            raise ConfigError(f"mu must be >= 1, got {self.mu}")
        if self.variant == "mg_md":
            if self.lam not in (None, self.mu):
                raise ConfigError(f"mg_md uses lambda = mu; got lambda={self.lam}, mu={self.mu}")
        else:
            if self.lam is None:
                raise ConfigError(f"{self.variant} requires lambda")
            if self.variant == "comma_tournament" and self.lam < self.mu:
                raise ConfigError(f"comma variants require lambda >= mu (lambda={self.lam}, mu={self.mu})")
            if self.variant.startswith("plus") and not 1 <= self.lam <= self.mu:
                raise ConfigError(f"plus variants require 1 <= lambda <= mu (lambda={self.lam}, mu={self.mu})")
        if self.tournament_size < 1:
            raise ConfigError("tournament_size must be >= 1")
        if self.n_e < 1:
            raise ConfigError("n_e must be >= 1")
        if self.budget is not None and self.budget < 1:
            raise ConfigError("budget must be >= 1")

    @property
    def offspring(self) -> int:
        return self.mu if self.lam is None else self.lam

    @property
    def total_budget(self) -> int:
        return 250 * self.offspring if self.budget is None else self.budget

    @property
    def label(self) -> str:
        if self.variant == "mg_md":
            return f"mg_md_mu{self.mu}"
        return f"{self.variant}_mu{self.mu}_lam{self.lam}"


# -- fitness ---------------------------------------------------------------------

def evaluate_populations(gens: Population | Sequence[Individual], discs: Population | Sequence[Individual],
                         data: np.ndarray, n_e: int, cfg: TrainConfig,
                         rng: np.random.Generator) -> LossMatrix:
    """Fill the loss matrix over all couples and assign fitness.

    The same n_e (real batch, latent batch) draws are shared by every couple,
    so fitness differences come from the networks, not from batch noise.
    Generator fitness is its row mean of generator losses, discriminator
    fitness its column mean of discriminator losses.  Parameters are not touched.
    """
    gens, discs = list(gens), list(discs)
    if not gens or not discs:
        raise ValueError("evaluate_populations needs non-empty populations")
    bs = cfg.batch_size
    gl = np.zeros((len(gens), len(discs)))
    dl = np.zeros_like(gl)
    for _ in range(n_e):
        real = data[rng.integers(0, len(data), size=bs)]
        z = latent(rng, bs, cfg.latent_dim)
        p_real = [nn.forward(d.params, real) for d in discs]
        for i, g in enumerate(gens):
            fake = nn.forward(g.params, z)
            for j, d in enumerate(discs):
                p_fake = nn.forward(d.params, fake)
                gl[i, j] += generator_loss(p_fake, cfg.generator_loss)
                dl[i, j] += discriminator_loss(p_real[j], p_fake)
    gl /= n_e
    dl /= n_e
    if not (np.isfinite(gl).all() and np.isfinite(dl).all()):
        bad = np.argwhere(~(np.isfinite(gl) & np.isfinite(dl)))[0]
        raise TrainingError(f"non-finite loss for couple (g{gens[bad[0]].id}, d{discs[bad[1]].id})")
    for i, g in enumerate(gens):
        g.fitness = float(gl[i].mean())
    for j, d in enumerate(discs):
        d.fitness = float(dl[:, j].mean())
    return LossMatrix(gl, dl, [g.id for g in gens], [d.id for d in discs])


# -- selection ---------------------------------------------------------------------

def _rank_key(ind: Individual):
    return (ind.fitness, ind.id)


def select_tournament(pop: Population, count: int, tournament_size: int, rng: np.random.Generator,
                      distinct: bool = False) -> list[Individual]:
    """``count`` tournaments, each cloning the fittest of ``tournament_size`` uniform draws.

    Draws are with replacement unless ``distinct`` is set.
    """
    if tournament_size < 1:
        raise ConfigError("tournament_size must be >= 1")
    members = pop.members
    chosen = []
    for _ in range(count):
        if distinct:
            idx = rng.choice(len(members), size=tournament_size, replace=False)
        else:
            idx = rng.integers(0, len(members), size=tournament_size)
        winner = min((members[i] for i in idx), key=_rank_key)
        chosen.append(pop.spawn(winner))
    return chosen


def select_truncation(pop: Population, count: int) -> list[Individual]:
    """Clones of the ``count`` fittest members."""
    if count > len(pop):
        raise ConfigError(f"cannot truncate {len(pop)} members to {count}")
    return [pop.spawn(ind) for ind in sorted(pop.members, key=_rank_key)[:count]]


def pair_randomly(gen_offspring: Sequence, disc_offspring: Sequence, rng: np.random.Generator) -> list[tuple]:
    """Uniform random perfect matching between the two offspring lists."""
    if len(gen_offspring) != len(disc_offspring):
        raise ValueError(f"cannot pair {len(gen_offspring)} generators with {len(disc_offspring)} discriminators")
    perm = rng.permutation(len(disc_offspring))
    return [(g, disc_offspring[k]) for g, k in zip(gen_offspring, perm)]


# -- replacement -------------------------------------------------------------------

def replace_comma(parents: Population, offspring: Sequence[Individual], mu: int) -> Population:
    """Drop the parents, keep the mu fittest offspring."""
    if len(offspring) < mu:
        raise ConfigError(f"comma replacement needs lambda >= mu (lambda={len(offspring)}, mu={mu})")
    return parents.with_members(sorted(offspring, key=_rank_key)[:mu])


def replace_plus(parents: Population, offspring: Sequence[Individual], mu: int) -> Population:
    """Keep the mu fittest of parents + offspring; parents win fitness ties."""
    pool = [(ind.fitness, 0, ind.id, ind) for ind in parents.members]
    pool += [(ind.fitness, 1, ind.id, ind) for ind in offspring]
    pool.sort(key=lambda t: t[:3])
    return parents.with_members([t[3] for t in pool[:mu]])


def generations_for_budget(budget: int, n_t: int, lam: int) -> int:
    if budget < 1 or n_t < 1 or lam < 1:
        raise ConfigError("budget, n_t and lambda must all be positive")
    iota = budget // (n_t * lam)
    if iota == 0:
        raise ConfigError(f"budget {budget} is too small for a single generation of {lam} x {n_t} epochs")
    return iota


# -- records -----------------------------------------------------------------------

CSV_COLUMNS = ("run_id", "variant", "mu", "lambda", "generation", "best_gen_fitness",
               "mean_gen_fitness", "best_disc_fitness", "wd", "entropy", "coverage")


@dataclass(frozen=True)
class GenerationRow:
    generation: int | str
    best_gen_fitness: float
    mean_gen_fitness: float
    best_disc_fitness: float
    wd: float
    entropy: float
    coverage: int


@dataclass
class ExperimentRecord:
    run_id: int
    variant: str
    mu: int
    lam: int
    rows: list[GenerationRow] = field(default_factory=list)
    final: GenerationRow | None = None
    # bookkeeping used by invariant checks, not serialised
    generator_epochs: int = 0
    couples: list[list[tuple[int, int]]] = field(default_factory=list)
    population_ids: list[tuple[list[int], list[int]]] = field(default_factory=list)

    def csv_rows(self) -> list[list[str]]:
        out = []
        rows = self.rows + ([self.final] if self.final is not None else [])
        for r in rows:
            out.append([str(self.run_id), self.variant, str(self.mu), str(self.lam), str(r.generation),
                        repr(r.best_gen_fitness), repr(r.mean_gen_fitness), repr(r.best_disc_fitness),
                        repr(r.wd), repr(r.entropy), str(r.coverage)])
        return out

    def to_csv(self) -> str:
        lines = [",".join(CSV_COLUMNS)] + [",".join(r) for r in self.csv_rows()]
        return "\n".join(lines) + "\n"


@dataclass
class RunResult:
    best_generator: Individual
    best_discriminator: Individual
    record: ExperimentRecord


def _snapshot(gens: Population, discs: Population, generation, split: DatasetSplit,
              seed: int, key: int) -> GenerationRow:
    best = gens.best()
    report: MetricsReport = evaluate_generator(best.params, split.spec, split.test,
                                               seeding.stream(seed, seeding.METRICS, key))
    return GenerationRow(generation, best.fitness, float(np.mean([g.fitness for g in gens])),
                         discs.best().fitness, report.wd, report.entropy, report.coverage)


def _init_population(role: str, mu: int, topology, train_cfg: TrainConfig, seed: int,
                     ids: Iterator[int]) -> Population:
    role_key = 0 if role == "generator" else 1
    members = []
    for i in range(mu):
        params = nn.init_network(topology, seeding.stream(seed, seeding.INIT, role_key, i))
        members.append(Individual(next(ids), params, AdamState.for_network(params, train_cfg.learning_rate)))
    return Population(role, members, mu, ids)


def _train_couples(couples, split: DatasetSplit, train_cfg: TrainConfig, seed: int, generation: int) -> int:
    for k, (g, d) in enumerate(couples):
        pair = GanPair(g.params, g.optimizer, d.params, d.optimizer)
        try:
            train_pair(pair, split.train, train_cfg, seeding.stream(seed, seeding.TRAIN, generation, k))
        except TrainingError as exc:
            exc.generation = generation
            raise
    return len(couples) * train_cfg.n_t


Selector = Callable[[Population, int, np.random.Generator], list[Individual]]


def _default_selector(cfg: StrategyConfig) -> Selector:
    if cfg.variant == "plus_elitist":
        return lambda pop, count, rng: select_truncation(pop, count)
    return lambda pop, count, rng: select_tournament(pop, count, cfg.tournament_size, rng)


def run_coea(cfg: StrategyConfig, split: DatasetSplit, train_cfg: TrainConfig, seed: int,
             run_id: int = 0, selector: Selector | None = None) -> RunResult:
    """Run one coevolutionary training under variant ``cfg.variant``.

    ``seed`` keys every random stream of the run.  ``selector`` overrides
    parent selection (used by tests to force identical parents across variants).
    """
    if cfg.variant not in COEA_VARIANTS:
        raise ConfigError(f"run_coea handles {', '.join(COEA_VARIANTS)}; use run_mgmd for mg_md")
    mu, lam = cfg.mu, cfg.lam
    iota = generations_for_budget(cfg.total_budget, train_cfg.n_t, lam)
    select = selector or _default_selector(cfg)
    comma = cfg.variant == "comma_tournament"

    ids = itertools.count()
    gens = _init_population("generator", mu, nn.generator_topology(train_cfg.latent_dim), train_cfg, seed, ids)
    discs = _init_population("discriminator", mu, nn.discriminator_topology(), train_cfg, seed, ids)
    evaluate_populations(gens, discs, split.train, cfg.n_e, train_cfg,
                         seeding.stream(seed, seeding.EVALUATE, 0))
    record = ExperimentRecord(run_id, cfg.variant, mu, lam)

    for generation in range(1, iota + 1):
        g_off = select(gens, lam, seeding.stream(seed, seeding.SELECT, generation, 0))
        d_off = select(discs, lam, seeding.stream(seed, seeding.SELECT, generation, 1))
        couples = pair_randomly(g_off, d_off, seeding.stream(seed, seeding.PAIR, generation))
        record.couples.append([(g.id, d.id) for g, d in couples])
        record.generator_epochs += _train_couples(couples, split, train_cfg, seed, generation)

        g_pool = g_off if comma else gens.members + g_off
        d_pool = d_off if comma else discs.members + d_off
        evaluate_populations(g_pool, d_pool, split.train, cfg.n_e, train_cfg,
                             seeding.stream(seed, seeding.EVALUATE, generation))
        replace = replace_comma if comma else replace_plus
        gens = replace(gens, g_off, mu)
        discs = replace(discs, d_off, mu)
        record.population_ids.append(([g.id for g in gens], [d.id for d in discs]))
        row = _snapshot(gens, discs, generation, split, seed, generation)
        record.rows.append(row)
        log.debug("%s run %d gen %d/%d: best_g=%.4f wd=%.4f cov=%d", cfg.label, run_id, generation,
                  iota, row.best_gen_fitness, row.wd, row.coverage)

    record.final = _snapshot(gens, discs, "final", split, seed, FINAL)
    return RunResult(gens.best(), discs.best(), record)


def run_mgmd(cfg: StrategyConfig, split: DatasetSplit, train_cfg: TrainConfig, seed: int,
             run_id: int = 0) -> RunResult:
    """Fixed populations of mu couples, randomly re-paired and trained every iteration.

    No selection and no replacement; populations are evaluated after each
    iteration for the record, and the final best is picked by fitness.
    """
    if cfg.variant != "mg_md":
        raise ConfigError("run_mgmd requires variant mg_md")
    mu = cfg.mu
    iota = generations_for_budget(cfg.total_budget, train_cfg.n_t, mu)
    ids = itertools.count()
    gens = _init_population("generator", mu, nn.generator_topology(train_cfg.latent_dim), train_cfg, seed, ids)
    discs = _init_population("discriminator", mu, nn.discriminator_topology(), train_cfg, seed, ids)
    record = ExperimentRecord(run_id, cfg.variant, mu, mu)

    for generation in range(1, iota + 1):
        couples = pair_randomly(gens.members, discs.members, seeding.stream(seed, seeding.PAIR, generation))
        record.couples.append([(g.id, d.id) for g, d in couples])
        record.generator_epochs += _train_couples(couples, split, train_cfg, seed, generation)
        evaluate_populations(gens, discs, split.train, cfg.n_e, train_cfg,
                             seeding.stream(seed, seeding.EVALUATE, generation))
        record.population_ids.append(([g.id for g in gens], [d.id for d in discs]))
        record.rows.append(_snapshot(gens, discs, generation, split, seed, generation))

    record.final = _snapshot(gens, discs, "final", split, seed, FINAL)
    return RunResult(gens.best(), discs.best(), record)


def run_strategy(cfg: StrategyConfig, split: DatasetSplit, train_cfg: TrainConfig, seed: int,
                 run_id: int = 0) -> RunResult:
    if cfg.variant == "mg_md":
        return run_mgmd(cfg, split, train_cfg, seed, run_id)
    return run_coea(cfg, split, train_cfg, seed, run_id)
