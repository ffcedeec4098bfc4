"""Pair construction, training schedule, fine-tuning and the per-experiment
pairing plans.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import autodiff as ad
from .autodiff import Tape, zero_grads
from .plantsim import DoeDataset, axis_settings, corner_settings
from .worldmodel import LossWeights, WorldModel, loss_on_indexed_batch


@dataclass(frozen=True)
class TrainPair:
    """(reference curve, observed curve, action) with a = params(y) - params(x)
    over the three core parameters."""

    x: np.ndarray
    y: np.ndarray
    a: np.ndarray
    ref_id: tuple[int, int] = (0, 0)  # (setting, cycle) of the reference
    obs_id: tuple[int, int] = (0, 0)


@dataclass(frozen=True)
class PairingPlan:
    reference_pool: tuple[tuple[int, int], ...]
    observation_pool: tuple[tuple[int, int], ...]
    include_self_pairs: bool = True
    ordered: bool = True


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 32
    epochs: int = 500
    lr: float = 3e-4
    seed: int = 0
    weights: LossWeights = field(default_factory=LossWeights)
    # single precision roughly halves wall time on one core; gradient-check
    # and contract tests always run the engine in float64
    dtype: str = "float32"

    def __post_init__(self):
        if self.batch_size < 1 or self.epochs < 0 or self.lr <= 0:
            raise ValueError("batch_size, epochs and lr must be positive")
        if self.dtype not in ("float32", "float64"):
            raise ValueError("dtype must be float32 or float64")


@dataclass(frozen=True)
class FinetuneConfig:
    pretrain_epochs: int = 10
    finetune_epochs: int = 500


def pool_for_settings(dataset: DoeDataset, setting_indices) -> tuple[tuple[int, int], ...]:
    return tuple((si, ci) for si in setting_indices
                 for ci in range(dataset.cycles_per_setting))


def make_pairs(dataset: DoeDataset, plan: PairingPlan) -> list[TrainPair]:
    """Cartesian product of the reference and observation pools."""
    if not plan.reference_pool or not plan.observation_pool:
        raise ValueError("pairing pools must be non-empty")
    pairs: list[TrainPair] = []
    for ref in plan.reference_pool:
        p_ref = dataset.settings[ref[0]].values[:3]
        x = dataset.curves[ref[0], ref[1]]
        for obs in plan.observation_pool:
            if not plan.include_self_pairs and ref == obs:
                continue
            if not plan.ordered and obs < ref:
                continue
            a = dataset.settings[obs[0]].values[:3] - p_ref
            pairs.append(TrainPair(x=x, y=dataset.curves[obs[0], obs[1]], a=a,
                                   ref_id=ref, obs_id=obs))
    return pairs


# -- experiment plans --------------------------------------------------------


def exp1_plans(dataset: DoeDataset) -> tuple[PairingPlan, PairingPlan]:
    """Train on all corner-vs-corner pairs; test inner-grid observations
    against corner references."""
    corners = corner_settings(dataset)
    inner = [i for i in range(len(dataset.settings)) if i not in corners]
    corner_pool = pool_for_settings(dataset, corners)
    inner_pool = pool_for_settings(dataset, inner)
    return (PairingPlan(corner_pool, corner_pool),
            PairingPlan(corner_pool, inner_pool))


def exp2_plans(dataset: DoeDataset) -> tuple[PairingPlan, PairingPlan]:
    """Train on the origin and its three connected corners; test everything
    else against the origin as reference."""
    axes = axis_settings(dataset)
    rest = [i for i in range(len(dataset.settings)) if i not in axes]
    axis_pool = pool_for_settings(dataset, axes)
    origin_pool = pool_for_settings(dataset, [axes[0]])
    rest_pool = pool_for_settings(dataset, rest)
    return (PairingPlan(axis_pool, axis_pool),
            PairingPlan(origin_pool, rest_pool))


def all_pairs_plan(dataset: DoeDataset) -> PairingPlan:
    pool = pool_for_settings(dataset, range(len(dataset.settings)))
    return PairingPlan(pool, pool)


# -- training ----------------------------------------------------------------


class _FlatAdam:
    """Adam over one flat buffer shared with the parameter tensors.

    Re-points each trainable tensor's storage into a single contiguous array so
    a step is a few vectorized ops instead of a per-tensor Python loop."""

    def __init__(self, params: dict[str, ad.Tensor], lr: float, dtype,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.tensors = [params[n] for n in sorted(params)]
        self.flat = np.concatenate([t.data.ravel() for t in self.tensors]).astype(dtype, copy=False)
        self.slices = []
        offset = 0
        for t in self.tensors:
            size = t.data.size
            t.data = self.flat[offset:offset + size].reshape(t.data.shape)
            self.slices.append((offset, size))
            offset += size
        self.m = np.zeros_like(self.flat)
        self.v = np.zeros_like(self.flat)
        self._g = np.empty_like(self.flat)
        self.t = 0
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps

    def step(self) -> None:
        g = self._g
        for tensor, (off, size) in zip(self.tensors, self.slices):
            if tensor.grad is None:
                g[off:off + size] = 0.0
            else:
                if tensor.grad.shape != tensor.data.shape:
                    raise ValueError(f"gradient shape {tensor.grad.shape} does not match "
                                     f"parameter shape {tensor.data.shape}")
                g[off:off + size] = tensor.grad.ravel()
        if not np.all(np.isfinite(g)):
            raise ValueError("non-finite gradient; parameters left unchanged")
        self.t += 1
        self.m *= self.beta1
        self.m += (1.0 - self.beta1) * g
        self.v *= self.beta2
        self.v += (1.0 - self.beta2) * np.square(g)
        m_hat = self.m / (1.0 - self.beta1 ** self.t)
        v_hat = self.v / (1.0 - self.beta2 ** self.t)
        self.flat -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def train(model: WorldModel, pairs: list[TrainPair], cfg: TrainConfig,
          trainable: list[str] | None = None) -> tuple[WorldModel, list[tuple[float, float, float]]]:
    """Minibatch Adam on the combined loss; deterministic for a fixed seed.

    Returns the model (mutated in place) and the per-epoch loss history as
    (total, latent_term, action_term) tuples.
    """
    if not pairs:
        raise ValueError("no training pairs")
    names = trainable if trainable is not None else model.param_names()
    if model.ablated:
        names = [n for n in names if not n.startswith("pz.")]
    train_params = {n: model.params[n] for n in names}
    if cfg.epochs == 0:
        return model, []
    dtype = np.dtype(cfg.dtype)
    for p in model.params.values():  # whole model runs in the training dtype
        p.data = p.data.astype(dtype, copy=False)
    opt = _FlatAdam(train_params, lr=cfg.lr, dtype=dtype)
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    n = len(pairs)
    history: list[tuple[float, float, float]] = []

    # curves repeat heavily across pairs; index them once so each batch only
    # encodes its unique curves
    curve_rows: dict[int, int] = {}
    unique_curves: list[np.ndarray] = []

    def row_of(arr: np.ndarray) -> int:
        key = arr.__array_interface__["data"][0]
        row = curve_rows.get(key)
        if row is None:
            row = curve_rows[key] = len(unique_curves)
            unique_curves.append(arr)
        return row

    ref_rows = np.array([row_of(p.x) for p in pairs], dtype=np.intp)
    obs_rows = np.array([row_of(p.y) for p in pairs], dtype=np.intp)
    curve_table = np.stack(unique_curves).astype(dtype, copy=False)
    acts_all = np.stack([p.a for p in pairs]).astype(dtype, copy=False)

    for _epoch in range(cfg.epochs):
        perm = rng.permutation(n)
        ep_total = ep_latent = ep_action = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = perm[start:start + cfg.batch_size]
            rows = np.concatenate([ref_rows[idx], obs_rows[idx]])
            uniq, inv = np.unique(rows, return_inverse=True)
            acts = acts_all[idx]
            b = len(idx)
            with Tape() as tape:
                total, latent, action = loss_on_indexed_batch(
                    model, curve_table[uniq], inv[:b], inv[b:], acts, cfg.weights)
                if not np.isfinite(total.data):
                    raise RuntimeError(f"non-finite loss at epoch {_epoch}: "
                                       f"total={total.data}, latent={latent.data}, action={action.data}")
                ad.backward(tape, total)
            opt.step()
            zero_grads(model.params)
            ep_total += float(total.data) * b
            ep_latent += float(latent.data) * b
            ep_action += float(action.data) * b
        history.append((ep_total / n, ep_latent / n, ep_action / n))
    return model, history


def pretrain_then_finetune(model: WorldModel, source_pairs: list[TrainPair],
                           target_pairs: list[TrainPair], fcfg: FinetuneConfig,
                           cfg: TrainConfig) -> tuple[WorldModel, list[tuple[float, float, float]]]:
    """Train everything on the source pairs, then freeze the conv stack and
    fine-tune P_z, P_a and the encoder head on the target pairs."""
    model, _ = train(model, source_pairs, replace(cfg, epochs=fcfg.pretrain_epochs))
    model, history = train(model, target_pairs, replace(cfg, epochs=fcfg.finetune_epochs),
                           trainable=model.finetune_param_names())
    return model, history


def ablate_latent_predictor(model: WorldModel) -> WorldModel:
    """Variant with the latent-consistency path disabled: the loss reduces to
    the action term and P_z is excluded from optimization. Shares weights."""
    return WorldModel(spec=model.spec, params=model.params, ablated=True,
                      flag_thresholds=model.flag_thresholds)


def history_to_csv(history, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("epoch,total,latent_term,action_term\n")
        for i, (t, l, a) in enumerate(history):
            fh.write(f"{i},{t:.10g},{l:.10g},{a:.10g}\n")
