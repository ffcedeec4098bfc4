"""Action-conditioned world model: shared-weight 1D conv encoder, a linear
latent predictor conditioned on the action, and a bias-free linear action
predictor reading the latent difference.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor, parameter
from .checkpoint import load_tensors, save_tensors


@dataclass(frozen=True)
class EncoderSpec:
    channels: tuple[int, ...] = (8, 16, 32, 32, 64, 64)
    kernel: int = 5
    stride: int = 2
    padding: int = 2
    input_len: int = 500
    latent_dim: int = 10
    action_dim: int = 3

    @property
    def conv_out_len(self) -> int:
        n = self.input_len
        for _ in self.channels:
            n = (n + 2 * self.padding - self.kernel) // self.stride + 1
        return n

    @property
    def flat_dim(self) -> int:
        return self.channels[-1] * self.conv_out_len


@dataclass(frozen=True)
class LossWeights:
    lambda1: float = 1.0   # latent consistency
    lambda2: float = 10.0  # action prediction

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("loss weights must be non-negative")


@dataclass
class WorldModel:
    spec: EncoderSpec
    params: dict[str, Tensor]
    ablated: bool = False  # latent predictor disabled (direct action regressor)
    flag_thresholds: np.ndarray | None = field(default=None, repr=False)

    def param_names(self) -> list[str]:
        return sorted(self.params)

    def conv_param_names(self) -> list[str]:
        return [n for n in self.param_names() if n.startswith("enc.conv")]

    def finetune_param_names(self) -> list[str]:
        """Everything but the frozen conv stack: P_z, P_a and the encoder head."""
        return [n for n in self.param_names() if not n.startswith("enc.conv")]


def _kaiming_uniform(rng, shape, fan_in):
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


def init_model(seed: int, spec: EncoderSpec | None = None) -> WorldModel:
    spec = spec or EncoderSpec()
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    params: dict[str, Tensor] = {}
    c_in = 1
    for i, c_out in enumerate(spec.channels):
        fan_in = c_in * spec.kernel
        params[f"enc.conv{i}.w"] = parameter(_kaiming_uniform(rng, (c_out, c_in, spec.kernel), fan_in),
                                             name=f"enc.conv{i}.w")
        params[f"enc.conv{i}.b"] = parameter(np.zeros(c_out), name=f"enc.conv{i}.b")
        c_in = c_out
    params["enc.fc.w"] = parameter(_kaiming_uniform(rng, (spec.latent_dim, spec.flat_dim), spec.flat_dim),
                                   name="enc.fc.w")
    params["enc.fc.b"] = parameter(np.zeros(spec.latent_dim), name="enc.fc.b")
    pz_in = spec.latent_dim + spec.action_dim
    params["pz.w"] = parameter(_kaiming_uniform(rng, (spec.latent_dim, pz_in), pz_in), name="pz.w")
    params["pz.b"] = parameter(np.zeros(spec.latent_dim), name="pz.b")
    # P_a carries no bias at all, so its weights relate latents to actions directly
    params["pa.w"] = parameter(_kaiming_uniform(rng, (spec.action_dim, spec.latent_dim), spec.latent_dim),
                               name="pa.w")
    return WorldModel(spec=spec, params=params)


def encode_batch(model: WorldModel, curves: Tensor | np.ndarray) -> Tensor:
    """Encode (B, 500) curves to (B, latent_dim); records on the active tape."""
    x = curves if isinstance(curves, Tensor) else Tensor(curves)
    if x.data.ndim != 2 or x.data.shape[1] != model.spec.input_len:
        raise ValueError(f"expected (B, {model.spec.input_len}) curves, got {x.data.shape}")
    # channels-last layout through the conv stack (hot path)
    h = ad.reshape(x, (x.data.shape[0], model.spec.input_len, 1))
    for i in range(len(model.spec.channels)):
        h = ad.conv1d_nlc(h, model.params[f"enc.conv{i}.w"], model.params[f"enc.conv{i}.b"],
                          stride=model.spec.stride, padding=model.spec.padding)
        h = ad.relu(h)
    h = ad.reshape(h, (x.data.shape[0], model.spec.flat_dim))
    return ad.linear(h, model.params["enc.fc.w"], model.params["enc.fc.b"])


def encode(model: WorldModel, curve: np.ndarray) -> np.ndarray:
    """Latent representation of a single 500-sample curve (inference)."""
    curve = np.asarray(curve, dtype=np.float64)
    if curve.shape != (model.spec.input_len,):
        raise ValueError(f"expected a {model.spec.input_len}-sample curve, got {curve.shape}")
    return encode_batch(model, curve[None, :]).data[0]


def predict_latent(model: WorldModel, z_x: np.ndarray, a: np.ndarray) -> np.ndarray:
    """P_z([z_x ; a]): the predicted observation latent after action a."""
    z_x = np.asarray(z_x, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    if z_x.shape != (model.spec.latent_dim,) or a.shape != (model.spec.action_dim,):
        raise ValueError(f"predict_latent: bad shapes {z_x.shape}, {a.shape}")
    return model.params["pz.w"].data @ np.concatenate([z_x, a]) + model.params["pz.b"].data


def predict_action(model: WorldModel, z_x: np.ndarray, z_y: np.ndarray) -> np.ndarray:
    """P_a(z_y - z_x): linear and homogeneous in the latent difference."""
    z_x = np.asarray(z_x, dtype=np.float64)
    z_y = np.asarray(z_y, dtype=np.float64)
    if z_x.shape != (model.spec.latent_dim,) or z_y.shape != (model.spec.latent_dim,):
        raise ValueError("predict_action: latents must be latent_dim vectors")
    return model.params["pa.w"].data @ (z_y - z_x)


def loss_on_batch(model: WorldModel, xs: np.ndarray, ys: np.ndarray, acts: np.ndarray,
                  w: LossWeights) -> tuple[Tensor, Tensor, Tensor]:
    """Batched combined loss: lambda1 * mean|z_y - zhat_y|^2 + lambda2 * mean|a - ahat|^2.

    Returns (total, latent_term, action_term) as graph nodes; latent/action
    terms are batch means of per-pair sums, before the lambda weighting.
    Gradients flow through both encoder branches and all three components.
    """
    B = xs.shape[0]
    if B == 0:
        raise ValueError("empty batch")
    both = np.concatenate([xs, ys], axis=0)
    return loss_on_indexed_batch(model, both, np.arange(B), np.arange(B, 2 * B), acts, w)


def loss_on_indexed_batch(model: WorldModel, curves: np.ndarray, ix, iy,
                          acts: np.ndarray, w: LossWeights) -> tuple[Tensor, Tensor, Tensor]:
    """Same loss, with the batch given as unique curves plus reference /
    observation row indices, so shared curves are encoded only once."""
    B = len(ix)
    if B == 0:
        raise ValueError("empty batch")
    z_all = encode_batch(model, curves)
    z_x = ad.gather_rows(z_all, ix)
    z_y = ad.gather_rows(z_all, iy)
    a_const = Tensor(acts)

    a_hat = ad.linear(ad.sub(z_y, z_x), model.params["pa.w"], None)
    action_term = ad.scale(ad.mse(a_const, a_hat), 1.0 / B)

    if model.ablated or w.lambda1 == 0.0:
        latent_term = Tensor(0.0)
        total = ad.scale(action_term, w.lambda2)
    else:
        z_in = ad.concat([z_x, a_const], axis=1)
        z_hat = ad.linear(z_in, model.params["pz.w"], model.params["pz.b"])
        latent_term = ad.scale(ad.mse(z_y, z_hat), 1.0 / B)
        total = ad.add(ad.scale(latent_term, w.lambda1), ad.scale(action_term, w.lambda2))
    return total, latent_term, action_term


def loss(model: WorldModel, batch, w: LossWeights | None = None):
    """Loss over a list of TrainPair; returns (total, latent, action) floats."""
    w = w or LossWeights()
    if not batch:
        raise ValueError("empty batch")
    xs = np.stack([p.x for p in batch])
    ys = np.stack([p.y for p in batch])
    acts = np.stack([p.a for p in batch])
    total, latent, action = loss_on_batch(model, xs, ys, acts, w)
    return float(total.data), float(latent.data), float(action.data)


def calibrate_flag_thresholds(model: WorldModel, no_action_pairs) -> np.ndarray:
    """Per-dimension activity thresholds: 2x the robust std (1.4826 * MAD) of
    the latent differences over pairs whose true action is zero."""
    dz = []
    for p in no_action_pairs:
        dz.append(encode(model, p.y) - encode(model, p.x))
    dz = np.asarray(dz)
    mad = np.median(np.abs(dz - np.median(dz, axis=0)), axis=0)
    thresholds = 2.0 * 1.4826 * mad
    model.flag_thresholds = thresholds
    return thresholds


def forward_diagnostics(model: WorldModel, pair, thresholds: np.ndarray | None = None) -> dict:
    """Latent-difference analysis for one pair: actual and predicted latent
    deltas, the predicted action, and per-dimension significant-activity flags."""
    z_x = encode(model, pair.x)
    z_y = encode(model, pair.y)
    z_hat = predict_latent(model, z_x, pair.a[:model.spec.action_dim])
    a_hat = predict_action(model, z_x, z_y)
    dz_actual = z_y - z_x
    dz_pred = z_hat - z_x
    thr = thresholds if thresholds is not None else model.flag_thresholds
    if thr is None:
        thr = np.full(model.spec.latent_dim, np.inf)  # uncalibrated: flag nothing
    return {
        "z_x": z_x, "z_y": z_y, "z_hat_y": z_hat, "a_hat": a_hat,
        "dz_actual": dz_actual, "dz_pred": dz_pred,
        "flags": np.abs(dz_actual) > thr,
    }


def save_model(model: WorldModel, path) -> None:
    save_tensors(path, model.params)


def load_model(path, spec: EncoderSpec | None = None, ablated: bool = False) -> WorldModel:
    spec = spec or EncoderSpec()
    arrays = load_tensors(path)
    model = init_model(0, spec)
    expected = set(model.params)
    if set(arrays) != expected:
        missing = expected - set(arrays)
        extra = set(arrays) - expected
        raise ValueError(f"checkpoint does not match architecture (missing={missing}, extra={extra})")
    for name, arr in arrays.items():
        if arr.shape != model.params[name].data.shape:
            raise ValueError(f"checkpoint tensor {name} has shape {arr.shape}, "
                             f"expected {model.params[name].data.shape}")
        model.params[name].data = arr
    model.ablated = ablated
    return model
