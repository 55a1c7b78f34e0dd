"""Encoder / classifier / adversary assemblies and their training loop.

All five variants share an encoder ``g`` (one rectified hidden layer) and a
target head ``h`` (one logit). They differ in the adversaries that read the
encoder output and in the class weights of the losses:

========== ================ ======================================= =============
variant    target loss      adversary                               # adversaries
========== ================ ======================================= =============
nodebias   CE               none                                    0
fair       CE               CE on A over the whole batch            1
laftr      CE               group-normalized L1 on A                1
cfair-eo   CE               per-label CE on A, weighted 1/2P(A|Y)   2
cfair      CE weighted      per-label CE on A, weighted 1/2P(A|Y)   2
           1/2P(Y)
========== ================ ======================================= =============

Training is simultaneous gradient descent-ascent: one backward pass through
``target + lam * adversary`` in which the gradient flowing from the
adversaries back into the encoder has its sign flipped, then a single
AdaDelta step on every parameter.
"""
from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import engine
from .data import Dataset
from .engine import AdaDeltaState, DenseNet, backward, forward, sigmoid, weighted_bce
from .metrics import FairnessReport, PredictionSet, UndefinedRateError, check_thm4, report


class Variant(str, enum.Enum):
    NODEBIAS = "nodebias"
    FAIR = "fair"
    LAFTR = "laftr"
    CFAIR_EO = "cfair-eo"
    CFAIR = "cfair"

    @property
    def n_adversaries(self) -> int:
        return {"nodebias": 0, "fair": 1, "laftr": 1, "cfair-eo": 2, "cfair": 2}[self.value]


class ConfigError(ValueError):
    pass


class TrainingError(RuntimeError):
    pass


# "input" None means the encoder adapts to whatever width the loader produced
PRESETS = {
    "adult": {"hidden": 60, "adv_hidden": 50, "input": None, "epochs": {}, "default_epochs": 100},
    "compas": {
        "hidden": 10,
        "adv_hidden": 10,
        "input": 11,
        "epochs": {0.1: 20, 1.0: 20, 10.0: 15},
        "default_epochs": 20,
    },
}
LAMBDA_GRIDS = {
    "adult": (0.1, 1.0, 10.0, 100.0, 1000.0),
    "compas": (0.1, 1.0, 10.0),
}


def preset_epochs(preset: str, lam: float) -> int:
    p = PRESETS[preset]
    return p["epochs"].get(float(lam), p["default_epochs"])


@dataclass
class VariantConfig:
    variant: Variant = Variant.NODEBIAS
    lam: float = 0.0
    hidden: int = 10
    adv_hidden: int = 10
    epochs: int = 20
    batch_size: int = 512
    seed: int = 0
    lr: float = 1.0
    rho: float = 0.95
    eps: float = 1e-6
    preset: str | None = None

    def __post_init__(self):
        try:
            self.variant = Variant(self.variant)
        except ValueError:
            raise ConfigError(f"unknown variant {self.variant!r}") from None
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            raise ConfigError(f"lambda must be a finite number >= 0, got {self.lam}")
        for name in ("hidden", "adv_hidden", "epochs", "batch_size"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")

    @classmethod
    def from_preset(cls, preset: str, variant, lam: float, **overrides) -> "VariantConfig":
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}")
        p = PRESETS[preset]
        kw = dict(
            variant=variant,
            lam=lam,
            hidden=p["hidden"],
            adv_hidden=p["adv_hidden"],
            epochs=preset_epochs(preset, lam),
            preset=preset,
        )
        kw.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**kw)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["variant"] = self.variant.value
        return d


def class_weights(ds: Dataset, conditioning: str = "none"):
    """Inverse-marginal class weights, normalized so a balanced cell gets 1.

    ``"none"``: ``(1/2P(Y=0), 1/2P(Y=1))``.
    ``"per_y"``: ``[(1/2P(A=0|Y=y), 1/2P(A=1|Y=y)) for y in (0, 1)]``.
    """
    y, a = ds.y, ds.a
    if conditioning == "none":
        out = []
        for c in (0, 1):
            p = np.mean(y == c) if len(y) else 0.0
            if p == 0:
                raise ConfigError(f"no training samples with Y={c}")
            out.append(1.0 / (2.0 * p))
        return tuple(out)
    if conditioning == "per_y":
        table = []
        for yy in (0, 1):
            sel = y == yy
            if not sel.any():
                raise ConfigError(f"no training samples with Y={yy}")
            pair = []
            for aa in (0, 1):
                p = np.mean(a[sel] == aa)
                if p == 0:
                    raise ConfigError(f"no training samples in cell A={aa}, Y={yy}")
                pair.append(1.0 / (2.0 * p))
            table.append(tuple(pair))
        return table
    raise ValueError(f"unknown conditioning {conditioning!r}")


@dataclass(eq=False)
class FairModel:
    config: VariantConfig
    encoder: DenseNet
    head: DenseNet
    adversaries: list[DenseNet]
    target_weights: tuple = (1.0, 1.0)
    adversary_weights: list | None = None
    optimizer: AdaDeltaState | None = field(default=None, repr=False)

    def parameters(self) -> list[np.ndarray]:
        out = self.encoder.parameters() + self.head.parameters()
        for adv in self.adversaries:
            out += adv.parameters()
        return out

    def parameter_groups(self) -> list[str]:
        """Owner tag (``encoder``, ``head``, ``adversary0``...) per parameter."""
        tags = ["encoder"] * len(self.encoder.parameters()) + ["head"] * len(self.head.parameters())
        for i, adv in enumerate(self.adversaries):
            tags += [f"adversary{i}"] * len(adv.parameters())
        return tags


def build(config: VariantConfig, ds: Dataset, rng: np.random.Generator | None = None) -> FairModel:
    """Fresh model with seeded Glorot initialization sized to ``ds``."""
    expected = PRESETS[config.preset]["input"] if config.preset else None
    if expected is not None and ds.dim != expected:
        raise ConfigError(f"preset {config.preset!r} expects {expected} input features, got {ds.dim}")
    if ds.dim <= 0:
        raise ConfigError("dataset has no features")
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence(config.seed).spawn(1)[0])
    encoder = engine.init_dense([ds.dim, config.hidden], rng, relu_output=True)
    head = engine.init_dense([config.hidden, 1], rng)
    adversaries = [
        engine.init_dense([config.hidden, config.adv_hidden, 1], rng)
        for _ in range(config.variant.n_adversaries)
    ]
    target_w = class_weights(ds, "none") if config.variant is Variant.CFAIR else (1.0, 1.0)
    adv_w = (
        class_weights(ds, "per_y")
        if config.variant in (Variant.CFAIR, Variant.CFAIR_EO)
        else None
    )
    model = FairModel(config, encoder, head, adversaries, target_w, adv_w)
    model.optimizer = AdaDeltaState.zeros_like(
        model.parameters(), rho=config.rho, eps=config.eps, lr=config.lr
    )
    return model


def _laftr_loss(logits, a, y):
    """Mean over present (a, y) cells of the cell-mean of |sigmoid(logit) - a|."""
    s = sigmoid(logits)
    cells = [(aa, yy) for aa in (0, 1) for yy in (0, 1) if np.any((a == aa) & (y == yy))]
    loss = 0.0
    grad = np.zeros_like(s)
    sign = np.where(a == 0, 1.0, -1.0)
    for aa, yy in cells:
        sel = (a == aa) & (y == yy)
        loss += np.abs(s[sel] - aa).mean()
        grad[sel] = sign[sel] * s[sel] * (1.0 - s[sel]) / sel.sum()
    k = len(cells)
    return loss / k, grad / k


def batch_loss(model: FairModel, x, y, a):
    """Losses and GDA gradients for one minibatch.

    Returns ``(losses, grads)``. ``losses`` holds the target loss, the summed
    adversary loss and the number of adversary terms skipped because their
    label slice was empty. ``grads`` lines up with ``model.parameters()``:
    encoder and head get d(target - lam * adversary), adversaries get
    d(adversary).
    """
    cfg = model.config
    variant = cfg.variant
    y = np.asarray(y)
    a = np.asarray(a)
    z, tape_g = forward(model.encoder, x)
    logits, tape_h = forward(model.head, z)
    target, dlogits = weighted_bce(logits, y, model.target_weights)
    head_grads, dz = backward(tape_h, dlogits)

    adv_loss = 0.0
    skipped = 0
    adv_grads = []
    if variant in (Variant.FAIR, Variant.LAFTR):
        adv = model.adversaries[0]
        out, tape = forward(adv, z, reversal=1.0)
        if variant is Variant.FAIR:
            adv_loss, dout = weighted_bce(out, a)
        else:
            adv_loss, dout = _laftr_loss(out, a, y)
        g, dz_adv = backward(tape, cfg.lam * dout)
        adv_grads += g
        dz = dz + dz_adv
    elif variant in (Variant.CFAIR, Variant.CFAIR_EO):
        for yy, adv in enumerate(model.adversaries):
            sel = y == yy
            if not sel.any():
                skipped += 1
                adv_grads += [np.zeros_like(p) for p in adv.parameters()]
                continue
            out, tape = forward(adv, z[sel], reversal=1.0)
            loss, dout = weighted_bce(out, a[sel], model.adversary_weights[yy])
            g, dz_adv = backward(tape, cfg.lam * dout)
            adv_loss += loss
            adv_grads += g
            dz[sel] += dz_adv

    enc_grads, _ = backward(tape_g, dz)
    losses = {"target": target, "adversary": adv_loss, "skipped": skipped}
    return losses, enc_grads + head_grads + adv_grads


@dataclass
class EpochRecord:
    epoch: int
    target_loss: float
    adversary_loss: float
    skipped_adversary_terms: int
    train: FairnessReport | None = None
    test: FairnessReport | None = None


@dataclass
class TrainHistory:
    records: list[EpochRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def rows(self):
        metrics = ("err_gap", "eo_gap", "dp_gap", "joint_err", "ber")
        for r in self.records:
            row = {
                "epoch": r.epoch,
                "target_loss": r.target_loss,
                "adversary_loss": r.adversary_loss,
                "skipped_adversary_terms": r.skipped_adversary_terms,
            }
            for split in ("train", "test"):
                rep = getattr(r, split)
                for m in metrics:
                    row[f"{split}_{m}"] = None if rep is None else getattr(rep, m)
            yield row

    def to_csv(self, path) -> None:
        rows = list(self.rows())
        if not rows:
            return
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            for row in rows:
                w.writerow({k: ("" if v is None else repr(v) if isinstance(v, float) else v) for k, v in row.items()})


def predict(model: FairModel, ds: Dataset) -> PredictionSet:
    z, _ = forward(model.encoder, ds.x)
    logits, _ = forward(model.head, z)
    return PredictionSet(sigmoid(logits), ds.y, ds.a)


def encode(model: FairModel, ds: Dataset) -> np.ndarray:
    z, _ = forward(model.encoder, ds.x)
    return z


def _safe_report(model, ds):
    if ds is None:
        return None
    try:
        return report(predict(model, ds))
    except UndefinedRateError:
        return None


def train(
    config: VariantConfig,
    ds: Dataset,
    test: Dataset | None = None,
    snapshot_every: int = 1,
) -> tuple[FairModel, TrainHistory]:
    """Train with seeded per-epoch shuffling; the last short batch is kept.

    Reports on train/test are recorded every ``snapshot_every`` epochs and
    always after the final epoch. When a test split is given, the error-gap
    bound (Delta_Err <= Delta_BR * BER + 2 Delta_EO) is asserted on its
    final predictions.
    """
    if len(ds) == 0:
        raise ConfigError("empty training set")
    init_seq, shuffle_seq = np.random.SeedSequence(config.seed).spawn(2)
    model = build(config, ds, np.random.default_rng(init_seq))
    rng = np.random.default_rng(shuffle_seq)
    params = model.parameters()
    history = TrainHistory()
    n, bs = len(ds), config.batch_size
    step = 0
    for epoch in range(1, config.epochs + 1):
        perm = rng.permutation(n)
        tot_t = tot_a = 0.0
        skipped = batches = 0
        for start in range(0, n, bs):
            idx = perm[start : start + bs]
            try:
                losses, grads = batch_loss(model, ds.x[idx], ds.y[idx], ds.a[idx])
                if not (math.isfinite(losses["target"]) and math.isfinite(losses["adversary"])):
                    raise engine.NonFiniteError("non-finite loss")
                engine.adadelta_step(params, grads, model.optimizer)
            except engine.NonFiniteError as exc:
                raise TrainingError(f"step {step} (epoch {epoch}): {exc}") from exc
            tot_t += losses["target"]
            tot_a += losses["adversary"]
            skipped += losses["skipped"]
            batches += 1
            step += 1
        rec = EpochRecord(epoch, tot_t / batches, tot_a / batches, skipped)
        if epoch == config.epochs or (snapshot_every and epoch % snapshot_every == 0):
            rec.train = _safe_report(model, ds)
            rec.test = _safe_report(model, test)
        history.records.append(rec)

    if test is not None:
        rep = history.records[-1].test or report(predict(model, test))
        chk = check_thm4(rep)
        if not chk.passed:
            raise AssertionError(f"error-gap bound violated on test predictions: {chk}")
    return model, history


# ---------------------------------------------------------------------------
# checkpoints


def _net_to_json(net: DenseNet) -> dict:
    return {
        "relu_output": net.relu_output,
        "layers": [{"weight": w.tolist(), "bias": b.tolist()} for w, b in zip(net.weights, net.biases)],
    }


def _net_from_json(d) -> DenseNet:
    return DenseNet(
        [np.array(l["weight"], dtype=np.float64) for l in d["layers"]],
        [np.array(l["bias"], dtype=np.float64) for l in d["layers"]],
        d["relu_output"],
    )


def checkpoint_dict(model: FairModel, epoch: int | None = None) -> dict:
    return {
        "variant": model.config.variant.value,
        "config": model.config.to_dict(),
        "seed": model.config.seed,
        "epoch": model.config.epochs if epoch is None else epoch,
        "target_weights": list(model.target_weights),
        "adversary_weights": None
        if model.adversary_weights is None
        else [list(p) for p in model.adversary_weights],
        "encoder": _net_to_json(model.encoder),
        "head": _net_to_json(model.head),
        "adversaries": [_net_to_json(n) for n in model.adversaries],
    }


def save_checkpoint(model: FairModel, path, epoch: int | None = None) -> None:
    # json writes floats with repr(), which round-trips float64 exactly
    Path(path).write_text(json.dumps(checkpoint_dict(model, epoch)), encoding="utf-8")


def load_checkpoint(path) -> FairModel:
    d = json.loads(Path(path).read_text(encoding="utf-8"))
    cfg = VariantConfig(**d["config"])
    model = FairModel(
        cfg,
        _net_from_json(d["encoder"]),
        _net_from_json(d["head"]),
        [_net_from_json(n) for n in d["adversaries"]],
        tuple(d["target_weights"]),
        None if d["adversary_weights"] is None else [tuple(p) for p in d["adversary_weights"]],
    )
    model.optimizer = AdaDeltaState.zeros_like(model.parameters(), cfg.rho, cfg.eps, cfg.lr)
    return model
