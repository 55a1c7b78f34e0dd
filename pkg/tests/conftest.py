import os
from pathlib import Path

import numpy as np
import pytest

from fairrep import data, models
from fairrep.engine import backward, forward, init_dense, weighted_bce
from fairrep.models import VariantConfig

DATA_DIR = Path(os.environ.get("FAIRREP_DATA_DIR", Path(__file__).resolve().parents[1] / "data"))
ADULT = (DATA_DIR / "adult.data", DATA_DIR / "adult.test")
COMPAS = DATA_DIR / data.COMPAS_FILE

needs_adult = pytest.mark.skipif(
    not all(p.exists() for p in ADULT), reason=f"Adult files not found in {DATA_DIR} (run scripts/fetch_data.py)"
)
needs_compas = pytest.mark.skipif(
    not COMPAS.exists(), reason=f"COMPAS file not found in {DATA_DIR} (run scripts/fetch_data.py)"
)


@pytest.fixture(scope="session")
def adult():
    if not all(p.exists() for p in ADULT):
        pytest.skip("Adult files missing")
    return data.load_adult(*ADULT)


@pytest.fixture(scope="session")
def compas():
    if not COMPAS.exists():
        pytest.skip("COMPAS file missing")
    return data.load_compas(COMPAS)


def central_differences(f, params, h=1e-5):
    """d f / d p for every entry of every array in ``params`` (perturbed in place)."""
    out = []
    for p in params:
        g = np.zeros_like(p)
        flat, gflat = p.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = f()
            flat[i] = orig - h
            down = f()
            flat[i] = orig
            gflat[i] = (up - down) / (2 * h)
        out.append(g)
    return out


def max_relative_error(analytic, numeric, floor=1e-7):
    """Largest |a - n| / max(|a|, |n|, floor) over all entries."""
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


# --------------------------------------------------------------------------- gradient checks

# (input, hidden, output) of the encoder/head and adversary networks of both presets
PRESET_SHAPES = [(114, 60, 1), (60, 50, 1), (11, 10, 1), (10, 10, 1)]


def kink_free_batch(net, n, rng, margin=1e-3):
    """Standard-normal batch whose hidden pre-activations all avoid |v| < margin."""
    for _ in range(100):
        x = rng.standard_normal((n, net.in_dim))
        _, tape = forward(net, x)
        if all(np.min(np.abs(p)) > margin for p in tape.preacts[:-1]):
            return x
    raise RuntimeError("could not draw a kink-free batch")


def net_gradient_error(sizes, h=1e-5):
    """Worst relative error of backprop against central differences for one network."""
    rng = np.random.default_rng(sum(sizes))
    net = init_dense(list(sizes), rng)
    for b in net.biases:
        b[:] = 0.1 * rng.standard_normal(b.shape)
    x = kink_free_batch(net, 4, rng)
    y = np.array([0, 1, 1, 0])
    w = (0.7, 1.9)

    def loss():
        out, _ = forward(net, x)
        return weighted_bce(out, y, w)[0]

    out, tape = forward(net, x)
    _, dout = weighted_bce(out, y, w)
    grads, _ = backward(tape, dout)
    return max_relative_error(grads, central_differences(loss, net.parameters(), h))


def toy(n, dim, seed=0, balanced=False):
    rng = np.random.default_rng(seed)
    if balanced:
        y = np.tile([0, 0, 1, 1], n // 4)
        a = np.tile([0, 1, 0, 1], n // 4)
    else:
        y = rng.integers(0, 2, n)
        a = rng.integers(0, 2, n)
        y[:4], a[:4] = [0, 0, 1, 1], [0, 1, 0, 1]
    return data.Dataset(rng.standard_normal((n, dim)), y, a, [f"f{i}" for i in range(dim)])


def _fd_setup(variant, dim, hidden, adv_hidden, lam, n=12, seed=0):
    rng = np.random.default_rng(seed)
    ds = toy(64, dim, seed=seed)
    model = models.build(VariantConfig(variant, lam, hidden=hidden, adv_hidden=adv_hidden, seed=seed), ds)
    for p in model.parameters():
        if p.ndim == 1:
            p[:] = 0.1 * rng.standard_normal(p.shape)
    for _ in range(200):
        idx = rng.choice(len(ds), n, replace=False)
        z, tape = forward(model.encoder, ds.x[idx])
        pre = [tape.preacts[0]] + [forward(adv, z)[1].preacts[0] for adv in model.adversaries]
        if all(np.min(np.abs(p)) > 1e-3 for p in pre):
            return model, ds.x[idx], ds.y[idx], ds.a[idx]
    raise RuntimeError("no kink-free batch")


def variant_gradient_error(variant, dim, hidden, adv_hidden, lam, h=1e-5):
    """Worst relative error of a variant's parameter gradients against central differences.

    Encoder and head gradients are compared with ``target - lam * adversary``
    (the reversed objective they descend); adversary gradients with
    ``lam * adversary``.
    """
    model, x, y, a = _fd_setup(variant, dim, hidden, adv_hidden, lam)
    _, grads = models.batch_loss(model, x, y, a)
    params, groups = model.parameters(), model.parameter_groups()

    def combined():
        losses, _ = models.batch_loss(model, x, y, a)
        return losses["target"] - lam * losses["adversary"]

    def adversary():
        losses, _ = models.batch_loss(model, x, y, a)
        return lam * losses["adversary"]

    main = [i for i, g in enumerate(groups) if g in ("encoder", "head")]
    adv = [i for i, g in enumerate(groups) if g.startswith("adversary")]
    err = max_relative_error([grads[i] for i in main], central_differences(combined, [params[i] for i in main], h))
    if adv:
        num_adv = central_differences(adversary, [params[i] for i in adv], h)
        err = max(err, max_relative_error([grads[i] for i in adv], num_adv))
    return err


# --------------------------------------------------------------------------- acceptance summary

ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def verdict(request, capsys):
    """Record one PASS/FAIL line for an acceptance criterion and assert on it."""

    def record(name, ok, detail):
        line = f"ACCEPTANCE {'PASS' if ok else 'FAIL'} {name}: {detail}"
        request.config.stash.setdefault(ACCEPTANCE, []).append(line)
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
