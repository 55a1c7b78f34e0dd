"""Group-fairness metrics and executable versions of the BER/EO bounds.

Every rate is derived from a 2x2x2 table of cells indexed ``[a, y, yhat]``.
For a sample that table holds counts; for a :class:`FiniteJoint` it holds
probability masses. The same code path turns either into a
:class:`FairnessReport`, so empirical and exact numbers are directly
comparable.

Theorem checks are phrased uniformly as ``lhs <= rhs`` (or ``lhs == rhs`` for
the identity) and report ``slack = rhs - lhs``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

THRESHOLD = 0.5
EXACT_TOL = 1e-12

__all__ = [
    "PredictionSet",
    "FiniteJoint",
    "FairnessReport",
    "TheoremCheck",
    "UndefinedRateError",
    "PreconditionError",
    "confusion",
    "ber",
    "dp_gap",
    "eo_gap",
    "err_gap",
    "joint_err",
    "base_rates",
    "total_variation",
    "report",
    "exact_report",
    "make_eo_joint",
    "random_joint",
    "random_eo_joint",
    "sample_predictions",
    "check_prop1",
    "check_prop2",
    "check_lemma1",
    "check_thm1",
    "check_pigeonhole",
    "check_thm2",
    "check_thm3",
    "check_thm4",
    "check_cor41",
    "check_eo_identity",
    "all_checks",
]


class UndefinedRateError(ValueError):
    """A conditional rate was requested for an event with zero count/mass."""


class PreconditionError(ValueError):
    """A theorem was checked on an input that violates its hypotheses."""


def _binary(name, v):
    v = np.asarray(v)
    if v.ndim != 1:
        raise ValueError(f"{name} must be a vector")
    if not np.all((v == 0) | (v == 1)):
        raise ValueError(f"{name} must contain only 0/1")
    return v.astype(np.int64)


@dataclass(frozen=True, eq=False)
class PredictionSet:
    """Scores in [0, 1] aligned with labels ``y`` and groups ``a``."""

    scores: np.ndarray
    y: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=np.float64)
        if s.ndim != 1:
            raise ValueError("scores must be a vector")
        if np.any(~np.isfinite(s)) or np.any((s < 0) | (s > 1)):
            raise ValueError("scores must lie in [0, 1]")
        y, a = _binary("labels", self.y), _binary("groups", self.a)
        if not (len(s) == len(y) == len(a)):
            raise ValueError(f"length mismatch: scores {len(s)}, labels {len(y)}, groups {len(a)}")
        object.__setattr__(self, "scores", s)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "a", a)

    @property
    def hard(self) -> np.ndarray:
        return (self.scores >= THRESHOLD).astype(np.int64)

    def __len__(self):
        return len(self.scores)


def confusion(preds: PredictionSet) -> np.ndarray:
    """Counts indexed ``[a, y, yhat]``."""
    if len(preds) == 0:
        raise ValueError("empty prediction set")
    cells = np.zeros((2, 2, 2), dtype=np.int64)
    np.add.at(cells, (preds.a, preds.y, preds.hard), 1)
    return cells


def _ratio(num, den, what):
    if den <= 0:
        raise UndefinedRateError(f"{what} is undefined: conditioning event is empty")
    return float(num / den)


class _Cells:
    """Rates read off an [a, y, yhat] table of counts or masses."""

    def __init__(self, cells):
        self.c = np.asarray(cells, dtype=np.float64)
        if self.c.shape != (2, 2, 2) or np.any(self.c < 0):
            raise ValueError("cells must be a nonnegative 2x2x2 table")
        if self.c.sum() <= 0:
            raise ValueError("cells are empty")

    def group_mass(self, a):
        return float(self.c[a].sum() / self.c.sum())

    def base_rate(self, a=None):
        c = self.c if a is None else self.c[a][None]
        tag = "D" if a is None else f"D_{a}"
        return _ratio(c[:, 1].sum(), c.sum(), f"base rate {tag}(Y=1)")

    def gamma(self, a):
        return 1.0 - self.base_rate(a)

    def err(self, a):
        return _ratio(self.c[a, 0, 1] + self.c[a, 1, 0], self.c[a].sum(), f"Err_{a}")

    def pos_rate(self, a):
        return _ratio(self.c[a, :, 1].sum(), self.c[a].sum(), f"D_{a}(Yhat=1)")

    def cond_pos_rate(self, a, y):
        return _ratio(self.c[a, y, 1], self.c[a, y].sum(), f"D_{a}^{y}(Yhat=1) [cell a={a}, y={y}]")

    def fpr(self):
        return _ratio(self.c[:, 0, 1].sum(), self.c[:, 0].sum(), "FPR = D(Yhat=1|Y=0)")

    def fnr(self):
        return _ratio(self.c[:, 1, 0].sum(), self.c[:, 1].sum(), "FNR = D(Yhat=0|Y=1)")

    def label_pred_rate(self, y, yhat):
        """D^y(Yhat = yhat)."""
        return _ratio(self.c[:, y, yhat].sum(), self.c[:, y].sum(), f"D^{y}(Yhat={yhat})")

    def group_given_label(self, a, y):
        """D^y(A = a)."""
        return _ratio(self.c[a, y].sum(), self.c[:, y].sum(), f"D^{y}(A={a})")


def _cells_of(obj) -> _Cells:
    if isinstance(obj, _Cells):
        return obj
    if isinstance(obj, PredictionSet):
        return _Cells(confusion(obj))
    if isinstance(obj, FiniteJoint):
        return _Cells(obj.cells())
    return _Cells(obj)


def ber(preds) -> float:
    """Balanced error rate FNR + FPR, in [0, 2]."""
    c = _cells_of(preds)
    return c.fnr() + c.fpr()


def dp_gap(preds) -> float:
    c = _cells_of(preds)
    return abs(c.pos_rate(0) - c.pos_rate(1))


def eo_gap(preds) -> tuple[float, float, float]:
    """``(gap on Y=0, gap on Y=1, max of the two)``."""
    c = _cells_of(preds)
    g0 = abs(c.cond_pos_rate(0, 0) - c.cond_pos_rate(1, 0))
    g1 = abs(c.cond_pos_rate(0, 1) - c.cond_pos_rate(1, 1))
    return g0, g1, max(g0, g1)


def err_gap(preds) -> float:
    c = _cells_of(preds)
    return abs(c.err(0) - c.err(1))


def joint_err(preds) -> float:
    c = _cells_of(preds)
    return c.err(0) + c.err(1)


def base_rates(data) -> tuple[float, float, float]:
    """``(D_0(Y=1), D_1(Y=1), |difference|)`` for anything carrying ``y``/``a``.

    Accepts a dataset, a :class:`PredictionSet` or a :class:`FiniteJoint`.
    """
    if isinstance(data, FiniteJoint):
        c = _Cells(data.cells())
    else:
        y, a = _binary("labels", data.y), _binary("groups", data.a)
        if len(y) == 0:
            raise ValueError("empty data")
        cells = np.zeros((2, 2, 2))
        np.add.at(cells, (a, y, np.zeros_like(y)), 1)
        c = _Cells(cells)
    br0, br1 = c.base_rate(0), c.base_rate(1)
    return br0, br1, abs(br0 - br1)


def total_variation(p, q) -> float:
    """Half the L1 distance between two distributions on the same finite space."""
    p = np.asarray(p, dtype=np.float64).ravel()
    q = np.asarray(q, dtype=np.float64).ravel()
    if p.shape != q.shape:
        raise ValueError("distributions must share a support")
    for name, v in (("p", p), ("q", q)):
        if np.any(v < 0) or abs(v.sum() - 1.0) > 1e-9:
            raise ValueError(f"{name} is not a probability vector")
    return 0.5 * float(np.abs(p - q).sum())


# ---------------------------------------------------------------------------
# exact finite distributions


@dataclass(eq=False)
class FiniteJoint:
    """Exact joint over (z, y, a) with a deterministic predictor ``z -> {0,1}``.

    ``mass[k, y, a]`` is the probability of representation point ``k`` with
    label ``y`` and group ``a``. ``predictor[k]`` is the hard prediction
    made at point ``k``.
    """

    mass: np.ndarray
    predictor: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mass, dtype=np.float64)
        if m.ndim != 3 or m.shape[1:] != (2, 2):
            raise ValueError("mass must have shape (K, 2, 2)")
        if np.any(m < 0) or abs(m.sum() - 1.0) > EXACT_TOL:
            raise ValueError(f"masses must be nonnegative and sum to 1 (sum={m.sum()!r})")
        h = _binary("predictor", self.predictor)
        if len(h) != m.shape[0]:
            raise ValueError("predictor table must have one entry per support point")
        self.mass, self.predictor = m, h

    @property
    def n_points(self) -> int:
        return self.mass.shape[0]

    def cells(self) -> np.ndarray:
        """Masses indexed ``[a, y, yhat]``."""
        out = np.zeros((2, 2, 2))
        for yhat in (0, 1):
            sel = self.predictor == yhat
            out[:, :, yhat] = self.mass[sel].sum(axis=0).T
        return out

    def pushforward(self, a=None, y=None) -> np.ndarray:
        """Distribution of the representation given ``A=a`` and/or ``Y=y``."""
        m = self.mass
        if y is not None:
            m = m[:, y : y + 1, :]
        if a is not None:
            m = m[:, :, a : a + 1]
        v = m.sum(axis=(1, 2))
        total = v.sum()
        if total <= 0:
            raise UndefinedRateError(f"conditioning event a={a}, y={y} has zero mass")
        return v / total

    def sample(self, n: int, rng: np.random.Generator) -> PredictionSet:
        """Draw ``n`` i.i.d. samples as a hard-scored :class:`PredictionSet`."""
        flat = self.mass.ravel()
        idx = rng.choice(flat.size, size=n, p=flat / flat.sum())
        k, y, a = np.unravel_index(idx, self.mass.shape)
        return PredictionSet(self.predictor[k].astype(np.float64), y, a)


def sample_predictions(joint: FiniteJoint, n: int, seed: int = 0) -> PredictionSet:
    return joint.sample(n, np.random.default_rng(seed))


def make_eo_joint(
    base_rates=(0.5, 0.5),
    group_mass=(0.5, 0.5),
    fpr=0.0,
    fnr=0.0,
    seed=None,
    n_points=2,
) -> FiniteJoint:
    """Joint whose predictor depends on ``Y`` only, so it satisfies EO.

    With ``n_points == 2`` the representation is the prediction itself. With
    more points each (y, yhat) slice is spread over several representation
    points using seeded random weights; the spread depends on ``y`` only, so
    the representation is conditionally aligned across groups.
    """
    br = np.asarray(base_rates, dtype=np.float64)
    pa = np.asarray(group_mass, dtype=np.float64)
    if br.shape != (2,) or pa.shape != (2,) or np.any((br < 0) | (br > 1)):
        raise ValueError("base_rates must be two probabilities")
    if np.any(pa < 0) or abs(pa.sum() - 1) > 1e-12:
        raise ValueError("group_mass must be a distribution over two groups")
    if not (0 <= fpr <= 1 and 0 <= fnr <= 1):
        raise ValueError("fpr and fnr must be probabilities")
    if n_points < 2:
        raise ValueError("need at least two representation points")
    # P(yhat | y)
    rates = np.array([[1.0 - fpr, fpr], [fnr, 1.0 - fnr]])
    # P(y, a)
    p_ya = np.stack([pa * (1.0 - br), pa * br])

    if n_points == 2:
        q = rates.T.copy()  # q[k, y] = P(yhat = k | y)
        predictor = np.array([0, 1])
    else:
        rng = np.random.default_rng(seed)
        n_neg = int(rng.integers(1, n_points))
        predictor = np.r_[np.zeros(n_neg, int), np.ones(n_points - n_neg, int)]
        q = np.zeros((n_points, 2))
        for y in (0, 1):
            for yhat in (0, 1):
                sel = predictor == yhat
                w = rng.dirichlet(np.ones(sel.sum()))
                q[sel, y] = rates[y, yhat] * w
    mass = q[:, :, None] * p_ya[None, :, :]
    return FiniteJoint(mass / mass.sum(), predictor)


def random_joint(rng: np.random.Generator, n_points=4, align=None) -> FiniteJoint:
    """Random joint over (z, y, a) with a random predictor table.

    ``align=None`` draws an unconstrained joint; ``"marginal"`` makes the
    representation independent of A; ``"conditional"`` makes it independent
    of A given Y.
    """
    k = n_points
    predictor = rng.integers(0, 2, size=k)
    if align is None:
        mass = rng.dirichlet(np.ones(4 * k)).reshape(k, 2, 2)
    elif align == "marginal":
        pa = rng.dirichlet([1.0, 1.0])
        qz = rng.dirichlet(np.ones(k))
        py = rng.uniform(size=(k, 2))  # P(Y=1 | z, a)
        mass = np.empty((k, 2, 2))
        mass[:, 1, :] = qz[:, None] * pa[None, :] * py
        mass[:, 0, :] = qz[:, None] * pa[None, :] * (1 - py)
    elif align == "conditional":
        pa = rng.dirichlet([1.0, 1.0])
        br = rng.uniform(size=2)
        p_ya = np.stack([pa * (1 - br), pa * br])
        q = np.stack([rng.dirichlet(np.ones(k)), rng.dirichlet(np.ones(k))], axis=1)
        mass = q[:, :, None] * p_ya[None]
    else:
        raise ValueError(f"unknown alignment {align!r}")
    return FiniteJoint(mass / mass.sum(), predictor)


def random_eo_joint(rng: np.random.Generator, n_points=4) -> FiniteJoint:
    """EO-by-construction joint with random rates, group masses and spread."""
    return make_eo_joint(
        base_rates=rng.uniform(size=2),
        group_mass=(lambda p: (1 - p, p))(rng.uniform(0.05, 0.95)),
        fpr=float(rng.uniform()),
        fnr=float(rng.uniform()),
        seed=int(rng.integers(2**31)),
        n_points=n_points,
    )


# ---------------------------------------------------------------------------
# reports


@dataclass
class FairnessReport:
    err0: float
    err1: float
    joint_err: float
    err_gap: float
    ber: float
    fpr: float
    fnr: float
    dp_gap: float
    eo_gap_y0: float
    eo_gap_y1: float
    eo_gap: float
    base_rate0: float
    base_rate1: float
    delta_br: float
    p_a1: float
    # D^y(A=1) for y = 0, 1; needed for the per-label group mix
    p_a1_given_y0: float
    p_a1_given_y1: float
    n: float
    exact: bool
    cells: list = field(repr=False)

    def to_dict(self) -> dict:
        return asdict(self)


def _report_from_cells(c: _Cells, exact: bool) -> FairnessReport:
    g0, g1, g = eo_gap(c)
    br0, br1 = c.base_rate(0), c.base_rate(1)
    e0, e1 = c.err(0), c.err(1)
    return FairnessReport(
        err0=e0,
        err1=e1,
        joint_err=e0 + e1,
        err_gap=abs(e0 - e1),
        ber=c.fnr() + c.fpr(),
        fpr=c.fpr(),
        fnr=c.fnr(),
        dp_gap=abs(c.pos_rate(0) - c.pos_rate(1)),
        eo_gap_y0=g0,
        eo_gap_y1=g1,
        eo_gap=g,
        base_rate0=br0,
        base_rate1=br1,
        delta_br=abs(br0 - br1),
        p_a1=c.group_mass(1),
        p_a1_given_y0=c.group_given_label(1, 0),
        p_a1_given_y1=c.group_given_label(1, 1),
        n=float(c.c.sum()),
        exact=exact,
        cells=c.c.tolist() if exact else c.c.astype(int).tolist(),
    )


def report(preds: PredictionSet) -> FairnessReport:
    """Empirical report; raises :class:`UndefinedRateError` on an empty (a, y) cell."""
    return _report_from_cells(_Cells(confusion(preds)), exact=False)


def partial_report(preds: PredictionSet) -> tuple[dict, dict]:
    """Every report field that is defined, plus the reason for each one that is not.

    Returns ``(values, undefined)``: ``values`` maps each report field to a
    number, or to ``None`` when a conditioning event is empty, and
    ``undefined`` maps those fields to the error message. Use this when some
    (a, y) cell may be empty, for example for single-group data.
    """
    c = _Cells(confusion(preds))
    fields = {
        "err0": lambda: c.err(0),
        "err1": lambda: c.err(1),
        "joint_err": lambda: c.err(0) + c.err(1),
        "err_gap": lambda: abs(c.err(0) - c.err(1)),
        "ber": lambda: c.fnr() + c.fpr(),
        "fpr": c.fpr,
        "fnr": c.fnr,
        "dp_gap": lambda: abs(c.pos_rate(0) - c.pos_rate(1)),
        "eo_gap_y0": lambda: abs(c.cond_pos_rate(0, 0) - c.cond_pos_rate(1, 0)),
        "eo_gap_y1": lambda: abs(c.cond_pos_rate(0, 1) - c.cond_pos_rate(1, 1)),
        "eo_gap": lambda: eo_gap(c)[2],
        "base_rate0": lambda: c.base_rate(0),
        "base_rate1": lambda: c.base_rate(1),
        "delta_br": lambda: abs(c.base_rate(0) - c.base_rate(1)),
        "p_a1_given_y0": lambda: c.group_given_label(1, 0),
        "p_a1_given_y1": lambda: c.group_given_label(1, 1),
    }
    values, undefined = {}, {}
    for name, fn in fields.items():
        try:
            values[name] = fn()
        except UndefinedRateError as exc:
            values[name] = None
            undefined[name] = str(exc)
    values.update(p_a1=c.group_mass(1), n=float(c.c.sum()), exact=False, cells=c.c.astype(int).tolist())
    return values, undefined


def exact_report(joint: FiniteJoint) -> FairnessReport:
    return _report_from_cells(_Cells(joint.cells()), exact=True)


# ---------------------------------------------------------------------------
# theorem checks


@dataclass
class TheoremCheck:
    name: str
    lhs: float
    rhs: float
    slack: float
    passed: bool | None  # None: diagnostic only, hypotheses not guaranteed
    relation: str = "<="
    parts: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "pass": self.passed,
        }


def _le(name, lhs, rhs, tol=EXACT_TOL, diagnostic=False, parts=()):
    ok = None if diagnostic else bool(lhs - rhs <= tol) and all(p.passed for p in parts)
    return TheoremCheck(name, float(lhs), float(rhs), float(rhs - lhs), ok, "<=", list(parts))


def _eq(name, lhs, rhs, tol=EXACT_TOL, diagnostic=False):
    ok = None if diagnostic else bool(abs(lhs - rhs) <= tol)
    return TheoremCheck(name, float(lhs), float(rhs), float(rhs - lhs), ok, "==")


def _conditionally_aligned(joint: FiniteJoint, tol=EXACT_TOL) -> bool:
    for y in (0, 1):
        try:
            d = total_variation(joint.pushforward(a=0, y=y), joint.pushforward(a=1, y=y))
        except UndefinedRateError:
            continue
        if d > tol:
            return False
    return True


def _eo_source(src, tol, name):
    """Resolve a joint or report into (report, diagnostic flag)."""
    if isinstance(src, FiniteJoint):
        rep = exact_report(src)
        if rep.eo_gap > tol:
            raise PreconditionError(f"{name} needs equalized odds; exact eo_gap={rep.eo_gap:.3e}")
        return rep, False
    if isinstance(src, FairnessReport):
        # sample-based EO only holds approximately, so never a verdict
        return src, not src.exact or src.eo_gap > tol
    raise TypeError(f"expected FiniteJoint or FairnessReport, got {type(src).__name__}")


def check_prop1(joint: FiniteJoint, tol=EXACT_TOL) -> TheoremCheck:
    """Conditionally aligned representation => any predictor on it has EO."""
    if not _conditionally_aligned(joint, tol):
        raise PreconditionError("representation is not conditionally aligned")
    return _le("prop1_alignment_implies_eo", exact_report(joint).eo_gap, 0.0, tol)


def check_prop2(joint: FiniteJoint, tol=EXACT_TOL) -> TheoremCheck:
    """Conditionally aligned => d_TV of the prediction pushforwards <= Delta_BR."""
    if not _conditionally_aligned(joint, tol):
        raise PreconditionError("representation is not conditionally aligned")
    c = _Cells(joint.cells())
    p0 = [1 - c.pos_rate(0), c.pos_rate(0)]
    p1 = [1 - c.pos_rate(1), c.pos_rate(1)]
    br0, br1 = c.base_rate(0), c.base_rate(1)
    return _le("prop2_prediction_tv_le_delta_br", total_variation(p0, p1), abs(br0 - br1), tol)


def _lemma1(rep: FairnessReport, tol, diagnostic) -> list[TheoremCheck]:
    cells = np.asarray(rep.cells, dtype=np.float64)
    checks = []
    for yhat in (0, 1):
        by_group = [cells[a, :, yhat].sum() / cells[a].sum() for a in (0, 1)]
        by_label = [cells[:, y, yhat].sum() / cells[:, y].sum() for y in (0, 1)]
        lhs = abs(by_group[0] - by_group[1])
        rhs = rep.delta_br * (by_label[0] + by_label[1])
        checks.append(_le(f"lemma1_yhat{yhat}", lhs, rhs, tol, diagnostic))
    return checks


def check_lemma1(src, tol=EXACT_TOL) -> list[TheoremCheck]:
    """Under EO, for y in {0, 1}:
    |D_0(Yhat=y) - D_1(Yhat=y)| <= |gamma_0 - gamma_1| (D^0(Yhat=y) + D^1(Yhat=y)).
    """
    rep, diag = _eo_source(src, tol, "lemma1")
    return _lemma1(rep, tol, diag)


def check_thm1(joint: FiniteJoint, tol=EXACT_TOL) -> TheoremCheck:
    """Err_0 + Err_1 >= Delta_BR - d_TV(g#D_0, g#D_1), for any joint."""
    rep = exact_report(joint)
    dtv = total_variation(joint.pushforward(a=0), joint.pushforward(a=1))
    return _le("thm1_joint_error_lower_bound", rep.delta_br - dtv, rep.joint_err, tol)


def check_pigeonhole(joint: FiniteJoint, tol=EXACT_TOL) -> TheoremCheck:
    """Group-independent representation => max(Err_0, Err_1) >= Delta_BR / 2."""
    dtv = total_variation(joint.pushforward(a=0), joint.pushforward(a=1))
    if dtv > tol:
        raise PreconditionError(f"representation depends on the group (d_TV={dtv:.3e})")
    rep = exact_report(joint)
    return _le("thm1_pigeonhole", rep.delta_br / 2.0, max(rep.err0, rep.err1), tol)


def check_thm2(src, tol=EXACT_TOL) -> TheoremCheck:
    """Under EO: Delta_DP <= Delta_BR (with both per-prediction rate bounds as parts)."""
    rep, diag = _eo_source(src, tol, "thm2")
    parts = _lemma1(rep, tol, diag)
    return _le("thm2_dp_gap_le_delta_br", rep.dp_gap, rep.delta_br, tol, diag, parts)


def check_thm3(src, tol=EXACT_TOL) -> TheoremCheck:
    """Under EO: Err_0 + Err_1 <= 2 BER."""
    rep, diag = _eo_source(src, tol, "thm3")
    return _le("thm3_joint_error_le_2ber", rep.joint_err, 2.0 * rep.ber, tol, diag)


def check_cor41(src, tol=EXACT_TOL) -> TheoremCheck:
    """Under EO: max(Err_0, Err_1) <= Delta_BR * BER / 2 + BER."""
    rep, diag = _eo_source(src, tol, "cor41")
    rhs = rep.delta_br * rep.ber / 2.0 + rep.ber
    return _le("cor41_max_group_error", max(rep.err0, rep.err1), rhs, tol, diag)


def check_eo_identity(src, tol=EXACT_TOL) -> TheoremCheck:
    """Under EO: Delta_Err == Delta_BR * |FPR - FNR|."""
    rep, diag = _eo_source(src, tol, "eo_identity")
    return _eq("eo_error_gap_identity", rep.err_gap, rep.delta_br * abs(rep.fpr - rep.fnr), tol, diag)


def check_thm4(src, tol=EXACT_TOL) -> TheoremCheck:
    """Delta_Err <= Delta_BR * BER + 2 Delta_EO, for any classifier."""
    rep = exact_report(src) if isinstance(src, FiniteJoint) else src
    rhs = rep.delta_br * rep.ber + 2.0 * rep.eo_gap
    return _le("thm4_error_gap_bound", rep.err_gap, rhs, tol)


def all_checks(rep: FairnessReport, tol=EXACT_TOL) -> dict[str, TheoremCheck]:
    """Checks that can be evaluated from a report alone.

    The unconditional error-gap bound is always a verdict; the EO-conditional
    results are diagnostics unless the report is exact and EO holds.
    """
    out = {}
    for fn in (check_thm4, check_thm2, check_thm3, check_cor41, check_eo_identity):
        chk = fn(rep, tol)
        out[chk.name] = chk
    return out
