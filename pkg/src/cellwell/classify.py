"""Distance weighted discrimination and the well-level decision rules.

The binary classifier minimizes

    sum_i 1/r_i + C * sum_i xi_i
    subject to r_i = label_i * (w . x_i + b) + xi_i,  r_i > 0,
               xi_i >= 0,  ||w||_2 <= 1.

For fixed (w, b) the optimal slack has the closed form
xi_i = max(0, 1/sqrt(C) - rho_i) with rho_i = label_i * (w . x_i + b),
which collapses the problem to minimizing the convex, continuously
differentiable loss

    phi(rho) = 1/rho            for rho >= 1/sqrt(C)
             = 2 sqrt(C) - C rho  otherwise

over the unit ball ||w|| <= 1. The solver is a damped projected Newton
method: each iteration minimizes a local quadratic model subject to the
ball constraint (a one-dimensional Lagrange multiplier search) and
backtracks along the resulting descent direction, so the objective trace
is non-increasing by construction. It stops when the KKT residual drops
to 1e-6 or raises NonConverged after 10,000 iterations.

KKT residual: with g the loss gradient at (w, b) and lambda the least
squares multiplier for the active ball constraint (zero when inactive),
the residual is max(||g_w + 2 lambda w||_inf, |g_b|) divided by
max(1, ||g_w||_inf, |g_b|). Feasibility and complementarity hold exactly
by construction, so this stationarity measure is the whole residual.

Multiclass decisions use one-vs-one voting over the three bio-class
pairs; ties go to Medium. Models serialize to a versioned plain-text
format (header ``dwd-v1``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .datamodel import CLASS_CODE, CLASS_ORDER, Dataset, format_float
from .errors import (
    CellwellError,
    DegenerateData,
    DimensionMismatch,
    EmptyInput,
    EmptyWell,
    FoldMissingClass,
    MissingClass,
    NonConverged,
    SingleClass,
    TooFewWells,
)

AUTO = "auto"
KKT_TOL = 1e-6
MAX_ITER = 10_000

_PAIRS = (("Low", "Medium"), ("Low", "High"), ("Medium", "High"))


@dataclass(frozen=True)
class SolverReport:
    """Iteration count, final KKT residual and (optionally) the objective trace.

    The residual is the largest stationarity violation of the Lagrangian
    divided by max(1, C), so the stopping rule does not tighten or loosen
    with the penalty scale.
    """

    iterations: int
    kkt_residual: float
    objective: float
    objective_trace: tuple[float, ...] | None = None


@dataclass(frozen=True)
class LinearModel:
    """A trained binary DWD rule: predict sign(w . x + b), zero maps to +1."""

    w: np.ndarray = field(repr=False)
    b: float
    penalty: float
    solver_report: SolverReport | None = None

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float).ravel()
        if w.size == 0:
            raise EmptyInput("model weight vector is empty")
        if not np.isfinite(w).all() or not np.isfinite(self.b):
            raise DegenerateData("model parameters must be finite")
        if float(np.linalg.norm(w)) > 1.0 + 1e-8:
            raise DegenerateData("model weight vector exceeds the unit ball")
        if not self.penalty > 0:
            raise DegenerateData("model penalty must be positive")
        w = w.copy()
        w.flags.writeable = False
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "penalty", float(self.penalty))

    @property
    def dim(self) -> int:
        return self.w.size


def auto_penalty(X, labels) -> float:
    """Scale-invariant default penalty 100 / t^2.

    t is the median Euclidean distance between points of opposite classes.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(labels)
    pos = X[y == 1]
    neg = X[y == -1]
    if len(pos) == 0 or len(neg) == 0:
        raise SingleClass("penalty default needs both classes")
    sq = (
        np.sum(pos * pos, axis=1)[:, None]
        + np.sum(neg * neg, axis=1)[None, :]
        - 2.0 * (pos @ neg.T)
    )
    t = float(np.median(np.sqrt(np.maximum(sq, 0.0))))
    if t <= 1e-15:
        raise DegenerateData("median between-class distance is zero")
    return 100.0 / (t * t)


def _loss(rho: np.ndarray, c: float, theta: float, sqrt_c: float) -> float:
    smooth = rho >= theta
    total = float(np.sum(1.0 / rho[smooth])) if smooth.any() else 0.0
    rest = rho[~smooth]
    if rest.size:
        total += float(np.sum(2.0 * sqrt_c - c * rest))
    return total


def _grad_coeffs(rho: np.ndarray, c: float, theta: float) -> np.ndarray:
    out = np.full_like(rho, -c)
    smooth = rho >= theta
    out[smooth] = -1.0 / (rho[smooth] ** 2)
    return out


def _curv_coeffs(rho: np.ndarray, c: float, theta: float) -> np.ndarray:
    out = np.zeros_like(rho)
    smooth = rho >= theta
    out[smooth] = 2.0 / (rho[smooth] ** 3)
    return out


def _kkt_residual(w: np.ndarray, g: np.ndarray, c: float) -> float:
    """Stationarity violation of the Lagrangian, relative to the loss scale.

    The per-point slope of the loss is bounded by C, so gradients scale
    linearly with C; dividing by max(1, C) makes the stopping rule
    invariant to the penalty magnitude.
    """
    gw, gb = g[:-1], g[-1]
    nw2 = float(w @ w)
    lam = 0.0
    if nw2 >= (1.0 - 1e-9) ** 2:
        lam = max(0.0, -float(w @ gw) / (2.0 * nw2))
    stat = max(float(np.max(np.abs(gw + 2.0 * lam * w))), abs(float(gb)))
    return stat / max(1.0, c)


def _ball_step(H: np.ndarray, g: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Minimize g'p + p'Hp/2 subject to ||w + p_w|| <= 1.

    The multiplier for the ball constraint is found by doubling and
    bisection on the monotone radius residual; each evaluation is one
    dense solve of dimension d + 1.
    """
    d = w.size

    def solve(lam: float) -> np.ndarray:
        M = H
        rhs = -g
        if lam > 0.0:
            M = H.copy()
            M[np.arange(d), np.arange(d)] += 2.0 * lam
            rhs = rhs - 2.0 * lam * np.concatenate([w, [0.0]])
        try:
            return np.linalg.solve(M, rhs)
        except np.linalg.LinAlgError:
            return np.linalg.lstsq(M, rhs, rcond=None)[0]

    p = solve(0.0)
    if float(np.linalg.norm(w + p[:d])) <= 1.0:
        return p
    hi = 1.0
    for _ in range(200):
        p = solve(hi)
        if float(np.linalg.norm(w + p[:d])) <= 1.0:
            break
        hi *= 4.0
    lo = 0.0
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        cand = solve(mid)
        if float(np.linalg.norm(w + cand[:d])) <= 1.0:
            hi = mid
        else:
            lo = mid
    return solve(hi)


def dwd_train(
    X,
    labels,
    C: float | str = AUTO,
    *,
    tol: float = KKT_TOL,
    max_iter: int = MAX_ITER,
    keep_trace: bool = False,
) -> LinearModel:
    """Train a binary DWD model.

    Parameters
    ----------
    X : array of shape (m, d)
        Training rows.
    labels : array of shape (m,)
        Class labels, -1 or +1; both classes must be present.
    C : float or "auto"
        Slack penalty. "auto" uses 100 / t^2 with t the median distance
        between opposite-class points.
    tol, max_iter : float, int
        Stopping contract: stop once the KKT residual is at most ``tol``,
        raise :class:`NonConverged` after ``max_iter`` iterations.
    keep_trace : bool
        Store the per-iteration objective trace on the solver report.

    Returns
    -------
    LinearModel
        The returned (w, b) satisfies all constraints exactly: the slack
        reconstruction xi_i = max(0, 1/sqrt(C) - rho_i) gives r_i >=
        1/sqrt(C) > 0 and xi_i >= 0, and ||w|| <= 1 is maintained by the
        projected steps.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyInput("training data must be a non-empty 2-D array")
    if not np.isfinite(X).all():
        raise DegenerateData("training data contain non-finite values")
    y = np.asarray(labels, dtype=float).ravel()
    if y.shape[0] != X.shape[0]:
        raise DimensionMismatch("need one label per training row")
    if not np.isin(y, (-1.0, 1.0)).all():
        raise DegenerateData("labels must be -1 or +1")
    if (y == 1).all() or (y == -1).all():
        raise SingleClass("training data contain a single class")
    if C == AUTO:
        C = auto_penalty(X, y)
    c = float(C)
    if not c > 0:
        raise DegenerateData(f"penalty must be positive, got {C!r}")
    sqrt_c = np.sqrt(c)
    theta = 1.0 / sqrt_c

    m, d = X.shape
    A = np.column_stack([X * y[:, None], y])

    # Start from the normalized mean-difference direction, centered between
    # the class means; this lands most margins in the smooth branch.
    mu_pos = X[y == 1].mean(axis=0)
    mu_neg = X[y == -1].mean(axis=0)
    w0 = mu_pos - mu_neg
    norm0 = float(np.linalg.norm(w0))
    if norm0 > 0:
        w0 = w0 / norm0
        b0 = -float(w0 @ (mu_pos + mu_neg)) / 2.0
    else:
        w0 = np.zeros(d)
        b0 = 0.0
    wb = np.concatenate([w0, [b0]])

    trace: list[float] = []
    iterations = 0
    kkt = np.inf
    f_val = np.inf
    for _ in range(max_iter):
        rho = A @ wb
        f_val = _loss(rho, c, theta, sqrt_c)
        trace.append(f_val)
        g = A.T @ _grad_coeffs(rho, c, theta)
        kkt = _kkt_residual(wb[:d], g, c)
        if kkt <= tol:
            break
        curv = _curv_coeffs(rho, c, theta)
        damp = 1e-10 * max(1.0, float(curv.max(initial=0.0)))
        H = (A * curv[:, None]).T @ A
        H[np.arange(d + 1), np.arange(d + 1)] += damp
        p = _ball_step(H, g, wb[:d])
        cap = 1e4 * (1.0 + float(np.linalg.norm(wb)))
        pnorm = float(np.linalg.norm(p))
        if pnorm > cap:
            p = p * (cap / pnorm)
        slope = float(g @ p)
        if slope >= 0.0:
            # Fall back to the projected steepest descent direction.
            p = _ball_step(np.eye(d + 1) * max(1.0, float(curv.max(initial=1.0))), g, wb[:d])
            slope = float(g @ p)
            if slope >= 0.0:
                break
        alpha = 1.0
        accepted = False
        for _ in range(80):
            cand = wb + alpha * p
            f_new = _loss(A @ cand, c, theta, sqrt_c)
            if f_new <= f_val + 1e-4 * alpha * slope or f_new < f_val:
                wb = cand
                accepted = True
                break
            alpha *= 0.5
        iterations += 1
        if not accepted:
            break
        nw = float(np.linalg.norm(wb[:d]))
        if nw > 1.0:
            wb[:d] /= nw

    rho = A @ wb
    f_val = _loss(rho, c, theta, sqrt_c)
    g = A.T @ _grad_coeffs(rho, c, theta)
    kkt = _kkt_residual(wb[:d], g, c)
    if kkt > tol:
        raise NonConverged(kkt, iterations)
    report = SolverReport(
        iterations=iterations,
        kkt_residual=kkt,
        objective=f_val,
        objective_trace=tuple(trace) if keep_trace else None,
    )
    return LinearModel(wb[:d], float(wb[d]), c, report)


def slack_variables(model: LinearModel, X, labels) -> tuple[np.ndarray, np.ndarray]:
    """Reconstruct the optimal (r, xi) pairs of the trained model on data."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(labels, dtype=float).ravel()
    rho = y * (X @ model.w + model.b)
    theta = 1.0 / np.sqrt(model.penalty)
    xi = np.maximum(0.0, theta - rho)
    return rho + xi, xi


def dwd_predict(model: LinearModel, X) -> np.ndarray:
    """Predict labels -1/+1; points exactly on the boundary map to +1."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.dim:
        raise DimensionMismatch(
            f"cannot predict on shape {X.shape} with a model of dimension {model.dim}"
        )
    scores = X @ model.w + model.b
    return np.where(scores >= 0.0, 1, -1)


@dataclass(frozen=True)
class MulticlassModel:
    """One-vs-one DWD over the bio-class pairs, majority vote, ties to Medium."""

    pairwise: tuple[tuple[tuple[str, str], LinearModel], ...]

    def __post_init__(self):
        pairs = tuple(sorted(self.pairwise, key=lambda item: _PAIRS.index(item[0])))
        got = tuple(p for p, _ in pairs)
        if got != _PAIRS:
            raise MissingClass(f"expected pairwise models for {_PAIRS}, got {got}")
        object.__setattr__(self, "pairwise", pairs)

    @property
    def dim(self) -> int:
        return self.pairwise[0][1].dim


def ovo_train(X, classes, C: float | str = AUTO) -> MulticlassModel:
    """Train the three pairwise models (Low, Medium), (Low, High), (Medium, High).

    In each pair the later class in Low < Medium < High plays the +1 role.
    """
    X = np.asarray(X, dtype=float)
    classes = tuple(classes)
    if X.ndim != 2 or X.shape[0] != len(classes):
        raise DimensionMismatch("need one class per training row")
    present = set(classes)
    missing = [cls for cls in CLASS_ORDER if cls not in present]
    if missing:
        raise MissingClass(f"training data lack class(es): {', '.join(missing)}")
    models = []
    cls_arr = np.asarray(classes, dtype=object)
    for lo, hi in _PAIRS:
        mask = (cls_arr == lo) | (cls_arr == hi)
        labels = np.where(cls_arr[mask] == hi, 1, -1)
        models.append(((lo, hi), dwd_train(X[mask], labels, C)))
    return MulticlassModel(tuple(models))


def ovo_predict(model: MulticlassModel, X) -> tuple[str, ...]:
    """Majority vote over the pairwise predictions; a full tie yields Medium.

    With three voters the counts are (3), (2, 1) or (1, 1, 1), so the
    result never depends on the order in which models are stored.
    """
    X = np.asarray(X, dtype=float)
    votes = np.zeros((X.shape[0], len(CLASS_ORDER)), dtype=int)
    index = {cls: i for i, cls in enumerate(CLASS_ORDER)}
    for (lo, hi), lm in model.pairwise:
        pred = dwd_predict(lm, X)
        votes[pred == 1, index[hi]] += 1
        votes[pred == -1, index[lo]] += 1
    out = []
    for row in votes:
        top = int(row.max())
        if top == 1:
            out.append("Medium")
        else:
            out.append(CLASS_ORDER[int(np.argmax(row))])
    return tuple(out)


def well_scores(cell_classes, well_ids) -> dict[str, float]:
    """Mean encoded class (Low=1, Medium=2, High=3) per well, first-appearance order."""
    cell_classes = tuple(cell_classes)
    well_ids = tuple(well_ids)
    if len(cell_classes) != len(well_ids):
        raise DimensionMismatch("need one class per cell")
    if not well_ids:
        raise EmptyWell("no classified cells to aggregate")
    sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    for cls, wid in zip(cell_classes, well_ids):
        if cls not in CLASS_CODE:
            raise MissingClass(f"unknown class label {cls!r}")
        sums[wid] = sums.get(wid, 0.0) + CLASS_CODE[cls]
        counts[wid] = counts.get(wid, 0) + 1
    return {wid: sums[wid] / counts[wid] for wid in sums}


def decide_from_score(score: float) -> str:
    """Round a well score to the nearest class; halves round up."""
    code = int(np.floor(score + 0.5))
    code = min(max(code, 1), len(CLASS_ORDER))
    return CLASS_ORDER[code - 1]


def cells_alone_decide(cell_classes, well_ids) -> dict[str, str]:
    """Aggregate per-cell classes into per-well classes by mean-and-round.

    The well score is the mean encoded class of its cells; the decision
    rounds to the nearest class with halves rounding up (a score of 2.5
    becomes High). Invariant under permutations of the cell order.
    """
    return {wid: decide_from_score(s) for wid, s in well_scores(cell_classes, well_ids).items()}


def model_to_text(model: LinearModel) -> str:
    """Serialize to the versioned plain-text format (header ``dwd-v1``)."""
    lines = ["dwd-v1", format_float(model.penalty), format_float(model.b)]
    lines.extend(format_float(v) for v in model.w)
    return "\n".join(lines) + "\n"


def model_from_text(text: str) -> LinearModel:
    """Parse a model serialized by :func:`model_to_text`."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != "dwd-v1":
        raise CellwellError("unsupported model format; expected header dwd-v1")
    if len(lines) < 4:
        raise CellwellError("model file is truncated")
    penalty = float(lines[1])
    b = float(lines[2])
    w = np.asarray([float(v) for v in lines[3:]], dtype=float)
    return LinearModel(w, b, penalty)


def save_model(model: LinearModel, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(model_to_text(model))


def load_model(path) -> LinearModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_text(fh.read())


def loocv_error(dataset: Dataset, pipeline) -> float:
    """Leave-one-well-out error with the full pipeline refit on every fold.

    Bases, standardizations and the DWD models are all re-estimated on
    the retained wells; the held-out well is transformed with the fold's
    fitted pipeline and predicted. Only well-level pipelines are
    supported.
    """
    from .simulate import WellFeaturizer  # local import to avoid a module cycle

    if pipeline.objects == "cells":
        raise CellwellError("leave-one-well-out is defined over well-level pipelines")
    order = dataset.well_order
    if len(order) < 3:
        raise TooFewWells("leave-one-well-out needs at least three wells")
    wrong = 0
    for held in order:
        train_ids = [wid for wid in order if wid != held]
        train_classes = set(dataset.assessment.classes_for(train_ids))
        missing = [cls for cls in CLASS_ORDER if cls not in train_classes]
        if missing:
            raise FoldMissingClass(
                f"fold holding out {held} lacks class(es): {', '.join(missing)}"
            )
        train_cells = dataset.cells.select_wells(train_ids)
        train_assess = dataset.assessment.select_wells(train_ids)
        feat = WellFeaturizer(pipeline).fit(train_cells, train_assess)
        train_feats = feat.features(train_cells, dataset.wells)
        model = ovo_train(train_feats, dataset.assessment.classes_for(train_ids), pipeline.dwd_c)
        held_cells = dataset.cells.select_wells([held])
        held_feats = feat.features(held_cells, dataset.wells)
        pred = ovo_predict(model, held_feats)[0]
        if pred != dataset.assessment.class_of(held):
            wrong += 1
    return wrong / len(order)
