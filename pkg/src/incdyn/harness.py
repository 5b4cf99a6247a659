"""Experiment harness: dataset generation for the simulated arm, the
sequential train / test-then-update protocol, sliding-window metrics, and
CSV emission.

File formats
------------
Dataset CSV (one per trajectory and seed): header row
``t,q1,q2,qd1,qd2,qdd1,qdd2,y1,y2``, UTF-8, ``.`` decimal separator, 17
significant digits so values round-trip exactly.

Per-run fold CSVs (``<est>/seed<k>/fold###.csv``): header
``sample_index,time_s,fold,err_j1,err_j2,wrmse_j1,wrmse_j2,wrmse_mean``
where ``wrmse_*`` is the sliding-window RMSE (window resets at each fold
start, shorter prefix at the start) and ``wrmse_mean`` averages the
per-joint values.

Metrics CSV (``metrics_<est>.csv``, written by `summarize`): columns
``sample_index,time_s,rmse_window_mean,rmse_window_std`` with mean/std
taken across seeds at each test-stream sample. ``foldmean_<est>.csv`` is
the plot-data companion aggregated across fold repetitions (all seeds
pooled) at each within-fold index, which is the paper-style presentation.

A run directory also carries ``config.txt`` (the resolved flat key=value
configuration), per-run ``checkpoint.npz`` (estimator state plus completed
fold count, written atomically after each fold so interrupted runs resume),
``rff_map.npz`` (the frozen random feature map) and ``summary.csv`` (regime
RMSE per estimator, aggregated both across folds and across seeds).
"""

import os
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import rff, semiparametric
from .planar_arm import (
    N_BASE_PARAMS,
    N_DOF,
    JointState,
    PlanarArmModel,
    regressor,
    simulate_output,
    trajectory,
)
from .semiparametric import (
    RESIDUAL_MODES,
    RESIDUAL_POST_UPDATE,
    X_AND_YHAT,
    X_ONLY,
    SemiparametricModel,
)

ESTIMATORS = ("p", "np", "sp")
DATASET_HEADER = "t,q1,q2,qd1,qd2,qdd1,qdd2,y1,y2"
FOLD_HEADER = "sample_index,time_s,fold,err_j1,err_j2,wrmse_j1,wrmse_j2,wrmse_mean"
METRICS_HEADER = "sample_index,time_s,rmse_window_mean,rmse_window_std"
SUMMARY_HEADER = ("estimator,regime_rmse_mean,regime_rmse_std_folds,"
                  "regime_rmse_std_seeds,n_seeds,n_folds")
REGIME_FRACTION = 0.5  # regime = mean window RMSE over the last half of a fold
FLOAT_FMT = "%.17g"


class ConfigError(ValueError):
    """Invalid experiment configuration (bad key, value, or combination)."""


# Two multi-sine excitation sets with disjoint frequencies and phases, so
# the test trajectory visits input regions unseen during training.
DEFAULT_TRAJ_A = (
    ((0.8, 0.11, 0.0), (0.35, 0.29, 1.1)),
    ((0.7, 0.17, 0.5), (0.30, 0.37, 2.2)),
)
DEFAULT_TRAJ_B = (
    ((0.75, 0.13, 0.9), (0.30, 0.31, 2.0)),
    ((0.65, 0.19, 1.4), (0.28, 0.41, 0.3)),
)


@dataclass
class ExperimentConfig:
    """Everything a protocol run depends on; all defaults overridable."""

    # plant
    l1: float = 0.4
    l2: float = 0.3
    m1: float = 1.2
    m2: float = 0.8
    lc1: float = 0.2
    lc2: float = 0.15
    i1: float = 0.016
    i2: float = 0.006
    gravity: float = 9.81
    viscous: tuple = (0.0, 0.0)
    coulomb: tuple = (0.0, 0.0)
    noise_std: float = 0.0
    # excitation
    traj_a: tuple = DEFAULT_TRAJ_A
    traj_b: tuple = DEFAULT_TRAJ_B
    rate_hz: float = 10.0
    # protocol
    n_train: int = 10000
    n_test_folds: int = 10
    fold_size: int = 1000
    estimators: tuple = ESTIMATORS
    seeds: tuple = (0,)
    rmse_window: int = 30
    # hyperparameters (None means the 1e-6 * n_train default)
    lambda_p: float = None
    lambda_np: float = None
    sigma: object = "median"
    features: int = 1000
    np_input_mode: str = X_AND_YHAT
    residual_mode: str = RESIDUAL_POST_UPDATE

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.rate_hz <= 0:
            raise ConfigError("rate_hz must be positive")
        if self.n_train < 2 or self.n_test_folds < 1 or self.fold_size < 1:
            raise ConfigError("n_train, n_test_folds and fold_size must be positive")
        if self.rmse_window < 1:
            raise ConfigError("rmse_window must be positive")
        if self.features < 2 or self.features % 2 != 0:
            raise ConfigError("features must be a positive even integer")
        bad = [e for e in self.estimators if e not in ESTIMATORS]
        if bad or not self.estimators:
            raise ConfigError(f"estimators must be a non-empty subset of {ESTIMATORS}")
        if not self.seeds:
            raise ConfigError("need at least one seed")
        for name in ("lambda_p", "lambda_np"):
            v = getattr(self, name)
            if v is not None and not float(v) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.sigma != "median" and not float(self.sigma) > 0:
            raise ConfigError("sigma must be positive or 'median'")
        if self.np_input_mode not in (X_ONLY, X_AND_YHAT):
            raise ConfigError("np_input_mode must be x_only or x_and_yhat")
        if self.residual_mode not in RESIDUAL_MODES:
            raise ConfigError("residual_mode must be post_update or pre_update")
        try:
            self.plant()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def plant(self):
        return PlanarArmModel(
            l1=self.l1, l2=self.l2, m1=self.m1, m2=self.m2,
            lc1=self.lc1, lc2=self.lc2, i1=self.i1, i2=self.i2,
            gravity=self.gravity, viscous=tuple(self.viscous),
            coulomb=tuple(self.coulomb), noise_std=self.noise_std,
        )

    @property
    def n_test(self):
        return self.n_test_folds * self.fold_size


# ---------------------------------------------------------------------------
# flat key=value configuration files

_FLOAT_KEYS = ("l1", "l2", "m1", "m2", "lc1", "lc2", "i1", "i2", "gravity",
               "noise_std", "rate_hz")
_INT_KEYS = ("n_train", "n_test_folds", "fold_size", "features", "rmse_window")
_PAIR_KEYS = ("viscous", "coulomb")
_STR_KEYS = ("np_input_mode", "residual_mode")


def _parse_terms(text):
    terms = []
    for chunk in text.split(","):
        parts = chunk.split(":")
        if len(parts) != 3:
            raise ConfigError(
                f"trajectory term {chunk!r} is not amplitude:frequency:phase")
        terms.append(tuple(float(p) for p in parts))
    return tuple(terms)


def parse_config(text):
    """Build an ExperimentConfig from flat ``key = value`` text.

    Blank lines and ``#`` comments are ignored; unknown keys are errors.
    """
    values = {}
    traj = {"traj_a": [None, None], "traj_b": [None, None]}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip().lower()
        val = val.strip()
        try:
            if key in _FLOAT_KEYS:
                values[key] = float(val)
            elif key in _INT_KEYS:
                values[key] = int(val)
            elif key in _PAIR_KEYS:
                parts = [float(p) for p in val.split(",")]
                if len(parts) != N_DOF:
                    raise ConfigError(f"{key} needs {N_DOF} comma-separated values")
                values[key] = tuple(parts)
            elif key in _STR_KEYS:
                values[key] = val
            elif key == "estimators":
                values[key] = tuple(p.strip().lower() for p in val.split(",") if p.strip())
            elif key == "seeds":
                values[key] = tuple(int(p) for p in val.split(","))
            elif key in ("lambda_p", "lambda_np"):
                values[key] = None if val.lower() == "auto" else float(val)
            elif key == "sigma":
                values[key] = "median" if val.lower() == "median" else float(val)
            elif key in ("traj_a_j1", "traj_a_j2", "traj_b_j1", "traj_b_j2"):
                traj[key[:-3]][int(key[-1]) - 1] = _parse_terms(val)
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {val!r}") from exc
    for name in ("traj_a", "traj_b"):
        given = traj[name]
        if any(g is not None for g in given):
            default = DEFAULT_TRAJ_A if name == "traj_a" else DEFAULT_TRAJ_B
            values[name] = tuple(
                g if g is not None else default[j] for j, g in enumerate(given))
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path):
    """Parse a configuration file; missing files surface as I/O errors."""
    return parse_config(Path(path).read_text(encoding="utf-8"))


def config_to_text(cfg):
    """Serialize a config back to the flat key=value format (round-trips)."""
    lines = []
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if f.name in ("traj_a", "traj_b"):
            for j, joint_terms in enumerate(value, start=1):
                terms = ", ".join(f"{a:.17g}:{fr:.17g}:{ph:.17g}"
                                  for a, fr, ph in joint_terms)
                lines.append(f"{f.name}_j{j} = {terms}")
        elif f.name in _PAIR_KEYS:
            lines.append(f"{f.name} = {value[0]:.17g}, {value[1]:.17g}")
        elif f.name in ("estimators",):
            lines.append(f"{f.name} = {','.join(value)}")
        elif f.name == "seeds":
            lines.append(f"{f.name} = {','.join(str(s) for s in value)}")
        elif f.name in ("lambda_p", "lambda_np"):
            lines.append(f"{f.name} = {'auto' if value is None else format(value, '.17g')}")
        elif f.name == "sigma":
            lines.append(f"{f.name} = {value if value == 'median' else format(value, '.17g')}")
        elif f.name in _STR_KEYS:
            lines.append(f"{f.name} = {value}")
        elif f.name in _INT_KEYS:
            lines.append(f"{f.name} = {value}")
        else:
            lines.append(f"{f.name} = {format(value, '.17g')}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# datasets

def dataset_filename(which, seed):
    return f"dataset_{which}_seed{seed}.csv"


def generate_dataset(cfg, which, seed, out_dir):
    """Simulate one trajectory and write it as a dataset CSV.

    ``which`` selects the training ("a") or test ("b") excitation set; the
    file is byte-identical across calls with the same config and seed.
    Returns the written path.
    """
    which = which.lower()
    if which == "a":
        terms, n = cfg.traj_a, cfg.n_train
    elif which == "b":
        terms, n = cfg.traj_b, cfg.n_test
    else:
        raise ConfigError(f"dataset selector must be 'a' or 'b', got {which!r}")
    t, states = trajectory(terms, cfg.rate_hz, n)
    plant = cfg.plant()
    rng = np.random.default_rng([int(seed), 0 if which == "a" else 1])
    rows = np.empty((n, 1 + 3 * N_DOF + N_DOF))
    rows[:, 0] = t
    for i, s in enumerate(states):
        rows[i, 1:1 + 3 * N_DOF] = s.flat
        rows[i, 1 + 3 * N_DOF:] = simulate_output(plant, s, rng)
    out_dir = Path(out_dir)
    path = out_dir / dataset_filename(which, seed)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_csv(path, rows, DATASET_HEADER)
    except OSError as exc:
        raise OSError(f"cannot write dataset to {path}: {exc}") from exc
    return path


def read_dataset(path):
    """Load a dataset CSV back into (t, states, Y)."""
    arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    t = arr[:, 0]
    states = [JointState(row[1:3], row[3:5], row[5:7]) for row in arr]
    return t, states, arr[:, 7:]


def _write_csv(path, rows, header):
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    np.savetxt(tmp, np.atleast_2d(rows), fmt=FLOAT_FMT, delimiter=",",
               header=header, comments="")
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# estimators and streams

def resolved_lambdas(cfg):
    """The (lambda_p, lambda_np) pair actually used, applying the
    1e-6 * n_train default where unset."""
    auto = 1e-6 * cfg.n_train
    lam_p = auto if cfg.lambda_p is None else float(cfg.lambda_p)
    lam_np = auto if cfg.lambda_np is None else float(cfg.lambda_np)
    return lam_p, lam_np


def build_estimator(kind, cfg, train_states, train_y, seed):
    """Construct a p / np / sp estimator with its input pipeline frozen on
    the training data.

    The normalizer is fitted on the raw training inputs (with the training
    targets standing in for the yhat coordinates when those are part of the
    nonparametric input), sigma comes from the median heuristic on the
    normalized inputs unless pinned, and the feature map seed is derived
    deterministically from the run seed and estimator kind.
    """
    if kind not in ESTIMATORS:
        raise ConfigError(f"unknown estimator {kind!r}")
    lam_p, lam_np = resolved_lambdas(cfg)
    if kind == "p":
        return SemiparametricModel(
            regressor, N_BASE_PARAMS, N_DOF, lam_p, lam_np,
            use_nonparametric=False)
    mode = cfg.np_input_mode if kind == "sp" else X_ONLY
    X = np.stack([s.flat for s in train_states])
    if mode == X_AND_YHAT:
        X = np.hstack([X, np.asarray(train_y, dtype=float)])
    normalizer = rff.fit_normalizer(X)
    if cfg.sigma == "median":
        sigma = rff.median_heuristic(rff.normalize(normalizer, X), seed=seed)
    else:
        sigma = float(cfg.sigma)
    map_seed = 1_000_003 * int(seed) + ESTIMATORS.index(kind)
    fmap = rff.sample_map(X.shape[1], cfg.features, sigma, map_seed)
    return SemiparametricModel(
        regressor, N_BASE_PARAMS, N_DOF, lam_p, lam_np,
        feature_map=fmap, normalizer=normalizer, np_input_mode=mode,
        residual_mode=cfg.residual_mode,
        use_parametric=(kind == "sp"), use_nonparametric=True)


def train_stream(model, states, Y):
    """Bulk sequential training: update only, no predictions recorded."""
    for state, y in zip(states, Y):
        model.update(state, y)


def test_then_update(model, states, Y):
    """Sequential evaluation: predict first, record, then update.

    The prediction recorded at sample i is computed before sample i touches
    the model, so recorded errors never use their own target.
    """
    preds = np.empty((len(states), model.output_dim))
    for i, (state, y) in enumerate(zip(states, Y)):
        preds[i] = model.predict(state)[0]
        model.update(state, y)
    return preds


# ---------------------------------------------------------------------------
# metrics

def window_rmse(errors, window):
    """Sliding-window RMSE per column.

    Row i uses exactly the trailing `window` samples (a shorter prefix at
    the start of the series). errors has shape (n,) or (n, t).
    """
    window = int(window)
    if window < 1:
        raise ValueError("window must be positive")
    errors = np.asarray(errors, dtype=float)
    single = errors.ndim == 1
    sq = np.atleast_2d(errors.T).T ** 2
    csum = np.cumsum(sq, axis=0)
    shifted = np.zeros_like(csum)
    if window < len(sq):
        shifted[window:] = csum[:-window]
    counts = np.minimum(np.arange(len(sq)) + 1, window)
    out = np.sqrt((csum - shifted) / counts[:, None])
    return out[:, 0] if single else out


def regime_value(series, fraction=REGIME_FRACTION):
    """Mean of the trailing `fraction` of a window-RMSE series."""
    series = np.asarray(series, dtype=float)
    start = int(round(len(series) * (1.0 - fraction)))
    return float(series[start:].mean())


# ---------------------------------------------------------------------------
# protocol

def _save_run_checkpoint(run_dir, model, completed_folds):
    payload = semiparametric.checkpoint_payload(model)
    payload["completed_folds"] = int(completed_folds)
    tmp = run_dir / "checkpoint.tmp"
    with open(tmp, "wb") as fh:
        np.savez(fh, **payload)
    os.replace(tmp, run_dir / "checkpoint.npz")


def _run_one(cfg, kind, seed, train_data, test_data, run_dir, resume):
    t_b, states_b, Y_b = test_data
    run_dir.mkdir(parents=True, exist_ok=True)
    ckpt_path = run_dir / "checkpoint.npz"
    completed = 0
    model = None
    if resume and ckpt_path.exists():
        with np.load(ckpt_path) as data:
            completed = int(data["completed_folds"])
            model = semiparametric.model_from_payload(data, regressor)
    if model is None:
        t_a, states_a, Y_a = train_data
        model = build_estimator(kind, cfg, states_a, Y_a, seed)
        if model.feature_map is not None:
            rff.save_map(model.feature_map, run_dir / "rff_map.npz")
        train_stream(model, states_a, Y_a)
        _save_run_checkpoint(run_dir, model, 0)
    for fold in range(completed, cfg.n_test_folds):
        sl = slice(fold * cfg.fold_size, (fold + 1) * cfg.fold_size)
        preds = test_then_update(model, states_b[sl], Y_b[sl])
        errs = Y_b[sl] - preds
        wr = window_rmse(errs, cfg.rmse_window)
        rows = np.column_stack([
            np.arange(sl.start, sl.stop, dtype=float),
            t_b[sl],
            np.full(cfg.fold_size, float(fold)),
            errs,
            wr,
            wr.mean(axis=1),
        ])
        _write_csv(run_dir / f"fold{fold:03d}.csv", rows, FOLD_HEADER)
        _save_run_checkpoint(run_dir, model, fold + 1)
    return model


def run_protocol(cfg, out_dir, resume=True):
    """Run the sequential validation protocol and write all artifacts.

    For every configured seed and estimator: generate (or reuse) the two
    datasets, train on all of dataset A from zero initial weights, then walk
    the folds of dataset B predicting before each update. Fold metrics are
    flushed as each fold completes and the estimator state is checkpointed,
    so an interrupted run resumes where it stopped. Returns the output
    directory path.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(config_to_text(cfg), encoding="utf-8")
    for seed in cfg.seeds:
        path_a = out / dataset_filename("a", seed)
        path_b = out / dataset_filename("b", seed)
        if not (resume and path_a.exists()):
            generate_dataset(cfg, "a", seed, out)
        if not (resume and path_b.exists()):
            generate_dataset(cfg, "b", seed, out)
        train_data = read_dataset(path_a)
        test_data = read_dataset(path_b)
        for kind in cfg.estimators:
            run_dir = out / kind / f"seed{seed}"
            _run_one(cfg, kind, seed, train_data, test_data, run_dir, resume)
    summarize(out)
    return out


# ---------------------------------------------------------------------------
# aggregation

def _load_runs(results_dir, kind):
    """Per-seed stacked fold arrays for one estimator: {seed: (folds, rows)}."""
    runs = {}
    kind_dir = Path(results_dir) / kind
    if not kind_dir.is_dir():
        return runs
    for seed_dir in sorted(kind_dir.iterdir()):
        if not seed_dir.is_dir() or not seed_dir.name.startswith("seed"):
            continue
        fold_files = sorted(seed_dir.glob("fold*.csv"))
        if not fold_files:
            continue
        folds = [np.loadtxt(f, delimiter=",", skiprows=1, ndmin=2)
                 for f in fold_files]
        runs[seed_dir.name] = folds
    return runs


def summarize(results_dir):
    """Aggregate a (possibly partial) results directory.

    Writes ``metrics_<est>.csv`` (window-RMSE mean/std across seeds per test
    sample), ``foldmean_<est>.csv`` (mean/std across fold repetitions per
    within-fold sample), and ``summary.csv`` (regime RMSE per estimator,
    spread reported both across folds and across seeds). Estimators named in
    the run configuration but absent on disk are skipped with a warning.
    Returns the path to ``summary.csv``.
    """
    results_dir = Path(results_dir)
    expected = ESTIMATORS
    config_path = results_dir / "config.txt"
    if config_path.exists():
        expected = parse_config(config_path.read_text(encoding="utf-8")).estimators
    summary_rows = []
    for kind in expected:
        runs = _load_runs(results_dir, kind)
        if not runs:
            print(f"warning: no results for estimator {kind!r} in {results_dir}",
                  file=sys.stderr)
            continue
        # across seeds, per global test sample (truncate to common length)
        stacked = [np.vstack(folds) for folds in runs.values()]
        n_common = min(len(s) for s in stacked)
        series = np.stack([s[:n_common, 7] for s in stacked])
        metrics = np.column_stack([
            stacked[0][:n_common, 0],
            stacked[0][:n_common, 1],
            series.mean(axis=0),
            series.std(axis=0),
        ])
        _write_csv(results_dir / f"metrics_{kind}.csv", metrics, METRICS_HEADER)
        # across fold repetitions (seeds pooled), per within-fold sample
        all_folds = [f for folds in runs.values() for f in folds]
        fold_len = min(len(f) for f in all_folds)
        fold_series = np.stack([f[:fold_len, 7] for f in all_folds])
        rel_time = all_folds[0][:fold_len, 1] - all_folds[0][0, 1]
        foldmean = np.column_stack([
            np.arange(fold_len, dtype=float),
            rel_time,
            fold_series.mean(axis=0),
            fold_series.std(axis=0),
        ])
        _write_csv(results_dir / f"foldmean_{kind}.csv", foldmean, METRICS_HEADER)
        # regime statistics, both aggregations
        per_fold = np.array([regime_value(f[:, 7]) for f in all_folds])
        per_seed = np.array([
            np.mean([regime_value(f[:, 7]) for f in folds])
            for folds in runs.values()
        ])
        summary_rows.append(
            f"{kind},{per_fold.mean():.17g},{per_fold.std():.17g},"
            f"{per_seed.std():.17g},{len(per_seed)},{len(all_folds)}")
    summary_path = results_dir / "summary.csv"
    summary_path.write_text(
        SUMMARY_HEADER + "\n" + "".join(r + "\n" for r in summary_rows),
        encoding="utf-8")
    return summary_path


def read_summary(results_dir):
    """Regime table from ``summary.csv`` as {estimator: dict of columns}."""
    path = Path(results_dir) / "summary.csv"
    table = {}
    lines = path.read_text(encoding="utf-8").strip().splitlines()
    for line in lines[1:]:
        kind, mean, std_f, std_s, n_seeds, n_folds = line.split(",")
        table[kind] = {
            "regime_rmse_mean": float(mean),
            "regime_rmse_std_folds": float(std_f),
            "regime_rmse_std_seeds": float(std_s),
            "n_seeds": int(n_seeds),
            "n_folds": int(n_folds),
        }
    return table
