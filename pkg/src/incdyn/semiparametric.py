"""Prioritized cascade estimator: parametric stage first, then a random
feature nonparametric stage trained on the parametric residual.

The parametric stage is a scalar-output recursive ridge over rigid-body
regressor rows; it is updated first and never reads anything from the
nonparametric stage, so its state after k samples is identical whether or
not the second stage exists. The nonparametric stage maps the normalized
raw input (optionally with the parametric prediction appended) into random
feature space and learns the residual; predictions add.

Ablation switches cover the two baselines: `use_nonparametric=False` gives
the pure parametric estimator, `use_parametric=False` behaves exactly as if
the regressor were the zero matrix, i.e. a pure nonparametric estimator on
raw inputs (a zero regressor row leaves both the factor and the
cross-product unchanged, so skipping those updates is bit-identical).
"""

import numpy as np

from . import rff
from .rrls import RecursiveRidge

X_ONLY = "x_only"
X_AND_YHAT = "x_and_yhat"
INPUT_MODES = (X_ONLY, X_AND_YHAT)

RESIDUAL_POST_UPDATE = "post_update"
RESIDUAL_PRE_UPDATE = "pre_update"
RESIDUAL_MODES = (RESIDUAL_POST_UPDATE, RESIDUAL_PRE_UPDATE)


class SemiparametricModel:
    """Composable cascade of a parametric and a random-feature estimator.

    Parameters
    ----------
    regressor_fn : callable mapping a JointState-like object to a (t, n_params)
        regressor matrix. May be None when `use_parametric` is False.
    n_params : int
        Number of base parameters (columns of the regressor).
    output_dim : int
        Number of measured outputs t.
    lambda_p, lambda_np : float
        Regularization of the two stages.
    feature_map : RffMap, normalizer : Normalizer
        Frozen nonparametric input pipeline; both fitted before the stream
        starts and never mutated. Required unless `use_nonparametric` is
        False.
    np_input_mode : {"x_and_yhat", "x_only"}
        Whether the parametric prediction is appended to the raw input
        before normalization and mapping.
    residual_mode : {"post_update", "pre_update"}
        Whether the residual target (and the yhat feature) use the
        parametric weights from after or before this sample's parametric
        update.
    """

    def __init__(self, regressor_fn, n_params, output_dim, lambda_p, lambda_np,
                 feature_map=None, normalizer=None,
                 np_input_mode=X_AND_YHAT, residual_mode=RESIDUAL_POST_UPDATE,
                 use_parametric=True, use_nonparametric=True):
        if np_input_mode not in INPUT_MODES:
            raise ValueError(f"np_input_mode must be one of {INPUT_MODES}")
        if residual_mode not in RESIDUAL_MODES:
            raise ValueError(f"residual_mode must be one of {RESIDUAL_MODES}")
        if not (use_parametric or use_nonparametric):
            raise ValueError("at least one stage must be enabled")
        if use_parametric and regressor_fn is None:
            raise ValueError("parametric stage needs a regressor_fn")
        self.regressor_fn = regressor_fn
        self.n_params = int(n_params)
        self.output_dim = int(output_dim)
        self.np_input_mode = np_input_mode
        self.residual_mode = residual_mode
        self.use_parametric = use_parametric
        self.use_nonparametric = use_nonparametric
        # scalar-target convention: every regressor row is one equation
        self.parametric = RecursiveRidge(self.n_params, 1, lambda_p)
        self.feature_map = None
        self.normalizer = None
        self.nonparametric = None
        if use_nonparametric:
            if feature_map is None or normalizer is None:
                raise ValueError(
                    "nonparametric stage needs feature_map and normalizer")
            raw_dim = feature_map.input_dim
            if np_input_mode == X_AND_YHAT:
                raw_dim -= self.output_dim
            if normalizer.mean.shape[0] != feature_map.input_dim:
                raise ValueError("normalizer and feature map dimensions differ")
            self.raw_input_dim = raw_dim
            self.feature_map = feature_map
            self.normalizer = normalizer
            self.nonparametric = RecursiveRidge(
                feature_map.feature_dim, self.output_dim, lambda_np)

    def _parametric_prediction(self, state):
        if not self.use_parametric:
            return np.zeros(self.output_dim)
        return self.regressor_fn(state) @ self.parametric.solve()[:, 0]

    def _features(self, state, y_hat):
        x = state.flat
        if self.np_input_mode == X_AND_YHAT:
            x = np.concatenate((x, y_hat))
        return rff.apply_map(self.feature_map, rff.normalize(self.normalizer, x))

    def predict(self, state):
        """Return (combined, parametric, residual_estimate) for one state.

        The combined prediction is exactly parametric + residual_estimate;
        all three are returned so the harness can log each path.
        """
        y_hat = self._parametric_prediction(state)
        if self.nonparametric is None:
            residual_estimate = np.zeros(self.output_dim)
        else:
            residual_estimate = self.nonparametric.predict(
                self._features(state, y_hat))
        return y_hat + residual_estimate, y_hat, residual_estimate

    def update(self, state, y):
        """Absorb one supervised sample; parametric stage strictly first.

        The regressor rows update the parametric stage as scalar equations;
        the residual y - y_hat (with y_hat from post- or pre-update weights
        per `residual_mode`) then supervises the nonparametric stage.
        Rejects bad targets before mutating anything.
        """
        y = np.asarray(y, dtype=float).ravel()
        if y.shape[0] != self.output_dim:
            raise ValueError(
                f"expected target of length {self.output_dim}, got {y.shape[0]}")
        if not np.isfinite(y).all():
            raise ValueError("target contains non-finite entries")
        y_hat = None
        if self.residual_mode == RESIDUAL_PRE_UPDATE:
            y_hat = self._parametric_prediction(state)
        if self.use_parametric:
            self.parametric.update_block(self.regressor_fn(state), y)
        if self.residual_mode == RESIDUAL_POST_UPDATE:
            y_hat = self._parametric_prediction(state)
        if self.nonparametric is not None:
            self.nonparametric.update(self._features(state, y_hat), y - y_hat)

    def inertial_estimate(self):
        """Current base-parameter estimate (zeros before any update)."""
        return self.parametric.solve()[:, 0].copy()


def checkpoint_payload(model):
    """Flat dict of arrays/scalars capturing the full model state."""
    payload = {
        "n_params": model.n_params,
        "output_dim": model.output_dim,
        "np_input_mode": model.np_input_mode,
        "residual_mode": model.residual_mode,
        "use_parametric": model.use_parametric,
        "use_nonparametric": model.use_nonparametric,
        "par_r": model.parametric.r_factor,
        "par_b": model.parametric.cross,
        "par_lam": model.parametric.lam,
        "par_seen": model.parametric.samples_seen,
    }
    if model.use_nonparametric:
        payload.update(
            np_r=model.nonparametric.r_factor,
            np_b=model.nonparametric.cross,
            np_lam=model.nonparametric.lam,
            np_seen=model.nonparametric.samples_seen,
            map_frequencies=model.feature_map.frequencies,
            map_input_dim=model.feature_map.input_dim,
            map_feature_dim=model.feature_map.feature_dim,
            map_sigma=model.feature_map.sigma,
            map_seed=model.feature_map.seed,
            nrm_mean=model.normalizer.mean,
            nrm_scale=model.normalizer.scale,
        )
    return payload


def model_from_payload(data, regressor_fn):
    """Inverse of `checkpoint_payload`; data may be a dict or an NpzFile."""
    use_np = bool(data["use_nonparametric"])
    feature_map = None
    normalizer = None
    if use_np:
        feature_map = rff.RffMap(
            int(data["map_input_dim"]),
            int(data["map_feature_dim"]),
            float(data["map_sigma"]),
            np.array(data["map_frequencies"], dtype=float),
            int(data["map_seed"]),
        )
        normalizer = rff.Normalizer(
            np.array(data["nrm_mean"], dtype=float),
            np.array(data["nrm_scale"], dtype=float),
        )
    model = SemiparametricModel(
        regressor_fn,
        int(data["n_params"]),
        int(data["output_dim"]),
        float(data["par_lam"]),
        float(data["np_lam"]) if use_np else 1.0,
        feature_map=feature_map,
        normalizer=normalizer,
        np_input_mode=str(data["np_input_mode"]),
        residual_mode=str(data["residual_mode"]),
        use_parametric=bool(data["use_parametric"]),
        use_nonparametric=use_np,
    )
    model.parametric = RecursiveRidge.from_state(
        data["par_r"], data["par_b"], float(data["par_lam"]),
        int(data["par_seen"]))
    if use_np:
        model.nonparametric = RecursiveRidge.from_state(
            data["np_r"], data["np_b"], float(data["np_lam"]),
            int(data["np_seen"]))
    return model


def save_checkpoint(model, path):
    """Serialize everything needed to resume a sequential run mid-stream."""
    np.savez(path, **checkpoint_payload(model))


def load_checkpoint(path, regressor_fn):
    """Rebuild a model saved by `save_checkpoint`."""
    with np.load(path) as data:
        return model_from_payload(data, regressor_fn)
