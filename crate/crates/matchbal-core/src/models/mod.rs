//! Predictors of match competitive balance.
//!
//! Score-difference regressors (Dummy, AvgSkill, Linear, RandomForest,
//! MlpRegressor) predict the signed final score difference and call a
//! match balanced when |r| < theta. Win-probability classifiers
//! (Logistic, MlpSoftmax) predict P(team 1 wins) and call a match
//! balanced when |p - 1/2| <= omega. A [`TrainedModel`] bundles the
//! fitted parameters with its normalizer, feature mask and schema hash
//! so the same object serves the harness and the matchmaking gate.

pub mod container;
pub mod forest;
pub mod linear;
pub mod mlp;

use alloc::format;
use serde::{Deserialize, Serialize};

use crate::analysis::FeatureMask;
use crate::error::{Error, Result};
use crate::features::Normalizer;
use crate::linalg::Matrix;

pub use forest::{fit_forest, Forest, ForestHyper};
pub use linear::{fit_dummy, fit_linear, fit_logistic, LinearParams};
pub use mlp::{fit_mlp, MlpConfig, MlpHead, MlpNet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    Dummy,
    AvgSkill,
    Linear,
    RandomForest,
    MlpRegressor,
    Logistic,
    MlpSoftmax,
}

impl ModelKind {
    pub const ALL: [ModelKind; 7] = [
        ModelKind::Dummy,
        ModelKind::AvgSkill,
        ModelKind::Linear,
        ModelKind::RandomForest,
        ModelKind::MlpRegressor,
        ModelKind::Logistic,
        ModelKind::MlpSoftmax,
    ];

    /// Win-probability models; everything else regresses the signed
    /// score difference.
    pub fn is_classifier(self) -> bool {
        matches!(self, ModelKind::Logistic | ModelKind::MlpSoftmax)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Dummy => "dummy",
            ModelKind::AvgSkill => "avgskill",
            ModelKind::Linear => "linear",
            ModelKind::RandomForest => "rndfrst",
            ModelKind::MlpRegressor => "mlp",
            ModelKind::Logistic => "logistic",
            ModelKind::MlpSoftmax => "mlpsoftmax",
        }
    }

    pub fn parse(name: &str) -> Result<ModelKind> {
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.as_str() == name)
            .ok_or_else(|| Error::Parameter(format!("unknown model kind {name:?}")))
    }

    pub(crate) fn tag(self) -> u8 {
        match self {
            ModelKind::Dummy => 0,
            ModelKind::AvgSkill => 1,
            ModelKind::Linear => 2,
            ModelKind::RandomForest => 3,
            ModelKind::MlpRegressor => 4,
            ModelKind::Logistic => 5,
            ModelKind::MlpSoftmax => 6,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Result<ModelKind> {
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.tag() == tag)
            .ok_or_else(|| Error::Format(format!("unknown model kind tag {tag}")))
    }
}

/// Balance decision thresholds: theta bounds the predicted score
/// difference (default: the forfeit score), omega bounds the distance of
/// a win probability from a coin flip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalanceThresholds {
    pub theta: f64,
    pub omega: f64,
}

impl Default for BalanceThresholds {
    fn default() -> Self {
        BalanceThresholds { theta: 3.0, omega: 0.3 }
    }
}

impl BalanceThresholds {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta.is_finite() && self.theta > 0.0) {
            return Err(Error::Parameter("theta must be positive".into()));
        }
        if !(self.omega.is_finite() && self.omega > 0.0 && self.omega <= 0.5) {
            return Err(Error::Parameter("omega must lie in (0, 0.5]".into()));
        }
        Ok(())
    }
}

/// Balanced iff |r| < theta, strictly: a forfeit-sized difference is
/// already unbalanced.
pub fn classify_balance(r: f64, theta: f64) -> bool {
    debug_assert!(theta > 0.0);
    r.abs() < theta
}

/// Balanced iff |p - 1/2| <= omega (inclusive band). The boundary is
/// held to within 1e-12 because sums like 0.5 + 0.3 are not exactly
/// representable and an inclusive comparison must not lose its own edge.
pub fn classify_balance_from_prob(p: f64, omega: f64) -> Result<bool> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("probability {p} outside [0, 1]")));
    }
    Ok((p - 0.5).abs() <= omega + 1e-12)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    Mean(f64),
    Linear(LinearParams),
    Logistic(LinearParams),
    Forest(Forest),
    Mlp(MlpNet),
}

/// A fitted predictor plus everything needed to apply it to a raw match
/// feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub kind: ModelKind,
    pub params: ModelParams,
    pub normalizer: Normalizer,
    pub mask: FeatureMask,
    pub schema_hash: u64,
    pub train_days: Option<(u32, u32)>,
}

impl TrainedModel {
    /// Predict from a raw (un-normalized, un-masked) match feature
    /// vector. Regression kinds return the signed score difference,
    /// classifier kinds P(team 1 wins).
    pub fn predict(&self, raw: &[f64]) -> Result<f64> {
        if raw.len() != self.normalizer.dim() || raw.len() != self.mask.dim() {
            return Err(Error::Schema(format!(
                "model expects {} coordinates, got {}",
                self.normalizer.dim(),
                raw.len()
            )));
        }
        if let ModelParams::Mean(m) = self.params {
            return Ok(m);
        }
        let z = self.normalizer.apply(raw)?;
        let x = self.mask.select(&z)?;
        Ok(match &self.params {
            ModelParams::Mean(m) => *m,
            ModelParams::Linear(p) => p.linear_predict(&x),
            ModelParams::Logistic(p) => p.logistic_predict(&x),
            ModelParams::Forest(f) => f.predict(&x),
            ModelParams::Mlp(net) => net.predict_one(&x),
        })
    }

    /// Balance decision using the rule matching the model family.
    pub fn predict_balance(&self, raw: &[f64], thresholds: &BalanceThresholds) -> Result<bool> {
        let value = self.predict(raw)?;
        if self.kind.is_classifier() {
            classify_balance_from_prob(value, thresholds.omega)
        } else {
            Ok(classify_balance(value, thresholds.theta))
        }
    }
}

/// Hyperparameters shared by the training entry point.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub ridge: f64,
    pub logistic_tol: f64,
    pub logistic_max_iter: usize,
    pub forest: ForestHyper,
    pub mlp: MlpConfig,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            ridge: 1e-8,
            logistic_tol: 1e-6,
            logistic_max_iter: 100,
            forest: ForestHyper::default(),
            mlp: MlpConfig::default(),
        }
    }
}

/// Fit one model kind on raw feature rows. The caller supplies the
/// normalizer (fitted on training rows only), the feature mask, and
/// targets appropriate to the family: signed score differences for
/// regressors, 0/1 team-1-wins labels (ties already dropped) for
/// classifiers. The optional validation split drives MLP early stopping.
#[allow(clippy::too_many_arguments)]
pub fn train_model(
    kind: ModelKind,
    x_raw: &Matrix,
    y: &[f64],
    validation_raw: Option<(&Matrix, &[f64])>,
    normalizer: &Normalizer,
    mask: &FeatureMask,
    schema_hash: u64,
    train_days: Option<(u32, u32)>,
    opts: &TrainOptions,
) -> Result<TrainedModel> {
    mask.validate()?;
    if mask.dim() != normalizer.dim() {
        return Err(Error::Schema(format!(
            "mask over {} coordinates, normalizer over {}",
            mask.dim(),
            normalizer.dim()
        )));
    }
    let cols = mask.indices();
    let prepare = |m: &Matrix| -> Result<Matrix> {
        Ok(normalizer.transform(m)?.select_cols(&cols))
    };

    let params = match kind {
        ModelKind::Dummy => ModelParams::Mean(fit_dummy(y)?),
        ModelKind::AvgSkill | ModelKind::Linear => {
            ModelParams::Linear(fit_linear(&prepare(x_raw)?, y, opts.ridge)?)
        }
        ModelKind::Logistic => ModelParams::Logistic(fit_logistic(
            &prepare(x_raw)?,
            y,
            opts.logistic_tol,
            opts.logistic_max_iter,
        )?),
        ModelKind::RandomForest => {
            ModelParams::Forest(fit_forest(&prepare(x_raw)?, y, &opts.forest)?)
        }
        ModelKind::MlpRegressor | ModelKind::MlpSoftmax => {
            let head = if kind == ModelKind::MlpSoftmax {
                MlpHead::Softmax
            } else {
                MlpHead::Regression
            };
            let x = prepare(x_raw)?;
            let val = match validation_raw {
                Some((vx, vy)) => Some((prepare(vx)?, vy.to_vec())),
                None => None,
            };
            let net = fit_mlp(&x, y, val.as_ref().map(|(vx, vy)| (vx, vy.as_slice())), &opts.mlp, head)?;
            ModelParams::Mlp(net)
        }
    };

    Ok(TrainedModel {
        kind,
        params,
        normalizer: normalizer.clone(),
        mask: mask.clone(),
        schema_hash,
        train_days,
    })
}
