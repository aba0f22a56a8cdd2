use serde::{Deserialize, Serialize};

use super::model::{Dropout, MlpModel};
use crate::error::{Error, Result};
use crate::persist::fmt17;
use crate::rng::RngStream;
use crate::tensor::Tensor2;
use crate::uq::{
    edl_annealing, sample_loss, EvidenceActivation, KlDirection, LossKind, LossSpec, Target,
    PN_DEFAULT_CONCENTRATION,
};

/// Parameter update rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Optimizer {
    Adam {
        #[serde(serialize_with = "fmt17::f64")]
        beta1: f64,
        #[serde(serialize_with = "fmt17::f64")]
        beta2: f64,
        #[serde(serialize_with = "fmt17::f64")]
        eps: f64,
    },
    Sgd,
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(serialize_with = "fmt17::f64")]
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    #[serde(serialize_with = "fmt17::opt_vec")]
    pub class_weights: Option<Vec<f64>>,
    pub loss_kind: LossKind,
    /// Epochs over which the evidential KL weight ramps from 0 to 1.
    pub anneal_epochs: usize,
    #[serde(serialize_with = "fmt17::f64")]
    pub pn_concentration: f64,
    pub optimizer: Optimizer,
    pub evidence_activation: EvidenceActivation,
    pub pn_kl_direction: KlDirection,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            epochs: 5,
            batch_size: 32,
            seed: 0,
            class_weights: None,
            loss_kind: LossKind::WeightedCe,
            anneal_epochs: 10,
            pn_concentration: PN_DEFAULT_CONCENTRATION,
            optimizer: Optimizer::default(),
            evidence_activation: EvidenceActivation::default(),
            pn_kl_direction: KlDirection::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, num_classes: usize) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be finite and non-negative", self.learning_rate)));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if let Some(w) = &self.class_weights {
            if w.len() != num_classes || w.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(Error::Config(format!(
                    "class weights must be {num_classes} positive values, got {w:?}"
                )));
            }
        }
        if !(self.pn_concentration > 0.0 && self.pn_concentration.is_finite()) {
            return Err(Error::Config("pn_concentration must be positive".into()));
        }
        Ok(())
    }

    /// The loss to optimise during `epoch` (0-based).
    pub fn loss_spec(&self, epoch: usize) -> LossSpec {
        match self.loss_kind {
            LossKind::WeightedCe => LossSpec::weighted_ce(self.class_weights.clone()),
            LossKind::Edl => LossSpec::edl(
                edl_annealing(epoch, self.anneal_epochs),
                self.evidence_activation,
            ),
            LossKind::Pn => LossSpec::pn(self.pn_concentration, self.pn_kl_direction),
        }
    }
}

/// Per-layer parameter gradients, shaped like the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Tensor2>,
    pub biases: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchGradients {
    /// Mean per-sample loss.
    pub loss: f64,
    pub grads: Gradients,
    /// Samples whose prior-network output hit the concentration clamp.
    pub saturated: usize,
}

/// Mean batch loss and its analytic parameter gradients.
pub fn loss_and_gradients(
    model: &MlpModel,
    batch: &Tensor2,
    targets: &[Target],
    spec: &LossSpec,
    dropout: Dropout<'_>,
) -> Result<BatchGradients> {
    if targets.len() != batch.rows() {
        return Err(Error::Shape(format!(
            "{} targets for {} rows",
            targets.len(),
            batch.rows()
        )));
    }
    if batch.rows() == 0 {
        return Err(Error::Shape("empty batch".into()));
    }
    if spec.kind.head_kind() != model.head_kind() {
        return Err(Error::Config(format!(
            "{:?} loss cannot train a {:?} head",
            spec.kind,
            model.head_kind()
        )));
    }
    let cache = model.forward_cached(batch, dropout)?;
    let n = batch.rows();
    let k = model.num_classes();
    let inv_n = 1.0 / n as f64;
    let mut grad_logits = Tensor2::zeros(n, k);
    let mut total = 0.0;
    let mut saturated = 0;
    for (r, &t) in targets.iter().enumerate() {
        let s = sample_loss(spec, cache.logits.row(r), t)?;
        total += s.loss;
        saturated += usize::from(s.saturated);
        for (g, v) in grad_logits.row_mut(r).iter_mut().zip(&s.grad_logits) {
            *g = v * inv_n;
        }
    }
    let grads = model.backward(&cache, &grad_logits);
    Ok(BatchGradients {
        loss: total * inv_n,
        grads,
        saturated,
    })
}

/// Adaptive-moment (or SGD) state.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    step: u64,
    m_w: Vec<Vec<f64>>,
    v_w: Vec<Vec<f64>>,
    m_b: Vec<Vec<f64>>,
    v_b: Vec<Vec<f64>>,
}

impl OptimizerState {
    pub fn new(model: &MlpModel) -> Self {
        let w: Vec<Vec<f64>> = model
            .layers()
            .iter()
            .map(|l| vec![0.0; l.weight.data().len()])
            .collect();
        let b: Vec<Vec<f64>> = model.layers().iter().map(|l| vec![0.0; l.bias.len()]).collect();
        Self {
            step: 0,
            m_w: w.clone(),
            v_w: w,
            m_b: b.clone(),
            v_b: b,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    /// Batch mean loss before the update.
    pub loss: f64,
    pub saturated: usize,
}

fn check_finite(values: &[f64], location: impl FnOnce() -> String, what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Divergence {
            location: location(),
            detail: format!("non-finite {what}"),
        })
    }
}

/// One optimiser step on `batch` with stochastic dropout drawn from `rng`.
pub fn train_step(
    model: &mut MlpModel,
    batch: &Tensor2,
    targets: &[Target],
    spec: &LossSpec,
    state: &mut OptimizerState,
    config: &TrainConfig,
    rng: &mut RngStream,
) -> Result<StepReport> {
    let bg = loss_and_gradients(model, batch, targets, spec, Dropout::Stochastic(rng))?;
    if !bg.loss.is_finite() {
        return Err(Error::Divergence {
            location: "loss".into(),
            detail: format!("batch loss is {}", bg.loss),
        });
    }
    for (i, (w, b)) in bg.grads.weights.iter().zip(&bg.grads.biases).enumerate() {
        check_finite(w.data(), || format!("layer {i} weights"), "gradient")?;
        check_finite(b, || format!("layer {i} bias"), "gradient")?;
    }

    state.step += 1;
    let lr = config.learning_rate;
    let update: Box<dyn Fn(&mut [f64], &[f64], &mut [f64], &mut [f64])> = match config.optimizer {
        Optimizer::Adam { beta1, beta2, eps } => {
            let t = state.step as i32;
            let c1 = 1.0 - beta1.powi(t);
            let c2 = 1.0 - beta2.powi(t);
            Box::new(move |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
                for i in 0..p.len() {
                    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                    let m_hat = m[i] / c1;
                    let v_hat = v[i] / c2;
                    p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
                }
            })
        }
        Optimizer::Sgd => Box::new(move |p: &mut [f64], g: &[f64], _: &mut [f64], _: &mut [f64]| {
            for (pi, gi) in p.iter_mut().zip(g) {
                *pi -= lr * gi;
            }
        }),
    };

    for (i, layer) in model.layers_mut().iter_mut().enumerate() {
        update(
            layer.weight.data_mut(),
            bg.grads.weights[i].data(),
            &mut state.m_w[i],
            &mut state.v_w[i],
        );
        update(&mut layer.bias, &bg.grads.biases[i], &mut state.m_b[i], &mut state.v_b[i]);
        check_finite(layer.weight.data(), || format!("layer {i} weights"), "parameter after update")?;
        check_finite(&layer.bias, || format!("layer {i} bias"), "parameter after update")?;
    }
    Ok(StepReport {
        loss: bg.loss,
        saturated: bg.saturated,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    /// Sample-weighted mean training loss per epoch.
    pub epoch_losses: Vec<f64>,
    pub steps: u64,
    /// Batches in which more than 1% of samples hit the prior-network clamp.
    pub saturation_warnings: usize,
}

/// Flat-target rows mixed into every epoch: `per_epoch` rows are taken per
/// epoch by walking a reshuffled copy of the pool, so each pool row is used
/// once before any is repeated.
#[derive(Debug, Clone, Copy)]
pub struct OodPool<'a> {
    pub features: &'a Tensor2,
    pub per_epoch: usize,
}

/// Mini-batch training over `epochs` shuffled passes.
///
/// Shuffling uses stream 1 and dropout masks stream 2 of `config.seed`, so the
/// final parameters are a pure function of the initial model, data and config.
pub fn fit(
    model: &mut MlpModel,
    features: &Tensor2,
    targets: &[Target],
    config: &TrainConfig,
) -> Result<FitReport> {
    fit_with_pool(model, features, targets, None, config)
}

/// [`fit`] with an optional OOD pool; pool draws use stream 3 of `config.seed`.
pub fn fit_with_pool(
    model: &mut MlpModel,
    features: &Tensor2,
    targets: &[Target],
    pool: Option<OodPool<'_>>,
    config: &TrainConfig,
) -> Result<FitReport> {
    config.validate(model.num_classes())?;
    if config.loss_kind.head_kind() != model.head_kind() {
        return Err(Error::Config(format!(
            "{:?} loss cannot train a {:?} head",
            config.loss_kind,
            model.head_kind()
        )));
    }
    if targets.len() != features.rows() || targets.is_empty() {
        return Err(Error::Shape(format!(
            "{} targets for {} rows",
            targets.len(),
            features.rows()
        )));
    }
    if let Some(p) = pool {
        if p.features.cols() != features.cols() || p.features.rows() == 0 || p.per_epoch == 0 {
            return Err(Error::Shape(format!(
                "OOD pool of {:?} drawing {} per epoch for {} features",
                p.features.shape(),
                p.per_epoch,
                features.cols()
            )));
        }
    }
    let n = targets.len();
    let mut shuffle_rng = RngStream::with_stream(config.seed, 1);
    let mut dropout_rng = RngStream::with_stream(config.seed, 2);
    let mut pool_rng = RngStream::with_stream(config.seed, 3);
    let mut pool_order: Vec<usize> = pool.map(|p| (0..p.features.rows()).collect()).unwrap_or_default();
    let mut pool_cursor = pool_order.len();
    let mut state = OptimizerState::new(model);
    let mut order: Vec<usize> = Vec::with_capacity(n + pool.map_or(0, |p| p.per_epoch));
    let mut report = FitReport {
        epoch_losses: Vec::with_capacity(config.epochs),
        steps: 0,
        saturation_warnings: 0,
    };

    for epoch in 0..config.epochs {
        // Indices at or above `n` address the pool.
        if pool.is_some() || order.is_empty() {
            order.clear();
            order.extend(0..n);
        }
        if let Some(p) = pool {
            for _ in 0..p.per_epoch {
                if pool_cursor == pool_order.len() {
                    pool_rng.shuffle(&mut pool_order);
                    pool_cursor = 0;
                }
                order.push(n + pool_order[pool_cursor]);
                pool_cursor += 1;
            }
        }
        shuffle_rng.shuffle(&mut order);
        let spec = config.loss_spec(epoch);
        let mut total = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch = match pool {
                Some(p) => batch_rows(features, p.features, n, chunk),
                None => features.select_rows(chunk),
            };
            let batch_targets: Vec<Target> =
                chunk.iter().map(|&i| if i < n { targets[i] } else { Target::Ood }).collect();
            let step = train_step(model, &batch, &batch_targets, &spec, &mut state, config, &mut dropout_rng)
                .map_err(|e| match e {
                    Error::Divergence { location, detail } => Error::Divergence {
                        location: format!("epoch {epoch}, {location}"),
                        detail,
                    },
                    other => other,
                })?;
            total += step.loss * chunk.len() as f64;
            if step.saturated * 100 > chunk.len() {
                report.saturation_warnings += 1;
            }
        }
        let mean = total / order.len() as f64;
        log::debug!("epoch {epoch}: loss {mean:.6}");
        report.epoch_losses.push(mean);
    }
    report.steps = state.step;
    if report.saturation_warnings > 0 {
        log::warn!(
            "prior-network concentration clamp saturated in {} batches",
            report.saturation_warnings
        );
    }
    Ok(report)
}

fn batch_rows(features: &Tensor2, pool: &Tensor2, n: usize, idx: &[usize]) -> Tensor2 {
    let mut data = Vec::with_capacity(idx.len() * features.cols());
    for &i in idx {
        data.extend_from_slice(if i < n { features.row(i) } else { pool.row(i - n) });
    }
    Tensor2::new(idx.len(), features.cols(), data).expect("rows share the feature width")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, Architecture, Dense, HeadKind};

    fn linear_model(w: &[f64], b: &[f64]) -> MlpModel {
        let k = b.len();
        let layer = Dense {
            weight: Tensor2::new(w.len() / k, k, w.to_vec()).unwrap(),
            bias: b.to_vec(),
            activation: Activation::Identity,
        };
        MlpModel::from_layers(vec![layer], 0.0, HeadKind::SoftmaxCe, k).unwrap()
    }

    #[test]
    fn zero_learning_rate_leaves_parameters() {
        let mut m = linear_model(&[0.3, -0.2], &[0.1, 0.0]);
        let before = m.clone();
        let x = Tensor2::from_rows(&[[1.0], [-2.0]]).unwrap();
        let cfg = TrainConfig {
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        let mut st = OptimizerState::new(&m);
        let r = train_step(
            &mut m,
            &x,
            &[Target::Class(0), Target::Class(1)],
            &cfg.loss_spec(0),
            &mut st,
            &cfg,
            &mut RngStream::new(0),
        )
        .unwrap();
        assert!(r.loss > 0.0);
        assert_eq!(m, before);
    }

    #[test]
    fn adam_steps_match_finite_difference_oracle() {
        // Two Adam steps on a 1-input, 2-class linear model; expected update
        // built from central-difference gradients and the textbook recursion.
        let x = Tensor2::from_rows(&[[0.7], [-1.3], [0.2]]).unwrap();
        let targets = [Target::Class(0), Target::Class(1), Target::Class(1)];
        let weights = vec![2.0, 0.5];
        let cfg = TrainConfig {
            learning_rate: 1e-2,
            class_weights: Some(weights.clone()),
            ..TrainConfig::default()
        };
        let spec = cfg.loss_spec(0);
        let loss_at = |p: &[f64]| -> f64 {
            let m = linear_model(&p[..2], &p[2..]);
            loss_and_gradients(&m, &x, &targets, &spec, Dropout::Off).unwrap().loss
        };

        let mut params = vec![0.4, -0.1, 0.05, 0.0];
        let (mut m1, mut v1) = (vec![0.0; 4], vec![0.0; 4]);
        let mut model = linear_model(&params[..2], &params[2..]);
        let mut st = OptimizerState::new(&model);
        let mut rng = RngStream::new(0);
        for t in 1..=2 {
            let h = 1e-5;
            let fd: Vec<f64> = (0..4)
                .map(|j| {
                    let mut p = params.clone();
                    let mut q = params.clone();
                    p[j] += h;
                    q[j] -= h;
                    (loss_at(&p) - loss_at(&q)) / (2.0 * h)
                })
                .collect();
            let expected: Vec<f64> = (0..4)
                .map(|j| {
                    m1[j] = 0.9 * m1[j] + 0.1 * fd[j];
                    v1[j] = 0.999 * v1[j] + 0.001 * fd[j] * fd[j];
                    let mh = m1[j] / (1.0 - 0.9f64.powi(t));
                    let vh = v1[j] / (1.0 - 0.999f64.powi(t));
                    params[j] - 1e-2 * mh / (vh.sqrt() + 1e-8)
                })
                .collect();
            train_step(&mut model, &x, &targets, &spec, &mut st, &cfg, &mut rng).unwrap();
            let l = &model.layers()[0];
            let got = [l.weight.data()[0], l.weight.data()[1], l.bias[0], l.bias[1]];
            for j in 0..4 {
                let change_got = got[j] - params[j];
                let change_exp = expected[j] - params[j];
                assert!(
                    (change_got - change_exp).abs() <= 1e-6 * change_exp.abs(),
                    "step {t} param {j}: {change_got} vs {change_exp}"
                );
            }
            params = got.to_vec();
        }
    }

    #[test]
    fn loss_decreases_on_separable_toy_set() {
        let rows: Vec<[f64; 2]> = (0..40)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                [s * (1.0 + 0.05 * i as f64), 0.3 * s]
            })
            .collect();
        let x = Tensor2::from_rows(&rows).unwrap();
        let targets: Vec<Target> = (0..40).map(|i| Target::Class(i % 2)).collect();
        let mut model = linear_model(&[0.0, 0.0, 0.0, 0.0], &[0.0, 0.0]);
        let cfg = TrainConfig {
            learning_rate: 0.05,
            ..TrainConfig::default()
        };
        let spec = cfg.loss_spec(0);
        let mut st = OptimizerState::new(&model);
        let mut rng = RngStream::new(0);
        let mut last = f64::INFINITY;
        for _ in 0..10 {
            let r = train_step(&mut model, &x, &targets, &spec, &mut st, &cfg, &mut rng).unwrap();
            assert!(r.loss < last, "{} !< {last}", r.loss);
            last = r.loss;
        }
    }

    #[test]
    fn divergence_names_the_layer() {
        let mut m = linear_model(&[1e300, 0.0], &[0.0, 0.0]);
        let x = Tensor2::from_rows(&[[1e10]]).unwrap();
        let cfg = TrainConfig::default();
        let mut st = OptimizerState::new(&m);
        let err = train_step(&mut m, &x, &[Target::Class(1)], &cfg.loss_spec(0), &mut st, &cfg, &mut RngStream::new(0))
            .unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }), "{err}");
    }

    #[test]
    fn loss_head_mismatch_is_config_error() {
        let m = linear_model(&[0.0, 0.0], &[0.0, 0.0]);
        let x = Tensor2::from_rows(&[[1.0]]).unwrap();
        let err = loss_and_gradients(&m, &x, &[Target::Class(0)], &LossSpec::pn(100.0, KlDirection::Forward), Dropout::Off)
            .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn config_validation() {
        let ok = TrainConfig::default();
        assert!(ok.validate(4).is_ok());
        assert!(TrainConfig { epochs: 0, ..ok.clone() }.validate(4).is_err());
        assert!(TrainConfig { learning_rate: -1.0, ..ok.clone() }.validate(4).is_err());
        assert!(TrainConfig { class_weights: Some(vec![1.0; 3]), ..ok.clone() }.validate(4).is_err());
        assert!(TrainConfig { class_weights: Some(vec![1.0, 0.0, 1.0, 1.0]), ..ok }.validate(4).is_err());
    }

    fn pn_setup() -> (MlpModel, Tensor2, Vec<Target>, Tensor2, TrainConfig) {
        let mut rng = RngStream::new(30);
        let model = MlpModel::init(&Architecture::desk_default(4, 3, HeadKind::PriorNet), &mut rng).unwrap();
        let x = Tensor2::new(40, 4, (0..160).map(|_| rng.standard_normal()).collect()).unwrap();
        let y = (0..40).map(|i| Target::Class(i % 3)).collect();
        let pool = Tensor2::new(30, 4, (0..120).map(|_| rng.uniform_range(-6.0, 6.0)).collect()).unwrap();
        let cfg = TrainConfig {
            loss_kind: LossKind::Pn,
            epochs: 3,
            learning_rate: 1e-3,
            batch_size: 8,
            ..TrainConfig::default()
        };
        (model, x, y, pool, cfg)
    }

    #[test]
    fn pool_free_fit_matches_fit() {
        let (model, x, y, _, cfg) = pn_setup();
        let (mut a, mut b) = (model.clone(), model);
        let ra = fit(&mut a, &x, &y, &cfg).unwrap();
        let rb = fit_with_pool(&mut b, &x, &y, None, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
    }

    #[test]
    fn pooled_fit_is_deterministic_and_uses_the_pool() {
        let (model, x, y, pool, cfg) = pn_setup();
        let p = OodPool {
            features: &pool,
            per_epoch: 12,
        };
        let run = |pool: Option<OodPool<'_>>| {
            let mut m = model.clone();
            let r = fit_with_pool(&mut m, &x, &y, pool, &cfg).unwrap();
            (m, r)
        };
        let (m1, r1) = run(Some(p));
        let (m2, r2) = run(Some(p));
        assert_eq!(m1, m2);
        assert_eq!(r1, r2);
        // 52 rows per epoch in batches of 8.
        assert_eq!(r1.steps, 3 * 7);
        let (plain, _) = run(None);
        assert_ne!(m1, plain);
    }

    #[test]
    fn pool_width_mismatch_is_shape_error() {
        let (mut model, x, y, _, cfg) = pn_setup();
        let narrow = Tensor2::zeros(5, 3);
        let p = OodPool {
            features: &narrow,
            per_epoch: 2,
        };
        assert!(matches!(fit_with_pool(&mut model, &x, &y, Some(p), &cfg), Err(Error::Shape(_))));
    }
}
