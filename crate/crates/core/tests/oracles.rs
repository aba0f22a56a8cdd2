//! Independent numerical oracles for the analytic pieces of the library.

use rand_distr::{Distribution, Gamma};
use uqbench_core::nn::{
    fit, loss_and_gradients, Activation, Architecture, Checkpoint, Dense, Dropout, HeadKind, MlpModel, TrainConfig,
};
use uqbench_core::special::lgamma;
use uqbench_core::uq::{dirichlet_kl, DirichletParams, EvidenceActivation, KlDirection, LossSpec, Target};
use uqbench_core::{RngStream, Tensor2};

const H: f64 = 1e-5;
const REL_TOL: f64 = 1e-4;
const ABS_TOL: f64 = 1e-7;

struct Instance {
    model: MlpModel,
    batch: Tensor2,
    targets: Vec<Target>,
    spec: LossSpec,
}

fn random_instance(kind: HeadKind, rng: &mut RngStream) -> Instance {
    let input_dim = 1 + rng.below(8);
    let k = 2 + rng.below(4);
    let hidden: Vec<usize> = (0..rng.below(3)).map(|_| 1 + rng.below(16)).collect();
    let activation = if rng.below(2) == 0 { Activation::Tanh } else { Activation::Relu };
    let arch = Architecture {
        input_dim,
        hidden,
        activation,
        dropout_rate: 0.0,
        num_classes: k,
        head_kind: kind,
        evidence: EvidenceActivation::Softplus,
    };
    let mut model = MlpModel::init(&arch, rng).unwrap();
    // Nonzero biases so every code path sees them.
    let layers: Vec<Dense> = model
        .layers()
        .iter()
        .map(|l| Dense {
            bias: l.bias.iter().map(|_| rng.uniform_range(-0.5, 0.5)).collect(),
            ..l.clone()
        })
        .collect();
    model = MlpModel::from_layers(layers, 0.0, kind, k).unwrap().with_evidence(arch.evidence);

    let n = 1 + rng.below(8);
    let data = (0..n * input_dim).map(|_| rng.uniform_range(-2.0, 2.0)).collect();
    let batch = Tensor2::new(n, input_dim, data).unwrap();
    let targets = (0..n)
        .map(|_| {
            if kind == HeadKind::PriorNet && rng.below(4) == 0 {
                Target::Ood
            } else {
                Target::Class(rng.below(k))
            }
        })
        .collect();
    let spec = match kind {
        HeadKind::SoftmaxCe => {
            let w = (0..k).map(|_| rng.uniform_range(0.2, 5.0)).collect();
            LossSpec::weighted_ce(Some(w))
        }
        HeadKind::Edl => LossSpec::edl(rng.uniform(), EvidenceActivation::Softplus),
        HeadKind::PriorNet => {
            let dir = if rng.below(2) == 0 { KlDirection::Forward } else { KlDirection::Reverse };
            LossSpec::pn(100.0, dir)
        }
    };
    Instance {
        model,
        batch,
        targets,
        spec,
    }
}

fn loss_with(inst: &Instance, layers: Vec<Dense>) -> f64 {
    let m = &inst.model;
    let model = MlpModel::from_layers(layers, m.dropout_rate(), m.head_kind(), m.num_classes())
        .unwrap()
        .with_evidence(m.evidence());
    loss_and_gradients(&model, &inst.batch, &inst.targets, &inst.spec, Dropout::Off)
        .unwrap()
        .loss
}

fn close(analytic: f64, numeric: f64) -> bool {
    let err = (analytic - numeric).abs();
    err <= ABS_TOL || err <= REL_TOL * analytic.abs().max(numeric.abs())
}

/// Largest violation over all parameters, or `None` if all match.
fn check_instance(inst: &Instance) -> Option<String> {
    let g = loss_and_gradients(&inst.model, &inst.batch, &inst.targets, &inst.spec, Dropout::Off).unwrap();
    let base = inst.model.layers().to_vec();
    for (li, layer) in base.iter().enumerate() {
        for p in 0..layer.weight.data().len() + layer.bias.len() {
            let perturbed = |delta: f64| {
                let mut layers = base.clone();
                if p < layer.weight.data().len() {
                    layers[li].weight.data_mut()[p] += delta;
                } else {
                    layers[li].bias[p - layer.weight.data().len()] += delta;
                }
                loss_with(inst, layers)
            };
            let numeric = (perturbed(H) - perturbed(-H)) / (2.0 * H);
            let analytic = if p < layer.weight.data().len() {
                g.grads.weights[li].data()[p]
            } else {
                g.grads.biases[li][p - layer.weight.data().len()]
            };
            if !close(analytic, numeric) {
                return Some(format!("layer {li} param {p}: analytic {analytic} vs numeric {numeric}"));
            }
        }
    }
    None
}

fn gradient_oracle(kind: HeadKind, seed: u64) {
    let mut rng = RngStream::new(seed);
    for i in 0..100 {
        let inst = random_instance(kind, &mut rng);
        if let Some(msg) = check_instance(&inst) {
            panic!("{kind:?} instance {i}: {msg}");
        }
    }
}

#[test]
fn weighted_ce_gradients_match_finite_differences() {
    gradient_oracle(HeadKind::SoftmaxCe, 10);
}

#[test]
fn evidential_gradients_match_finite_differences() {
    gradient_oracle(HeadKind::Edl, 11);
}

#[test]
fn prior_network_gradients_match_finite_differences() {
    gradient_oracle(HeadKind::PriorNet, 12);
}

#[test]
fn inverted_dropout_is_unbiased_for_linear_model() {
    let arch = Architecture {
        input_dim: 6,
        hidden: vec![32, 32],
        activation: Activation::Identity,
        dropout_rate: 0.3,
        num_classes: 4,
        head_kind: HeadKind::SoftmaxCe,
        evidence: EvidenceActivation::default(),
    };
    let mut rng = RngStream::new(7);
    let model = MlpModel::init(&arch, &mut rng).unwrap();
    let x = Tensor2::from_rows(&[[1.0, -0.5, 2.0, 0.3, -1.2, 0.8]]).unwrap();
    let reference = model.forward(&x, Dropout::Off).unwrap();
    let passes = 200_000;
    let mut mean = vec![0.0; 4];
    for _ in 0..passes {
        let out = model.forward(&x, Dropout::Stochastic(&mut rng)).unwrap();
        for (m, v) in mean.iter_mut().zip(out.row(0)) {
            *m += v / passes as f64;
        }
    }
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = mean.iter().zip(reference.row(0)).map(|(a, b)| a - b).collect();
    assert!(norm(&diff) <= 0.02 * norm(reference.row(0)), "{mean:?} vs {:?}", reference.row(0));
}

/// Adaptive Simpson on `[a, b]`.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    recurse(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 50)
}

fn beta_log_density(x: f64, a: f64, b: f64) -> f64 {
    lgamma(a + b).unwrap() - lgamma(a).unwrap() - lgamma(b).unwrap() + (a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln()
}

#[test]
fn two_class_kl_matches_quadrature() {
    for (p, q) in [((2.0, 2.0), (1.0, 1.0)), ((3.5, 1.5), (2.0, 4.0)), ((1.0, 7.0), (1.5, 1.5))] {
        let integrand = |x: f64| {
            if x <= 0.0 || x >= 1.0 {
                return 0.0;
            }
            let lp = beta_log_density(x, p.0, p.1);
            lp.exp() * (lp - beta_log_density(x, q.0, q.1))
        };
        let numeric = adaptive_simpson(&integrand, 0.0, 1.0, 1e-12);
        let closed = dirichlet_kl(
            &DirichletParams::new(vec![p.0, p.1]).unwrap(),
            &DirichletParams::new(vec![q.0, q.1]).unwrap(),
        )
        .unwrap();
        assert!((closed - numeric).abs() < 1e-6, "{p:?} vs {q:?}: {closed} vs {numeric}");
    }
    // Beta(2,2) against the flat density has the elementary form ln 6 − 5/3.
    let closed = dirichlet_kl(&DirichletParams::new(vec![2.0, 2.0]).unwrap(), &DirichletParams::flat(2)).unwrap();
    assert!((closed - (6f64.ln() - 5.0 / 3.0)).abs() < 1e-12);
}

#[test]
fn sharp_prior_kl_matches_monte_carlo() {
    let alpha = [101.0, 1.0, 1.0, 1.0];
    let gammas: Vec<Gamma<f64>> = alpha.iter().map(|&a| Gamma::new(a, 1.0).unwrap()).collect();
    let log_norm_p = lgamma(104.0).unwrap() - alpha.iter().map(|&a| lgamma(a).unwrap()).sum::<f64>();
    let log_q = lgamma(4.0).unwrap();
    let mut rng = RngStream::new(99);
    let n = 1_000_000;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n {
        let g: Vec<f64> = gammas.iter().map(|d| d.sample(&mut rng)).collect();
        let total: f64 = g.iter().sum();
        let log_p = log_norm_p + g.iter().zip(&alpha).map(|(x, a)| (a - 1.0) * (x / total).ln()).sum::<f64>();
        let v = log_p - log_q;
        sum += v;
        sum_sq += v * v;
    }
    let mean = sum / n as f64;
    let se = ((sum_sq / n as f64 - mean * mean) / n as f64).sqrt();
    let closed = dirichlet_kl(&DirichletParams::new(alpha.to_vec()).unwrap(), &DirichletParams::flat(4)).unwrap();
    assert!((closed - mean).abs() <= 3.0 * se, "closed {closed} vs MC {mean} ± {se}");
}

#[test]
fn training_is_deterministic() {
    let arch = Architecture::desk_default(5, 3, HeadKind::SoftmaxCe);
    let mut rng = RngStream::new(4);
    let x = Tensor2::new(64, 5, (0..320).map(|_| rng.standard_normal()).collect()).unwrap();
    let targets: Vec<Target> = (0..64).map(|i| Target::Class(i % 3)).collect();
    let cfg = TrainConfig {
        epochs: 3,
        seed: 21,
        ..TrainConfig::default()
    };
    let run = || {
        let mut m = MlpModel::init(&arch, &mut RngStream::new(8)).unwrap();
        fit(&mut m, &x, &targets, &cfg).unwrap();
        Checkpoint::from_model(&m, &cfg, 8).to_json().unwrap()
    };
    assert_eq!(run(), run());
}
