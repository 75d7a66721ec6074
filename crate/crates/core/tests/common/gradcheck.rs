#![allow(dead_code)]

//! Central finite-difference checks of every backward pass. Each check
//! returns the worst error over its instances.

use isr_core::corpus::WordId;
use isr_core::enquirer::{transition_loss, EnquirerModel, EnquirerSpec, PpoConfig, Transition};
use isr_core::guesser::{guesser_loss, GuesserModel, GuesserSpec};
use isr_core::nn::{
    softmax_cross_entropy, BiLstm, BiLstmSpec, Gradients, Mlp, MlpSpec, ParamStore,
};
use isr_core::rng::{seeded, Rng};
use rand::Rng as _;
use rand_distr::StandardNormal;

const STEP: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-4;
const FLOOR: f64 = 1e-8;
pub const INSTANCES: u64 = 20;

type NoDropout = Rng;

/// Worst discrepancy between analytic and numeric gradients.
#[derive(Clone, Copy, Debug, Default)]
pub struct Worst {
    /// Max relative error, with absolute differences up to `FLOOR` counted
    /// as exact; this is what the tolerance applies to.
    pub relative: f64,
    /// Max absolute difference.
    pub absolute: f64,
}

impl Worst {
    fn add(&mut self, analytic: f64, numeric: f64) {
        let diff = (analytic - numeric).abs();
        self.absolute = self.absolute.max(diff);
        if diff > FLOOR {
            self.relative = self.relative.max(diff / analytic.abs().max(numeric.abs()));
        }
    }

    fn max(self, other: Worst) -> Worst {
        Worst {
            relative: self.relative.max(other.relative),
            absolute: self.absolute.max(other.absolute),
        }
    }

    pub fn passes(&self) -> bool {
        self.relative <= TOLERANCE
    }
}

fn normal_vec(r: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.sample(StandardNormal)).collect()
}

/// Moves every parameter off its initializer (zero biases would put ReLU
/// units exactly on their kink).
fn randomize(store: &mut ParamStore, r: &mut Rng) {
    let ids: Vec<_> = store.ids().collect();
    for id in ids {
        for v in store.value_mut(id) {
            *v = 0.5 * r.sample::<f64, _>(StandardNormal);
        }
    }
}

fn central(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    (f(x + STEP) - f(x - STEP)) / (2.0 * STEP)
}

/// Worst error over every parameter value of `model`.
fn check_params<M: Clone>(
    model: &M,
    store: fn(&mut M) -> &mut ParamStore,
    loss: impl Fn(&M) -> f64,
    analytic: &Gradients,
) -> Worst {
    let mut m = model.clone();
    let ids: Vec<_> = store(&mut m).ids().collect();
    let mut worst = Worst::default();
    for id in ids {
        for j in 0..store(&mut m).value(id).len() {
            let orig = store(&mut m).value(id)[j];
            let mut at = |x: f64| {
                store(&mut m).value_mut(id)[j] = x;
                loss(&m)
            };
            let lp = at(orig + STEP);
            let lm = at(orig - STEP);
            store(&mut m).value_mut(id)[j] = orig;
            let numeric = (lp - lm) / (2.0 * STEP);
            worst.add(analytic.get(id)[j], numeric);
        }
    }
    worst
}

/// Worst error over every entry of `inputs`.
fn check_inputs(
    inputs: &[Vec<f64>],
    loss: impl Fn(&[Vec<f64>]) -> f64,
    analytic: &[Vec<f64>],
) -> Worst {
    let mut worst = Worst::default();
    let mut x = inputs.to_vec();
    for i in 0..x.len() {
        for j in 0..x[i].len() {
            let orig = x[i][j];
            x[i][j] = orig + STEP;
            let lp = loss(&x);
            x[i][j] = orig - STEP;
            let lm = loss(&x);
            x[i][j] = orig;
            let numeric = (lp - lm) / (2.0 * STEP);
            worst.add(analytic[i][j], numeric);
        }
    }
    worst
}

fn refs(v: &[Vec<f64>]) -> Vec<&[f64]> {
    v.iter().map(Vec::as_slice).collect()
}

#[derive(Clone)]
struct WithStore<L> {
    layer: L,
    store: ParamStore,
}

fn store_of<L>(m: &mut WithStore<L>) -> &mut ParamStore {
    &mut m.store
}

pub fn mlp_gradients() -> Worst {
    let mut worst = Worst::default();
    for seed in 0..INSTANCES {
        let mut r = seeded(seed);
        let (inp, out) = (r.random_range(1..6), r.random_range(1..5));
        let hidden: Vec<usize> = (0..r.random_range(0..3))
            .map(|_| r.random_range(1..7))
            .collect();
        let mut store = ParamStore::new();
        let layer = Mlp::new(MlpSpec::new(inp, &hidden, out), &mut store, "m", &mut r).unwrap();
        randomize(&mut store, &mut r);
        let model = WithStore { layer, store };
        let x = normal_vec(&mut r, inp);
        let w = normal_vec(&mut r, out);
        let loss_at = |m: &WithStore<Mlp>, x: &[f64]| {
            let (y, _) = m.layer.forward::<NoDropout>(&m.store, x, None).unwrap();
            y.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>()
        };
        let (_, cache) = model
            .layer
            .forward::<NoDropout>(&model.store, &x, None)
            .unwrap();
        let mut grads = model.store.zero_gradients();
        let dx = model.layer.backward(&model.store, cache, &w, &mut grads);
        let ep = check_params(&model, store_of, |m| loss_at(m, &x), &grads);
        let ei = check_inputs(std::slice::from_ref(&x), |v| loss_at(&model, &v[0]), &[dx]);
        worst = worst.max(ep).max(ei);
    }
    worst
}

pub fn bilstm_gradients() -> Worst {
    let mut worst = Worst::default();
    for seed in 0..INSTANCES {
        let mut r = seeded(100 + seed);
        let spec = BiLstmSpec {
            input: r.random_range(1..4),
            hidden: r.random_range(1..4),
        };
        let len = r.random_range(1..6);
        let mut store = ParamStore::new();
        let layer = BiLstm::new(spec.clone(), &mut store, "l", &mut r).unwrap();
        randomize(&mut store, &mut r);
        let model = WithStore { layer, store };
        let xs: Vec<Vec<f64>> = (0..len).map(|_| normal_vec(&mut r, spec.input)).collect();
        let ws: Vec<Vec<f64>> = (0..len)
            .map(|_| normal_vec(&mut r, 2 * spec.hidden))
            .collect();
        let loss_at = |m: &WithStore<BiLstm>, xs: &[Vec<f64>]| {
            let (hs, _) = m.layer.forward(&m.store, &refs(xs)).unwrap();
            hs.iter()
                .zip(&ws)
                .map(|(h, w)| h.iter().zip(w).map(|(a, b)| a * b).sum::<f64>())
                .sum::<f64>()
        };
        let (_, cache) = model.layer.forward(&model.store, &refs(&xs)).unwrap();
        let mut grads = model.store.zero_gradients();
        let dx = model.layer.backward(&model.store, cache, &ws, &mut grads);
        let ep = check_params(&model, store_of, |m| loss_at(m, &xs), &grads);
        let ei = check_inputs(&xs, |v| loss_at(&model, v), &dx);
        worst = worst.max(ep).max(ei);
    }
    worst
}

pub fn guesser_attention_pooling_gradients() -> Worst {
    let mut worst = Worst::default();
    for seed in 0..INSTANCES {
        let mut r = seeded(200 + seed);
        let d = r.random_range(1..5);
        let spec = GuesserSpec {
            dimension: d,
            attention_hidden: r.random_range(1..6),
            score_hidden: r.random_range(1..6),
            dropout: 0.5,
        };
        let mut model = GuesserModel::new(spec, seed).unwrap();
        randomize(model.store_mut(), &mut r);
        let k = r.random_range(1..5);
        let t = r.random_range(1..5);
        let guests: Vec<Vec<f64>> = (0..k).map(|_| normal_vec(&mut r, d)).collect();
        let uttered: Vec<Vec<f64>> = (0..t).map(|_| normal_vec(&mut r, d)).collect();
        let target = r.random_range(0..k);
        let loss_at = |m: &GuesserModel, g: &[Vec<f64>], u: &[Vec<f64>]| {
            let (act, _) = m.forward(&refs(g), &refs(u), None).unwrap();
            guesser_loss(&act, target).unwrap().0
        };
        let (act, cache) = model
            .forward(&refs(&guests), &refs(&uttered), None)
            .unwrap();
        let (_, dlogits) = guesser_loss(&act, target).unwrap();
        let mut grads = model.store().zero_gradients();
        let din = model.backward(&act, cache, &dlogits, &mut grads);
        let ep = check_params(
            &model,
            GuesserModel::store_mut,
            |m| loss_at(m, &guests, &uttered),
            &grads,
        );
        let eg = check_inputs(&guests, |g| loss_at(&model, g, &uttered), &din.guests);
        let eu = check_inputs(&uttered, |u| loss_at(&model, &guests, u), &din.uttered);
        worst = worst.max(ep).max(eg).max(eu);
    }
    worst
}

fn enquirer_spec(r: &mut Rng) -> EnquirerSpec {
    EnquirerSpec {
        dimension: r.random_range(1..4),
        vocab: r.random_range(2..7),
        lstm_hidden: r.random_range(1..4),
        mlp_hidden: r.random_range(1..6),
    }
}

fn random_mask(r: &mut Rng, vocab: usize) -> Vec<bool> {
    let mut mask: Vec<bool> = (0..vocab).map(|_| r.random_bool(0.3)).collect();
    let open = r.random_range(0..vocab);
    mask[open] = false;
    mask
}

pub fn enquirer_head_gradients() -> Worst {
    let mut worst = Worst::default();
    for seed in 0..INSTANCES {
        let mut r = seeded(300 + seed);
        let spec = enquirer_spec(&mut r);
        let mut model = EnquirerModel::new(spec.clone(), seed).unwrap();
        randomize(model.store_mut(), &mut r);
        let d = spec.dimension;
        let gm = normal_vec(&mut r, d);
        let uttered: Vec<Vec<f64>> = (0..r.random_range(0..4))
            .map(|_| normal_vec(&mut r, d))
            .collect();
        let mask = random_mask(&mut r, spec.vocab);
        let w = normal_vec(&mut r, spec.vocab);
        let wv: f64 = r.sample(StandardNormal);
        // Linear readout of the unmasked logits plus the value.
        let loss_at = |m: &EnquirerModel, gm: &[f64], u: &[Vec<f64>]| {
            let (out, _) = m.forward(gm, &refs(u), &mask).unwrap();
            let l: f64 = out
                .logits
                .iter()
                .zip(&w)
                .zip(&mask)
                .filter(|(_, &m)| !m)
                .map(|((a, b), _)| a * b)
                .sum();
            l + wv * out.value
        };
        let (_, cache) = model.forward(&gm, &refs(&uttered), &mask).unwrap();
        let dlogits: Vec<f64> = w
            .iter()
            .zip(&mask)
            .map(|(&x, &m)| if m { 0.0 } else { x })
            .collect();
        let mut grads = model.store().zero_gradients();
        model.backward(cache, &dlogits, wv, &mut grads);
        let ep = check_params(
            &model,
            EnquirerModel::store_mut,
            |m| loss_at(m, &gm, &uttered),
            &grads,
        );
        worst = worst.max(ep);
    }
    worst
}

pub fn ppo_objective_gradients() -> Worst {
    let mut worst = Worst::default();
    for seed in 0..INSTANCES {
        let mut r = seeded(400 + seed);
        let spec = enquirer_spec(&mut r);
        let mut model = EnquirerModel::new(spec.clone(), seed).unwrap();
        randomize(model.store_mut(), &mut r);
        let d = spec.dimension;
        let mask = random_mask(&mut r, spec.vocab);
        let open: Vec<usize> = (0..spec.vocab).filter(|&i| !mask[i]).collect();
        let t = Transition {
            guest_mean: normal_vec(&mut r, d),
            uttered: (0..r.random_range(0..4))
                .map(|_| normal_vec(&mut r, d))
                .collect(),
            mask: mask.clone(),
            action: WordId(open[r.random_range(0..open.len())]),
            log_prob: 0.0,
            value: 0.0,
            reward: 0.0,
            advantage: 0.0,
            ret: r.sample(StandardNormal),
        };
        let (out, _) = model
            .forward(&t.guest_mean, &refs(&t.uttered), &mask)
            .unwrap();
        // Put the behaviour policy near the current one, either inside or
        // outside the trust region.
        let shift = if seed % 2 == 0 { 0.05 } else { 0.6 };
        let sign = if seed % 4 < 2 { 1.0 } else { -1.0 };
        let t = Transition {
            log_prob: out.log_probabilities[t.action.0] + sign * shift,
            ..t
        };
        let adv: f64 = r.sample(StandardNormal);
        let config = PpoConfig {
            entropy_coef: 0.3,
            ..PpoConfig::default()
        };
        let loss_at = |m: &EnquirerModel| {
            let (out, _) = m
                .forward(&t.guest_mean, &refs(&t.uttered), &t.mask)
                .unwrap();
            transition_loss(&out, &t, adv, &config).loss
        };
        let (out, cache) = model
            .forward(&t.guest_mean, &refs(&t.uttered), &mask)
            .unwrap();
        let tl = transition_loss(&out, &t, adv, &config);
        let mut grads = model.store().zero_gradients();
        model.backward(cache, &tl.logits_grad, tl.value_grad, &mut grads);
        let ep = check_params(&model, EnquirerModel::store_mut, loss_at, &grads);
        worst = worst.max(ep);
    }
    worst
}

pub fn softmax_cross_entropy_gradients() -> Worst {
    let mut worst = Worst::default();
    for seed in 0..INSTANCES {
        let mut r = seeded(500 + seed);
        let n = r.random_range(1..8);
        let z = normal_vec(&mut r, n);
        let target = r.random_range(0..n);
        let (_, g) = softmax_cross_entropy(&z, target).unwrap();
        for j in 0..n {
            let numeric = central(
                |x| {
                    let mut zz = z.clone();
                    zz[j] = x;
                    softmax_cross_entropy(&zz, target).unwrap().0
                },
                z[j],
            );
            worst.add(g[j], numeric);
        }
    }
    worst
}

/// Every layer check, by name.
pub fn suite() -> Vec<(&'static str, Worst)> {
    vec![
        ("mlp_gradients", mlp_gradients()),
        ("bilstm_gradients", bilstm_gradients()),
        (
            "guesser_attention_pooling_gradients",
            guesser_attention_pooling_gradients(),
        ),
        ("enquirer_head_gradients", enquirer_head_gradients()),
        ("ppo_objective_gradients", ppo_objective_gradients()),
        (
            "softmax_cross_entropy_gradients",
            softmax_cross_entropy_gradients(),
        ),
    ]
}
