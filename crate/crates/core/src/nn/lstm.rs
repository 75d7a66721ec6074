use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ops::{axpy, dot, sigmoid};
use super::params::{Gradients, Init, ParamId, ParamStore};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiLstmSpec {
    pub input: usize,
    /// Hidden width of each direction; outputs are `2 * hidden` wide.
    pub hidden: usize,
}

impl BiLstmSpec {
    pub fn output_width(&self) -> usize {
        2 * self.hidden
    }
}

/// One direction. Gate blocks are stacked `[input, forget, cell, output]`.
#[derive(Clone, Debug)]
struct Direction {
    w_input: ParamId,
    w_hidden: ParamId,
    bias: ParamId,
}

#[derive(Debug)]
struct StepCache {
    gates: Vec<f64>,
    c_prev: Vec<f64>,
    h_prev: Vec<f64>,
    tanh_c: Vec<f64>,
}

/// Bidirectional LSTM over a short sequence.
#[derive(Clone, Debug)]
pub struct BiLstm {
    spec: BiLstmSpec,
    forward: Direction,
    backward: Direction,
}

#[derive(Debug)]
pub struct BiLstmCache {
    inputs: Vec<Vec<f64>>,
    forward: Vec<StepCache>,
    /// Indexed by sequence position, not processing order.
    backward: Vec<StepCache>,
}

impl BiLstm {
    pub fn new<R: Rng + ?Sized>(
        spec: BiLstmSpec,
        store: &mut ParamStore,
        name: &str,
        rng: &mut R,
    ) -> Result<Self> {
        if spec.input == 0 || spec.hidden == 0 {
            return Err(Error::Config(format!(
                "biLSTM widths must be >= 1: {spec:?}"
            )));
        }
        let forward = Self::direction(&spec, store, &format!("{name}.fwd"), rng);
        let backward = Self::direction(&spec, store, &format!("{name}.bwd"), rng);
        Ok(BiLstm {
            spec,
            forward,
            backward,
        })
    }

    fn direction<R: Rng + ?Sized>(
        spec: &BiLstmSpec,
        store: &mut ParamStore,
        name: &str,
        rng: &mut R,
    ) -> Direction {
        let h = spec.hidden;
        let w_input = store.add(
            format!("{name}.w_input"),
            &[4 * h, spec.input],
            Init::FanIn(spec.input),
            rng,
        );
        let w_hidden = store.add(format!("{name}.w_hidden"), &[4 * h, h], Init::FanIn(h), rng);
        let bias = store.add(format!("{name}.bias"), &[4 * h], Init::Zeros, rng);
        store.value_mut(bias)[h..2 * h].fill(1.0);
        Direction {
            w_input,
            w_hidden,
            bias,
        }
    }

    pub fn spec(&self) -> &BiLstmSpec {
        &self.spec
    }

    pub fn param_ids(&self) -> [ParamId; 6] {
        [
            self.forward.w_input,
            self.forward.w_hidden,
            self.forward.bias,
            self.backward.w_input,
            self.backward.w_hidden,
            self.backward.bias,
        ]
    }

    fn cell(
        &self,
        store: &ParamStore,
        dir: &Direction,
        x: &[f64],
        h_prev: Vec<f64>,
        c_prev: Vec<f64>,
    ) -> (Vec<f64>, Vec<f64>, StepCache) {
        let hid = self.spec.hidden;
        let wx = store.value(dir.w_input);
        let wh = store.value(dir.w_hidden);
        let b = store.value(dir.bias);
        let mut gates: Vec<f64> = wx
            .chunks_exact(self.spec.input)
            .zip(wh.chunks_exact(hid))
            .zip(b)
            .map(|((rx, rh), bi)| dot(rx, x) + dot(rh, &h_prev) + bi)
            .collect();
        for (k, a) in gates.iter_mut().enumerate() {
            *a = if (2 * hid..3 * hid).contains(&k) {
                a.tanh()
            } else {
                sigmoid(*a)
            };
        }
        let mut c = vec![0.0; hid];
        let mut h = vec![0.0; hid];
        let mut tanh_c = vec![0.0; hid];
        for j in 0..hid {
            let (i, f, g, o) = (
                gates[j],
                gates[hid + j],
                gates[2 * hid + j],
                gates[3 * hid + j],
            );
            c[j] = f * c_prev[j] + i * g;
            tanh_c[j] = c[j].tanh();
            h[j] = o * tanh_c[j];
        }
        let cache = StepCache {
            gates,
            c_prev,
            h_prev,
            tanh_c,
        };
        (h, c, cache)
    }

    /// Runs both directions; output `t` is `[forward_h_t ; backward_h_t]`.
    pub fn forward(
        &self,
        store: &ParamStore,
        inputs: &[&[f64]],
    ) -> Result<(Vec<Vec<f64>>, BiLstmCache)> {
        if let Some(bad) = inputs.iter().find(|x| x.len() != self.spec.input) {
            return Err(Error::Shape(format!(
                "biLSTM expects input width {}, got {}",
                self.spec.input,
                bad.len()
            )));
        }
        let hid = self.spec.hidden;
        let len = inputs.len();
        let mut outputs = vec![vec![0.0; 2 * hid]; len];

        let mut fwd = Vec::with_capacity(len);
        let (mut h, mut c) = (vec![0.0; hid], vec![0.0; hid]);
        for (t, x) in inputs.iter().enumerate() {
            let (hn, cn, step) = self.cell(store, &self.forward, x, h, c);
            outputs[t][..hid].copy_from_slice(&hn);
            fwd.push(step);
            h = hn;
            c = cn;
        }

        let mut bwd: Vec<Option<StepCache>> = (0..len).map(|_| None).collect();
        let (mut h, mut c) = (vec![0.0; hid], vec![0.0; hid]);
        for t in (0..len).rev() {
            let (hn, cn, step) = self.cell(store, &self.backward, inputs[t], h, c);
            outputs[t][hid..].copy_from_slice(&hn);
            bwd[t] = Some(step);
            h = hn;
            c = cn;
        }

        let cache = BiLstmCache {
            inputs: inputs.iter().map(|x| x.to_vec()).collect(),
            forward: fwd,
            backward: bwd
                .into_iter()
                .map(|s| s.expect("every position visited"))
                .collect(),
        };
        Ok((outputs, cache))
    }

    /// Convenience for sequences headed by a start token.
    pub fn forward_with_start(
        &self,
        store: &ParamStore,
        start: &[f64],
        sequence: &[&[f64]],
    ) -> Result<(Vec<Vec<f64>>, BiLstmCache)> {
        let mut inputs = Vec::with_capacity(sequence.len() + 1);
        inputs.push(start);
        inputs.extend_from_slice(sequence);
        self.forward(store, &inputs)
    }

    /// `output_grads[t]` is the gradient for output `t` (width `2H`).
    /// Returns one input gradient per position.
    pub fn backward(
        &self,
        store: &ParamStore,
        cache: BiLstmCache,
        output_grads: &[Vec<f64>],
        grads: &mut Gradients,
    ) -> Vec<Vec<f64>> {
        let hid = self.spec.hidden;
        let len = cache.inputs.len();
        let mut dx = vec![vec![0.0; self.spec.input]; len];

        let order: Vec<usize> = (0..len).rev().collect();
        self.backward_direction(
            store,
            &self.forward,
            &cache.forward,
            &cache.inputs,
            &order,
            |t| &output_grads[t][..hid],
            &mut dx,
            grads,
        );
        let order: Vec<usize> = (0..len).collect();
        self.backward_direction(
            store,
            &self.backward,
            &cache.backward,
            &cache.inputs,
            &order,
            |t| &output_grads[t][hid..],
            &mut dx,
            grads,
        );
        dx
    }

    /// Backpropagation through time for one direction. `order` lists
    /// positions in reverse processing order.
    #[allow(clippy::too_many_arguments)]
    fn backward_direction<'g>(
        &self,
        store: &ParamStore,
        dir: &Direction,
        steps: &[StepCache],
        inputs: &[Vec<f64>],
        order: &[usize],
        out_grad: impl Fn(usize) -> &'g [f64],
        dx: &mut [Vec<f64>],
        grads: &mut Gradients,
    ) {
        let hid = self.spec.hidden;
        let n_in = self.spec.input;
        let mut dh_next = vec![0.0; hid];
        let mut dc_next = vec![0.0; hid];
        let mut da = vec![0.0; 4 * hid];
        for &t in order {
            let s = &steps[t];
            let og = out_grad(t);
            for j in 0..hid {
                let dh = og[j] + dh_next[j];
                let (i, f, g, o) = (
                    s.gates[j],
                    s.gates[hid + j],
                    s.gates[2 * hid + j],
                    s.gates[3 * hid + j],
                );
                let tc = s.tanh_c[j];
                let dc = dc_next[j] + dh * o * (1.0 - tc * tc);
                da[j] = dc * g * i * (1.0 - i);
                da[hid + j] = dc * s.c_prev[j] * f * (1.0 - f);
                da[2 * hid + j] = dc * i * (1.0 - g * g);
                da[3 * hid + j] = dh * tc * o * (1.0 - o);
                dc_next[j] = dc * f;
            }
            {
                let gw = grads.get_mut(dir.w_input);
                for (row, &d) in gw.chunks_exact_mut(n_in).zip(&da) {
                    axpy(d, &inputs[t], row);
                }
            }
            {
                let gw = grads.get_mut(dir.w_hidden);
                for (row, &d) in gw.chunks_exact_mut(hid).zip(&da) {
                    axpy(d, &s.h_prev, row);
                }
            }
            for (gb, d) in grads.get_mut(dir.bias).iter_mut().zip(&da) {
                *gb += d;
            }
            let wx = store.value(dir.w_input);
            for (row, &d) in wx.chunks_exact(n_in).zip(&da) {
                axpy(d, row, &mut dx[t]);
            }
            let wh = store.value(dir.w_hidden);
            dh_next.fill(0.0);
            for (row, &d) in wh.chunks_exact(hid).zip(&da) {
                axpy(d, row, &mut dh_next);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn zeroed(spec: BiLstmSpec) -> (BiLstm, ParamStore) {
        let mut store = ParamStore::new();
        let lstm = BiLstm::new(spec, &mut store, "l", &mut seeded(0)).unwrap();
        for id in store.ids().collect::<Vec<_>>() {
            let n = store.value(id).len();
            store.set_values(id, &vec![0.0; n]).unwrap();
        }
        (lstm, store)
    }

    #[test]
    fn start_token_alone_yields_one_output() {
        let mut store = ParamStore::new();
        let spec = BiLstmSpec {
            input: 3,
            hidden: 2,
        };
        let lstm = BiLstm::new(spec, &mut store, "l", &mut seeded(1)).unwrap();
        let (out, _) = lstm
            .forward_with_start(&store, &[0.1, 0.2, 0.3], &[])
            .unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].len(), 4);
    }

    #[test]
    fn zero_parameters_keep_states_at_zero() {
        let (lstm, store) = zeroed(BiLstmSpec {
            input: 2,
            hidden: 3,
        });
        let seq: [&[f64]; 3] = [&[1.0, -1.0], &[0.5, 2.0], &[-3.0, 0.0]];
        let (out, _) = lstm.forward(&store, &seq).unwrap();
        assert!(out.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn forget_bias_starts_at_one() {
        let mut store = ParamStore::new();
        let lstm = BiLstm::new(
            BiLstmSpec {
                input: 2,
                hidden: 3,
            },
            &mut store,
            "l",
            &mut seeded(0),
        )
        .unwrap();
        let b = store.value(lstm.forward.bias);
        assert_eq!(&b[3..6], &[1.0; 3]);
        assert_eq!(&b[..3], &[0.0; 3]);
    }

    /// Scalar reference cell written out gate by gate.
    fn reference_cell(w: &[f64; 8], b: &[f64; 4], x: f64, h: f64, c: f64) -> (f64, f64) {
        let s = |v: f64| 1.0 / (1.0 + (-v).exp());
        let i = s(w[0] * x + w[4] * h + b[0]);
        let f = s(w[1] * x + w[5] * h + b[1]);
        let g = (w[2] * x + w[6] * h + b[2]).tanh();
        let o = s(w[3] * x + w[7] * h + b[3]);
        let c2 = f * c + i * g;
        (o * c2.tanh(), c2)
    }

    #[test]
    fn matches_hand_traced_recurrence() {
        let (lstm, mut store) = zeroed(BiLstmSpec {
            input: 1,
            hidden: 1,
        });
        let fw = [0.5, -0.3, 0.8, 0.2, 0.1, 0.4, -0.6, 0.3];
        let fb = [0.1, 1.0, 0.0, -0.2];
        let bw = [-0.4, 0.2, 0.6, 0.9, 0.3, -0.1, 0.2, 0.5];
        let bb = [0.0, 0.5, 0.1, 0.0];
        for (dir, w, b) in [(&lstm.forward, &fw, &fb), (&lstm.backward, &bw, &bb)] {
            store.set_values(dir.w_input, &w[..4]).unwrap();
            store.set_values(dir.w_hidden, &w[4..]).unwrap();
            store.set_values(dir.bias, b).unwrap();
        }
        let xs = [1.0, -2.0];
        let (out, _) = lstm.forward(&store, &[&xs[..1], &xs[1..]]).unwrap();

        let (h1, c1) = reference_cell(&fw, &fb, xs[0], 0.0, 0.0);
        let (h2, _) = reference_cell(&fw, &fb, xs[1], h1, c1);
        let (g2, d2) = reference_cell(&bw, &bb, xs[1], 0.0, 0.0);
        let (g1, _) = reference_cell(&bw, &bb, xs[0], g2, d2);
        let expect = [[h1, g1], [h2, g2]];
        for t in 0..2 {
            for k in 0..2 {
                assert!((out[t][k] - expect[t][k]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rejects_wrong_input_width() {
        let mut store = ParamStore::new();
        let lstm = BiLstm::new(
            BiLstmSpec {
                input: 2,
                hidden: 2,
            },
            &mut store,
            "l",
            &mut seeded(0),
        )
        .unwrap();
        assert!(lstm.forward(&store, &[&[1.0, 2.0, 3.0]]).is_err());
    }
}
