//! Small dense networks with tanh hidden layers, a linear output layer and
//! hand-written backpropagation. Parameters live in one flat vector laid out
//! layer by layer as `W (out x in, row-major)` followed by `b (out)`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Per-layer activations kept for the backward pass; `acts[0]` is the input.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    pub acts: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.acts.last().expect("forward ran")
    }
}

impl Mlp {
    pub fn zeros(sizes: &[usize]) -> Self {
        assert!(sizes.len() >= 2, "need at least an input and an output layer");
        let n = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        Mlp { sizes: sizes.to_vec(), params: vec![0.0; n] }
    }

    /// Orthogonal weights scaled by the per-layer gains, zero biases.
    pub fn orthogonal<R: Rng + ?Sized>(sizes: &[usize], gains: &[f64], rng: &mut R) -> Self {
        assert_eq!(gains.len(), sizes.len() - 1);
        let mut net = Mlp::zeros(sizes);
        for (layer, &gain) in gains.iter().enumerate() {
            let (n_in, n_out) = (sizes[layer], sizes[layer + 1]);
            let w = orthogonal_matrix(n_out, n_in, gain, rng);
            let off = net.layer_offset(layer);
            net.params[off..off + n_in * n_out].copy_from_slice(&w);
        }
        net
    }

    pub fn from_params(sizes: &[usize], params: Vec<f64>) -> Option<Self> {
        let net = Mlp::zeros(sizes);
        (net.params.len() == params.len()).then(|| Mlp { sizes: sizes.to_vec(), params })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn n_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    /// Start of layer `layer`'s weights in the flat parameter vector.
    pub fn layer_offset(&self, layer: usize) -> usize {
        self.sizes[..layer + 1].windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    /// `(weights, biases)` of one layer.
    pub fn layer(&self, layer: usize) -> (&[f64], &[f64]) {
        let off = self.layer_offset(layer);
        let (n_in, n_out) = (self.sizes[layer], self.sizes[layer + 1]);
        let w = &self.params[off..off + n_in * n_out];
        let b = &self.params[off + n_in * n_out..off + n_in * n_out + n_out];
        (w, b)
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        let mut cache = ForwardCache::default();
        self.forward_cached(input, &mut cache);
        cache.acts.pop().expect("forward ran")
    }

    pub fn forward_cached(&self, input: &[f64], cache: &mut ForwardCache) {
        assert_eq!(input.len(), self.sizes[0]);
        cache.acts.clear();
        cache.acts.push(input.to_vec());
        let last = self.n_layers() - 1;
        for layer in 0..self.n_layers() {
            let (w, b) = self.layer(layer);
            let x = cache.acts.last().expect("input pushed");
            let n_in = x.len();
            let mut y: Vec<f64> = b.to_vec();
            for (o, yo) in y.iter_mut().enumerate() {
                let row = &w[o * n_in..(o + 1) * n_in];
                *yo += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            }
            if layer != last {
                y.iter_mut().for_each(|v| *v = v.tanh());
            }
            cache.acts.push(y);
        }
    }

    /// Post-activation values of hidden layer `layer` (1-based).
    pub fn hidden(&self, input: &[f64], layer: usize) -> Vec<f64> {
        let mut cache = ForwardCache::default();
        self.forward_cached(input, &mut cache);
        cache.acts[layer].clone()
    }

    /// Accumulates `d loss / d params` into `grad` given `d loss / d output`;
    /// returns `d loss / d input`.
    pub fn backward(&self, cache: &ForwardCache, d_out: &[f64], grad: &mut [f64]) -> Vec<f64> {
        assert_eq!(grad.len(), self.params.len());
        let mut delta = d_out.to_vec();
        let last = self.n_layers() - 1;
        for layer in (0..self.n_layers()).rev() {
            let out = &cache.acts[layer + 1];
            if layer != last {
                for (d, a) in delta.iter_mut().zip(out) {
                    *d *= 1.0 - a * a;
                }
            }
            let x = &cache.acts[layer];
            let (n_in, n_out) = (self.sizes[layer], self.sizes[layer + 1]);
            let off = self.layer_offset(layer);
            let (w, _) = self.layer(layer);
            let mut d_in = vec![0.0; n_in];
            for o in 0..n_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                let g = &mut grad[off + o * n_in..off + (o + 1) * n_in];
                for i in 0..n_in {
                    g[i] += d * x[i];
                    d_in[i] += w[o * n_in + i] * d;
                }
                grad[off + n_in * n_out + o] += d;
            }
            delta = d_in;
        }
        delta
    }

    /// Product of layer spectral-norm upper bounds (Frobenius norms); a Lipschitz
    /// constant of the network since tanh is 1-Lipschitz.
    pub fn lipschitz_bound(&self) -> f64 {
        (0..self.n_layers())
            .map(|l| self.layer(l).0.iter().map(|w| w * w).sum::<f64>().sqrt())
            .product()
    }
}

/// `rows x cols` matrix (row-major) with orthonormal columns when `rows >= cols`,
/// orthonormal rows otherwise, scaled by `gain`.
pub fn orthogonal_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, gain: f64, rng: &mut R) -> Vec<f64> {
    let (long, short) = (rows.max(cols), rows.min(cols));
    // `short` random vectors of length `long`, orthonormalised twice for stability
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(short);
    while basis.len() < short {
        let mut v: Vec<f64> = (0..long).map(|_| StandardNormal.sample(rng)).collect();
        for _ in 0..2 {
            for q in &basis {
                let dot: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(q).for_each(|(x, qi)| *x -= dot * qi);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }
    let mut m = vec![0.0; rows * cols];
    for (k, q) in basis.iter().enumerate() {
        for (l, &x) in q.iter().enumerate() {
            let (r, c) = if rows >= cols { (l, k) } else { (k, l) };
            m[r * cols + c] = gain * x;
        }
    }
    m
}
