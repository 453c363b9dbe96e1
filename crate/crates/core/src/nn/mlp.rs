use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// `c = a * b + beta * c` for row-major or strided operands.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (usize, usize),
    b: &[f64],
    (rsb, csb): (usize, usize),
    beta: f64,
    c: &mut [f64],
) {
    assert!(m == 0 || k == 0 || a.len() > (m - 1) * rsa + (k - 1) * csa);
    assert!(k == 0 || n == 0 || b.len() > (k - 1) * rsb + (n - 1) * csb);
    assert!(c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: the asserts above keep every strided access inside the slices,
    // and `c` does not alias `a` or `b` (distinct borrows).
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct LayerSpan {
    n_in: usize,
    n_out: usize,
    w: usize,
    b: usize,
}

/// Fully connected network: rectifier on hidden layers, identity output.
/// All parameters live in one flat vector; layer `l` stores its weights as
/// an `n_in x n_out` row-major block followed by `n_out` biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    spans: Vec<LayerSpan>,
    params: Vec<f64>,
}

/// Activations of a batched forward pass, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Activations {
    batch: usize,
    layers: Vec<Vec<f64>>,
}

impl Activations {
    pub fn batch(&self) -> usize {
        self.batch
    }

    /// Network output, `batch x output_dim` row-major.
    pub fn output(&self) -> &[f64] {
        self.layers.last().expect("at least the input")
    }
}

fn spans_for(sizes: &[usize]) -> (Vec<LayerSpan>, usize) {
    let mut spans = Vec::with_capacity(sizes.len() - 1);
    let mut at = 0;
    for pair in sizes.windows(2) {
        let (n_in, n_out) = (pair[0], pair[1]);
        spans.push(LayerSpan {
            n_in,
            n_out,
            w: at,
            b: at + n_in * n_out,
        });
        at += n_in * n_out + n_out;
    }
    (spans, at)
}

/// Orthonormal rows (or columns, whichever are fewer) of a Gaussian matrix,
/// scaled by `gain`. Returned `rows x cols` row-major.
fn orthogonal(rows: usize, cols: usize, gain: f64, rng: &mut impl Rng) -> Vec<f64> {
    let (count, len) = if rows <= cols {
        (rows, cols)
    } else {
        (cols, rows)
    };
    let mut vecs: Vec<Vec<f64>> = Vec::with_capacity(count);
    while vecs.len() < count {
        let mut v: Vec<f64> = (0..len).map(|_| rng.sample(StandardNormal)).collect();
        for u in &vecs {
            let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= dot * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|a| *a /= norm);
            vecs.push(v);
        }
    }
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            out[r * cols + c] = gain * if rows <= cols { vecs[r][c] } else { vecs[c][r] };
        }
    }
    out
}

impl Mlp {
    /// All-zero network with the given layer widths (input first).
    pub fn zeros(sizes: &[usize]) -> Self {
        assert!(sizes.len() >= 2, "need an input and an output width");
        assert!(
            sizes.iter().all(|&s| s > 0),
            "layer widths must be positive"
        );
        let (spans, total) = spans_for(sizes);
        Self {
            sizes: sizes.to_vec(),
            spans,
            params: vec![0.0; total],
        }
    }

    /// Orthogonal init with gain `sqrt(2)` on hidden layers and
    /// `output_gain` on the last layer; zero biases.
    pub fn new(sizes: &[usize], output_gain: f64, rng: &mut impl Rng) -> Self {
        let mut net = Self::zeros(sizes);
        let last = net.spans.len() - 1;
        for l in 0..net.spans.len() {
            let gain = if l == last { output_gain } else { 2f64.sqrt() };
            net.reinit_layer(l, gain, rng);
        }
        net
    }

    pub fn reinit_layer(&mut self, layer: usize, gain: f64, rng: &mut impl Rng) {
        let s = self.spans[layer];
        // generated as out x in, stored transposed
        let q = orthogonal(s.n_out, s.n_in, gain, rng);
        for o in 0..s.n_out {
            for i in 0..s.n_in {
                self.params[s.w + i * s.n_out + o] = q[o * s.n_in + i];
            }
        }
        self.params[s.b..s.b + s.n_out].fill(0.0);
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("non-empty")
    }

    pub fn num_layers(&self) -> usize {
        self.spans.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Flat index range of layer `l`'s weights and biases.
    pub fn layer_range(&self, layer: usize) -> std::ops::Range<usize> {
        let s = self.spans[layer];
        s.w..s.b + s.n_out
    }

    pub fn weight(&self, layer: usize, input: usize, output: usize) -> f64 {
        let s = self.spans[layer];
        self.params[s.w + input * s.n_out + output]
    }

    pub fn set_weight(&mut self, layer: usize, input: usize, output: usize, value: f64) {
        let s = self.spans[layer];
        self.params[s.w + input * s.n_out + output] = value;
    }

    pub fn set_bias(&mut self, layer: usize, output: usize, value: f64) {
        let s = self.spans[layer];
        self.params[s.b + output] = value;
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_dim() {
            return Err(Error::Dimension {
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        Ok(self
            .forward_batch(input, 1)
            .layers
            .pop()
            .expect("output layer"))
    }

    /// Forward `batch` row-major inputs at once.
    pub fn forward_batch(&self, input: &[f64], batch: usize) -> Activations {
        assert_eq!(input.len(), batch * self.input_dim(), "input batch shape");
        let mut layers = Vec::with_capacity(self.sizes.len());
        layers.push(input.to_vec());
        let last = self.spans.len() - 1;
        for (l, s) in self.spans.iter().enumerate() {
            let mut out = vec![0.0; batch * s.n_out];
            let bias = &self.params[s.b..s.b + s.n_out];
            for row in out.chunks_exact_mut(s.n_out) {
                row.copy_from_slice(bias);
            }
            gemm(
                batch,
                s.n_in,
                s.n_out,
                &layers[l],
                (s.n_in, 1),
                &self.params[s.w..s.b],
                (s.n_out, 1),
                1.0,
                &mut out,
            );
            if l != last {
                out.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            layers.push(out);
        }
        Activations { batch, layers }
    }

    /// Parameter gradients of `sum_rows <upstream_row, output_row>` given the
    /// cached activations. `upstream` is `batch x output_dim` row-major.
    pub fn backward(&self, acts: &Activations, upstream: &[f64]) -> Vec<f64> {
        let batch = acts.batch;
        assert_eq!(upstream.len(), batch * self.output_dim(), "upstream shape");
        let mut grads = vec![0.0; self.params.len()];
        let mut delta = upstream.to_vec();
        for l in (0..self.spans.len()).rev() {
            let s = self.spans[l];
            let x = &acts.layers[l];
            // dW = X^T * delta
            gemm(
                s.n_in,
                batch,
                s.n_out,
                x,
                (1, s.n_in),
                &delta,
                (s.n_out, 1),
                0.0,
                &mut grads[s.w..s.b],
            );
            let db = &mut grads[s.b..s.b + s.n_out];
            for row in delta.chunks_exact(s.n_out) {
                db.iter_mut().zip(row).for_each(|(g, d)| *g += d);
            }
            if l > 0 {
                // dX = delta * W^T, masked by the rectifier of the layer below
                let mut dx = vec![0.0; batch * s.n_in];
                gemm(
                    batch,
                    s.n_out,
                    s.n_in,
                    &delta,
                    (s.n_out, 1),
                    &self.params[s.w..s.b],
                    (1, s.n_out),
                    0.0,
                    &mut dx,
                );
                dx.iter_mut().zip(x).for_each(|(g, &a)| {
                    if a <= 0.0 {
                        *g = 0.0;
                    }
                });
                delta = dx;
            }
        }
        grads
    }

    /// Single-example convenience wrapper around forward + backward.
    pub fn gradient(&self, input: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_dim() {
            return Err(Error::Dimension {
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        if upstream.len() != self.output_dim() {
            return Err(Error::Dimension {
                expected: self.output_dim(),
                got: upstream.len(),
            });
        }
        let acts = self.forward_batch(input, 1);
        Ok(self.backward(&acts, upstream))
    }
}
