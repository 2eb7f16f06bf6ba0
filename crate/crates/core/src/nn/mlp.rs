//! Dense multilayer perceptron with ReLU hidden layers and a linear output.
//!
//! All parameters live in one flat vector so optimisers, clipping and
//! checkpoints can treat a network as a plain `[f64]`. Layer `l` stores its
//! `out x in` weight matrix row-major, followed by its `out` biases.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    dims: Vec<usize>,
    params: Vec<f64>,
    version: u64,
}

/// Activations recorded by [`Mlp::forward`], consumed by [`Mlp::backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input followed by each layer's post-activation output.
    activations: Vec<Vec<f64>>,
    version: u64,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("cache holds at least the input")
    }
}

pub fn num_params(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

impl Mlp {
    /// Network with every parameter set to zero.
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::Config(format!("invalid layer sizes {dims:?}")));
        }
        Ok(Self { dims: dims.to_vec(), params: vec![0.0; num_params(dims)], version: 0 })
    }

    pub fn from_params(dims: &[usize], params: Vec<f64>) -> Result<Self> {
        let mut mlp = Self::zeros(dims)?;
        if params.len() != mlp.params.len() {
            return Err(Error::Shape { expected: mlp.params.len(), actual: params.len() });
        }
        mlp.params = params;
        Ok(mlp)
    }

    /// Orthogonal initialisation: hidden layers with gain sqrt(2), the output
    /// layer with `output_gain`; biases start at zero.
    pub fn orthogonal<R: Rng + ?Sized>(dims: &[usize], output_gain: f64, rng: &mut R) -> Result<Self> {
        let mut mlp = Self::zeros(dims)?;
        let layers = dims.len() - 1;
        let mut offset = 0;
        for l in 0..layers {
            let (fan_in, fan_out) = (dims[l], dims[l + 1]);
            let gain = if l + 1 == layers { output_gain } else { std::f64::consts::SQRT_2 };
            let w = orthogonal_matrix(fan_out, fan_in, rng);
            for (dst, src) in mlp.params[offset..offset + fan_in * fan_out].iter_mut().zip(w) {
                *dst = gain * src;
            }
            offset += fan_in * fan_out + fan_out;
        }
        Ok(mlp)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_len(&self) -> usize {
        self.dims[0]
    }

    pub fn output_len(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Mutable access; invalidates outstanding forward caches.
    pub fn params_mut(&mut self) -> &mut [f64] {
        self.version += 1;
        &mut self.params
    }

    fn layer_offsets(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.dims.windows(2).scan(0, |offset, w| {
            let start = *offset;
            *offset += w[0] * w[1] + w[1];
            Some((start, w[0], w[1]))
        })
    }

    /// Output only, without recording activations.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let layers = self.dims.len() - 1;
        let mut x = input.to_vec();
        for (l, (offset, n_in, n_out)) in self.layer_offsets().enumerate() {
            x = self.layer(offset, n_in, n_out, &x, l + 1 < layers);
        }
        Ok(x)
    }

    pub fn forward(&self, input: &[f64]) -> Result<ForwardCache> {
        self.check_input(input)?;
        let layers = self.dims.len() - 1;
        let mut activations = Vec::with_capacity(self.dims.len());
        activations.push(input.to_vec());
        for (l, (offset, n_in, n_out)) in self.layer_offsets().enumerate() {
            let next = self.layer(offset, n_in, n_out, activations.last().unwrap(), l + 1 < layers);
            activations.push(next);
        }
        Ok(ForwardCache { activations, version: self.version })
    }

    fn layer(&self, offset: usize, n_in: usize, n_out: usize, x: &[f64], relu: bool) -> Vec<f64> {
        let w = &self.params[offset..offset + n_in * n_out];
        let b = &self.params[offset + n_in * n_out..offset + n_in * n_out + n_out];
        w.chunks_exact(n_in)
            .zip(b)
            .map(|(row, bias)| {
                let z = dot(row, x) + bias;
                if relu {
                    z.max(0.0)
                } else {
                    z
                }
            })
            .collect()
    }

    /// Reverse pass. Parameter gradients are *added* into `grads`; the
    /// gradient with respect to the input is returned. A ReLU whose
    /// pre-activation is exactly zero passes no gradient.
    pub fn backward(&self, cache: &ForwardCache, grad_output: &[f64], grads: &mut [f64]) -> Result<Vec<f64>> {
        if cache.version != self.version || cache.activations.len() != self.dims.len() {
            return Err(Error::StaleCache);
        }
        if grad_output.len() != self.output_len() {
            return Err(Error::Shape { expected: self.output_len(), actual: grad_output.len() });
        }
        if grads.len() != self.params.len() {
            return Err(Error::Shape { expected: self.params.len(), actual: grads.len() });
        }
        let offsets: Vec<_> = self.layer_offsets().collect();
        let layers = offsets.len();
        let mut delta = grad_output.to_vec();
        for l in (0..layers).rev() {
            let (offset, n_in, n_out) = offsets[l];
            if l + 1 < layers {
                for (d, &a) in delta.iter_mut().zip(&cache.activations[l + 1]) {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            let x = &cache.activations[l];
            let w = &self.params[offset..offset + n_in * n_out];
            let (gw, gb) = grads[offset..offset + n_in * n_out + n_out].split_at_mut(n_in * n_out);
            let mut grad_in = vec![0.0; n_in];
            for (j, &dj) in delta.iter().enumerate() {
                if dj == 0.0 {
                    continue;
                }
                gb[j] += dj;
                axpy(dj, x, &mut gw[j * n_in..(j + 1) * n_in]);
                axpy(dj, &w[j * n_in..(j + 1) * n_in], &mut grad_in);
            }
            delta = grad_in;
        }
        Ok(delta)
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_len() {
            return Err(Error::Shape { expected: self.input_len(), actual: input.len() });
        }
        Ok(())
    }
}

/// `rows x cols` matrix with orthonormal rows (or columns, whichever are
/// fewer), returned row-major.
fn orthogonal_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Vec<f64> {
    // Orthonormalise the shorter side with modified Gram-Schmidt.
    let (n, len) = if rows <= cols { (rows, cols) } else { (cols, rows) };
    let mut vecs: Vec<Vec<f64>> = Vec::with_capacity(n);
    while vecs.len() < n {
        let mut v: Vec<f64> = (0..len).map(|_| rng.sample(StandardNormal)).collect();
        for u in &vecs {
            let p = dot(&v, u);
            axpy(-p, u, &mut v);
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            vecs.push(v);
        }
    }
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            out[r * cols + c] = if rows <= cols { vecs[r][c] } else { vecs[c][r] };
        }
    }
    out
}
