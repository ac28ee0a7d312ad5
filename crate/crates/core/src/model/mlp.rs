//! Dense ReLU network with a softmax output, trained by backpropagation.

use std::fmt::Debug;

use num_traits::Float;
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Parameter precision. Implemented for `f32` (training) and `f64` (gradient checks).
pub trait Scalar: Float + Default + Debug + Send + Sync + 'static {
    /// `C <- alpha A B + beta C` over strided row/column layouts.
    #[allow(clippy::too_many_arguments)]
    fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: &[Self],
        a_strides: (usize, usize),
        b: &[Self],
        b_strides: (usize, usize),
        beta: Self,
        c: &mut [Self],
        c_strides: (usize, usize),
    );
}

fn span(rows: usize, cols: usize, (rs, cs): (usize, usize)) -> usize {
    if rows == 0 || cols == 0 {
        0
    } else {
        (rows - 1) * rs + (cols - 1) * cs + 1
    }
}

macro_rules! impl_scalar {
    ($t:ty, $gemm:path) => {
        impl Scalar for $t {
            fn gemm(
                m: usize,
                k: usize,
                n: usize,
                alpha: Self,
                a: &[Self],
                a_strides: (usize, usize),
                b: &[Self],
                b_strides: (usize, usize),
                beta: Self,
                c: &mut [Self],
                c_strides: (usize, usize),
            ) {
                assert!(a.len() >= span(m, k, a_strides), "gemm: A too small");
                assert!(b.len() >= span(k, n, b_strides), "gemm: B too small");
                assert!(c.len() >= span(m, n, c_strides), "gemm: C too small");
                if m == 0 || n == 0 {
                    return;
                }
                // SAFETY: the asserts above keep every strided access inside the slices,
                // and `c` is borrowed mutably so it cannot alias `a` or `b`.
                unsafe {
                    $gemm(
                        m,
                        k,
                        n,
                        alpha,
                        a.as_ptr(),
                        a_strides.0 as isize,
                        a_strides.1 as isize,
                        b.as_ptr(),
                        b_strides.0 as isize,
                        b_strides.1 as isize,
                        beta,
                        c.as_mut_ptr(),
                        c_strides.0 as isize,
                        c_strides.1 as isize,
                    )
                }
            }
        }
    };
}

impl_scalar!(f32, matrixmultiply::sgemm);
impl_scalar!(f64, matrixmultiply::dgemm);

/// Weight initialization rule for the layers after the first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// `U(±sqrt(6 / (fan_in + fan_out)))`.
    #[default]
    GlorotUniform,
    /// `U(±sqrt(6 / fan_in))`.
    HeUniform,
}

impl Init {
    fn bound(self, fan_in: usize, fan_out: usize) -> f64 {
        match self {
            Init::GlorotUniform => (6.0 / (fan_in + fan_out) as f64).sqrt(),
            Init::HeUniform => (6.0 / fan_in as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadConfig {
    pub hidden: Vec<usize>,
    /// The first layer is always glorot uniform.
    pub later_layers_init: Init,
}

impl Default for HeadConfig {
    fn default() -> Self {
        Self {
            hidden: vec![512, 512],
            later_layers_init: Init::GlorotUniform,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer<T> {
    pub in_dim: usize,
    pub out_dim: usize,
    /// `out_dim x in_dim`, row-major.
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> DenseLayer<T> {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: vec![T::zero(); in_dim * out_dim],
            bias: vec![T::zero(); out_dim],
        }
    }

    /// `out = x W^T + b` for `n` row-major inputs.
    fn forward(&self, x: &[T], n: usize) -> Vec<T> {
        let mut out = Vec::with_capacity(n * self.out_dim);
        for _ in 0..n {
            out.extend_from_slice(&self.bias);
        }
        T::gemm(
            n,
            self.in_dim,
            self.out_dim,
            T::one(),
            x,
            (self.in_dim, 1),
            &self.weights,
            (1, self.in_dim),
            T::one(),
            &mut out,
            (self.out_dim, 1),
        );
        out
    }
}

/// Feed-forward classifier: ReLU hidden layers, softmax output.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpHead<T = f32> {
    layers: Vec<DenseLayer<T>>,
}

/// Gradients with the same shapes as the head's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub layers: Vec<DenseLayer<T>>,
}

impl<T: Scalar> Gradients<T> {
    fn zeros_like(head: &MlpHead<T>) -> Self {
        Self {
            layers: head
                .layers
                .iter()
                .map(|l| DenseLayer::zeros(l.in_dim, l.out_dim))
                .collect(),
        }
    }

    pub fn scale(&mut self, factor: T) {
        for l in &mut self.layers {
            for v in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *v = *v * factor;
            }
        }
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &Self, scale: T) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, &y) in a.weights.iter_mut().zip(&b.weights) {
                *x = *x + scale * y;
            }
            for (x, &y) in a.bias.iter_mut().zip(&b.bias) {
                *x = *x + scale * y;
            }
        }
    }
}

/// Default head: `[input_dim, 512, 512, n_classes]`, glorot uniform, zero biases.
pub fn init_head(input_dim: usize, n_classes: usize, seed: u64) -> Result<MlpHead<f32>> {
    MlpHead::init(input_dim, n_classes, &HeadConfig::default(), seed)
}

impl<T: Scalar> MlpHead<T> {
    pub fn init(input_dim: usize, n_classes: usize, config: &HeadConfig, seed: u64) -> Result<Self> {
        let mut dims = vec![input_dim];
        dims.extend_from_slice(&config.hidden);
        dims.push(n_classes);
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidParameter(format!("layer dims must be >= 1, got {dims:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let rule = if i == 0 { Init::GlorotUniform } else { config.later_layers_init };
                let bound = rule.bound(fan_in, fan_out);
                let dist = Uniform::new_inclusive(-bound, bound);
                let mut layer = DenseLayer::zeros(fan_in, fan_out);
                for w in &mut layer.weights {
                    *w = T::from(dist.sample(&mut rng)).expect("finite bound");
                }
                layer
            })
            .collect();
        Ok(Self { layers })
    }

    /// Assembles a head from explicit layers; consecutive dims must chain.
    pub fn from_layers(layers: Vec<DenseLayer<T>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidParameter("a head needs at least one layer".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.in_dim == 0 || l.out_dim == 0 {
                return Err(Error::InvalidParameter(format!("layer {i} has a zero dimension")));
            }
            if l.weights.len() != l.in_dim * l.out_dim {
                return Err(Error::DimensionMismatch {
                    expected: l.in_dim * l.out_dim,
                    actual: l.weights.len(),
                });
            }
            if l.bias.len() != l.out_dim {
                return Err(Error::DimensionMismatch {
                    expected: l.out_dim,
                    actual: l.bias.len(),
                });
            }
            if let Some(next) = layers.get(i + 1) {
                if next.in_dim != l.out_dim {
                    return Err(Error::DimensionMismatch {
                        expected: l.out_dim,
                        actual: next.in_dim,
                    });
                }
            }
            if l.weights.iter().chain(&l.bias).any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!("layer {i} has non-finite parameters")));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[DenseLayer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer<T>] {
        &mut self.layers
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.layers[0].in_dim];
        dims.extend(self.layers.iter().map(|l| l.out_dim));
        dims
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn n_classes(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }

    fn check_input(&self, x: &[T], n: usize) -> Result<()> {
        let expected = n * self.input_dim();
        if x.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// Activations of every layer; the last entry holds logits.
    fn activations(&self, x: &[T], n: usize) -> Vec<Vec<T>> {
        let mut acts: Vec<Vec<T>> = Vec::with_capacity(self.layers.len());
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let input = if i == 0 { x } else { &acts[i - 1] };
            let mut z = layer.forward(input, n);
            if i < last {
                for v in &mut z {
                    *v = v.max(T::zero());
                }
            }
            acts.push(z);
        }
        acts
    }

    /// Raw output scores for `n` row-major inputs.
    pub fn logits_batch(&self, x: &[T], n: usize) -> Result<Vec<T>> {
        self.check_input(x, n)?;
        Ok(self.activations(x, n).pop().expect("at least one layer"))
    }

    /// Class probabilities for `n` row-major inputs.
    pub fn forward_batch(&self, x: &[T], n: usize) -> Result<Vec<T>> {
        let mut p = self.logits_batch(x, n)?;
        for row in p.chunks_mut(self.n_classes()) {
            softmax_in_place(row);
        }
        Ok(p)
    }

    pub fn forward(&self, x: &[T]) -> Result<Vec<T>> {
        self.forward_batch(x, 1)
    }

    /// Mean cross-entropy over the batch and its gradient.
    pub fn loss_and_grad(&self, x: &[T], labels: &[usize]) -> Result<(f64, Gradients<T>)> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        self.check_input(x, n)?;
        let k = self.n_classes();
        if let Some(&bad) = labels.iter().find(|&&y| y >= k) {
            return Err(Error::InvalidParameter(format!("label {bad} outside 0..{k}")));
        }

        let acts = self.activations(x, n);
        let logits = &acts[acts.len() - 1];
        let inv_n = T::from(1.0 / n as f64).expect("finite");
        let mut loss = 0.0f64;
        let mut delta = logits.clone();
        for (row, &y) in delta.chunks_mut(k).zip(labels) {
            loss += cross_entropy(row, y);
            softmax_in_place(row);
            row[y] = row[y] - T::one();
            for v in row.iter_mut() {
                *v = *v * inv_n;
            }
        }
        loss /= n as f64;

        let mut grads = Gradients::zeros_like(self);
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let input = if i == 0 { x } else { &acts[i - 1] };
            let g = &mut grads.layers[i];
            // dW = delta^T input
            T::gemm(
                layer.out_dim,
                n,
                layer.in_dim,
                T::one(),
                &delta,
                (1, layer.out_dim),
                input,
                (layer.in_dim, 1),
                T::zero(),
                &mut g.weights,
                (layer.in_dim, 1),
            );
            for row in delta.chunks(layer.out_dim) {
                for (b, &d) in g.bias.iter_mut().zip(row) {
                    *b = *b + d;
                }
            }
            if i > 0 {
                let mut prev = vec![T::zero(); n * layer.in_dim];
                T::gemm(
                    n,
                    layer.out_dim,
                    layer.in_dim,
                    T::one(),
                    &delta,
                    (layer.out_dim, 1),
                    &layer.weights,
                    (layer.in_dim, 1),
                    T::zero(),
                    &mut prev,
                    (layer.in_dim, 1),
                );
                for (d, &a) in prev.iter_mut().zip(input) {
                    if a <= T::zero() {
                        *d = T::zero();
                    }
                }
                delta = prev;
            }
        }
        Ok((loss, grads))
    }

    /// `params <- params - lr * grads`.
    pub fn sgd_step(&mut self, grads: &Gradients<T>, learning_rate: T) {
        for (l, g) in self.layers.iter_mut().zip(&grads.layers) {
            for (w, &d) in l.weights.iter_mut().zip(&g.weights) {
                *w = *w - learning_rate * d;
            }
            for (b, &d) in l.bias.iter_mut().zip(&g.bias) {
                *b = *b - learning_rate * d;
            }
        }
    }
}

/// Max-subtracted softmax.
pub fn softmax_in_place<T: Scalar>(row: &mut [T]) {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    let mut sum = T::zero();
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum = sum + *v;
    }
    for v in row.iter_mut() {
        *v = *v / sum;
    }
}

/// `-log softmax(logits)[label]` evaluated in f64 via log-sum-exp.
fn cross_entropy<T: Scalar>(logits: &[T], label: usize) -> f64 {
    let z: Vec<f64> = logits.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect();
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    lse - z[label]
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn tiny(dims: &[usize], seed: u64) -> MlpHead<f64> {
        let cfg = HeadConfig {
            hidden: dims[1..dims.len() - 1].to_vec(),
            later_layers_init: Init::GlorotUniform,
        };
        MlpHead::init(dims[0], dims[dims.len() - 1], &cfg, seed).unwrap()
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = init_head(256, 7, 0).unwrap();
        let b = init_head(256, 7, 0).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, init_head(256, 7, 1).unwrap());
        assert_eq!(a.dims(), [256, 512, 512, 7]);
        let bound = (6.0f64 / (256.0 + 512.0)).sqrt() as f32;
        assert!((bound - 0.0884).abs() < 1e-4);
        assert!(a.layers()[0].weights.iter().all(|w| w.abs() <= bound));
        let second = (6.0f64 / 1024.0).sqrt() as f32;
        assert!(a.layers()[1].weights.iter().all(|w| w.abs() <= second));
        assert!(a.layers().iter().all(|l| l.bias.iter().all(|&b| b == 0.0)));
        assert!(init_head(0, 7, 0).is_err());
    }

    #[test]
    fn zero_head_is_uniform() {
        let mut h = init_head(4, 5, 0).unwrap();
        for l in h.layers_mut() {
            l.weights.fill(0.0);
        }
        let p = h.forward(&[1.0, -2.0, 3.0, 0.5]).unwrap();
        assert!(p.iter().all(|&v| (v - 0.2).abs() < 1e-7));
        let (loss, _) = h.loss_and_grad(&[1.0, -2.0, 3.0, 0.5], &[3]).unwrap();
        assert!((loss - 5f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn hand_computed_forward() {
        // 1 -> 1 -> 1 -> 2
        let layers = vec![
            DenseLayer { in_dim: 1, out_dim: 1, weights: vec![2.0], bias: vec![-0.5] },
            DenseLayer { in_dim: 1, out_dim: 1, weights: vec![-1.0], bias: vec![3.0] },
            DenseLayer { in_dim: 1, out_dim: 2, weights: vec![1.0, -1.0], bias: vec![0.0, 0.25] },
        ];
        let h = MlpHead::<f64>::from_layers(layers).unwrap();
        // h1 = relu(2 - 0.5) = 1.5; h2 = relu(-1.5 + 3) = 1.5; z = [1.5, -1.25]
        let p = h.forward(&[1.0]).unwrap();
        let e0 = 1.5f64.exp();
        let e1 = (-1.25f64).exp();
        assert!((p[0] - e0 / (e0 + e1)).abs() < 1e-12);
        assert!((p[1] - e1 / (e0 + e1)).abs() < 1e-12);
        assert!(matches!(h.forward(&[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn from_layers_validates_shapes() {
        let bad = vec![
            DenseLayer::<f32>::zeros(3, 4),
            DenseLayer::<f32>::zeros(5, 2),
        ];
        assert!(MlpHead::from_layers(bad).is_err());
        assert!(MlpHead::<f32>::from_layers(vec![]).is_err());
    }

    fn param_mut(m: &mut MlpHead<f64>, layer: usize, j: usize) -> &mut f64 {
        let l = &mut m.layers_mut()[layer];
        let n_w = l.weights.len();
        if j < n_w {
            &mut l.weights[j]
        } else {
            &mut l.bias[j - n_w]
        }
    }

    fn relative_error(a: f64, b: f64) -> f64 {
        let scale = a.abs().max(b.abs());
        if scale < 1e-7 {
            0.0
        } else {
            (a - b).abs() / scale
        }
    }

    #[test]
    fn gradients_match_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut head = tiny(&[6, 9, 7, 4], 5);
        for l in head.layers_mut() {
            for b in &mut l.bias {
                *b = rng.gen_range(-0.3..0.3);
            }
        }
        let x: Vec<f64> = (0..8 * 6).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let y: Vec<usize> = (0..8).map(|_| rng.gen_range(0..4)).collect();
        let (_, grads) = head.loss_and_grad(&x, &y).unwrap();

        let h = 1e-5;
        let mut worst = 0.0f64;
        for li in 0..head.layers().len() {
            let n_w = head.layers()[li].weights.len();
            let n_b = head.layers()[li].bias.len();
            for j in 0..n_w + n_b {
                let mut plus = head.clone();
                let mut minus = head.clone();
                *param_mut(&mut plus, li, j) += h;
                *param_mut(&mut minus, li, j) -= h;
                let lp = plus.loss_and_grad(&x, &y).unwrap().0;
                let lm = minus.loss_and_grad(&x, &y).unwrap().0;
                let numeric = (lp - lm) / (2.0 * h);
                let g = &grads.layers[li];
                let analytic = if j < n_w { g.weights[j] } else { g.bias[j - n_w] };
                worst = worst.max(relative_error(analytic, numeric));
            }
        }
        assert!(worst < 1e-4, "worst relative error {worst}");
    }

    #[test]
    fn confident_correct_prediction_has_tiny_gradient() {
        let layers = vec![DenseLayer { in_dim: 1, out_dim: 2, weights: vec![50.0, -50.0], bias: vec![0.0, 0.0] }];
        let h = MlpHead::<f64>::from_layers(layers).unwrap();
        let (loss, g) = h.loss_and_grad(&[1.0], &[0]).unwrap();
        assert!(loss < 1e-30);
        assert!(g.layers[0].weights.iter().all(|v| v.abs() < 1e-30));
    }

    #[test]
    fn one_small_step_lowers_the_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for seed in 0..5 {
            let mut head = tiny(&[10, 32, 32, 3], seed);
            let x: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (before, g) = head.loss_and_grad(&x, &[1]).unwrap();
            head.sgd_step(&g, 1e-3);
            let (after, _) = head.loss_and_grad(&x, &[1]).unwrap();
            assert!(after < before, "{after} !< {before}");
        }
    }

    #[test]
    fn batch_and_single_forward_agree() {
        let head = init_head(16, 3, 4).unwrap();
        let x: Vec<f32> = (0..48).map(|i| (i as f32 * 0.37).sin()).collect();
        let batch = head.forward_batch(&x, 3).unwrap();
        for i in 0..3 {
            let single = head.forward(&x[i * 16..(i + 1) * 16]).unwrap();
            for (a, b) in single.iter().zip(&batch[i * 3..(i + 1) * 3]) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
        assert_eq!(argmax(&[1.0, 1.0]), 0);
        assert_eq!(argmax(&[3]), 0);
    }

    proptest! {
        #[test]
        fn probabilities_sum_to_one(x in prop::collection::vec(-50.0f32..50.0, 8), seed in 0u64..50) {
            let h = MlpHead::<f32>::init(8, 5, &HeadConfig { hidden: vec![16], ..Default::default() }, seed).unwrap();
            let p = h.forward(&x).unwrap();
            let s: f32 = p.iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-6);
        }

        #[test]
        fn softmax_is_shift_invariant(z in prop::collection::vec(-30.0f64..30.0, 2..10), c in -100.0f64..100.0) {
            let mut a = z.clone();
            let mut b: Vec<f64> = z.iter().map(|v| v + c).collect();
            softmax_in_place(&mut a);
            softmax_in_place(&mut b);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
