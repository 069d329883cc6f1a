use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::MlpSpec;

/// Intermediate values of a batched forward pass.
#[derive(Debug, Clone)]
pub struct BatchCache {
    input: Array2<f64>,
    pre: Vec<Array2<f64>>,
    post: Vec<Array2<f64>>,
}

impl BatchCache {
    /// Network output, one row per sample.
    pub fn output(&self) -> &Array2<f64> {
        self.post.last().unwrap()
    }
}

/// Batched forward and backward passes over a row-per-sample input matrix.
///
/// This is the hand-derived counterpart of recording the network on a
/// [`Tape`](crate::autodiff::Tape); the two are cross-checked in tests and
/// the batched form is what data-driven losses train with.
#[derive(Debug, Clone, Copy)]
pub struct MlpBatch<'a> {
    spec: &'a MlpSpec,
    activate_output: bool,
}

impl<'a> MlpBatch<'a> {
    pub fn new(spec: &'a MlpSpec) -> Self {
        MlpBatch { spec, activate_output: false }
    }

    /// Variant that also applies the activation to the output layer.
    pub fn with_output_activation(spec: &'a MlpSpec) -> Self {
        MlpBatch { spec, activate_output: true }
    }

    fn activated(&self, l: usize) -> bool {
        self.activate_output || l + 1 < self.spec.layer_count()
    }

    fn weights<'p>(&self, params: &'p [f64], l: usize) -> (ArrayView2<'p, f64>, &'p [f64]) {
        let (wr, br) = self.spec.layer_ranges(l);
        let shape = (self.spec.layer_widths[l + 1], self.spec.layer_widths[l]);
        (ArrayView2::from_shape(shape, &params[wr]).unwrap(), &params[br])
    }

    pub fn forward(&self, params: &[f64], input: ArrayView2<'_, f64>) -> BatchCache {
        assert_eq!(input.ncols(), self.spec.input_width(), "input width mismatch");
        let act = self.spec.activation;
        let mut pre = Vec::with_capacity(self.spec.layer_count());
        let mut post: Vec<Array2<f64>> = Vec::with_capacity(self.spec.layer_count());
        for l in 0..self.spec.layer_count() {
            let (w, b) = self.weights(params, l);
            let prev = if l == 0 { input.view() } else { post[l - 1].view() };
            let mut z = prev.dot(&w.t());
            for mut row in z.rows_mut() {
                for (v, bj) in row.iter_mut().zip(b) {
                    *v += bj;
                }
            }
            let a = if self.activated(l) { z.mapv(|v| act.apply(v)) } else { z.clone() };
            pre.push(z);
            post.push(a);
        }
        BatchCache { input: input.to_owned(), pre, post }
    }

    /// Accumulates `∂L/∂θ` into `grad` given `∂L/∂output`. When
    /// `sample_sq` is given, adds each row's squared gradient norm
    /// contribution (as if the row's share of `d_out` were its whole loss).
    pub fn backward(
        &self,
        params: &[f64],
        cache: &BatchCache,
        d_out: Array2<f64>,
        grad: &mut [f64],
        mut sample_sq: Option<&mut [f64]>,
    ) {
        let act = self.spec.activation;
        let mut d_a = d_out;
        for l in (0..self.spec.layer_count()).rev() {
            let d_z = if self.activated(l) {
                let mut d = d_a;
                ndarray::Zip::from(&mut d)
                    .and(&cache.pre[l])
                    .and(&cache.post[l])
                    .for_each(|d, &z, &a| *d *= act.derivative(z, a));
                d
            } else {
                d_a
            };
            let prev = if l == 0 { &cache.input } else { &cache.post[l - 1] };
            let gw = d_z.t().dot(prev);
            let gb: Array1<f64> = d_z.sum_axis(Axis(0));
            let (wr, br) = self.spec.layer_ranges(l);
            for (g, v) in grad[wr].iter_mut().zip(gw.iter()) {
                *g += v;
            }
            for (g, v) in grad[br].iter_mut().zip(gb.iter()) {
                *g += v;
            }
            if let Some(sq) = sample_sq.as_deref_mut() {
                for (i, s) in sq.iter_mut().enumerate() {
                    let dz2: f64 = d_z.row(i).iter().map(|v| v * v).sum();
                    let a2: f64 = prev.row(i).iter().map(|v| v * v).sum();
                    *s += dz2 * (a2 + 1.0);
                }
            }
            if l > 0 {
                let (w, _) = self.weights(params, l);
                d_a = d_z.dot(&w);
            } else {
                break;
            }
        }
    }

    /// Mean squared error over all rows and outputs, its gradient, and
    /// optionally the largest per-sample gradient norm `‖∇(pred_i − y_i)²‖`.
    pub fn mse_loss_grad(
        &self,
        params: &[f64],
        input: ArrayView2<'_, f64>,
        targets: ArrayView2<'_, f64>,
        sample_norms: bool,
    ) -> (f64, Vec<f64>, Option<f64>) {
        let cache = self.forward(params, input);
        let n = input.nrows() as f64;
        let diff = cache.output() - &targets;
        let loss = diff.iter().map(|d| d * d).sum::<f64>() / n;
        let d_out = diff.mapv(|d| 2.0 * d / n);
        let mut grad = vec![0.0; params.len()];
        let mut sq = if sample_norms { Some(vec![0.0; input.nrows()]) } else { None };
        self.backward(params, &cache, d_out, &mut grad, sq.as_deref_mut());
        let max_norm = sq.map(|s| s.iter().cloned().fold(0.0, f64::max).sqrt() * n);
        (loss, grad, max_norm)
    }
}
