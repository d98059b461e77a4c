/// A fixed, ordered collection of flat parameter tensors.
///
/// Optimisers, gradient oracles and checkpoints walk parameters through this
/// view so they work identically for every model kind.
pub trait TensorSet {
    fn tensor_slices(&self) -> Vec<&[f64]>;
    fn tensor_slices_mut(&mut self) -> Vec<&mut [f64]>;

    fn scalar_count(&self) -> usize {
        self.tensor_slices().iter().map(|t| t.len()).sum()
    }

    fn flatten(&self) -> Vec<f64> {
        self.tensor_slices().concat()
    }
}

/// Largest elementwise relative error `|a − b| / max(|a|, |b|, floor)`.
pub fn max_relative_error<A: TensorSet, B: TensorSet>(a: &A, b: &B, floor: f64) -> f64 {
    a.flatten()
        .iter()
        .zip(b.flatten())
        .map(|(&x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(0.0, f64::max)
}
