use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{rng_from_seed, uniform_from, Matrix, TensorSet};

/// Weights, biases, readout and time step of a LEM cell with `d` hidden
/// units, `m` input features and `o` outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemParams {
    pub w1: Matrix,
    pub w2: Matrix,
    pub wz: Matrix,
    pub wy: Matrix,
    pub v1: Matrix,
    pub v2: Matrix,
    pub vz: Matrix,
    pub vy: Matrix,
    pub b1: Vec<f64>,
    pub b2: Vec<f64>,
    pub bz: Vec<f64>,
    pub by: Vec<f64>,
    pub w_out: Matrix,
    pub delta_t: f64,
}

/// Gradient of a scalar loss with respect to every trainable tensor of
/// [`LemParams`]; same shapes, no time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemGrads {
    pub w1: Matrix,
    pub w2: Matrix,
    pub wz: Matrix,
    pub wy: Matrix,
    pub v1: Matrix,
    pub v2: Matrix,
    pub vz: Matrix,
    pub vy: Matrix,
    pub b1: Vec<f64>,
    pub b2: Vec<f64>,
    pub bz: Vec<f64>,
    pub by: Vec<f64>,
    pub w_out: Matrix,
}

/// Names of the trainable tensors in declaration (and checkpoint) order.
pub const LEM_TENSOR_NAMES: [&str; 13] = [
    "W1", "W2", "Wz", "Wy", "V1", "V2", "Vz", "Vy", "b1", "b2", "bz", "by", "Wout",
];

macro_rules! lem_tensor_views {
    ($t:ty) => {
        impl $t {
            pub fn tensors(&self) -> [&[f64]; 13] {
                [
                    self.w1.as_slice(),
                    self.w2.as_slice(),
                    self.wz.as_slice(),
                    self.wy.as_slice(),
                    self.v1.as_slice(),
                    self.v2.as_slice(),
                    self.vz.as_slice(),
                    self.vy.as_slice(),
                    &self.b1,
                    &self.b2,
                    &self.bz,
                    &self.by,
                    self.w_out.as_slice(),
                ]
            }

            pub fn tensors_mut(&mut self) -> [&mut [f64]; 13] {
                [
                    self.w1.as_mut_slice(),
                    self.w2.as_mut_slice(),
                    self.wz.as_mut_slice(),
                    self.wy.as_mut_slice(),
                    self.v1.as_mut_slice(),
                    self.v2.as_mut_slice(),
                    self.vz.as_mut_slice(),
                    self.vy.as_mut_slice(),
                    &mut self.b1,
                    &mut self.b2,
                    &mut self.bz,
                    &mut self.by,
                    self.w_out.as_mut_slice(),
                ]
            }
        }
    };
}

lem_tensor_views!(LemParams);
lem_tensor_views!(LemGrads);

impl TensorSet for LemParams {
    fn tensor_slices(&self) -> Vec<&[f64]> {
        self.tensors().to_vec()
    }
    fn tensor_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.tensors_mut().into_iter().collect()
    }
}

impl TensorSet for LemGrads {
    fn tensor_slices(&self) -> Vec<&[f64]> {
        self.tensors().to_vec()
    }
    fn tensor_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.tensors_mut().into_iter().collect()
    }
}

/// Trainable scalars of a LEM cell plus readout: `4(d² + dm + d) + od`.
pub fn param_count(d: usize, m: usize, o: usize) -> usize {
    4 * (d * d + d * m + d) + o * d
}

impl LemParams {
    /// All-zero parameters.
    pub fn zeros(d: usize, m: usize, o: usize, delta_t: f64) -> Result<Self> {
        check_dims(d, m, o)?;
        check_delta_t(delta_t)?;
        Ok(Self {
            w1: Matrix::zeros(d, d),
            w2: Matrix::zeros(d, d),
            wz: Matrix::zeros(d, d),
            wy: Matrix::zeros(d, d),
            v1: Matrix::zeros(d, m),
            v2: Matrix::zeros(d, m),
            vz: Matrix::zeros(d, m),
            vy: Matrix::zeros(d, m),
            b1: vec![0.0; d],
            b2: vec![0.0; d],
            bz: vec![0.0; d],
            by: vec![0.0; d],
            w_out: Matrix::zeros(o, d),
            delta_t,
        })
    }

    /// Every weight and bias drawn i.i.d. from `U(-1/√d, 1/√d)`, in
    /// declaration order from a single seeded stream.
    pub fn init(d: usize, m: usize, o: usize, delta_t: f64, seed: u64) -> Result<Self> {
        let mut p = Self::zeros(d, m, o, delta_t)?;
        let bound = 1.0 / (d as f64).sqrt();
        let mut rng = rng_from_seed(seed);
        for t in p.tensors_mut() {
            let draws = uniform_from(&mut rng, -bound, bound, t.len());
            t.copy_from_slice(&draws);
        }
        Ok(p)
    }

    pub fn hidden(&self) -> usize {
        self.w1.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.v1.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.w_out.rows()
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.hidden(), self.input_dim(), self.output_dim())
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// `η`: the largest infinity norm among the four recurrent matrices.
    pub fn eta(&self) -> f64 {
        [&self.w1, &self.w2, &self.wz, &self.wy]
            .iter()
            .map(|w| w.norm_inf())
            .fold(0.0, f64::max)
    }

    pub fn zero_grads(&self) -> LemGrads {
        let (d, m, o) = self.dims();
        LemGrads {
            w1: Matrix::zeros(d, d),
            w2: Matrix::zeros(d, d),
            wz: Matrix::zeros(d, d),
            wy: Matrix::zeros(d, d),
            v1: Matrix::zeros(d, m),
            v2: Matrix::zeros(d, m),
            vz: Matrix::zeros(d, m),
            vy: Matrix::zeros(d, m),
            b1: vec![0.0; d],
            b2: vec![0.0; d],
            bz: vec![0.0; d],
            by: vec![0.0; d],
            w_out: Matrix::zeros(o, d),
        }
    }

    /// Checks shape consistency, `delta_t > 0` and finiteness.
    pub fn validate(&self) -> Result<()> {
        let (d, m, o) = self.dims();
        check_dims(d, m, o)?;
        check_delta_t(self.delta_t)?;
        let square = [&self.w1, &self.w2, &self.wz, &self.wy];
        let input = [&self.v1, &self.v2, &self.vz, &self.vy];
        if square.iter().any(|w| w.shape() != (d, d))
            || input.iter().any(|v| v.shape() != (d, m))
            || [&self.b1, &self.b2, &self.bz, &self.by]
                .iter()
                .any(|b| b.len() != d)
            || self.w_out.shape() != (o, d)
        {
            return Err(Error::Shape(format!(
                "LEM parameters inconsistent with (d, m, o) = ({d}, {m}, {o})"
            )));
        }
        if self.tensors().iter().any(|t| t.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite("LEM parameters".into()));
        }
        Ok(())
    }
}

impl LemGrads {
    pub fn max_abs(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|t| t.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest magnitude over the recurrent-cell parameters, readout excluded.
    pub fn max_abs_cell(&self) -> f64 {
        self.tensors()[..12]
            .iter()
            .flat_map(|t| t.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn add_assign(&mut self, other: &LemGrads) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            crate::numerics::axpy(1.0, b, a);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= s);
        }
    }
}

pub(crate) fn check_dims(d: usize, m: usize, o: usize) -> Result<()> {
    if d == 0 || m == 0 || o == 0 {
        return Err(Error::Shape(format!(
            "dimensions must be positive, got (d, m, o) = ({d}, {m}, {o})"
        )));
    }
    Ok(())
}

fn check_delta_t(delta_t: f64) -> Result<()> {
    if !(delta_t > 0.0) || !delta_t.is_finite() {
        return Err(Error::Domain(format!("delta_t must be positive, got {delta_t}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_respects_uniform_bound() {
        let p = LemParams::init(4, 3, 2, 0.5, 1).unwrap();
        for t in p.tensors() {
            assert!(t.iter().all(|&v| (-0.5..0.5).contains(&v)));
        }
        assert_eq!(p, LemParams::init(4, 3, 2, 0.5, 1).unwrap());
        assert_ne!(p, LemParams::init(4, 3, 2, 0.5, 2).unwrap());
    }

    #[test]
    fn init_moments_at_large_width() {
        let d = 10_000;
        let p = LemParams::init(d, 1, 1, 1.0, 5).unwrap();
        let vals = p.w1.as_slice();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        // U(-a, a) has sigma = a / sqrt(3)
        let sigma = 1.0 / (d as f64).sqrt() / 3f64.sqrt();
        assert!(mean.abs() <= 3.0 * sigma / n.sqrt());
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        assert!((var.sqrt() - sigma).abs() < 0.01 * sigma);
    }

    #[test]
    fn nonpositive_dims_rejected() {
        assert!(LemParams::init(0, 1, 1, 1.0, 0).is_err());
        assert!(LemParams::init(2, 0, 1, 1.0, 0).is_err());
        assert!(LemParams::init(2, 1, 0, 1.0, 0).is_err());
        assert!(matches!(LemParams::init(2, 1, 1, 0.0, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn table_one_parameter_counts() {
        assert_eq!(param_count(128, 1, 10), 67_840);
        assert_eq!(param_count(128, 96, 10), 116_480);
        let p = LemParams::init(6, 4, 3, 1.0, 0).unwrap();
        assert_eq!(p.param_count(), param_count(6, 4, 3));
    }

    #[test]
    fn validate_catches_bad_shapes() {
        let mut p = LemParams::init(3, 2, 1, 1.0, 0).unwrap();
        assert!(p.validate().is_ok());
        p.b2.push(0.0);
        assert!(matches!(p.validate(), Err(Error::Shape(_))));
    }
}
