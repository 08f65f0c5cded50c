//! Uniform collocation grids and discrete Fourier projection.
//!
//! Pointwise nonlinear evaluations run on a grid of `4K + 1` points per
//! dimension: band-limited products of degree up to two are then projected
//! without aliasing, and the quotients appearing in the Dirichlet-Neumann
//! assembly are resolved far below the coefficient noise floor.

use num_complex::Complex64;

use crate::analytic::{ModeIndex, PeriodicFunction};
use crate::error::{Error, Result};

/// Uniform grid with `n` points per dimension on the d-torus.
#[derive(Clone, Copy, Debug)]
pub struct CollocationGrid {
    dim: u8,
    n: usize,
}

impl CollocationGrid {
    pub fn new(dim: u8, n: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidParameter(format!(
                "dimension must be 1 or 2, got {dim}"
            )));
        }
        if n == 0 {
            return Err(Error::InvalidParameter(
                "grid needs at least 1 point".into(),
            ));
        }
        Ok(CollocationGrid { dim, n })
    }

    /// The de-aliased grid for truncation `K`: `4K + 1` points per dimension.
    pub fn for_trunc(dim: u8, trunc: u32) -> Result<Self> {
        Self::new(dim, 4 * trunc as usize + 1)
    }

    pub fn dim(&self) -> u8 {
        self.dim
    }

    pub fn points_per_dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid coordinates of the flat index `i` (row-major for d = 2).
    pub fn point(&self, i: usize) -> [f64; 2] {
        let h = 2.0 * std::f64::consts::PI / self.n as f64;
        match self.dim {
            1 => [i as f64 * h, 0.0],
            _ => [(i / self.n) as f64 * h, (i % self.n) as f64 * h],
        }
    }

    /// Samples a function on the grid (real part; imaginary parts cancel for
    /// conjugate-symmetric coefficients).
    pub fn eval(&self, f: &PeriodicFunction) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (k, c) in f.coeffs() {
            self.accumulate_mode(&mut out, k, *c);
        }
        out
    }

    fn accumulate_mode(&self, out: &mut [f64], k: &ModeIndex, c: Complex64) {
        let h = 2.0 * std::f64::consts::PI / self.n as f64;
        match self.dim {
            1 => {
                let kk = k.component(0) as f64;
                for (i, v) in out.iter_mut().enumerate() {
                    let phase = kk * (i as f64) * h;
                    *v += (c * Complex64::from_polar(1.0, phase)).re;
                }
            }
            _ => {
                let (k1, k2) = (k.component(0) as f64, k.component(1) as f64);
                for i1 in 0..self.n {
                    let p1 = Complex64::from_polar(1.0, k1 * (i1 as f64) * h);
                    for i2 in 0..self.n {
                        let phase2 = k2 * (i2 as f64) * h;
                        out[i1 * self.n + i2] += (c * p1 * Complex64::from_polar(1.0, phase2)).re;
                    }
                }
            }
        }
    }

    /// Projects grid values onto the modes `|k|_inf <= trunc`:
    /// `u_k = n^{-d} sum_i v_i e^{-i k.x_i}`. Exact for band-limited data
    /// when `n > 2 * trunc`. Only the lexicographically nonnegative half is
    /// summed; the mirror modes are conjugated, so the output is exactly
    /// symmetric (the input values are real).
    pub fn project(&self, values: &[f64], trunc: u32) -> Result<PeriodicFunction> {
        if values.len() != self.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} grid values, got {}",
                self.len(),
                values.len()
            )));
        }
        let h = 2.0 * std::f64::consts::PI / self.n as f64;
        let kt = trunc as i32;
        let mut entries = Vec::new();
        let mut push = |k: ModeIndex, acc: Complex64| {
            if k.is_zero() {
                entries.push((k, Complex64::new(acc.re, 0.0)));
            } else {
                entries.push((k, acc));
                entries.push((k.neg(), acc.conj()));
            }
        };
        match self.dim {
            1 => {
                for k in 0..=kt {
                    let mut acc = Complex64::ZERO;
                    for (i, &v) in values.iter().enumerate() {
                        acc += v * Complex64::from_polar(1.0, -(k as f64) * (i as f64) * h);
                    }
                    push(ModeIndex::d1(k), acc / self.n as f64);
                }
            }
            _ => {
                for k1 in -kt..=kt {
                    for k2 in -kt..=kt {
                        let k = ModeIndex::d2(k1, k2);
                        if !k.is_lex_nonneg() {
                            continue;
                        }
                        let mut acc = Complex64::ZERO;
                        for i1 in 0..self.n {
                            let p1 = Complex64::from_polar(1.0, -(k1 as f64) * (i1 as f64) * h);
                            for i2 in 0..self.n {
                                let p2 = Complex64::from_polar(1.0, -(k2 as f64) * (i2 as f64) * h);
                                acc += values[i1 * self.n + i2] * p1 * p2;
                            }
                        }
                        push(k, acc / (self.n * self.n) as f64);
                    }
                }
            }
        }
        PeriodicFunction::from_coeffs_unchecked(
            self.dim,
            trunc,
            entries.into_iter().filter(|(_, c)| *c != Complex64::ZERO),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_project_round_trip_d1() {
        let f = PeriodicFunction::cosine(5, ModeIndex::d1(3), 0.7)
            .add(&PeriodicFunction::sine(5, ModeIndex::d1(2), -0.4))
            .unwrap()
            .add(&PeriodicFunction::constant(1, 5, 1.2))
            .unwrap();
        let grid = CollocationGrid::for_trunc(1, 5).unwrap();
        let back = grid.project(&grid.eval(&f), 5).unwrap();
        assert!(back.sub(&f).unwrap().max_abs_coeff() < 1e-13);
    }

    #[test]
    fn eval_project_round_trip_d2() {
        let f = PeriodicFunction::cosine(3, ModeIndex::d2(1, -2), 0.9)
            .add(&PeriodicFunction::sine(3, ModeIndex::d2(2, 1), 0.3))
            .unwrap();
        let grid = CollocationGrid::for_trunc(2, 3).unwrap();
        let back = grid.project(&grid.eval(&f), 3).unwrap();
        assert!(back.sub(&f).unwrap().max_abs_coeff() < 1e-13);
    }

    #[test]
    fn grid_product_matches_convolution() {
        let u = PeriodicFunction::cosine(4, ModeIndex::d1(2), 1.3);
        let v = PeriodicFunction::sine(4, ModeIndex::d1(1), 0.8);
        let grid = CollocationGrid::for_trunc(1, 4).unwrap();
        let pw: Vec<f64> = grid
            .eval(&u)
            .iter()
            .zip(grid.eval(&v))
            .map(|(a, b)| a * b)
            .collect();
        let via_grid = grid.project(&pw, 4).unwrap();
        let via_conv = u.product(&v).unwrap();
        assert!(via_grid.sub(&via_conv).unwrap().max_abs_coeff() < 1e-13);
    }
}
