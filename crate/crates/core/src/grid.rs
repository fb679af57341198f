//! Uniform periodic grids on the torus `[0, 2π)^n`.

use rayon::prelude::*;
use std::f64::consts::TAU;

use crate::error::Result;

#[derive(Clone, Debug, PartialEq)]
pub struct TorusGrid {
    pub dim: usize,
    pub resolution: usize,
}

impl TorusGrid {
    pub fn new(dim: usize, resolution: usize) -> Self {
        TorusGrid { dim, resolution }
    }

    pub fn len(&self) -> usize {
        self.resolution.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> f64 {
        TAU / self.resolution as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Axis stride of the row-major node layout (last axis fastest).
    pub fn stride(&self, axis: usize) -> usize {
        self.resolution.pow((self.dim - 1 - axis) as u32)
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let m = self.resolution;
        let mut out = vec![0; self.dim];
        for a in (0..self.dim).rev() {
            out[a] = idx % m;
            idx /= m;
        }
        out
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        let h = self.spacing();
        self.multi_index(idx).into_iter().map(|k| k as f64 * h).collect()
    }

    /// Evaluates `f` at every node, sampling only the axes flagged in `mask`
    /// (the remaining coordinates are set to 0) and broadcasting. Output is
    /// in node order regardless of thread count.
    pub fn tabulate<T, F>(&self, mask: &[bool], f: F) -> Result<Vec<T>>
    where
        T: Clone + Send + Sync,
        F: Fn(&[f64]) -> Result<T> + Sync,
    {
        let axes: Vec<usize> = (0..self.dim).filter(|&a| mask[a]).collect();
        let sub = self.resolution.pow(axes.len() as u32);
        let h = self.spacing();
        let values: Vec<T> = (0..sub)
            .into_par_iter()
            .map(|s| {
                let mut x = vec![0.0; self.dim];
                let mut r = s;
                for &a in axes.iter().rev() {
                    x[a] = (r % self.resolution) as f64 * h;
                    r /= self.resolution;
                }
                f(&x)
            })
            .collect::<Result<Vec<T>>>()?;
        Ok((0..self.len())
            .map(|idx| {
                let mi = self.multi_index(idx);
                let s = axes.iter().fold(0, |acc, &a| acc * self.resolution + mi[a]);
                values[s].clone()
            })
            .collect())
    }
}

/// Pairwise (tree) summation: deterministic and accurate.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 32 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip() {
        let g = TorusGrid::new(3, 4);
        for idx in 0..g.len() {
            let mi = g.multi_index(idx);
            let back = mi.iter().fold(0, |acc, k| acc * 4 + k);
            assert_eq!(back, idx);
        }
        assert_eq!(g.stride(0), 16);
    }

    #[test]
    fn tabulate_broadcasts() {
        let g = TorusGrid::new(2, 4);
        let full = g.tabulate(&[true, true], |x| Ok(x[0].cos())).unwrap();
        let part = g.tabulate(&[true, false], |x| Ok(x[0].cos())).unwrap();
        assert_eq!(full, part);
    }

    #[test]
    fn pairwise_matches_naive() {
        let v: Vec<f64> = (0..1000).map(|k| (k as f64).sin()).collect();
        assert!((pairwise_sum(&v) - v.iter().sum::<f64>()).abs() < 1e-12);
    }
}
