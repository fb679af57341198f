//! Imaginary-octonion structure constants on the Fano plane.
//!
//! Units `e_1..e_7` multiply as `e_i e_j = -δ_ij + Σ_k c_ijk e_k`. The
//! oriented lines below fix `e_1e_2 = e_3`, `e_1e_4 = e_5`, `e_2e_4 = e_6`,
//! `e_3e_4 = e_7` (the Cayley–Dickson doubling of the quaternions by `e_4`)
//! and every cyclic shift of each triple.

/// Oriented Fano lines, 1-based: `e_a e_b = e_c` for each `(a, b, c)`.
pub const FANO_LINES: [(usize, usize, usize); 7] = [
    (1, 2, 3),
    (1, 4, 5),
    (2, 4, 6),
    (3, 4, 7),
    (1, 7, 6),
    (2, 5, 7),
    (3, 6, 5),
];

#[derive(Clone, Debug)]
pub struct OctonionTable {
    // c[i][j][k], 0-based over the 7 imaginary units
    c: [[[f64; 7]; 7]; 7],
}

impl Default for OctonionTable {
    fn default() -> Self {
        Self::fano()
    }
}

impl OctonionTable {
    pub fn fano() -> Self {
        let mut c = [[[0.0; 7]; 7]; 7];
        for &(a, b, d) in &FANO_LINES {
            let (a, b, d) = (a - 1, b - 1, d - 1);
            for (i, j, k) in [(a, b, d), (b, d, a), (d, a, b)] {
                c[i][j][k] = 1.0;
                c[j][i][k] = -1.0;
            }
        }
        OctonionTable { c }
    }

    /// `c_ijk` with 0-based indices.
    pub fn constant(&self, i: usize, j: usize, k: usize) -> f64 {
        self.c[i][j][k]
    }

    /// Product of imaginary units `e_i e_j` as (real part, imaginary part).
    pub fn unit_product(&self, i: usize, j: usize) -> (f64, [f64; 7]) {
        (if i == j { -1.0 } else { 0.0 }, self.c[i][j])
    }

    /// Full octonion product; index 0 is the real part.
    pub fn mul(&self, x: &[f64; 8], y: &[f64; 8]) -> [f64; 8] {
        let mut out = [0.0; 8];
        out[0] = x[0] * y[0];
        for i in 1..8 {
            out[i] += x[0] * y[i] + x[i] * y[0];
            out[0] -= x[i] * y[i];
            for j in 1..8 {
                if x[i] == 0.0 || y[j] == 0.0 {
                    continue;
                }
                for k in 1..8 {
                    out[k] += x[i] * y[j] * self.c[i - 1][j - 1][k - 1];
                }
            }
        }
        out
    }

    /// Product of two purely imaginary octonions given as 7-vectors.
    pub fn mul_imaginary(&self, x: &[f64; 7], y: &[f64; 7]) -> (f64, [f64; 7]) {
        let mut xa = [0.0; 8];
        let mut ya = [0.0; 8];
        xa[1..].copy_from_slice(x);
        ya[1..].copy_from_slice(y);
        let p = self.mul(&xa, &ya);
        let mut im = [0.0; 7];
        im.copy_from_slice(&p[1..]);
        (p[0], im)
    }
}
