//! Explicit dense basis inverse, for small problems.

use super::factor::{BasisFactor, Singular, SINGULAR_TOL};

pub(crate) struct DenseInverse {
    m: usize,
    /// Row `p` of B⁻¹ stored contiguously: `binv[p * m + i]`.
    binv: Vec<f64>,
    updates: usize,
    scratch: std::cell::Cell<Vec<f64>>,
}

impl BasisFactor for DenseInverse {
    fn factor(m: usize, cols: &[Vec<(usize, f64)>]) -> Result<Self, Singular> {
        let mut b = vec![0.0; m * m];
        for (p, col) in cols.iter().enumerate() {
            for &(i, v) in col {
                b[i * m + p] += v;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        let mut row_used = vec![false; m];
        let mut row_of_pos = vec![usize::MAX; m];
        let mut bad_positions = Vec::new();
        for p in 0..m {
            let mut best = usize::MAX;
            let mut best_abs = SINGULAR_TOL;
            for r in 0..m {
                if !row_used[r] && b[r * m + p].abs() > best_abs {
                    best_abs = b[r * m + p].abs();
                    best = r;
                }
            }
            if best == usize::MAX {
                bad_positions.push(p);
                continue;
            }
            let r = best;
            row_used[r] = true;
            row_of_pos[p] = r;
            let piv = b[r * m + p];
            for j in 0..m {
                b[r * m + j] /= piv;
                inv[r * m + j] /= piv;
            }
            // bases are mostly slack columns, so the pivot rows stay sparse
            let b_nz: Vec<usize> = (0..m).filter(|&j| b[r * m + j] != 0.0).collect();
            let inv_nz: Vec<usize> = (0..m).filter(|&j| inv[r * m + j] != 0.0).collect();
            for i in 0..m {
                if i == r {
                    continue;
                }
                let f = b[i * m + p];
                if f == 0.0 {
                    continue;
                }
                for &j in &b_nz {
                    b[i * m + j] -= f * b[r * m + j];
                }
                for &j in &inv_nz {
                    inv[i * m + j] -= f * inv[r * m + j];
                }
            }
        }
        if !bad_positions.is_empty() {
            let rows = (0..m).filter(|&r| !row_used[r]).collect();
            return Err(Singular { positions: bad_positions, rows });
        }
        let mut binv = vec![0.0; m * m];
        for p in 0..m {
            let r = row_of_pos[p];
            binv[p * m..(p + 1) * m].copy_from_slice(&inv[r * m..(r + 1) * m]);
        }
        Ok(Self { m, binv, updates: 0, scratch: std::cell::Cell::new(Vec::new()) })
    }

    fn ftran(&self, rhs: &mut Vec<f64>) {
        let m = self.m;
        let mut out = self.scratch.take();
        out.clear();
        out.extend((0..m).map(|p| {
            let row = &self.binv[p * m..(p + 1) * m];
            row.iter().zip(rhs.iter()).map(|(a, b)| a * b).sum::<f64>()
        }));
        self.scratch.set(std::mem::replace(rhs, out));
    }

    fn btran(&self, rhs: &mut Vec<f64>) {
        let m = self.m;
        let mut out = self.scratch.take();
        out.clear();
        out.resize(m, 0.0);
        for p in 0..m {
            let c = rhs[p];
            if c == 0.0 {
                continue;
            }
            let row = &self.binv[p * m..(p + 1) * m];
            for (o, a) in out.iter_mut().zip(row) {
                *o += c * a;
            }
        }
        self.scratch.set(std::mem::replace(rhs, out));
    }

    fn update(&mut self, p: usize, w: &[f64]) {
        let m = self.m;
        let piv = w[p];
        for j in 0..m {
            self.binv[p * m + j] /= piv;
        }
        for q in 0..m {
            if q == p || w[q] == 0.0 {
                continue;
            }
            let f = w[q];
            for j in 0..m {
                self.binv[q * m + j] -= f * self.binv[p * m + j];
            }
        }
        self.updates += 1;
    }

    fn updates_since_factor(&self) -> usize {
        self.updates
    }

    fn wants_refactor(&self) -> bool {
        self.updates >= 100
    }
}
