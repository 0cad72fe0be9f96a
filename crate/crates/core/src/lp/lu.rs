//! Sparse LU factorization with Markowitz pivoting and product-form updates.

use super::factor::{BasisFactor, Singular, SINGULAR_TOL};

/// Relative threshold for accepting a pivot against its column maximum.
const STABILITY: f64 = 0.1;
/// Columns examined per Markowitz search once a candidate exists.
const SEARCH_COLS: usize = 4;
const MAX_UPDATES: usize = 64;

pub(crate) struct SparseLu {
    m: usize,
    piv_row: Vec<usize>,
    piv_col: Vec<usize>,
    piv_val: Vec<f64>,
    /// Off-diagonal U entries of pivot `k`: `u_idx/u_val[u_start[k]..u_start[k+1]]`.
    u_start: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<f64>,
    /// Elimination etas in pivot order.
    l_row: Vec<usize>,
    l_start: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    /// Product-form update etas.
    e_pos: Vec<usize>,
    e_piv: Vec<f64>,
    e_start: Vec<usize>,
    e_idx: Vec<usize>,
    e_val: Vec<f64>,
    /// Spare work vector swapped with the caller's.
    scratch: std::cell::Cell<Vec<f64>>,
}

struct Active {
    rows: Vec<Vec<(usize, f64)>>,
    colpat: Vec<Vec<usize>>,
    row_cnt: Vec<usize>,
    col_cnt: Vec<usize>,
    row_done: Vec<bool>,
    col_done: Vec<bool>,
    col_bucket: Vec<Vec<usize>>,
    row_single: Vec<usize>,
}

impl Active {
    fn value(&self, i: usize, j: usize) -> f64 {
        self.rows[i].iter().find(|e| e.0 == j).map_or(0.0, |e| e.1)
    }

    fn live_rows_of(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        self.colpat[j].iter().copied().filter(move |&i| !self.row_done[i])
    }

    fn col_max(&self, j: usize) -> f64 {
        self.live_rows_of(j).map(|i| self.value(i, j).abs()).fold(0.0, f64::max)
    }

    fn bump_col(&mut self, j: usize) {
        let c = self.col_cnt[j];
        if c < self.col_bucket.len() {
            self.col_bucket[c].push(j);
        }
    }
}

impl SparseLu {
    fn empty(m: usize) -> Self {
        Self {
            m,
            piv_row: Vec::with_capacity(m),
            piv_col: Vec::with_capacity(m),
            piv_val: Vec::with_capacity(m),
            u_start: vec![0],
            u_idx: Vec::new(),
            u_val: Vec::new(),
            l_row: Vec::new(),
            l_start: vec![0],
            l_idx: Vec::new(),
            l_val: Vec::new(),
            e_pos: Vec::new(),
            e_piv: Vec::new(),
            e_start: vec![0],
            e_idx: Vec::new(),
            e_val: Vec::new(),
            scratch: std::cell::Cell::new(Vec::new()),
        }
    }

    /// Chooses the next pivot, or `None` when no acceptable entry remains.
    fn choose_pivot(a: &mut Active) -> Option<(usize, usize)> {
        // column singletons
        while let Some(&j) = a.col_bucket[1].last() {
            if a.col_done[j] || a.col_cnt[j] != 1 {
                a.col_bucket[1].pop();
                continue;
            }
            let i = a.live_rows_of(j).next().expect("count says one live row");
            if a.value(i, j).abs() > SINGULAR_TOL {
                a.col_bucket[1].pop();
                return Some((i, j));
            }
            a.col_bucket[1].pop();
        }
        // row singletons
        while let Some(i) = a.row_single.pop() {
            if a.row_done[i] || a.row_cnt[i] != 1 {
                continue;
            }
            let (j, v) = a.rows[i]
                .iter()
                .copied()
                .find(|&(j, _)| !a.col_done[j])
                .expect("count says one live column");
            if v.abs() > SINGULAR_TOL && v.abs() >= STABILITY * a.col_max(j) {
                return Some((i, j));
            }
        }
        // Markowitz search over columns by increasing count
        let mut best: Option<(usize, usize, usize, f64)> = None;
        let mut examined = 0;
        for cnt in 2..a.col_bucket.len() {
            let mut idx = 0;
            while idx < a.col_bucket[cnt].len() {
                let j = a.col_bucket[cnt][idx];
                if a.col_done[j] || a.col_cnt[j] != cnt {
                    a.col_bucket[cnt].swap_remove(idx);
                    continue;
                }
                idx += 1;
                let cmax = a.col_max(j);
                if cmax <= SINGULAR_TOL {
                    continue;
                }
                examined += 1;
                for i in a.live_rows_of(j) {
                    let v = a.value(i, j);
                    if v.abs() < STABILITY * cmax || v.abs() <= SINGULAR_TOL {
                        continue;
                    }
                    let cost = (a.row_cnt[i] - 1) * (cnt - 1);
                    let better = match best {
                        None => true,
                        Some((_, _, bc, bv)) => cost < bc || (cost == bc && v.abs() > bv),
                    };
                    if better {
                        best = Some((i, j, cost, v.abs()));
                    }
                }
                if examined >= SEARCH_COLS && best.is_some() {
                    return best.map(|(i, j, _, _)| (i, j));
                }
            }
            if best.is_some() {
                break;
            }
        }
        best.map(|(i, j, _, _)| (i, j))
    }
}

impl BasisFactor for SparseLu {
    fn factor(m: usize, cols: &[Vec<(usize, f64)>]) -> Result<Self, Singular> {
        let mut lu = Self::empty(m);
        let mut row_len = vec![0usize; m];
        for col in cols {
            for &(i, _) in col {
                row_len[i] += 1;
            }
        }
        let mut a = Active {
            rows: row_len.iter().map(|&c| Vec::with_capacity(c + 2)).collect(),
            colpat: cols.iter().map(|c| Vec::with_capacity(c.len() + 2)).collect(),
            row_cnt: vec![0; m],
            col_cnt: vec![0; m],
            row_done: vec![false; m],
            col_done: vec![false; m],
            col_bucket: vec![Vec::new(); m + 2],
            row_single: Vec::new(),
        };
        for (j, col) in cols.iter().enumerate() {
            for &(i, v) in col {
                if v == 0.0 {
                    continue;
                }
                if let Some(e) = a.rows[i].iter_mut().find(|e| e.0 == j) {
                    e.1 += v;
                } else {
                    a.rows[i].push((j, v));
                    a.colpat[j].push(i);
                }
            }
        }
        for i in 0..m {
            a.row_cnt[i] = a.rows[i].len();
            if a.row_cnt[i] == 1 {
                a.row_single.push(i);
            }
        }
        for j in (0..m).rev() {
            a.col_cnt[j] = a.colpat[j].len();
            a.bump_col(j);
        }
        let mut dense_row = vec![0.0; m];
        let mut in_row = vec![false; m];
        let mut row_r: Vec<(usize, f64)> = Vec::new();
        let mut targets: Vec<usize> = Vec::new();
        let mut etas: Vec<(usize, f64)> = Vec::new();
        for _ in 0..m {
            let Some((r, c)) = Self::choose_pivot(&mut a) else {
                break;
            };
            let piv = a.value(r, c);
            // U row
            row_r.clear();
            row_r.extend(a.rows[r].iter().copied().filter(|&(j, _)| !a.col_done[j] && j != c));
            lu.piv_row.push(r);
            lu.piv_col.push(c);
            lu.piv_val.push(piv);
            for &(j, v) in &row_r {
                lu.u_idx.push(j);
                lu.u_val.push(v);
            }
            lu.u_start.push(lu.u_idx.len());
            a.row_done[r] = true;
            a.col_done[c] = true;
            // eliminate column c from the other live rows
            targets.clear();
            targets.extend(a.live_rows_of(c));
            etas.clear();
            for &i in &targets {
                let aic = a.value(i, c);
                a.rows[i].retain(|e| e.0 != c);
                a.row_cnt[i] -= 1;
                if aic == 0.0 {
                    if a.row_cnt[i] == 1 {
                        a.row_single.push(i);
                    }
                    continue;
                }
                let l = aic / piv;
                etas.push((i, l));
                if !row_r.is_empty() {
                    for &(j, v) in &a.rows[i] {
                        dense_row[j] = v;
                        in_row[j] = true;
                    }
                    for &(j, v) in &row_r {
                        if !in_row[j] {
                            in_row[j] = true;
                            dense_row[j] = 0.0;
                            a.rows[i].push((j, 0.0));
                            a.colpat[j].push(i);
                            a.col_cnt[j] += 1;
                            a.row_cnt[i] += 1;
                            a.bump_col(j);
                        }
                        dense_row[j] -= l * v;
                    }
                    for e in a.rows[i].iter_mut() {
                        e.1 = dense_row[e.0];
                        in_row[e.0] = false;
                    }
                }
                if a.row_cnt[i] == 1 {
                    a.row_single.push(i);
                }
            }
            if !etas.is_empty() {
                lu.l_row.push(r);
                for &(i, l) in &etas {
                    lu.l_idx.push(i);
                    lu.l_val.push(l);
                }
                lu.l_start.push(lu.l_idx.len());
            }
            // row r leaves the active matrix
            for &(j, _) in &row_r {
                a.col_cnt[j] -= 1;
                a.bump_col(j);
            }
        }
        if lu.piv_row.len() < m {
            let positions = (0..m).filter(|&j| !a.col_done[j]).collect();
            let rows = (0..m).filter(|&i| !a.row_done[i]).collect();
            return Err(Singular { positions, rows });
        }
        Ok(lu)
    }

    fn ftran(&self, rhs: &mut Vec<f64>) {
        let v = rhs;
        for (e, &r) in self.l_row.iter().enumerate() {
            let xr = v[r];
            if xr == 0.0 {
                continue;
            }
            for t in self.l_start[e]..self.l_start[e + 1] {
                v[self.l_idx[t]] -= self.l_val[t] * xr;
            }
        }
        let mut w = self.scratch.take();
        w.clear();
        w.resize(self.m, 0.0);
        for k in (0..self.piv_row.len()).rev() {
            let mut s = v[self.piv_row[k]];
            for t in self.u_start[k]..self.u_start[k + 1] {
                s -= self.u_val[t] * w[self.u_idx[t]];
            }
            w[self.piv_col[k]] = s / self.piv_val[k];
        }
        for (e, &p) in self.e_pos.iter().enumerate() {
            let wp = w[p] / self.e_piv[e];
            w[p] = wp;
            if wp == 0.0 {
                continue;
            }
            for t in self.e_start[e]..self.e_start[e + 1] {
                w[self.e_idx[t]] -= self.e_val[t] * wp;
            }
        }
        self.scratch.set(std::mem::replace(v, w));
    }

    fn btran(&self, rhs: &mut Vec<f64>) {
        let c = rhs;
        for e in (0..self.e_pos.len()).rev() {
            let p = self.e_pos[e];
            let mut s = c[p];
            for t in self.e_start[e]..self.e_start[e + 1] {
                s -= self.e_val[t] * c[self.e_idx[t]];
            }
            c[p] = s / self.e_piv[e];
        }
        let mut t = self.scratch.take();
        t.clear();
        t.resize(self.m, 0.0);
        for k in 0..self.piv_row.len() {
            let tk = c[self.piv_col[k]] / self.piv_val[k];
            t[self.piv_row[k]] = tk;
            if tk == 0.0 {
                continue;
            }
            for q in self.u_start[k]..self.u_start[k + 1] {
                c[self.u_idx[q]] -= self.u_val[q] * tk;
            }
        }
        for e in (0..self.l_row.len()).rev() {
            let r = self.l_row[e];
            let mut s = t[r];
            for q in self.l_start[e]..self.l_start[e + 1] {
                s -= self.l_val[q] * t[self.l_idx[q]];
            }
            t[r] = s;
        }
        self.scratch.set(std::mem::replace(c, t));
    }

    fn update(&mut self, p: usize, w: &[f64]) {
        self.e_pos.push(p);
        self.e_piv.push(w[p]);
        for (i, &v) in w.iter().enumerate() {
            if i != p && v.abs() > 1e-14 {
                self.e_idx.push(i);
                self.e_val.push(v);
            }
        }
        self.e_start.push(self.e_idx.len());
    }

    fn updates_since_factor(&self) -> usize {
        self.e_pos.len()
    }

    fn wants_refactor(&self) -> bool {
        self.e_pos.len() >= MAX_UPDATES || self.e_idx.len() > 4 * (self.u_idx.len() + self.l_idx.len() + self.m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::dense::DenseInverse;

    fn cols_from_dense(a: &[Vec<f64>]) -> Vec<Vec<(usize, f64)>> {
        let m = a.len();
        (0..m)
            .map(|j| (0..m).filter(|&i| a[i][j] != 0.0).map(|i| (i, a[i][j])).collect())
            .collect()
    }

    fn matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        a.iter().map(|r| r.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
    }

    fn check_solves<F: BasisFactor>(a: &[Vec<f64>]) {
        let m = a.len();
        let f = F::factor(m, &cols_from_dense(a)).expect("nonsingular");
        let b: Vec<f64> = (0..m).map(|i| (i as f64) - 1.5).collect();
        let mut w = b.clone();
        f.ftran(&mut w);
        let back = matvec(a, &w);
        for i in 0..m {
            assert!((back[i] - b[i]).abs() < 1e-9, "ftran residual");
        }
        let mut pi = b.clone();
        f.btran(&mut pi);
        // Bᵀ π = b
        for j in 0..m {
            let s: f64 = (0..m).map(|i| a[i][j] * pi[i]).sum();
            assert!((s - b[j]).abs() < 1e-9, "btran residual");
        }
    }

    fn sample() -> Vec<Vec<f64>> {
        vec![
            vec![2.0, 0.0, 1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, -1.0, 0.0],
            vec![1.0, 0.0, 3.0, 0.0, 1.0],
            vec![0.0, 4.0, 0.0, 1.0, 0.5],
            vec![1.0, 1.0, 0.0, 0.0, 2.0],
        ]
    }

    #[test]
    fn sparse_and_dense_solve() {
        check_solves::<SparseLu>(&sample());
        check_solves::<DenseInverse>(&sample());
    }

    #[test]
    fn permutation_matrix() {
        let a = vec![
            vec![0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, -1.0, 0.0],
        ];
        check_solves::<SparseLu>(&a);
    }

    #[test]
    fn update_matches_refactor() {
        let a = sample();
        let m = a.len();
        let mut f = SparseLu::factor(m, &cols_from_dense(&a)).unwrap();
        let newcol = vec![1.0, 2.0, 0.0, -1.0, 1.0];
        let mut w = newcol.clone();
        f.ftran(&mut w);
        f.update(2, &w);
        let mut a2 = a.clone();
        for i in 0..m {
            a2[i][2] = newcol[i];
        }
        let b = vec![1.0, 0.0, -2.0, 3.0, 0.5];
        let mut x = b.clone();
        f.ftran(&mut x);
        let back = matvec(&a2, &x);
        for i in 0..m {
            assert!((back[i] - b[i]).abs() < 1e-9);
        }
        let mut pi = b.clone();
        f.btran(&mut pi);
        for j in 0..m {
            let s: f64 = (0..m).map(|i| a2[i][j] * pi[i]).sum();
            assert!((s - b[j]).abs() < 1e-9);
        }
    }

    #[test]
    fn singular_reports_positions() {
        let a = vec![
            vec![1.0, 2.0, 0.0],
            vec![2.0, 4.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        let err = SparseLu::factor(3, &cols_from_dense(&a)).err().unwrap();
        assert_eq!(err.positions.len(), 1);
        assert_eq!(err.rows.len(), 1);
        let err = DenseInverse::factor(3, &cols_from_dense(&a)).err().unwrap();
        assert_eq!(err.positions.len(), 1);
    }
}
