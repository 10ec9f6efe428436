//! Bit-packed affine linear algebra over GF(2): deterministic Gaussian
//! elimination, least solutions, and nullspace bases.

/// A dense GF(2) row with an affine right-hand side.
#[derive(Clone, PartialEq, Eq, Debug)]
struct Row {
    bits: Vec<u64>,
    rhs: bool,
}

impl Row {
    fn zero(words: usize) -> Row {
        Row { bits: vec![0; words], rhs: false }
    }

    fn get(&self, i: usize) -> bool {
        (self.bits[i / 64] >> (i % 64)) & 1 == 1
    }

    fn xor_in(&mut self, other: &Row) {
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a ^= b;
        }
        self.rhs ^= other.rhs;
    }

    fn is_zero(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }
}

/// An affine system `A x = b` over GF(2) with a fixed variable count.
#[derive(Clone, Debug)]
pub struct Gf2System {
    nvars: usize,
    rows: Vec<Row>,
}

impl Gf2System {
    pub fn new(nvars: usize) -> Gf2System {
        Gf2System { nvars, rows: Vec::new() }
    }

    fn words(&self) -> usize {
        self.nvars.div_ceil(64)
    }

    /// Adds the constraint `sum of vars = rhs`. Variables listed an even
    /// number of times cancel.
    pub fn add_row(&mut self, vars: &[usize], rhs: bool) {
        let mut row = Row::zero(self.words().max(1));
        for &v in vars {
            assert!(v < self.nvars, "variable out of range");
            row.bits[v / 64] ^= 1 << (v % 64);
        }
        row.rhs = rhs;
        self.rows.push(row);
    }

    /// `a = b`.
    pub fn add_eq(&mut self, a: usize, b: usize) {
        self.add_row(&[a, b], false);
    }

    /// `v = value`.
    pub fn pin(&mut self, v: usize, value: bool) {
        self.add_row(&[v], value);
    }

    /// Reduced row echelon form with pivots chosen in ascending variable
    /// order. Returns pivot columns; `None` if the system is inconsistent.
    fn rref(&self) -> Option<(Vec<Row>, Vec<usize>)> {
        let mut rows = self.rows.clone();
        let mut pivots = Vec::new();
        let mut next = 0usize;
        for col in 0..self.nvars {
            let Some(r) = (next..rows.len()).find(|&r| rows[r].get(col)) else {
                continue;
            };
            rows.swap(next, r);
            let pivot_row = rows[next].clone();
            for (i, row) in rows.iter_mut().enumerate() {
                if i != next && row.get(col) {
                    row.xor_in(&pivot_row);
                }
            }
            pivots.push(col);
            next += 1;
        }
        if rows[next..].iter().any(|r| r.rhs && r.is_zero()) {
            return None;
        }
        rows.truncate(next);
        Some((rows, pivots))
    }

    /// The least solution (free variables zero), or `None` if inconsistent.
    pub fn solve(&self) -> Option<Vec<bool>> {
        let (rows, pivots) = self.rref()?;
        let mut x = vec![false; self.nvars];
        for (row, &p) in rows.iter().zip(&pivots) {
            x[p] = row.rhs;
        }
        Some(x)
    }

    /// Basis of the homogeneous solution space, one vector per free
    /// variable, in ascending free-variable order.
    pub fn nullspace(&self) -> Vec<Vec<bool>> {
        let (rows, pivots) = self
            .homogeneous()
            .rref()
            .expect("homogeneous system is consistent");
        let piv_set: std::collections::BTreeSet<usize> = pivots.iter().copied().collect();
        let mut basis = Vec::new();
        for f in 0..self.nvars {
            if piv_set.contains(&f) {
                continue;
            }
            let mut v = vec![false; self.nvars];
            v[f] = true;
            for (row, &p) in rows.iter().zip(&pivots) {
                if row.get(f) {
                    v[p] = true;
                }
            }
            basis.push(v);
        }
        basis
    }

    fn homogeneous(&self) -> Gf2System {
        let mut s = self.clone();
        for r in &mut s.rows {
            r.rhs = false;
        }
        s
    }

    /// Checks `x` against every row.
    #[cfg(test)]
    pub fn satisfied_by(&self, x: &[bool]) -> bool {
        self.rows.iter().all(|r| {
            let mut acc = false;
            for (i, &xi) in x.iter().enumerate() {
                if xi && r.get(i) {
                    acc = !acc;
                }
            }
            acc == r.rhs
        })
    }
}
