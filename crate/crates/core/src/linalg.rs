//! Minimal dense linear algebra: row-major matrices, LU with partial
//! pivoting, and a scaling-and-squaring matrix exponential.
//!
//! The systems solved here are small (a few thousand unknowns at most), so
//! dense storage and textbook algorithms are the right tool.

use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct DMat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DMat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DMat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = DMat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn add_to(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] += v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn matmul(&self, other: &DMat) -> DMat {
        assert_eq!(self.cols, other.rows);
        let mut out = DMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.get(i, k);
                if aik == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let out_row = out.row_mut(i);
                for (o, b) in out_row.iter_mut().zip(orow) {
                    *o += aik * b;
                }
            }
        }
        out
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn add(&self, other: &DMat) -> DMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        out
    }

    pub fn sub(&self, other: &DMat) -> DMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        out
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// LU factorization with partial pivoting.
pub struct LuFactors {
    lu: DMat,
    piv: Vec<usize>,
}

impl LuFactors {
    /// Factorizes a square matrix. Fails on exact singularity.
    pub fn new(mut a: DMat) -> Result<Self> {
        let n = a.rows();
        if n != a.cols() {
            return Err(Error::Solver("matrix not square".into()));
        }
        let mut piv = Vec::with_capacity(n);
        for k in 0..n {
            let mut p = k;
            let mut pmax = a.get(k, k).abs();
            for i in k + 1..n {
                let v = a.get(i, k).abs();
                if v > pmax {
                    pmax = v;
                    p = i;
                }
            }
            if pmax == 0.0 {
                return Err(Error::Solver(format!("singular matrix at pivot {k}")));
            }
            piv.push(p);
            if p != k {
                for j in 0..n {
                    let tmp = a.get(k, j);
                    a.set(k, j, a.get(p, j));
                    a.set(p, j, tmp);
                }
            }
            let pivot = a.get(k, k);
            let (head, tail) = a.data.split_at_mut((k + 1) * n);
            let krow = &head[k * n..(k + 1) * n];
            for i in 0..n - k - 1 {
                let irow = &mut tail[i * n..(i + 1) * n];
                let l = irow[k] / pivot;
                irow[k] = l;
                if l != 0.0 {
                    for j in k + 1..n {
                        irow[j] -= l * krow[j];
                    }
                }
            }
        }
        Ok(LuFactors { lu: a, piv })
    }

    /// Solves `Ax = b` for a single right-hand side.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.rows();
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        for k in 0..n {
            x.swap(k, self.piv[k]);
        }
        // forward: L y = Pb (unit diagonal)
        for i in 1..n {
            let mut s = x[i];
            let row = self.lu.row(i);
            for j in 0..i {
                s -= row[j] * x[j];
            }
            x[i] = s;
        }
        // backward: U x = y
        for i in (0..n).rev() {
            let mut s = x[i];
            let row = self.lu.row(i);
            for j in i + 1..n {
                s -= row[j] * x[j];
            }
            x[i] = s / row[i];
        }
        x
    }
}

/// Inverse of a square matrix via LU.
pub fn invert(a: &DMat) -> Result<DMat> {
    let n = a.rows();
    let lu = LuFactors::new(a.clone())?;
    let mut out = DMat::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = lu.solve(&e);
        e[j] = 0.0;
        for i in 0..n {
            out.set(i, j, col[i]);
        }
    }
    Ok(out)
}

/// Euclidean norm.
pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Relative residual `||Ax - b|| / ||b||` (absolute when `b = 0`).
pub fn relative_residual(a: &DMat, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.matvec(x);
    let r: f64 = ax
        .iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt();
    let nb = norm2(b);
    if nb > 0.0 {
        r / nb
    } else {
        r
    }
}

/// Matrix exponential by Pade(13) with scaling and squaring.
pub fn expm(a: &DMat) -> DMat {
    const THETA_13: f64 = 5.371920351148152;
    #[rustfmt::skip]
    const B: [f64; 14] = [
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
        1187353796428800.0, 129060195264000.0, 10559470521600.0,
        670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
        960960.0, 16380.0, 182.0, 1.0,
    ];
    let n = a.rows();
    assert_eq!(n, a.cols());
    let norm = a.norm_inf();
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as u32
    } else {
        0
    };
    let mut m = a.clone();
    if s > 0 {
        m.scale(0.5f64.powi(s as i32));
    }
    let ident = DMat::identity(n);
    let m2 = m.matmul(&m);
    let m4 = m2.matmul(&m2);
    let m6 = m2.matmul(&m4);

    let mut w1 = m6.clone();
    w1.scale(B[13]);
    let mut t = m4.clone();
    t.scale(B[11]);
    w1 = w1.add(&t);
    t = m2.clone();
    t.scale(B[9]);
    w1 = w1.add(&t);
    let mut u = m6.matmul(&w1);
    t = m6.clone();
    t.scale(B[7]);
    u = u.add(&t);
    t = m4.clone();
    t.scale(B[5]);
    u = u.add(&t);
    t = m2.clone();
    t.scale(B[3]);
    u = u.add(&t);
    t = ident.clone();
    t.scale(B[1]);
    u = u.add(&t);
    u = m.matmul(&u);

    let mut w2 = m6.clone();
    w2.scale(B[12]);
    t = m4.clone();
    t.scale(B[10]);
    w2 = w2.add(&t);
    t = m2.clone();
    t.scale(B[8]);
    w2 = w2.add(&t);
    let mut v = m6.matmul(&w2);
    t = m6.clone();
    t.scale(B[6]);
    v = v.add(&t);
    t = m4.clone();
    t.scale(B[4]);
    v = v.add(&t);
    t = m2.clone();
    t.scale(B[2]);
    v = v.add(&t);
    t = ident;
    t.scale(B[0]);
    v = v.add(&t);

    let num = v.add(&u);
    let den = v.sub(&u);
    let lu = LuFactors::new(den).expect("expm denominator singular");
    let mut r = DMat::zeros(n, n);
    let mut col = vec![0.0; n];
    for j in 0..n {
        for i in 0..n {
            col[i] = num.get(i, j);
        }
        let x = lu.solve(&col);
        for i in 0..n {
            r.set(i, j, x[i]);
        }
    }
    for _ in 0..s {
        r = r.matmul(&r);
    }
    r
}
