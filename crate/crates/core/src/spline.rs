//! B-spline / NURBS basis evaluation on tensor-product spaces over an
//! axis-aligned box, with mixed partial derivatives up to order 3 per
//! direction and Greville point generation.

use crate::error::{Error, Result};

/// Clamped (open) knot vector with its polynomial degree.
///
/// End knots repeat exactly `degree + 1` times, interior multiplicities never
/// exceed `degree`, so the basis is interpolatory at the domain endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    degree: usize,
    knots: Vec<f64>,
}

impl KnotVector {
    pub fn new(degree: usize, knots: Vec<f64>) -> Result<Self> {
        if degree < 1 {
            return Err(Error::Spline("degree must be at least 1".into()));
        }
        if knots.len() < 2 * degree + 2 {
            return Err(Error::Spline(format!(
                "need at least {} knots for degree {}, got {}",
                2 * degree + 2,
                degree,
                knots.len()
            )));
        }
        if knots.windows(2).any(|w| !(w[1] >= w[0])) {
            return Err(Error::Spline("knots must be non-decreasing".into()));
        }
        let n = knots.len();
        let p = degree;
        if knots[0] != knots[p] || knots[p + 1] <= knots[p] {
            return Err(Error::Spline(
                "first knot must repeat exactly degree+1 times".into(),
            ));
        }
        if knots[n - 1] != knots[n - 1 - p] || knots[n - 2 - p] >= knots[n - 1 - p] {
            return Err(Error::Spline(
                "last knot must repeat exactly degree+1 times".into(),
            ));
        }
        let kv = KnotVector { degree, knots };
        if kv.max_interior_multiplicity() > degree {
            return Err(Error::Spline(format!(
                "interior knot multiplicity exceeds degree {degree}"
            )));
        }
        Ok(kv)
    }

    /// Open knot vector on [0, 1] with `n_spans` uniform spans.
    pub fn open_uniform(degree: usize, n_spans: usize) -> Self {
        assert!(degree >= 1 && n_spans >= 1);
        let mut knots = vec![0.0; degree + 1];
        for i in 1..n_spans {
            knots.push(i as f64 / n_spans as f64);
        }
        knots.extend(std::iter::repeat(1.0).take(degree + 1));
        KnotVector { degree, knots }
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.degree
    }

    #[inline]
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Number of basis functions `m = len(knots) - degree - 1`.
    #[inline]
    pub fn num_basis(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[self.degree], self.knots[self.num_basis()])
    }

    /// Distinct non-empty spans of the domain.
    pub fn spans(&self) -> Vec<(f64, f64)> {
        let m = self.num_basis();
        let mut out = Vec::new();
        for i in self.degree..m {
            if self.knots[i + 1] > self.knots[i] {
                out.push((self.knots[i], self.knots[i + 1]));
            }
        }
        out
    }

    fn max_interior_multiplicity(&self) -> usize {
        let m = self.num_basis();
        let interior = &self.knots[self.degree + 1..m];
        let mut best = 0;
        let mut i = 0;
        while i < interior.len() {
            let mut j = i + 1;
            while j < interior.len() && interior[j] == interior[i] {
                j += 1;
            }
            best = best.max(j - i);
            i = j;
        }
        best
    }

    /// Global continuity order of the basis: `degree - max interior
    /// multiplicity`, capped at `degree` when no interior knots exist.
    pub fn continuity(&self) -> usize {
        self.degree - self.max_interior_multiplicity()
    }

    /// Greville abscissae: point `i` is the mean of knots `i+1 ..= i+degree`.
    pub fn greville(&self) -> Vec<f64> {
        let p = self.degree;
        (0..self.num_basis())
            .map(|i| self.knots[i + 1..=i + p].iter().sum::<f64>() / p as f64)
            .collect()
    }

    /// Index of the span containing `x`, clamped to valid spans.
    pub fn find_span(&self, x: f64) -> usize {
        let m = self.num_basis();
        let p = self.degree;
        if x >= self.knots[m] {
            // rightmost non-empty span
            let mut i = m - 1;
            while self.knots[i + 1] <= self.knots[i] {
                i -= 1;
            }
            return i;
        }
        if x <= self.knots[p] {
            return p;
        }
        let mut lo = p;
        let mut hi = m;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.knots[mid] <= x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Nonzero basis values and derivatives at `x` (Cox-de Boor recursion
    /// with the derivative triangle). Rows for orders above the degree are
    /// zero-filled.
    pub fn eval(&self, x: f64, max_der: usize) -> Result<BasisValues> {
        let (lo, hi) = self.domain();
        if !(x >= lo - 1e-12 && x <= hi + 1e-12) {
            return Err(Error::Domain(format!(
                "parametric coordinate {x} outside [{lo}, {hi}]"
            )));
        }
        let x = x.clamp(lo, hi);
        let p = self.degree;
        let t = &self.knots;
        let span = self.find_span(x);
        let kmax = max_der.min(p);

        let mut ndu = vec![vec![0.0; p + 1]; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        ndu[0][0] = 1.0;
        for j in 1..=p {
            left[j] = x - t[span + 1 - j];
            right[j] = t[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }

        let mut ders = vec![vec![0.0; p + 1]; max_der + 1];
        for j in 0..=p {
            ders[0][j] = ndu[j][p];
        }
        let mut a = vec![vec![0.0; p + 1]; 2];
        for r in 0..=p {
            let mut s1 = 0usize;
            let mut s2 = 1usize;
            a[0].iter_mut().for_each(|v| *v = 0.0);
            a[1].iter_mut().for_each(|v| *v = 0.0);
            a[0][0] = 1.0;
            for k in 1..=kmax {
                let mut d = 0.0;
                let rk = r as isize - k as isize;
                let pk = p - k;
                if r >= k {
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                    d = a[s2][0] * ndu[rk as usize][pk];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if (r as isize) - 1 <= pk as isize { k - 1 } else { p - r };
                for j in j1..=j2 {
                    a[s2][j] =
                        (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][(rk + j as isize) as usize];
                    d += a[s2][j] * ndu[(rk + j as isize) as usize][pk];
                }
                if r <= pk {
                    a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                    d += a[s2][k] * ndu[r][pk];
                }
                ders[k][r] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut factor = p as f64;
        for k in 1..=kmax {
            for v in ders[k].iter_mut() {
                *v *= factor;
            }
            factor *= (p - k) as f64;
        }

        Ok(BasisValues {
            first: span - p,
            ders,
        })
    }
}

/// Nonzero univariate basis band at one evaluation point.
///
/// `ders[k][j]` is the k-th derivative of basis function `first + j`.
#[derive(Debug, Clone)]
pub struct BasisValues {
    pub first: usize,
    pub ders: Vec<Vec<f64>>,
}

/// Axis-aligned box `origin + [0, lengths]` in physical coordinates (mm).
#[derive(Debug, Clone, PartialEq)]
pub struct BoxGeometry {
    pub origin: [f64; 3],
    pub lengths: [f64; 3],
}

impl BoxGeometry {
    pub fn new(origin: [f64; 3], lengths: [f64; 3]) -> Result<Self> {
        if lengths.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::Domain("box lengths must be positive".into()));
        }
        Ok(BoxGeometry { origin, lengths })
    }

    pub fn param_of(&self, x: [f64; 3]) -> Result<[f64; 3]> {
        let mut xi = [0.0; 3];
        for d in 0..3 {
            let v = (x[d] - self.origin[d]) / self.lengths[d];
            if !(-1e-10..=1.0 + 1e-10).contains(&v) {
                return Err(Error::Domain(format!(
                    "point {x:?} outside the box in direction {d}"
                )));
            }
            xi[d] = v.clamp(0.0, 1.0);
        }
        Ok(xi)
    }

    pub fn phys_of(&self, xi: [f64; 3]) -> [f64; 3] {
        [
            self.origin[0] + self.lengths[0] * xi[0],
            self.origin[1] + self.lengths[1] * xi[1],
            self.origin[2] + self.lengths[2] * xi[2],
        ]
    }
}

/// Which mixed partial derivatives to evaluate: every multi-index with
/// per-direction order at most `per_dir` and total order at most `total`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DerivRequest {
    pub per_dir: [usize; 3],
    pub total: usize,
}

impl DerivRequest {
    pub fn values() -> Self {
        DerivRequest { per_dir: [0; 3], total: 0 }
    }

    pub fn gradient() -> Self {
        DerivRequest { per_dir: [1; 3], total: 1 }
    }

    pub fn hessian() -> Self {
        DerivRequest { per_dir: [2; 3], total: 2 }
    }

    /// Third-order derivatives with at most one transverse differentiation,
    /// as needed by through-thickness stress recovery.
    pub fn third_inplane() -> Self {
        DerivRequest { per_dir: [3, 3, 1], total: 3 }
    }

    fn orders(&self) -> Vec<[usize; 3]> {
        assert!(self.per_dir.iter().all(|&o| o <= 3) && self.total <= 3);
        let mut out = Vec::new();
        for t in 0..=self.total {
            for a in 0..=self.per_dir[0].min(t) {
                for b in 0..=self.per_dir[1].min(t - a) {
                    let c = t - a - b;
                    if c <= self.per_dir[2] {
                        out.push([a, b, c]);
                    }
                }
            }
        }
        out
    }
}

/// Nonzero multivariate basis functions at one point with the requested
/// physical-space derivatives. Exactly `(p+1)(q+1)(r+1)` entries.
#[derive(Debug, Clone)]
pub struct BasisTable {
    pub indices: Vec<usize>,
    orders: Vec<[usize; 3]>,
    values: Vec<Vec<f64>>,
}

impl BasisTable {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn orders(&self) -> &[[usize; 3]] {
        &self.orders
    }

    pub fn try_get(&self, order: [usize; 3]) -> Option<&[f64]> {
        self.orders
            .iter()
            .position(|&o| o == order)
            .map(|i| self.values[i].as_slice())
    }

    /// Values of one derivative order for every nonzero function.
    pub fn get(&self, order: [usize; 3]) -> &[f64] {
        self.try_get(order)
            .unwrap_or_else(|| panic!("derivative order {order:?} was not requested"))
    }
}

/// Derivatives of a 3-component field at one point, keyed by multi-index.
#[derive(Debug, Clone)]
pub struct FieldDerivs {
    orders: Vec<[usize; 3]>,
    values: Vec<[f64; 3]>,
}

impl FieldDerivs {
    pub fn get(&self, order: [usize; 3]) -> [f64; 3] {
        let i = self
            .orders
            .iter()
            .position(|&o| o == order)
            .unwrap_or_else(|| panic!("derivative order {order:?} was not requested"));
        self.values[i]
    }
}

/// Trivariate tensor-product spline space over an axis-aligned box.
///
/// The control grid realizes the affine map from the parametric unit cube to
/// the box, so physical derivatives are parametric ones divided by the box
/// edge lengths. Weights default to one (plain B-splines); rational weights
/// are supported through the quotient-rule recursion.
#[derive(Debug, Clone)]
pub struct TensorProductSpace {
    kvs: [KnotVector; 3],
    weights: Option<Vec<f64>>,
    control: Vec<[f64; 3]>,
    geometry: BoxGeometry,
}

impl TensorProductSpace {
    pub fn on_box(kvs: [KnotVector; 3], geometry: BoxGeometry) -> Result<Self> {
        for kv in &kvs {
            let (lo, hi) = kv.domain();
            if lo != 0.0 || hi != 1.0 {
                return Err(Error::Spline(
                    "parametric domain must be normalized to [0, 1]".into(),
                ));
            }
        }
        let g: [Vec<f64>; 3] = [kvs[0].greville(), kvs[1].greville(), kvs[2].greville()];
        let [m1, m2, m3] = [g[0].len(), g[1].len(), g[2].len()];
        let mut control = Vec::with_capacity(m1 * m2 * m3);
        for k in 0..m3 {
            for j in 0..m2 {
                for i in 0..m1 {
                    control.push(geometry.phys_of([g[0][i], g[1][j], g[2][k]]));
                }
            }
        }
        Ok(TensorProductSpace {
            kvs,
            weights: None,
            control,
            geometry,
        })
    }

    /// Attaches rational weights (one per control point, all positive).
    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.num_basis() {
            return Err(Error::Spline(format!(
                "expected {} weights, got {}",
                self.num_basis(),
                weights.len()
            )));
        }
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::Spline("weights must be positive".into()));
        }
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn knot_vector(&self, d: usize) -> &KnotVector {
        &self.kvs[d]
    }

    pub fn geometry(&self) -> &BoxGeometry {
        &self.geometry
    }

    pub fn dims(&self) -> [usize; 3] {
        [
            self.kvs[0].num_basis(),
            self.kvs[1].num_basis(),
            self.kvs[2].num_basis(),
        ]
    }

    pub fn num_basis(&self) -> usize {
        let [a, b, c] = self.dims();
        a * b * c
    }

    #[inline]
    pub fn flat_index(&self, ijk: [usize; 3]) -> usize {
        let [m1, m2, _] = self.dims();
        ijk[0] + m1 * (ijk[1] + m2 * ijk[2])
    }

    pub fn control_points(&self) -> &[[f64; 3]] {
        &self.control
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// Basis table at a physical point.
    pub fn basis_at(&self, x: [f64; 3], req: DerivRequest) -> Result<BasisTable> {
        let xi = self.geometry.param_of(x)?;
        self.basis_at_param(xi, req)
    }

    pub fn basis_at_param(&self, xi: [f64; 3], req: DerivRequest) -> Result<BasisTable> {
        let u: [BasisValues; 3] = [
            self.kvs[0].eval(xi[0], req.per_dir[0])?,
            self.kvs[1].eval(xi[1], req.per_dir[1])?,
            self.kvs[2].eval(xi[2], req.per_dir[2])?,
        ];
        let orders = req.orders();
        let [p, q, r] = [
            self.kvs[0].degree(),
            self.kvs[1].degree(),
            self.kvs[2].degree(),
        ];
        let nloc = (p + 1) * (q + 1) * (r + 1);
        let mut indices = Vec::with_capacity(nloc);
        for kk in 0..=r {
            for jj in 0..=q {
                for ii in 0..=p {
                    indices.push(self.flat_index([u[0].first + ii, u[1].first + jj, u[2].first + kk]));
                }
            }
        }
        // parametric tensor-product derivatives of the plain B-spline basis
        let bspline_order = |ord: [usize; 3]| -> Vec<f64> {
            let mut vals = Vec::with_capacity(nloc);
            for kk in 0..=r {
                for jj in 0..=q {
                    for ii in 0..=p {
                        vals.push(
                            u[0].ders[ord[0]][ii] * u[1].ders[ord[1]][jj] * u[2].ders[ord[2]][kk],
                        );
                    }
                }
            }
            vals
        };

        let mut values: Vec<Vec<f64>> = Vec::with_capacity(orders.len());
        match &self.weights {
            None => {
                for &ord in &orders {
                    values.push(bspline_order(ord));
                }
            }
            Some(w) => {
                // generalized quotient rule on the downward-closed order set
                let mut wder = Vec::with_capacity(orders.len());
                let mut numder = Vec::with_capacity(orders.len());
                for &ord in &orders {
                    let b = bspline_order(ord);
                    let mut wsum = 0.0;
                    let mut num = Vec::with_capacity(nloc);
                    for (loc, &gidx) in indices.iter().enumerate() {
                        let wb = w[gidx] * b[loc];
                        wsum += wb;
                        num.push(wb);
                    }
                    wder.push(wsum);
                    numder.push(num);
                }
                let pos = |ord: [usize; 3]| orders.iter().position(|&o| o == ord).unwrap();
                for (oi, &ord) in orders.iter().enumerate() {
                    let mut vals = numder[oi].clone();
                    for da in 0..=ord[0] {
                        for db in 0..=ord[1] {
                            for dc in 0..=ord[2] {
                                if da + db + dc == 0 {
                                    continue;
                                }
                                let coeff = binom(ord[0], da) * binom(ord[1], db) * binom(ord[2], dc);
                                let wd = wder[pos([da, db, dc])];
                                let rlow = &values[pos([ord[0] - da, ord[1] - db, ord[2] - dc])];
                                for (v, rl) in vals.iter_mut().zip(rlow) {
                                    *v -= coeff * wd * rl;
                                }
                            }
                        }
                    }
                    let w0 = wder[0];
                    for v in vals.iter_mut() {
                        *v /= w0;
                    }
                    values.push(vals);
                }
            }
        }
        // parametric -> physical scaling through the box map
        let len = self.geometry.lengths;
        for (oi, &ord) in orders.iter().enumerate() {
            let scale = len[0].powi(ord[0] as i32)
                * len[1].powi(ord[1] as i32)
                * len[2].powi(ord[2] as i32);
            if scale != 1.0 {
                for v in values[oi].iter_mut() {
                    *v /= scale;
                }
            }
        }
        Ok(BasisTable {
            indices,
            orders,
            values,
        })
    }

    /// Derivatives of a vector field given per-control-point coefficients.
    pub fn eval_vector_field(
        &self,
        coeffs: &[[f64; 3]],
        x: [f64; 3],
        req: DerivRequest,
    ) -> Result<FieldDerivs> {
        assert_eq!(coeffs.len(), self.num_basis());
        let table = self.basis_at(x, req)?;
        let mut values = Vec::with_capacity(table.orders.len());
        for vals in &table.values {
            let mut acc = [0.0; 3];
            for (loc, &gidx) in table.indices.iter().enumerate() {
                let b = vals[loc];
                let c = coeffs[gidx];
                acc[0] += b * c[0];
                acc[1] += b * c[1];
                acc[2] += b * c[2];
            }
            values.push(acc);
        }
        Ok(FieldDerivs {
            orders: table.orders,
            values,
        })
    }

    /// Derivatives of a scalar field given per-control-point coefficients.
    pub fn eval_scalar_field(
        &self,
        coeffs: &[f64],
        x: [f64; 3],
        req: DerivRequest,
    ) -> Result<Vec<([usize; 3], f64)>> {
        assert_eq!(coeffs.len(), self.num_basis());
        let table = self.basis_at(x, req)?;
        Ok(table
            .orders
            .iter()
            .zip(&table.values)
            .map(|(&ord, vals)| {
                let s = table
                    .indices
                    .iter()
                    .zip(vals)
                    .map(|(&g, &b)| coeffs[g] * b)
                    .sum();
                (ord, s)
            })
            .collect())
    }
}

fn binom(n: usize, k: usize) -> f64 {
    let mut out = 1.0;
    for i in 0..k {
        out *= (n - i) as f64 / (i + 1) as f64;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{DMat, LuFactors};

    /// Direct Cox-de Boor recursion over all basis functions; the slow
    /// reference the banded evaluator is checked against.
    mod brute {
        pub fn basis(t: &[f64], p: usize, i: usize, x: f64) -> f64 {
            if p == 0 {
                let last = *t.last().unwrap();
                let in_span = t[i] <= x && x < t[i + 1];
                let at_end = x == last && t[i] < t[i + 1] && t[i + 1] == last;
                return if in_span || at_end { 1.0 } else { 0.0 };
            }
            let mut v = 0.0;
            let d1 = t[i + p] - t[i];
            if d1 > 0.0 {
                v += (x - t[i]) / d1 * basis(t, p - 1, i, x);
            }
            let d2 = t[i + p + 1] - t[i + 1];
            if d2 > 0.0 {
                v += (t[i + p + 1] - x) / d2 * basis(t, p - 1, i + 1, x);
            }
            v
        }

        pub fn deriv(t: &[f64], p: usize, i: usize, x: f64, order: usize) -> f64 {
            if order == 0 {
                return basis(t, p, i, x);
            }
            if p == 0 {
                return 0.0;
            }
            let mut v = 0.0;
            let d1 = t[i + p] - t[i];
            if d1 > 0.0 {
                v += p as f64 / d1 * deriv(t, p - 1, i, x, order - 1);
            }
            let d2 = t[i + p + 1] - t[i + 1];
            if d2 > 0.0 {
                v -= p as f64 / d2 * deriv(t, p - 1, i + 1, x, order - 1);
            }
            v
        }
    }

    fn unit_box() -> BoxGeometry {
        BoxGeometry::new([0.0; 3], [1.0; 3]).unwrap()
    }

    #[test]
    fn open_uniform_examples() {
        let kv = KnotVector::open_uniform(2, 1);
        assert_eq!(kv.knots(), &[0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let kv = KnotVector::open_uniform(1, 2);
        assert_eq!(kv.knots(), &[0.0, 0.0, 0.5, 1.0, 1.0]);
        let kv = KnotVector::open_uniform(6, 4);
        assert_eq!(kv.num_basis(), 10);
    }

    #[test]
    fn knot_vector_validation() {
        assert!(KnotVector::new(2, vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]).is_ok());
        // not clamped
        assert!(KnotVector::new(2, vec![0.0, 0.0, 0.5, 1.0, 1.0, 1.0]).is_err());
        // decreasing
        assert!(KnotVector::new(1, vec![0.0, 0.0, 0.7, 0.3, 1.0, 1.0]).is_err());
        // interior multiplicity above degree
        assert!(KnotVector::new(
            2,
            vec![0.0, 0.0, 0.0, 0.5, 0.5, 0.5, 1.0, 1.0, 1.0]
        )
        .is_err());
        // multiplicity == degree is fine
        assert!(KnotVector::new(2, vec![0.0, 0.0, 0.0, 0.5, 0.5, 1.0, 1.0, 1.0]).is_ok());
    }

    #[test]
    fn continuity_query() {
        assert_eq!(KnotVector::open_uniform(6, 4).continuity(), 5);
        assert_eq!(KnotVector::open_uniform(4, 1).continuity(), 4);
        let kv = KnotVector::new(3, vec![0.0, 0.0, 0.0, 0.0, 0.5, 0.5, 1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(kv.continuity(), 1);
    }

    #[test]
    fn linear_hats_at_half() {
        let kv = KnotVector::new(1, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        let b = kv.eval(0.5, 0).unwrap();
        assert_eq!(b.first, 0);
        assert!((b.ders[0][0] - 0.5).abs() < 1e-15);
        assert!((b.ders[0][1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn eval_outside_domain_errors() {
        let kv = KnotVector::open_uniform(2, 2);
        assert!(matches!(kv.eval(1.5, 0), Err(Error::Domain(_))));
        assert!(matches!(kv.eval(-0.2, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn partition_of_unity_and_derivative_sums() {
        for (p, spans) in [(1, 3), (2, 2), (3, 4), (4, 1), (6, 4)] {
            let kv = KnotVector::open_uniform(p, spans);
            for s in 0..100 {
                let x = (s as f64 + 0.5) / 100.0;
                let b = kv.eval(x, 1.min(p)).unwrap();
                let sum: f64 = b.ders[0].iter().sum();
                assert!((sum - 1.0).abs() < 1e-12, "p={p} spans={spans} x={x}");
                let dsum: f64 = b.ders[1].iter().sum();
                assert!(dsum.abs() < 1e-10, "p={p} spans={spans} x={x} dsum={dsum}");
            }
        }
    }

    #[test]
    fn banded_eval_matches_brute_force() {
        let kv = KnotVector::open_uniform(3, 5);
        let m = kv.num_basis();
        for s in 0..40 {
            let x = s as f64 / 39.0;
            let b = kv.eval(x, 3).unwrap();
            for order in 0..=3usize {
                let mut full = vec![0.0; m];
                for (j, v) in b.ders[order].iter().enumerate() {
                    full[b.first + j] = *v;
                }
                for i in 0..m {
                    let expect = brute::deriv(kv.knots(), 3, i, x, order);
                    assert!(
                        (full[i] - expect).abs() < 1e-10 * (1.0 + expect.abs()),
                        "x={x} order={order} i={i}: {} vs {}",
                        full[i],
                        expect
                    );
                }
            }
        }
    }

    #[test]
    fn eval_at_endpoints_is_interpolatory() {
        let kv = KnotVector::open_uniform(4, 3);
        let b0 = kv.eval(0.0, 0).unwrap();
        assert_eq!(b0.first, 0);
        assert!((b0.ders[0][0] - 1.0).abs() < 1e-15);
        let b1 = kv.eval(1.0, 0).unwrap();
        assert!((b1.ders[0].last().unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(b1.first + kv.degree(), kv.num_basis() - 1);
    }

    #[test]
    fn greville_examples() {
        let kv = KnotVector::new(2, vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(kv.greville(), vec![0.0, 0.5, 1.0]);

        let kv = KnotVector::open_uniform(1, 2);
        assert_eq!(kv.greville(), vec![0.0, 0.5, 1.0]);

        let kv = KnotVector::open_uniform(6, 4);
        let g = kv.greville();
        assert_eq!(g.len(), 10);
        for (a, b) in g.iter().zip(g.iter().rev()) {
            assert!((a + b - 1.0).abs() < 1e-14, "not symmetric about 0.5");
        }
        // hand application of the averaging rule for the first few points
        let t = kv.knots();
        for (i, &gi) in g.iter().enumerate() {
            let expect: f64 = t[i + 1..=i + 6].iter().sum::<f64>() / 6.0;
            assert!((gi - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn greville_properties_random_vectors() {
        for (p, spans) in [(1usize, 1usize), (2, 7), (3, 2), (5, 3), (6, 8)] {
            let kv = KnotVector::open_uniform(p, spans);
            let g = kv.greville();
            assert_eq!(g.len(), kv.num_basis());
            assert!(g.windows(2).all(|w| w[1] >= w[0]));
            assert!(g.iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
    }

    #[test]
    fn tensor_constant_field_has_zero_derivatives() {
        let kvs = [
            KnotVector::open_uniform(3, 2),
            KnotVector::open_uniform(2, 3),
            KnotVector::open_uniform(2, 1),
        ];
        let space = TensorProductSpace::on_box(kvs, unit_box()).unwrap();
        let c = 4.25;
        let coeffs = vec![[c, 2.0 * c, -c]; space.num_basis()];
        let f = space
            .eval_vector_field(&coeffs, [0.37, 0.61, 0.83], DerivRequest::hessian())
            .unwrap();
        let v = f.get([0, 0, 0]);
        assert!((v[0] - c).abs() < 1e-12);
        assert!((v[1] - 2.0 * c).abs() < 1e-12);
        assert!((v[2] + c).abs() < 1e-12);
        for ord in [[1, 0, 0], [0, 1, 0], [0, 0, 1], [2, 0, 0], [1, 1, 0], [0, 1, 1]] {
            let d = f.get(ord);
            assert!(d.iter().all(|x| x.abs() < 1e-10), "{ord:?} {d:?}");
        }
    }

    #[test]
    fn tensor_linear_precision() {
        let kvs = [
            KnotVector::open_uniform(4, 2),
            KnotVector::open_uniform(3, 2),
            KnotVector::open_uniform(2, 2),
        ];
        let geo = BoxGeometry::new([1.0, -2.0, 0.5], [3.0, 5.0, 0.25]).unwrap();
        let space = TensorProductSpace::on_box(kvs, geo).unwrap();
        let coeffs: Vec<[f64; 3]> = space.control_points().to_vec();
        let x = [2.2, 0.4, 0.61];
        let f = space
            .eval_vector_field(&coeffs, x, DerivRequest::gradient())
            .unwrap();
        let v = f.get([0, 0, 0]);
        for d in 0..3 {
            assert!((v[d] - x[d]).abs() < 1e-12, "value reproduces coordinates");
        }
        // geometry Jacobian is the identity in this parametrization
        for (ord, col) in [([1, 0, 0], 0), ([0, 1, 0], 1), ([0, 0, 1], 2)] {
            let g = f.get(ord);
            for d in 0..3 {
                let expect = if d == col { 1.0 } else { 0.0 };
                assert!((g[d] - expect).abs() < 1e-11, "{ord:?} {g:?}");
            }
        }
    }

    fn pseudo_coeffs(n: usize, seed: u64) -> Vec<[f64; 3]> {
        let mut s = seed;
        let mut rnd = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        (0..n).map(|_| [rnd(), rnd(), rnd()]).collect()
    }

    #[test]
    fn mixed_third_derivative_matches_finite_differences() {
        let kvs = [
            KnotVector::open_uniform(5, 3),
            KnotVector::open_uniform(4, 2),
            KnotVector::open_uniform(4, 1),
        ];
        let geo = BoxGeometry::new([0.0, 0.0, -0.5], [2.0, 2.0, 1.0]).unwrap();
        let space = TensorProductSpace::on_box(kvs, geo).unwrap();
        let coeffs = pseudo_coeffs(space.num_basis(), 42);
        let x = [0.9, 1.1, 0.07];

        let f = space
            .eval_vector_field(&coeffs, x, DerivRequest::third_inplane())
            .unwrap();
        let got = f.get([2, 0, 1])[0];

        // central second difference in x1 of a central first difference in
        // x3, Richardson-extrapolated in the common step size
        let val = |dx1: f64, dx3: f64| -> f64 {
            space
                .eval_vector_field(
                    &coeffs,
                    [x[0] + dx1, x[1], x[2] + dx3],
                    DerivRequest::values(),
                )
                .unwrap()
                .get([0, 0, 0])[0]
        };
        let stencil = |h: f64| {
            let d2_1 = |dx3: f64| (val(h, dx3) - 2.0 * val(0.0, dx3) + val(-h, dx3)) / (h * h);
            (d2_1(h) - d2_1(-h)) / (2.0 * h)
        };
        let h = 2e-3;
        let fd = (4.0 * stencil(h / 2.0) - stencil(h)) / 3.0;
        assert!(
            (got - fd).abs() < 1e-6 * (1.0 + got.abs()),
            "analytic {got} vs fd {fd}"
        );
    }

    #[test]
    fn derivative_consistency_all_orders() {
        // every implemented order matches a finite difference of the order below
        let kvs = [
            KnotVector::open_uniform(5, 2),
            KnotVector::open_uniform(4, 3),
            KnotVector::open_uniform(4, 1),
        ];
        let geo = BoxGeometry::new([0.0, 0.0, 0.0], [1.5, 0.8, 0.3]).unwrap();
        let space = TensorProductSpace::on_box(kvs.clone(), geo).unwrap();
        let coeffs = pseudo_coeffs(space.num_basis(), 7);
        let req = DerivRequest::third_inplane();
        for &x in &[[0.71, 0.33, 0.11], [0.3, 0.6, 0.2], [1.05, 0.44, 0.26]] {
            let f = space.eval_vector_field(&coeffs, x, req).unwrap();
            for &ord in f.orders.clone().iter() {
                let total: usize = ord.iter().sum();
                if total == 0 {
                    continue;
                }
                let d = (0..3).find(|&d| ord[d] > 0).unwrap();
                let mut below = ord;
                below[d] -= 1;
                let h = 1e-4 * space.geometry().lengths[d];
                let probe = |shift: f64| {
                    let mut y = x;
                    y[d] += shift;
                    space.eval_vector_field(&coeffs, y, req).unwrap().get(below)[0]
                };
                // Richardson-extrapolated central difference
                let d1 = (probe(h) - probe(-h)) / (2.0 * h);
                let d2 = (probe(h / 2.0) - probe(-h / 2.0)) / h;
                let fd = (4.0 * d2 - d1) / 3.0;
                let got = f.get(ord)[0];
                assert!(
                    (got - fd).abs() < 1e-6 * (1.0 + got.abs().max(fd.abs())),
                    "ord={ord:?} got={got} fd={fd}"
                );
            }
        }
    }

    #[test]
    fn rational_unit_weights_match_bspline_path() {
        let kvs = [
            KnotVector::open_uniform(3, 2),
            KnotVector::open_uniform(3, 2),
            KnotVector::open_uniform(2, 1),
        ];
        let space = TensorProductSpace::on_box(kvs.clone(), unit_box()).unwrap();
        let weighted = TensorProductSpace::on_box(kvs, unit_box())
            .unwrap()
            .with_weights(vec![1.0; space.num_basis()])
            .unwrap();
        let x = [0.3, 0.77, 0.5];
        let req = DerivRequest::hessian();
        let a = space.basis_at(x, req).unwrap();
        let b = weighted.basis_at(x, req).unwrap();
        assert_eq!(a.indices, b.indices);
        for &ord in a.orders() {
            for (u, v) in a.get(ord).iter().zip(b.get(ord)) {
                assert!((u - v).abs() < 1e-13, "{ord:?}");
            }
        }
    }

    #[test]
    fn rational_partition_of_unity_and_fd_derivatives() {
        let kvs = [
            KnotVector::open_uniform(3, 2),
            KnotVector::open_uniform(2, 2),
            KnotVector::open_uniform(2, 1),
        ];
        let space0 = TensorProductSpace::on_box(kvs.clone(), unit_box()).unwrap();
        let n = space0.num_basis();
        // deterministic positive weights away from 1
        let weights: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i * 7919 % 13) as f64) / 13.0).collect();
        let space = TensorProductSpace::on_box(kvs, unit_box())
            .unwrap()
            .with_weights(weights)
            .unwrap();
        for s in 0..100 {
            let x = [
                (s as f64 + 0.5) / 100.0,
                ((s * 31 % 100) as f64 + 0.5) / 100.0,
                ((s * 17 % 100) as f64 + 0.5) / 100.0,
            ];
            let t = space.basis_at(x, DerivRequest::values()).unwrap();
            let sum: f64 = t.get([0, 0, 0]).iter().sum();
            assert!((sum - 1.0).abs() < 1e-12, "rational partition of unity at {x:?}");
        }
        // quotient-rule derivatives against finite differences
        let coeffs = pseudo_coeffs(n, 11);
        let x = [0.42, 0.58, 0.31];
        let f = space
            .eval_vector_field(&coeffs, x, DerivRequest::hessian())
            .unwrap();
        for (ord, d) in [([1, 0, 0], 0usize), ([0, 1, 0], 1), ([2, 0, 0], 0)] {
            let got = f.get(ord)[1];
            let mut below = ord;
            below[d] -= 1;
            let h = 1e-4;
            let probe = |shift: f64| {
                let mut y = x;
                y[d] += shift;
                space
                    .eval_vector_field(&coeffs, y, DerivRequest::hessian())
                    .unwrap()
                    .get(below)[1]
            };
            let d1 = (probe(h) - probe(-h)) / (2.0 * h);
            let d2 = (probe(h / 2.0) - probe(-h / 2.0)) / h;
            let fd = (4.0 * d2 - d1) / 3.0;
            assert!(
                (got - fd).abs() < 1e-6 * (1.0 + got.abs()),
                "{ord:?}: {got} vs {fd}"
            );
        }
    }

    #[test]
    fn polynomial_reproduction_by_interpolation() {
        // fitting a polynomial of degree <= p in the space reproduces it
        let kvs = [
            KnotVector::open_uniform(3, 2),
            KnotVector::open_uniform(3, 2),
            KnotVector::open_uniform(3, 1),
        ];
        let geo = BoxGeometry::new([0.0, 0.0, 0.0], [2.0, 1.0, 0.5]).unwrap();
        let space = TensorProductSpace::on_box(kvs.clone(), geo).unwrap();
        let g: Vec<[f64; 3]> = {
            let gs = [
                space.knot_vector(0).greville(),
                space.knot_vector(1).greville(),
                space.knot_vector(2).greville(),
            ];
            let mut pts = Vec::new();
            for k in 0..gs[2].len() {
                for j in 0..gs[1].len() {
                    for i in 0..gs[0].len() {
                        pts.push(space.geometry().phys_of([gs[0][i], gs[1][j], gs[2][k]]));
                    }
                }
            }
            pts
        };
        let m = space.num_basis();
        let poly = |x: [f64; 3]| {
            1.0 + 2.0 * x[0] - x[1] + 0.5 * x[2] + x[0] * x[1] + x[0] * x[0] * x[2]
                - 0.25 * x[1] * x[1] * x[1]
        };
        let mut mat = DMat::zeros(m, m);
        for (row, &pt) in g.iter().enumerate() {
            let t = space.basis_at(pt, DerivRequest::values()).unwrap();
            for (loc, &col) in t.indices.iter().enumerate() {
                mat.set(row, col, t.get([0, 0, 0])[loc]);
            }
        }
        let rhs: Vec<f64> = g.iter().map(|&pt| poly(pt)).collect();
        let coeffs = LuFactors::new(mat).unwrap().solve(&rhs);
        for &x in &[[0.3, 0.9, 0.41], [1.7, 0.05, 0.02], [0.77, 0.5, 0.25]] {
            let got = space
                .eval_scalar_field(&coeffs, x, DerivRequest::values())
                .unwrap()[0]
                .1;
            assert!(
                (got - poly(x)).abs() < 1e-10 * (1.0 + poly(x).abs()),
                "at {x:?}: {got} vs {}",
                poly(x)
            );
        }
    }

    #[test]
    fn point_outside_box_errors() {
        let kvs = [
            KnotVector::open_uniform(2, 1),
            KnotVector::open_uniform(2, 1),
            KnotVector::open_uniform(2, 1),
        ];
        let space = TensorProductSpace::on_box(kvs, unit_box()).unwrap();
        let coeffs = vec![[0.0; 3]; space.num_basis()];
        let res = space.eval_vector_field(&coeffs, [1.2, 0.5, 0.5], DerivRequest::values());
        assert!(matches!(res, Err(Error::Domain(_))));
    }
}
