//! Gauss-Legendre quadrature and cumulative integration over a partition.

/// Gauss-Legendre rule on the reference interval [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    /// Computes an `n`-point rule by Newton iteration on the Legendre
    /// polynomial roots. Exact for polynomials of degree `2n - 1`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for k in 0..m {
            // Tricomi-style initial guess
            let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // Legendre recurrence for P_n(x) and P'_n(x)
                let mut p0 = 1.0;
                let mut p1 = x;
                for j in 2..=n {
                    let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let pn = if n == 1 { p1 } else { p1 };
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = pn / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[k] = -x;
            nodes[n - 1 - k] = x;
            weights[k] = w;
            weights[n - 1 - k] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussRule { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    /// Integrates an array-valued function over `[a, b]`.
    pub fn integrate<const K: usize>(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> [f64; K]) -> [f64; K] {
        let mut acc = [0.0; K];
        for (x, w) in self.mapped(a, b) {
            let v = f(x);
            for (s, vi) in acc.iter_mut().zip(v) {
                *s += w * vi;
            }
        }
        acc
    }
}

/// Cumulative integrator over a fixed partition `breaks[0] < ... < breaks[S]`.
///
/// Prefix integrals over whole cells are cached; an integral from the start
/// to an arbitrary `x` reuses the prefix and integrates only the tail cell.
#[derive(Debug, Clone)]
pub struct CumulativeIntegral<const K: usize> {
    breaks: Vec<f64>,
    prefix: Vec<[f64; K]>,
    rule: GaussRule,
}

impl<const K: usize> CumulativeIntegral<K> {
    pub fn new(breaks: Vec<f64>, rule: GaussRule, mut f: impl FnMut(f64) -> [f64; K]) -> Self {
        assert!(breaks.len() >= 2);
        let mut prefix = Vec::with_capacity(breaks.len());
        let mut acc = [0.0; K];
        prefix.push(acc);
        for s in 0..breaks.len() - 1 {
            let cell = rule.integrate(breaks[s], breaks[s + 1], &mut f);
            for (a, c) in acc.iter_mut().zip(cell) {
                *a += c;
            }
            prefix.push(acc);
        }
        CumulativeIntegral { breaks, prefix, rule }
    }

    /// Integral of `f` from `breaks[0]` to `x`, re-evaluating `f` only on the
    /// partial tail cell.
    pub fn eval(&self, x: f64, mut f: impl FnMut(f64) -> [f64; K]) -> [f64; K] {
        let lo = self.breaks[0];
        let hi = *self.breaks.last().unwrap();
        let x = x.clamp(lo, hi);
        // cell containing x
        let mut s = self
            .breaks
            .partition_point(|&b| b <= x)
            .saturating_sub(1);
        s = s.min(self.breaks.len() - 2);
        let mut out = self.prefix[s];
        if x > self.breaks[s] {
            let tail = self.rule.integrate(self.breaks[s], x, &mut f);
            for (o, t) in out.iter_mut().zip(tail) {
                *o += t;
            }
        }
        out
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for n in 1..20 {
            let r = GaussRule::new(n);
            let s: f64 = r.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-14, "n={n} sum={s}");
        }
    }

    #[test]
    fn exact_for_polynomials() {
        // n points integrate x^k exactly for k <= 2n-1
        for n in 1..=8 {
            let r = GaussRule::new(n);
            for k in 0..=(2 * n - 1) {
                let got = r.integrate(0.0, 1.0, |x| [x.powi(k as i32)])[0];
                let expect = 1.0 / (k as f64 + 1.0);
                assert!(
                    (got - expect).abs() < 1e-14,
                    "n={n} k={k} got={got} expect={expect}"
                );
            }
        }
    }

    #[test]
    fn not_exact_beyond_order() {
        let r = GaussRule::new(2);
        let got = r.integrate(0.0, 1.0, |x| [x.powi(4)])[0];
        assert!((got - 0.2).abs() > 1e-6);
    }

    #[test]
    fn cumulative_matches_antiderivative() {
        let breaks = vec![0.0, 0.3, 0.7, 1.0];
        let rule = GaussRule::new(4);
        let f = |x: f64| [3.0 * x * x, x.cos()];
        let cum = CumulativeIntegral::new(breaks, rule, f);
        for &x in &[0.0, 0.1, 0.3, 0.45, 0.7, 0.99, 1.0] {
            let got = cum.eval(x, f);
            // polynomial component is exact, the transcendental one is
            // limited by the rule order
            assert!((got[0] - x * x * x).abs() < 1e-14, "x={x}");
            assert!((got[1] - x.sin()).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn cumulative_at_start_is_zero() {
        let cum = CumulativeIntegral::new(vec![-1.0, 1.0], GaussRule::new(3), |x| [x]);
        let v = cum.eval(-1.0, |x| [x]);
        assert_eq!(v[0], 0.0);
    }
}
