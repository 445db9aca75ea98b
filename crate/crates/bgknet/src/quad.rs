//! Gauss-Legendre quadrature and compensated summation.

use std::collections::HashMap;
use std::sync::Mutex;

/// Gauss-Legendre rule on [-1, 1], mapped affinely to arbitrary intervals.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Shared rule for a given node count. Node construction costs one
    /// Newton solve per root; integrators on hot paths reuse rules instead
    /// of rebuilding them. The set of sizes in use is small and fixed, so
    /// leaking each constructed rule is bounded.
    pub fn cached(n: usize) -> &'static GaussLegendre {
        static RULES: Mutex<Option<HashMap<usize, &'static GaussLegendre>>> = Mutex::new(None);
        let mut guard = RULES.lock().unwrap();
        let map = guard.get_or_insert_with(HashMap::new);
        map.entry(n)
            .or_insert_with(|| Box::leak(Box::new(GaussLegendre::new(n))))
    }

    /// Nodes and weights by Newton iteration on the Legendre polynomial P_n.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "quadrature rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n as f64;
        for i in 0..n {
            // Tricomi initial guess for the i-th root of P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_pd(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            nodes[n - 1 - i] = x;
            weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// ∫_a^b f(x) dx.
    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut acc = NeumaierSum::new();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc.add(w * f(mid + half * x));
        }
        half * acc.value()
    }

    /// ∫_a^b (f0(x), f1(x)) dx for pair-valued integrands.
    pub fn integrate_pair<F: Fn(f64) -> (f64, f64)>(&self, a: f64, b: f64, f: F) -> (f64, f64) {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let (mut s0, mut s1) = (NeumaierSum::new(), NeumaierSum::new());
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let (v0, v1) = f(mid + half * x);
            s0.add(w * v0);
            s1.add(w * v1);
        }
        (half * s0.value(), half * s1.value())
    }
}

impl Default for GaussLegendre {
    fn default() -> Self {
        Self::new(64)
    }
}

/// P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre_pd(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Neumaier-compensated running sum; keeps ledger-grade reductions exact to
/// a few ulps independent of length.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of an iterator.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(items: I) -> f64 {
    let mut acc = NeumaierSum::new();
    for x in items {
        acc.add(x);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-14;

    #[test]
    fn five_node_rule_matches_reference_values() {
        let gl = GaussLegendre::new(5);
        // Known closed forms: x = 0, ±1/3·sqrt(5 − 2√(10/7)), ±1/3·sqrt(5 + 2√(10/7)).
        let inner = (5.0 - 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 3.0;
        let outer = (5.0 + 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 3.0;
        let expect = [-outer, -inner, 0.0, inner, outer];
        for (x, e) in gl.nodes.iter().zip(expect) {
            assert!((x - e).abs() < TOL, "node {x} vs {e}");
        }
        let w_mid = 128.0 / 225.0;
        assert!((gl.weights[2] - w_mid).abs() < TOL);
    }

    #[test]
    fn integrates_polynomials_exactly_up_to_degree_2n_minus_1() {
        let gl = GaussLegendre::new(8);
        for k in 0..16 {
            let exact = (2.0f64.powi(k + 1) - (-1.0f64).powi(k + 1) * 1.0) / (k as f64 + 1.0);
            let got = gl.integrate(-1.0, 2.0, |x| x.powi(k));
            assert!(
                (got - exact).abs() <= 1e-12 * (1.0 + exact.abs()),
                "degree {k}: {got} vs {exact}"
            );
        }
    }

    #[test]
    fn weights_sum_to_interval_length() {
        for n in [1, 2, 16, 64, 129] {
            let gl = GaussLegendre::new(n);
            let total: f64 = gl.weights.iter().sum();
            assert!((total - 2.0).abs() < 1e-13, "n={n}: {total}");
        }
    }

    #[test]
    fn neumaier_handles_cancellation() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(neumaier_sum(xs.iter().copied()), 2.0);
    }
}
