//! Gauss–Legendre rules and a globally adaptive Gauss–Kronrod integrator.

use std::collections::{BinaryHeap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Nodes and weights of a quadrature rule on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub interval: (f64, f64),
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Iterator over `(node, weight)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// Concatenates rules on adjacent intervals into one composite rule.
    pub fn composite(parts: &[QuadratureRule]) -> QuadratureRule {
        let lo = parts.first().map_or(0.0, |p| p.interval.0);
        let hi = parts.last().map_or(0.0, |p| p.interval.1);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for p in parts {
            nodes.extend_from_slice(&p.nodes);
            weights.extend_from_slice(&p.weights);
        }
        QuadratureRule {
            nodes,
            weights,
            interval: (lo, hi),
        }
    }

    /// Composite Gauss–Legendre rule with `n` nodes on every panel between consecutive breakpoints.
    pub fn panels(breakpoints: &[f64], n: usize) -> Result<QuadratureRule> {
        let parts = breakpoints
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| gauss_legendre(n, w[0], w[1]))
            .collect::<Result<Vec<_>>>()?;
        if parts.is_empty() {
            return Err(Error::InvalidArgument(
                "composite rule needs at least one nonempty panel".into(),
            ));
        }
        Ok(QuadratureRule::composite(&parts))
    }
}

type Reference = Arc<(Vec<f64>, Vec<f64>)>;

fn reference_cache() -> &'static Mutex<HashMap<usize, Reference>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Reference>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let n = n as f64;
    let dp = n * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn reference_rule(n: usize) -> Reference {
    if let Some(r) = reference_cache().lock().unwrap().get(&n) {
        return Arc::clone(r);
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton to 1e-14.
        let theta = std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5);
        let mut x = theta.cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-14 {
                let (_, d) = legendre(n, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    let rule = Arc::new((nodes, weights));
    reference_cache()
        .lock()
        .unwrap()
        .insert(n, Arc::clone(&rule));
    rule
}

/// `n`-point Gauss–Legendre rule on `[lo, hi]`.
pub fn gauss_legendre(n: usize, lo: f64, hi: f64) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "Gauss-Legendre rule needs n >= 1".into(),
        ));
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "Gauss-Legendre interval must satisfy lo < hi, got [{lo}, {hi}]"
        )));
    }
    let reference = reference_rule(n);
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    Ok(QuadratureRule {
        nodes: reference.0.iter().map(|&x| mid + half * x).collect(),
        weights: reference.1.iter().map(|&w| half * w).collect(),
        interval: (lo, hi),
    })
}

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive G7/K15 integration over the panels given by `breakpoints`
/// (sorted, first = lower limit, last = upper limit). Stops when the summed error
/// estimate drops below `max(abs_tol, rel_tol * |value|)` or after `max_segments` splits.
pub fn integrate_adaptive(
    mut f: impl FnMut(f64) -> f64,
    breakpoints: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_segments: usize,
) -> AdaptiveResult {
    let mut heap = BinaryHeap::new();
    let mut value = 0.0;
    let mut error = 0.0;
    let mut evaluations = 0;
    for w in breakpoints.windows(2) {
        if !(w[1] > w[0]) {
            continue;
        }
        let (v, e) = kronrod15(&mut f, w[0], w[1]);
        evaluations += 15;
        value += v;
        error += e;
        heap.push(Segment {
            a: w[0],
            b: w[1],
            value: v,
            error: e,
        });
    }
    let mut converged = false;
    while heap.len() < max_segments.max(1) {
        if error <= abs_tol.max(rel_tol * value.abs()) {
            converged = true;
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let m = 0.5 * (worst.a + worst.b);
        if !(m > worst.a && m < worst.b) {
            heap.push(worst);
            break;
        }
        let (v1, e1) = kronrod15(&mut f, worst.a, m);
        let (v2, e2) = kronrod15(&mut f, m, worst.b);
        evaluations += 30;
        value += v1 + v2 - worst.value;
        error += e1 + e2 - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: m,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: m,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }
    if !converged {
        converged = error <= abs_tol.max(rel_tol * value.abs());
    }
    // Re-sum to shed the drift of the running update.
    let (value, error) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
    AdaptiveResult {
        value,
        error,
        evaluations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::i0e;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn two_point_rule_is_exact_for_quadratics() {
        let rule = gauss_legendre(2, -1.0, 1.0).unwrap();
        assert_relative_eq!(rule.integrate(|x| x * x), 2.0 / 3.0, max_relative = 1e-15);
    }

    #[test]
    fn exponential_on_unit_interval() {
        let rule = gauss_legendre(32, 0.0, 1.0).unwrap();
        let exact = 1.0 - (-1.0f64).exp();
        assert_relative_eq!(rule.integrate(|x| (-x).exp()), exact, max_relative = 1e-12);
    }

    #[test]
    fn angular_integral_gives_bessel_i0() {
        let rule = gauss_legendre(16, 0.0, 2.0 * PI).unwrap();
        let got = rule.integrate(|t| t.cos().exp());
        assert_relative_eq!(got, 2.0 * PI * i0e(1.0) * 1f64.exp(), max_relative = 1e-10);
    }

    #[test]
    fn adaptive_angular_integral_for_several_amplitudes() {
        for &a in &[0.0, 0.5, 1.0, 5.0] {
            let res = integrate_adaptive(|t| (a * t.cos()).exp(), &[0.0, 2.0 * PI], 0.0, 1e-12, 200);
            assert!(res.converged);
            let exact = 2.0 * PI * i0e(a) * a.exp();
            assert_relative_eq!(res.value, exact, max_relative = 1e-8);
        }
    }

    #[test]
    fn polynomial_exactness_up_to_degree_2n_minus_1() {
        for n in 1..=20usize {
            let rule = gauss_legendre(n, -0.5, 2.0).unwrap();
            let deg = 2 * n - 1;
            let got = rule.integrate(|x| x.powi(deg as i32));
            let exact = (2f64.powi(deg as i32 + 1) - (-0.5f64).powi(deg as i32 + 1)) / (deg as f64 + 1.0);
            assert_relative_eq!(got, exact, max_relative = 1e-12);
        }
    }

    #[test]
    fn rule_invariants() {
        for &n in &[1usize, 5, 64, 128] {
            let rule = gauss_legendre(n, 0.25, 3.0).unwrap();
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
            assert!(rule.nodes.iter().all(|&x| (0.25..=3.0).contains(&x)));
            assert_relative_eq!(rule.integrate(|_| 1.0), 2.75, max_relative = 1e-12);
        }
    }

    #[test]
    fn bad_arguments_are_rejected() {
        assert!(gauss_legendre(0, 0.0, 1.0).is_err());
        assert!(gauss_legendre(4, 1.0, 1.0).is_err());
        assert!(gauss_legendre(4, 2.0, 1.0).is_err());
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let res = integrate_adaptive(|x: f64| x.sqrt(), &[0.0, 1.0], 0.0, 1e-12, 500);
        assert!(res.converged);
        assert_relative_eq!(res.value, 2.0 / 3.0, max_relative = 1e-11);
    }
}
