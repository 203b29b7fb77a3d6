//! Globally adaptive Gauss-Kronrod (10/21-point) quadrature on finite
//! intervals with caller-supplied breakpoints.

use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_880_041_396_850,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the nodes XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Absolute/relative error targets and the subdivision budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-10,
            rel: 1e-8,
            max_intervals: 200_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
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
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut e = err.abs();
    if res_asc != 0.0 && e != 0.0 {
        let scale = (200.0 * e / res_asc).powf(1.5);
        e = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        e = e.max(50.0 * f64::EPSILON * res_abs);
    }
    e
}

fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let scale = half.abs();
    let error = rescale_error((res_k - res_g) * half, res_abs * scale, res_asc * scale);
    Segment {
        a,
        b,
        value: res_k * half,
        error,
    }
}

/// Integrates `f` over `[points[0], points[last]]`, starting from the panels
/// delimited by `points` and bisecting the worst panel until the global
/// error estimate meets `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, points: &[f64], tol: Tolerance) -> Result<Estimate> {
    assert!(points.len() >= 2, "need at least one panel");
    let mut heap = BinaryHeap::with_capacity(points.len() * 2);
    let mut value = 0.0;
    let mut error = 0.0;
    for w in points.windows(2) {
        if w[1] == w[0] {
            continue;
        }
        let s = gk21(&f, w[0], w[1]);
        value += s.value;
        error += s.error;
        heap.push(s);
    }
    let mut evaluations = 21 * heap.len();
    loop {
        let target = tol.abs.max(tol.rel * value.abs());
        if error <= target || heap.is_empty() {
            break;
        }
        if heap.len() >= tol.max_intervals {
            return Err(Error::QuadratureNonConvergence {
                estimate: error,
                tolerance: target,
            });
        }
        let worst = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel at machine resolution; cannot refine further.
            return Err(Error::QuadratureNonConvergence {
                estimate: error,
                tolerance: target,
            });
        }
        let left = gk21(&f, worst.a, mid);
        let right = gk21(&f, mid, worst.b);
        evaluations += 42;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum to shed the drift accumulated by incremental updates.
    let mut segs: Vec<Segment> = heap.into_vec();
    segs.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = segs.iter().map(|s| s.value).sum();
    let error = segs.iter().map(|s| s.error).sum();
    Ok(Estimate {
        value,
        error,
        evaluations,
    })
}

/// Breakpoints on `[a, b]` that place one panel per half-period of an
/// oscillation `sin(freq * x)` wherever `freq * x` exceeds `threshold`,
/// plus a handful of geometric panels below it.
pub fn oscillation_breakpoints(a: f64, b: f64, freq: f64, threshold: f64) -> Vec<f64> {
    let mut pts = vec![a];
    let start_osc = if freq > 0.0 { (threshold / freq).max(a) } else { b };
    if start_osc < b {
        if start_osc > a {
            push_geometric(&mut pts, a, start_osc);
        }
        let half_period = std::f64::consts::PI / freq;
        let k0 = (start_osc / half_period).ceil() as u64;
        let mut k = k0;
        loop {
            let x = k as f64 * half_period;
            if x >= b {
                break;
            }
            if x > *pts.last().unwrap() {
                pts.push(x);
            }
            k += 1;
        }
    } else {
        push_geometric(&mut pts, a, b);
    }
    if *pts.last().unwrap() < b {
        pts.push(b);
    }
    pts
}

fn push_geometric(pts: &mut Vec<f64>, a: f64, b: f64) {
    // Log-spaced interior points resolve integrands whose scale spans decades.
    if a > 0.0 && b / a > 10.0 {
        let n = ((b / a).log10().ceil() as usize).min(64);
        let r = (b / a).powf(1.0 / n as f64);
        let mut x = a;
        for _ in 1..n {
            x *= r;
            pts.push(x);
        }
    } else if a == 0.0 && b > 0.0 {
        for k in (1..12).rev() {
            pts.push(b * 0.5f64.powi(k));
        }
    }
    pts.push(b);
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| 3.0 * x * x + 1.0, &[0.0, 2.0], Tolerance::default()).unwrap();
        assert_relative_eq!(r.value, 10.0, max_relative = 1e-14);
    }

    #[test]
    fn peaked_integrand_refines() {
        let r = integrate(|x| 1.0 / (1e-4 + x * x), &[-1.0, 1.0], Tolerance::default()).unwrap();
        let exact = 2.0 * (1.0 / 1e-2_f64).atan() / 1e-2;
        assert_relative_eq!(r.value, exact, max_relative = 1e-9);
    }

    #[test]
    fn oscillatory_with_panels() {
        let w = 500.0;
        let pts = oscillation_breakpoints(0.0, 10.0, w, 50.0);
        let r = integrate(|x| (w * x).sin() * (-x).exp(), &pts, Tolerance::default()).unwrap();
        let exact = (w - (-10.0f64).exp() * (w * (10.0f64 * w).cos() + (10.0 * w).sin())) / (1.0 + w * w);
        assert_relative_eq!(r.value, exact, max_relative = 1e-8, epsilon = 1e-12);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let tol = Tolerance {
            abs: 1e-15,
            rel: 1e-15,
            max_intervals: 4,
        };
        let err = integrate(|x| (1.0 / x).sin(), &[1e-6, 1.0], tol).unwrap_err();
        assert!(matches!(err, Error::QuadratureNonConvergence { .. }));
    }

    #[test]
    fn breakpoints_are_sorted_and_cover() {
        let pts = oscillation_breakpoints(1.0, 1e4, 1.0, 50.0);
        assert_eq!(pts[0], 1.0);
        assert_eq!(*pts.last().unwrap(), 1e4);
        assert!(pts.windows(2).all(|w| w[0] < w[1]));
        assert!((pts[pts.len() - 2] - 1e4).abs() <= PI + 1e-9);
    }
}
