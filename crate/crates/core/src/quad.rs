//! Globally adaptive Gauss–Kronrod (G7/K15) quadrature.
//!
//! The integrator is generic over the integrand's value type so the same
//! engine integrates plain scalars and Taylor jets (differentiation under the
//! integral sign). Errors are QUADPACK-style estimates measured in the max
//! norm of the value type.

use std::ops::{Add, Mul, Sub};

use crate::jet::Jet;

/// Values that can be integrated: a vector space with a norm.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn norm(&self) -> f64;
}

impl QuadValue for f64 {
    #[inline]
    fn norm(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Jet {
    #[inline]
    fn norm(&self) -> f64 {
        self.max_abs()
    }
}

/// A value carried together with an error bound that is integrated alongside
/// it. Nested quadrature uses this to push inner errors through the outer
/// rule; only the value drives refinement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tracked<V> {
    pub v: V,
    pub e: f64,
}

impl<V> Tracked<V> {
    pub fn new(v: V, e: f64) -> Self {
        Tracked { v, e }
    }
}

impl<V: QuadValue> Add for Tracked<V> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Tracked { v: self.v + o.v, e: self.e + o.e }
    }
}

impl<V: QuadValue> Sub for Tracked<V> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Tracked { v: self.v - o.v, e: self.e + o.e }
    }
}

impl<V: QuadValue> Mul<f64> for Tracked<V> {
    type Output = Self;
    fn mul(self, a: f64) -> Self {
        Tracked { v: self.v * a, e: self.e * a.abs() }
    }
}

impl<V: QuadValue> QuadValue for Tracked<V> {
    #[inline]
    fn norm(&self) -> f64 {
        self.v.norm()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { abs_tol: 1e-10, rel_tol: 1e-10, max_intervals: 400 }
    }
}

impl QuadOptions {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        QuadOptions { abs_tol, rel_tol, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<V> {
    pub value: V,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

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
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Segment<V> {
    a: f64,
    b: f64,
    value: V,
    error: f64,
}

fn kronrod15<V: QuadValue, F: FnMut(f64) -> V>(f: &mut F, a: f64, b: f64) -> (V, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut fv: [Option<V>; 15] = [None; 15];
    let fc = f(center);
    fv[7] = Some(fc);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    for i in 0..7 {
        let dx = half * XGK[i];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv[i] = Some(f1);
        fv[14 - i] = Some(f2);
        let s = f1 + f2;
        res_k = res_k + s * WGK[i];
        if i % 2 == 1 {
            res_g = res_g + s * WG[i / 2];
        }
    }
    let mean = res_k * 0.5;
    let mut resasc = WGK[7] * (fc - mean).norm();
    for i in 0..7 {
        let f1 = fv[i].unwrap();
        let f2 = fv[14 - i].unwrap();
        resasc += WGK[i] * ((f1 - mean).norm() + (f2 - mean).norm());
    }
    let resasc = resasc * half.abs();
    let value = res_k * half;
    let mut err = ((res_k - res_g) * half).norm();
    if resasc > 0.0 && err > 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    let resabs = value.norm();
    let floor = 50.0 * f64::EPSILON * resabs;
    if err < floor {
        err = floor;
    }
    (value, err)
}

/// Integrates `f` over `[a, b]`.
pub fn integrate<V, F>(f: F, a: f64, b: f64, opts: &QuadOptions) -> QuadResult<V>
where
    V: QuadValue,
    F: FnMut(f64) -> V,
{
    integrate_pieces(f, &[a, b], opts)
}

/// Integrates `f` over consecutive pieces `[p0, p1], [p1, p2], ...`.
///
/// Breakpoints should sit on kinks of the integrand; zero-length pieces are
/// skipped.
pub fn integrate_pieces<V, F>(mut f: F, breaks: &[f64], opts: &QuadOptions) -> QuadResult<V>
where
    V: QuadValue,
    F: FnMut(f64) -> V,
{
    assert!(breaks.len() >= 2, "need at least one interval");
    let mut segments: Vec<Segment<V>> = Vec::with_capacity(opts.max_intervals + breaks.len());
    let mut evaluations = 0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let (value, error) = kronrod15(&mut f, a, b);
        evaluations += 15;
        segments.push(Segment { a, b, value, error });
    }
    if segments.is_empty() {
        // Degenerate range: the integral of anything over a null set.
        let zero = f(breaks[0]) * 0.0;
        return QuadResult { value: zero, error: 0.0, evaluations: 1, converged: true };
    }

    loop {
        let mut total = segments[0].value;
        let mut err = segments[0].error;
        for s in &segments[1..] {
            total = total + s.value;
            err += s.error;
        }
        let target = opts.abs_tol.max(opts.rel_tol * total.norm());
        if err <= target {
            return QuadResult { value: total, error: err, evaluations, converged: true };
        }
        if segments.len() >= opts.max_intervals {
            return QuadResult { value: total, error: err, evaluations, converged: false };
        }
        let (idx, _) = segments
            .iter()
            .enumerate()
            .filter(|(_, s)| s.b - s.a > 1e-13 * s.a.abs().max(s.b.abs()).max(1e-300))
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .unwrap_or((usize::MAX, &segments[0]));
        if idx == usize::MAX {
            return QuadResult { value: total, error: err, evaluations, converged: false };
        }
        let s = segments.swap_remove(idx);
        let mid = 0.5 * (s.a + s.b);
        let (v1, e1) = kronrod15(&mut f, s.a, mid);
        let (v2, e2) = kronrod15(&mut f, mid, s.b);
        evaluations += 30;
        segments.push(Segment { a: s.a, b: mid, value: v1, error: e1 });
        segments.push(Segment { a: mid, b: s.b, value: v2, error: e2 });
    }
}
