//! Globally adaptive Gauss–Kronrod (7, 15) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

pub const DEFAULT_QUAD_TOL: f64 = 1e-12;
const MAX_PANELS: usize = 8192;

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
/// Gauss weights for the nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs_value: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F>(f: &mut F, a: f64, b: f64) -> Result<Panel>
where
    F: FnMut(f64) -> Result<f64>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut abs_value = WGK[7] * fc.abs();
    for (j, (&x, &w)) in XGK[..7].iter().zip(&WGK[..7]).enumerate() {
        let f1 = f(c - h * x)?;
        let f2 = f(c + h * x)?;
        kronrod += w * (f1 + f2);
        abs_value += w * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    if !(kronrod.is_finite() && abs_value.is_finite()) {
        return Err(Error::Numeric(format!("non-finite integrand on [{a}, {b}]")));
    }
    Ok(Panel {
        a,
        b,
        value: kronrod * h,
        error: ((kronrod - gauss) * h).abs(),
        abs_value: abs_value * h.abs(),
    })
}

/// `∫_a^b f` with absolute error at most `tol`.
///
/// The requested tolerance is floored at `50 ε ∫|f|`, below which the
/// estimate is roundoff-limited.
pub fn quad<F>(f: F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    quad_with_breaks(f, a, b, &[], tol)
}

/// As [`quad`], with no panel straddling any of `breaks`.
pub fn quad_with_breaks<F>(mut f: F, a: f64, b: f64, breaks: &[f64], tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return quad_with_breaks(f, b, a, breaks, tol).map(|v| -v);
    }
    let mut cuts = vec![a];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    inner.sort_by(f64::total_cmp);
    cuts.extend(inner);
    cuts.push(b);

    let mut heap = BinaryHeap::new();
    for w in cuts.windows(2) {
        if w[1] > w[0] {
            heap.push(gk15(&mut f, w[0], w[1])?);
        }
    }
    let mut panels = heap.len();
    loop {
        let value: f64 = heap.iter().map(|p| p.value).sum();
        let error: f64 = heap.iter().map(|p| p.error).sum();
        let abs_value: f64 = heap.iter().map(|p| p.abs_value).sum();
        let target = tol.max(50.0 * f64::EPSILON * abs_value);
        if error <= target {
            return Ok(value);
        }
        if panels >= MAX_PANELS {
            return Err(Error::Quadrature { estimate: value, error });
        }
        let worst = heap.pop().expect("at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::Quadrature { estimate: value, error });
        }
        heap.push(gk15(&mut f, worst.a, mid)?);
        heap.push(gk15(&mut f, mid, worst.b)?);
        panels += 1;
    }
}
