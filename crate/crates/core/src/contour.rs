//! Argument-principle helpers: phase tracking along paths, winding numbers
//! of rectangles and circles, and contour-centroid root refinement.
//!
//! Every routine takes a *log evaluator* `z -> ln|f(z)| + i arg f(z)` so
//! large determinants never overflow.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::wrap_phase;

const MAX_PHASE_STEP: f64 = PI / 2.0;
const MAX_LOG_MOD_STEP: f64 = 1.0;
const MIN_STEP: f64 = 1e-11;

/// Number of boundary perturbations tried before giving up.
pub const PERTURB_ATTEMPTS: usize = 5;

/// Axis-aligned rectangle in the complex plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        if !(re_min < re_max && im_min < im_max) {
            return Err(Error::Domain(format!(
                "empty rectangle [{re_min}, {re_max}] x [{im_min}, {im_max}]"
            )));
        }
        Ok(Self {
            re_min,
            re_max,
            im_min,
            im_max,
        })
    }

    /// Symmetric box `[a, b] x [-h, h]` around a real interval.
    pub fn around_interval(a: f64, b: f64, h: f64) -> Result<Self> {
        Self::new(a, b, -h, h)
    }

    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_min, self.im_min),
            Complex64::new(self.re_max, self.im_min),
            Complex64::new(self.re_max, self.im_max),
            Complex64::new(self.re_min, self.im_max),
        ]
    }
}

fn finite(v: Complex64) -> bool {
    v.re.is_finite() && v.im.is_finite()
}

/// Total change of `arg f` along `path(t)`, `t in [0, 1]`.
///
/// Steps are halved until both halves of each accepted step change the phase
/// by less than `pi/2` and `ln|f|` by less than 1. Fails when the step
/// underflows, which signals a zero or pole on or next to the path.
pub fn phase_change<L, P>(log_f: &L, path: P) -> Result<f64>
where
    L: Fn(Complex64) -> Complex64,
    P: Fn(f64) -> Complex64,
{
    let mut t = 0.0;
    let mut prev = log_f(path(0.0));
    if !finite(prev) {
        return Err(Error::BoundaryProximity { attempts: 0 });
    }
    let mut dt: f64 = 1.0 / 64.0;
    let mut total = 0.0;
    while t < 1.0 {
        let step = dt.min(1.0 - t);
        // the midpoint guards against a full turn hiding inside one step,
        // as when the path passes close to an even-order zero or pole
        let mid = log_f(path(t + 0.5 * step));
        let next = log_f(path(t + step));
        let small = |a: Complex64, b: Complex64| {
            finite(b) && wrap_phase(b.im - a.im).abs() < MAX_PHASE_STEP && (b.re - a.re).abs() < MAX_LOG_MOD_STEP
        };
        if small(prev, mid) && small(mid, next) {
            total += wrap_phase(mid.im - prev.im) + wrap_phase(next.im - mid.im);
            prev = next;
            t += step;
            dt = (step * 1.5).min(1.0 / 16.0);
        } else {
            dt = step * 0.5;
            if dt < MIN_STEP {
                return Err(Error::BoundaryProximity { attempts: 0 });
            }
        }
    }
    Ok(total)
}

fn to_winding(total: f64) -> Result<i64> {
    let w = total / TAU;
    let r = w.round();
    if (w - r).abs() > 1e-3 {
        return Err(Error::Degenerate(format!("non-integer winding {w}")));
    }
    Ok(r as i64)
}

/// Winding number of `f` around the rectangle boundary (zeros minus poles inside).
pub fn winding_rect<L>(log_f: &L, rect: &Rect) -> Result<i64>
where
    L: Fn(Complex64) -> Complex64,
{
    let c = rect.corners();
    let mut total = 0.0;
    for i in 0..4 {
        let (p, q) = (c[i], c[(i + 1) % 4]);
        total += phase_change(log_f, |t| p + (q - p) * t)?;
    }
    to_winding(total)
}

/// Winding number around the circle `|z - center| = radius`.
pub fn winding_circle<L>(log_f: &L, center: Complex64, radius: f64) -> Result<i64>
where
    L: Fn(Complex64) -> Complex64,
{
    let total = phase_change(log_f, |t| center + Complex64::from_polar(radius, TAU * t))?;
    to_winding(total)
}

/// [`winding_rect`] with up to [`PERTURB_ATTEMPTS`] retries that grow the
/// horizontal edges outward by `grow` each time. Returns the count and the
/// rectangle that succeeded.
pub fn winding_rect_perturbed<L>(log_f: &L, rect: &Rect, grow: f64) -> Result<(i64, Rect)>
where
    L: Fn(Complex64) -> Complex64,
{
    let mut r = *rect;
    for attempt in 0..=PERTURB_ATTEMPTS {
        match winding_rect(log_f, &r) {
            Ok(n) => return Ok((n, r)),
            Err(Error::BoundaryProximity { .. }) | Err(Error::Degenerate(_)) => {
                let g = grow * (attempt + 1) as f64;
                r.im_min -= g;
                r.im_max += g;
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::BoundaryProximity {
        attempts: PERTURB_ATTEMPTS,
    })
}

/// [`winding_circle`] retrying with radii scaled by `0.83^j`. Returns the
/// count and the radius used.
pub fn winding_circle_perturbed<L>(log_f: &L, center: Complex64, radius: f64) -> Result<(i64, f64)>
where
    L: Fn(Complex64) -> Complex64,
{
    let mut r = radius;
    for _ in 0..=PERTURB_ATTEMPTS {
        match winding_circle(log_f, center, r) {
            Ok(n) => return Ok((n, r)),
            Err(Error::BoundaryProximity { .. }) | Err(Error::Degenerate(_)) => r *= 0.83,
            Err(e) => return Err(e),
        }
    }
    Err(Error::BoundaryProximity {
        attempts: PERTURB_ATTEMPTS,
    })
}

/// Result of a centroid refinement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Centroid {
    /// Mean location of the zeros inside the circle.
    pub z: Complex64,
    /// Net winding on the circle.
    pub order: i64,
}

/// Samples `log f` on a circle with a continuous branch, doubling the
/// sample count until consecutive phases differ by less than `pi/2`.
fn circle_logs<L>(log_f: &L, center: Complex64, radius: f64, n0: usize) -> Result<(Vec<Complex64>, Vec<Complex64>)>
where
    L: Fn(Complex64) -> Complex64,
{
    let mut n = n0;
    'outer: loop {
        let pts: Vec<Complex64> = (0..n)
            .map(|j| Complex64::from_polar(radius, TAU * j as f64 / n as f64))
            .collect();
        let mut logs = Vec::with_capacity(n + 1);
        for p in &pts {
            let v = log_f(center + p);
            if !finite(v) {
                return Err(Error::BoundaryProximity { attempts: 0 });
            }
            logs.push(v);
        }
        let first = logs[0];
        logs.push(first);
        #[allow(clippy::mut_range_bound)] // the doubling restarts the outer loop
        for j in 1..=n {
            let d = wrap_phase(logs[j].im - logs[j - 1].im);
            if d.abs() >= MAX_PHASE_STEP {
                if n >= 8192 {
                    return Err(Error::BoundaryProximity { attempts: 0 });
                }
                n *= 2;
                continue 'outer;
            }
            logs[j].im = logs[j - 1].im + d;
        }
        return Ok((pts, logs));
    }
}

/// Locates the mean of the zeros inside `|z - center| < radius` from
/// `zeta = z0 - (1 / (2 pi i w)) oint log(f / (z - z0)^w) dz`, where `w` is the
/// net winding. Needs `w > 0` and no poles inside.
pub fn centroid<L>(log_f: &L, center: Complex64, radius: f64) -> Result<Centroid>
where
    L: Fn(Complex64) -> Complex64,
{
    let (pts, logs) = circle_logs(log_f, center, radius, 128)?;
    let n = pts.len();
    let order = to_winding(logs[n].im - logs[0].im)?;
    if order <= 0 {
        return Ok(Centroid { z: center, order });
    }
    let w = order as f64;
    let i = Complex64::new(0.0, 1.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let theta = TAU * j as f64 / n as f64;
        // log f - w log(z - z0) on the same continuous branch
        let g = logs[j] - w * Complex64::new(radius.ln(), theta);
        acc += g * i * pts[j];
    }
    acc *= TAU / n as f64;
    let shift = acc / (TAU * i * w);
    Ok(Centroid {
        z: center - shift,
        order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn polynomial_windings() {
        // (z - 1)^2 (z - 3) / (z - 2)
        let f = |z: Complex64| 2.0 * (z - 1.0).ln() + (z - 3.0).ln() - (z - 2.0).ln();
        let r = Rect::new(0.5, 1.5, -0.5, 0.5).unwrap();
        assert_eq!(winding_rect(&f, &r).unwrap(), 2);
        let r = Rect::new(1.5, 2.5, -0.5, 0.5).unwrap();
        assert_eq!(winding_rect(&f, &r).unwrap(), -1);
        let r = Rect::new(0.0, 4.0, -1.0, 1.0).unwrap();
        assert_eq!(winding_rect(&f, &r).unwrap(), 2);
        let r = Rect::new(4.0, 5.0, -1.0, 1.0).unwrap();
        assert_eq!(winding_rect(&f, &r).unwrap(), 0);
        assert_eq!(winding_circle(&f, c(3.0, 0.0), 0.2).unwrap(), 1);
    }

    #[test]
    fn zero_on_boundary_is_reported_then_perturbed() {
        let f = |z: Complex64| (z - c(1.0, 0.5)).ln();
        let r = Rect::new(0.0, 2.0, -0.5, 0.5).unwrap();
        assert!(winding_rect(&f, &r).is_err());
        let (n, used) = winding_rect_perturbed(&f, &r, 1e-3).unwrap();
        assert_eq!(n, 1);
        assert!(used.im_max > 0.5);
    }

    #[test]
    fn centroid_finds_simple_and_double_zeros() {
        let z0 = c(1.234_567_890_123, 0.0);
        let f = move |z: Complex64| (z - z0).ln() + (z + 2.0).ln();
        let r = centroid(&f, c(1.2, 0.05), 0.2).unwrap();
        assert_eq!(r.order, 1);
        assert!((r.z - z0).norm() < 1e-13);
        let g = move |z: Complex64| 2.0 * (z - z0).ln() + (z * 3.0).exp();
        let r = centroid(&g, c(1.3, 0.0), 0.3).unwrap();
        assert_eq!(r.order, 2);
        assert!((r.z - z0).norm() < 1e-13);
    }

    #[test]
    fn centroid_of_pair_is_mean() {
        let f = |z: Complex64| (z - 1.0).ln() + (z - 1.1).ln();
        let r = centroid(&f, c(1.0, 0.0), 0.5).unwrap();
        assert_eq!(r.order, 2);
        assert!((r.z - c(1.05, 0.0)).norm() < 1e-12);
    }
}
