//! Spectral zeta functions `zeta(s) = sum' lambda^{-s}` and `zeta'(0)` from
//! contour representations.
//!
//! Massless graphs use the branch ray `u e^{-i alpha}`, `alpha in (0, pi)`,
//! in the lower half plane. A negative eigenvalue `-k` then contributes
//! `e^{-i pi s} k^{-s}`, and
//!
//! `zeta(s) = P(s) + w e^{-i(pi-alpha)s} (sin pi s / pi) [I(s) + q/s]`
//!
//! with `I(s) = int_0^inf u^{-s} d/du log(z^q f(z)) du` along the ray (the
//! `z^q` factor dropped beyond `u = 1`), `q` the pole order of `f` at the
//! origin, `P` the lattice pole sum and `w` the degeneracy weight (2 for the
//! scalar rose sum, 1 for the full `4B x 4B` determinant, whose zeros are
//! already double).
//!
//! Massive graphs integrate along both halves of the imaginary axis above
//! `|t| = m` with `t = m cosh(theta)`:
//!
//! `C_h(s) = (1/2 pi i) int (m sinh theta)^{-s} [e^{i pi s/2} l_h^- - e^{-i pi s/2} l_h^+] d theta`
//!
//! where `l_h^{+-} = d/d theta log h(+-i m cosh theta)`, and
//! `zeta = C_f + P_f + e^{-i pi s} (C_g + P_g)`.

use std::f64::consts::{FRAC_PI_2, LN_2, PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::contour::{phase_change, winding_circle_perturbed};
use crate::error::{Error, Result};
use crate::graph::{MetricGraph, RoseGraph, VertexConditions};
use crate::linalg::{wrap_phase, ComplexMatrix};
use crate::quad::TanhSinhRule;
use crate::secular::{block_pair, log_derivative_fd, trace_solve, SecularEvaluator};
use crate::special::{epstein, riemann_zeta};
use crate::spectrum::par_map;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Step used for `zeta'(0)` by central differences.
pub const DERIVATIVE_STEP: f64 = 1e-4;

/// Quadrature and contour settings shared by all representations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ZetaSettings {
    /// Branch angle in `(0, pi)`.
    pub alpha: f64,
    /// A panel is accepted once its fine and coarse sums differ by less
    /// than `tol * max(1, |value|)`.
    pub tol: f64,
    pub max_level: u32,
    /// Samples on the circle used for the Taylor expansion at the origin.
    pub taylor_terms: usize,
    pub parallel: bool,
}

impl Default for ZetaSettings {
    fn default() -> Self {
        Self {
            alpha: FRAC_PI_2,
            tol: 1e-10,
            max_level: 10,
            taylor_terms: 64,
            parallel: true,
        }
    }
}

impl ZetaSettings {
    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    fn check(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < PI) {
            return Err(Error::Domain(format!("branch angle {} must lie in (0, pi)", self.alpha)));
        }
        if !(self.tol > 0.0) || self.taylor_terms < 16 || self.max_level < 4 {
            return Err(Error::Domain("quadrature settings out of range".into()));
        }
        Ok(())
    }
}

/// The three pieces of a representation; `value` is their sum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZetaParts {
    pub pole_sum: Complex64,
    pub branch_integrals: Complex64,
    pub line_term: Complex64,
}

impl ZetaParts {
    pub fn total(&self) -> Complex64 {
        self.pole_sum + self.branch_integrals + self.line_term
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZetaResult {
    pub s: Complex64,
    pub value: Complex64,
    pub err: f64,
    pub parts: ZetaParts,
    pub alpha: f64,
}

/// Lattice correction for one group of equal bond lengths.
///
/// On `k = n pi / L` the matrix form of the secular function is singular
/// and its zero order can differ from the eigenvalue multiplicity, which
/// the evolution-operator form gives. `odd` and `even` are the weights
/// added at each lattice point, by parity of `n`, so that the contour term
/// plus the lattice sum counts every eigenvalue with its true multiplicity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeClass {
    pub length: f64,
    pub bonds: usize,
    pub odd: i32,
    pub even: i32,
}

/// Groups equal lengths and measures, at `n = 1, 2`, the zero order of the
/// evolution form at `sign * n pi / L` minus `weight` times the net order
/// of `eval` at `n pi / L`. The pattern must repeat at `n = 3, 4`.
///
/// Lengths whose lattices meet at `n <= 4` (other than by being equal) are
/// rejected.
pub fn lattice_classes(
    eval: &SecularEvaluator,
    evolution: &SecularEvaluator,
    sign: f64,
    weight: f64,
) -> Result<Vec<LatticeClass>> {
    let mut lengths = eval.lengths().to_vec();
    lengths.sort_by(f64::total_cmp);
    let mut groups: Vec<(f64, usize)> = Vec::new();
    for l in lengths {
        match groups.last_mut() {
            Some((g, n)) if (l - *g).abs() <= 1e-12 * l => *n += 1,
            _ => groups.push((l, 1)),
        }
    }
    let log_f = |z: Complex64| eval.log_eval(z);
    let log_e = |z: Complex64| evolution.log_eval(z);
    let mut out = Vec::with_capacity(groups.len());
    for (ci, &(l, bonds)) in groups.iter().enumerate() {
        let mut net = [0i64; 4];
        for (n, slot) in net.iter_mut().enumerate() {
            let p = (n + 1) as f64 * PI / l;
            let mut nearest = PI / l;
            for (cj, &(other, _)) in groups.iter().enumerate() {
                if cj == ci {
                    continue;
                }
                let x = p * other / PI;
                let d = (x - x.round()).abs() * PI / other;
                if x.round() >= 1.0 && d < 1e-9 * p {
                    return Err(Error::Degenerate(format!(
                        "lengths {l} and {other} share the lattice point {p}"
                    )));
                }
                nearest = nearest.min(d);
            }
            let r = (1e-6 * p.max(1.0)).min(0.25 * nearest);
            let order = winding_circle_perturbed(&log_f, Complex64::new(p, 0.0), r)?.0;
            let true_order = winding_circle_perturbed(&log_e, Complex64::new(sign * p, 0.0), r)?.0;
            let w = true_order as f64 - weight * order as f64;
            if (w - w.round()).abs() > 1e-9 {
                return Err(Error::Degenerate(format!("fractional lattice weight {w} at {p}")));
            }
            *slot = w.round() as i64;
        }
        if net[2] != net[0] || net[3] != net[1] {
            return Err(Error::Degenerate(format!(
                "lattice weights {net:?} at length {l} are not periodic in the parity of n"
            )));
        }
        out.push(LatticeClass {
            length: l,
            bonds,
            odd: net[0] as i32,
            even: net[1] as i32,
        });
    }
    Ok(out)
}

/// Taylor data of `g(z) = z^q f(z)` at the origin, `g(0) = c0 != 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct SmallZExpansion {
    /// `q`, minus the winding of `f` around small circles at 0.
    pub order: i32,
    pub c0: Complex64,
    /// First `n >= 1` with a non-negligible Taylor coefficient.
    pub m_estimate: Option<u32>,
    /// Size of the highest retained coefficients relative to `c0`.
    pub residual: f64,
    /// Circle radius the coefficients were sampled on.
    pub radius: f64,
    scaled: Vec<Complex64>,
}

impl SmallZExpansion {
    /// `n`-th Taylor coefficient of `g`.
    pub fn coefficient(&self, n: usize) -> Complex64 {
        let b0 = self.scaled[0];
        self.c0 * self.scaled.get(n).copied().unwrap_or(ZERO) / b0 / self.radius.powi(n as i32)
    }

    /// Radius inside which [`Self::log_derivative`] is used.
    pub fn safe_radius(&self) -> f64 {
        0.25 * self.radius
    }

    /// `g'(z) / g(z)` from the series.
    pub fn log_derivative(&self, z: Complex64) -> Complex64 {
        let w = z / self.radius;
        let mut g = ZERO;
        let mut dg = ZERO;
        for (n, b) in self.scaled.iter().enumerate().rev() {
            g = g * w + b;
            if n > 0 {
                dg = dg * w + b * n as f64;
            }
        }
        dg / (g * self.radius)
    }
}

/// Samples `z^q f` on a circle inside the first lattice point and
/// extracts Taylor coefficients by discrete Fourier transform.
///
/// `q` is read off windings on radii `r_max / 2^j`; the radius used is the
/// largest one beyond which the winding no longer changes.
pub fn small_z_expansion(eval: &SecularEvaluator, terms: usize) -> Result<SmallZExpansion> {
    let l_max = eval.lengths().iter().copied().fold(0.0, f64::max);
    let r_max = 0.5 * PI / l_max;
    let log_f = |z: Complex64| eval.log_eval(z);
    let mut windings = Vec::new();
    for j in 0..6 {
        windings.push(winding_circle_perturbed(&log_f, ZERO, r_max / f64::from(1 << j))?);
    }
    let last = windings[5].0;
    if windings[4].0 != last {
        return Err(Error::Degenerate("winding at the origin does not stabilise".into()));
    }
    let mut radius = windings[5].1;
    for &(w, r) in windings.iter().rev() {
        if w != last {
            break;
        }
        radius = r;
    }
    let q = -last as i32;
    let n = terms;
    let logs: Vec<Complex64> = (0..n)
        .map(|j| {
            let z = Complex64::from_polar(radius, TAU * j as f64 / n as f64);
            f64::from(q) * z.ln() + eval.log_eval(z)
        })
        .collect();
    if logs.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::NonFinite);
    }
    let shift = logs.iter().map(|v| v.re).fold(f64::NEG_INFINITY, f64::max);
    let vals: Vec<Complex64> = logs.iter().map(|v| (v - shift).exp()).collect();
    let half = n / 2;
    let scaled: Vec<Complex64> = (0..half)
        .map(|k| {
            let mut acc = ZERO;
            for (j, v) in vals.iter().enumerate() {
                acc += v * Complex64::from_polar(1.0, -TAU * (j * k % n) as f64 / n as f64);
            }
            acc / n as f64
        })
        .collect();
    let b0 = scaled[0].norm();
    if b0 < 1e-12 {
        return Err(Error::Degenerate("z^q f(z) vanishes at the origin".into()));
    }
    // rounding noise in vanishing coefficients would spoil u^{-s} g'/g near 0
    let scaled: Vec<Complex64> = scaled
        .into_iter()
        .map(|b| if b.norm() <= 1e-13 * b0 { ZERO } else { b })
        .collect();
    let m_estimate = (1..half).find(|&k| scaled[k].norm() > 1e-10 * b0).map(|k| k as u32);
    let residual = scaled[half - 4..].iter().map(|b| b.norm()).fold(0.0, f64::max) / b0;
    Ok(SmallZExpansion {
        order: q,
        c0: scaled[0] * shift.exp(),
        m_estimate,
        residual,
        radius,
        scaled,
    })
}

/// Small-argument limit by Richardson extrapolation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct C0Estimate {
    pub c0: Complex64,
    /// Fitted power of the leading correction `|f(z) - c0| ~ |z|^M`.
    pub m_estimate: f64,
    /// Set when the limit is zero or no power law was found.
    pub flagged: bool,
}

/// `lim f(eps e^{i alpha})` from `eps = 2^{-j}`, `j = 10..20`.
pub fn c0_extract(eval: &SecularEvaluator, alpha: f64) -> Result<C0Estimate> {
    let dir = Complex64::from_polar(1.0, alpha);
    let vals: Vec<Complex64> = (10..=20).map(|j| eval.eval(dir * 0.5f64.powi(j))).collect();
    if vals.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::NonFinite);
    }
    let diffs: Vec<f64> = vals.windows(2).map(|w| (w[0] - w[1]).norm()).collect();
    let scale = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
    // slope of log|d_j| against log eps_j, from the last half of the points
    let slopes: Vec<f64> = diffs
        .windows(2)
        .filter(|w| w[0] > 0.0 && w[1] > 0.0)
        .map(|w| (w[0] / w[1]).log2())
        .collect();
    // median slope: the smallest eps are limited by rounding, the largest by higher orders
    let m = if slopes.is_empty() {
        f64::INFINITY
    } else {
        let mut sorted = slopes.clone();
        sorted.sort_by(f64::total_cmp);
        sorted[sorted.len() / 2]
    };
    let last = vals[vals.len() - 1];
    let prev = vals[vals.len() - 2];
    let c0 = if m.is_finite() && m > 0.1 {
        let p = 2f64.powf(m);
        (p * last - prev) / (p - 1.0)
    } else {
        last
    };
    let flagged = !(c0.norm() > 1e-8 * scale) || !(m > 0.1);
    Ok(C0Estimate {
        c0,
        m_estimate: m,
        flagged,
    })
}

/// `d/du log f(u d)` for a unit direction `d`, by central differences with
/// step `1e-5 max(1, u)`.
pub fn log_derivative(eval: &SecularEvaluator, u: f64, direction: Complex64) -> Result<Complex64> {
    let z = direction * u;
    let lf = eval.log_eval(z);
    if lf.re < -290.0 * std::f64::consts::LN_10 {
        return Err(Error::Domain(format!("|f| below 1e-290 at u = {u}")));
    }
    log_derivative_fd(&|w| eval.log_eval(w), z, direction, 1e-5 * u.max(1.0))
}

#[derive(Clone, Debug)]
struct Segment<const K: usize> {
    rule: TanhSinhRule,
    ln_base: Vec<f64>,
    values: Vec<[Complex64; K]>,
}

/// Tail beyond the last panel, bounded by `mag base^{-Re s} / (rate + rate_s Re s)`.
#[derive(Clone, Copy, Debug)]
struct TailBound<const K: usize> {
    mags: [f64; K],
    ln_base: f64,
    rate: f64,
    rate_s: f64,
}

/// Integrand samples on fixed rules, reusable for any `s` near the probes.
#[derive(Clone, Debug)]
struct Samples<const K: usize> {
    segments: Vec<Segment<K>>,
    tail: TailBound<K>,
}

impl<const K: usize> Samples<K> {
    fn build<F, B>(
        intervals: &[(f64, f64)],
        ln_base: B,
        f: F,
        probes: &[Complex64],
        tail: TailBound<K>,
        settings: &ZetaSettings,
    ) -> Result<Self>
    where
        F: Fn(f64) -> Result<[Complex64; K]> + Sync + Send,
        B: Fn(f64) -> f64,
    {
        let mut segments = Vec::with_capacity(intervals.len());
        for &(a, b) in intervals {
            let mut accepted = None;
            let mut worst = f64::INFINITY;
            for level in 3..=settings.max_level {
                let rule = TanhSinhRule::new(a, b, level)?;
                let values = par_map(rule.len(), settings.parallel, |i| f(rule.nodes[i]))?;
                let seg = Segment {
                    ln_base: rule.nodes.iter().map(|&x| ln_base(x)).collect(),
                    rule,
                    values,
                };
                worst = probes
                    .iter()
                    .map(|&s| {
                        let (vals, errs) = seg.integrate(s);
                        (0..K)
                            .map(|k| errs[k] / vals[k].norm().max(1.0))
                            .fold(0.0, f64::max)
                    })
                    .fold(0.0, f64::max);
                if worst <= settings.tol {
                    accepted = Some(seg);
                    break;
                }
            }
            match accepted {
                Some(seg) => segments.push(seg),
                None => {
                    return Err(Error::Quadrature(format!(
                        "panel [{a}, {b}] stalled at relative difference {worst:.2e}"
                    )))
                }
            }
        }
        Ok(Self { segments, tail })
    }

    fn integrate(&self, s: Complex64) -> ([Complex64; K], f64) {
        let mut total = [ZERO; K];
        let mut err = 0.0;
        for seg in &self.segments {
            let (v, e) = seg.integrate(s);
            for k in 0..K {
                total[k] += v[k];
            }
            err += e.iter().sum::<f64>();
        }
        let t = &self.tail;
        let denom = t.rate + t.rate_s * s.re;
        let bound = if denom > 0.0 {
            t.mags.iter().sum::<f64>() * (-s.re * t.ln_base).exp() / denom
        } else {
            f64::INFINITY
        };
        (total, err + bound)
    }
}

impl<const K: usize> Segment<K> {
    fn integrate(&self, s: Complex64) -> ([Complex64; K], [f64; K]) {
        let mut fine = [ZERO; K];
        let mut coarse = [ZERO; K];
        for (i, v) in self.values.iter().enumerate() {
            let e = -s * self.ln_base[i];
            let (wf, wc) = (self.rule.fine[i], self.rule.coarse[i]);
            for k in 0..K {
                let n = v[k].norm();
                if n == 0.0 {
                    continue;
                }
                // combined in log form: base^{-s} alone can overflow near u = 0
                let x = v[k] / n * (e + n.ln()).exp();
                fine[k] += x * wf;
                coarse[k] += x * wc;
            }
        }
        let mut err = [0.0; K];
        for k in 0..K {
            err[k] = (fine[k] - coarse[k]).norm();
        }
        (fine, err)
    }
}

/// Common interface of the representations.
pub trait ZetaRepresentation {
    /// `zeta` at every point, sharing one set of quadrature samples.
    fn evaluate(&self, s: &[Complex64]) -> Result<Vec<ZetaResult>>;

    /// `zeta'(0)` from the closed endpoint and pole terms.
    fn zeta_prime_zero_analytic(&self) -> Result<Complex64>;

    fn zeta(&self, s: Complex64) -> Result<ZetaResult> {
        Ok(self.evaluate(&[s])?[0])
    }

    /// `zeta'(0)` by central differences with step [`DERIVATIVE_STEP`] and
    /// two Richardson levels.
    fn zeta_prime_zero(&self) -> Result<Complex64> {
        let h = DERIVATIVE_STEP;
        let pts: Vec<Complex64> = [h, -h, h / 2.0, -h / 2.0, h / 4.0, -h / 4.0]
            .iter()
            .map(|&x| Complex64::new(x, 0.0))
            .collect();
        let v = self.evaluate(&pts)?;
        let d = |i: usize, step: f64| (v[i].value - v[i + 1].value) / (2.0 * step);
        let (d1, d2, d3) = (d(0, h), d(2, h / 2.0), d(4, h / 4.0));
        let r1 = (4.0 * d2 - d1) / 3.0;
        let r2 = (4.0 * d3 - d2) / 3.0;
        Ok((16.0 * r2 - r1) / 15.0)
    }
}

/// `sin(pi s) / (pi s)`.
fn sinc(s: Complex64) -> Complex64 {
    let x = PI * s;
    if x.norm() < 1e-4 {
        ONE - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Massless representation for a rose sum or a general determinant.
#[derive(Clone, Debug)]
pub struct MasslessZeta {
    eval: SecularEvaluator,
    weight: f64,
    settings: ZetaSettings,
    expansion: SmallZExpansion,
    lattice: Vec<LatticeClass>,
    log_limit: Complex64,
    ray_end: f64,
    decay: f64,
}

impl MasslessZeta {
    /// Scalar rose sum with Kramers weight 2.
    pub fn rose(rose: &RoseGraph, settings: ZetaSettings) -> Result<Self> {
        let evolution = SecularEvaluator::evolution(&rose.vertex_conditions(), &rose.graph(), 0.0)?;
        Self::from_evaluator(SecularEvaluator::rose_sum(rose), &evolution, 2.0, settings)
    }

    /// Full determinant `det(A + B M(z))`.
    pub fn general(vc: &VertexConditions, graph: &MetricGraph, settings: ZetaSettings) -> Result<Self> {
        let report = vc.validate();
        if !report.passed {
            return Err(Error::InvalidConditions(report.to_string()));
        }
        let evolution = SecularEvaluator::evolution(vc, graph, 0.0)?;
        Self::from_evaluator(SecularEvaluator::massless(vc, graph)?, &evolution, 1.0, settings)
    }

    fn from_evaluator(
        eval: SecularEvaluator,
        evolution: &SecularEvaluator,
        weight: f64,
        settings: ZetaSettings,
    ) -> Result<Self> {
        settings.check()?;
        let expansion = small_z_expansion(&eval, settings.taylor_terms)?;
        let lattice = lattice_classes(&eval, evolution, 1.0, weight)?;
        let l_min = eval.lengths().iter().copied().fold(f64::INFINITY, f64::min);
        let decay = l_min * settings.alpha.sin();
        let far = Complex64::from_polar(60.0 / l_min, -settings.alpha);
        let log_limit = eval.log_eval(far);
        if !(log_limit.re.is_finite() && log_limit.im.is_finite()) {
            return Err(Error::Singular { cond: f64::INFINITY });
        }
        Ok(Self {
            eval,
            weight,
            settings,
            expansion,
            lattice,
            log_limit,
            ray_end: 1.0 + 40.0 / decay,
            decay,
        })
    }

    pub fn expansion(&self) -> &SmallZExpansion {
        &self.expansion
    }

    pub fn lattice(&self) -> &[LatticeClass] {
        &self.lattice
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn settings(&self) -> &ZetaSettings {
        &self.settings
    }

    /// Limit of the secular function along the ray.
    pub fn limit_at_infinity(&self) -> Complex64 {
        self.log_limit.exp()
    }

    fn direction(&self) -> Complex64 {
        Complex64::from_polar(1.0, -self.settings.alpha)
    }

    /// `d/du log(z^q f(z))` at `z = u e^{-i alpha}`.
    fn kernel_inner(&self, u: f64) -> Result<Complex64> {
        let d = self.direction();
        let z = d * u;
        if u <= self.expansion.safe_radius() {
            Ok(d * self.expansion.log_derivative(z))
        } else {
            Ok(d * (self.eval.log_derivative(z)? + f64::from(self.expansion.order) / z))
        }
    }

    fn kernel_outer(&self, u: f64) -> Result<Complex64> {
        let d = self.direction();
        Ok(d * self.eval.log_derivative(d * u)?)
    }

    fn samples(&self, probes: &[Complex64]) -> Result<(Samples<1>, Samples<1>)> {
        let tail_mag = self.kernel_outer(self.ray_end)?.norm();
        let none = TailBound {
            mags: [0.0],
            ln_base: 0.0,
            rate: 1.0,
            rate_s: 0.0,
        };
        let inner = Samples::build(
            &[(0.0, 1.0)],
            f64::ln,
            |u| Ok([self.kernel_inner(u)?]),
            probes,
            none,
            &self.settings,
        )?;
        let n = (self.ray_end - 1.0).ceil() as usize;
        let step = (self.ray_end - 1.0) / n as f64;
        let intervals: Vec<(f64, f64)> = (0..n).map(|i| (1.0 + step * i as f64, 1.0 + step * (i + 1) as f64)).collect();
        let outer = Samples::build(
            &intervals,
            f64::ln,
            |u| Ok([self.kernel_outer(u)?]),
            probes,
            TailBound {
                mags: [tail_mag],
                ln_base: self.ray_end.ln(),
                rate: self.decay,
                rate_s: 0.0,
            },
            &self.settings,
        )?;
        Ok((inner, outer))
    }

    /// Lattice sum `(1 + e^{-i pi s}) zeta_R(s) sum_L (pi/L)^{-s} [p_o + (p_e - p_o) 2^{-s}]`.
    pub fn pole_sum(&self, s: Complex64) -> Result<Complex64> {
        if self.lattice.iter().all(|c| c.odd == 0 && c.even == 0) {
            return Ok(ZERO);
        }
        let zr = riemann_zeta(s)?;
        let branch = ONE + (-I * PI * s).exp();
        let two = (-s * LN_2).exp();
        let mut acc = ZERO;
        for c in &self.lattice {
            let (wo, we) = (f64::from(c.odd), f64::from(c.even));
            acc += (-s * (PI / c.length).ln()).exp() * (wo + (we - wo) * two);
        }
        Ok(branch * zr * acc)
    }

    /// Derivative of [`Self::pole_sum`] at `s = 0`.
    pub fn pole_sum_prime_zero(&self) -> Complex64 {
        let mut acc = ZERO;
        for c in &self.lattice {
            let (wo, we) = (f64::from(c.odd), f64::from(c.even));
            acc += we * (I * FRAC_PI_2 - (2.0 * c.length).ln()) + (we - wo) * LN_2;
        }
        acc
    }

    fn check_strip(&self, s: Complex64) -> Result<()> {
        if let Some(m) = self.expansion.m_estimate {
            if s.re >= f64::from(m) {
                return Err(Error::StripViolation(format!(
                    "Re s = {} must stay below M = {m}",
                    s.re
                )));
            }
        }
        if (s - ONE).norm() < 1e-12 {
            return Err(Error::Pole("spectral zeta at s = 1".into()));
        }
        Ok(())
    }

    /// Regularized determinant `exp(-zeta'(0))` from endpoint data:
    /// `exp(-P'(0)) e^{i pi q w} (c0 / f_inf)^w`.
    pub fn determinant_closed_form(&self) -> Complex64 {
        let w = self.weight;
        let q = f64::from(self.expansion.order);
        let log = -self.pole_sum_prime_zero() + I * PI * q * w + w * (self.expansion.c0.ln() - self.log_limit);
        log.exp()
    }
}

impl ZetaRepresentation for MasslessZeta {
    fn evaluate(&self, s: &[Complex64]) -> Result<Vec<ZetaResult>> {
        for &x in s {
            self.check_strip(x)?;
        }
        let (inner, outer) = self.samples(s)?;
        let alpha = self.settings.alpha;
        let q = f64::from(self.expansion.order);
        s.iter()
            .map(|&s| {
                let (a, ea) = inner.integrate(s);
                let (b, eb) = outer.integrate(s);
                let rot = (-I * (PI - alpha) * s).exp();
                let pref = self.weight * rot * (PI * s).sin() / PI;
                let parts = ZetaParts {
                    pole_sum: self.pole_sum(s)?,
                    branch_integrals: pref * (a[0] + b[0]),
                    line_term: self.weight * rot * q * sinc(s),
                };
                Ok(ZetaResult {
                    s,
                    value: parts.total(),
                    err: pref.norm() * (ea + eb),
                    parts,
                    alpha,
                })
            })
            .collect()
    }

    /// `P'(0) + w [log(f_inf / c0) - i pi q]`, with the branch of the log
    /// fixed by the quadrature of `d log` along the ray.
    fn zeta_prime_zero_analytic(&self) -> Result<Complex64> {
        let (inner, outer) = self.samples(&[ZERO])?;
        let i0 = inner.integrate(ZERO).0[0] + outer.integrate(ZERO).0[0];
        let q = f64::from(self.expansion.order);
        let principal = self.log_limit - self.expansion.c0.ln();
        let k = ((i0 + I * self.settings.alpha * q - principal).im / TAU).round();
        let log = principal + I * TAU * k;
        Ok(self.pole_sum_prime_zero() + self.weight * (log - I * PI * q))
    }
}

/// Massive representation from both halves of the imaginary axis.
#[derive(Clone, Debug)]
pub struct MassiveZeta {
    a: ComplexMatrix,
    b: ComplexMatrix,
    lengths: Vec<f64>,
    mass: f64,
    settings: ZetaSettings,
    f_lattice: Vec<LatticeClass>,
    g_lattice: Vec<LatticeClass>,
}

/// Which massive secular function.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MassiveBranch {
    /// `f = det(A + gamma B M)`, positive energies.
    F,
    /// `g = det(gamma A - B M)`, negative energies.
    G,
}

impl MassiveZeta {
    pub fn new(vc: &VertexConditions, graph: &MetricGraph, mass: f64, settings: ZetaSettings) -> Result<Self> {
        settings.check()?;
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::Domain(format!("mass {mass} must be positive")));
        }
        let report = vc.validate();
        if !report.passed {
            return Err(Error::InvalidConditions(report.to_string()));
        }
        let f = SecularEvaluator::massive_positive(vc, graph, mass)?;
        let g = SecularEvaluator::massive_negative(vc, graph, mass)?;
        // g(k) is proportional to f(-k), so negative energies sit at -k in the evolution form
        let evolution = SecularEvaluator::evolution(vc, graph, mass)?;
        Ok(Self {
            a: vc.a().clone(),
            b: vc.b().clone(),
            lengths: graph.lengths().to_vec(),
            mass,
            settings,
            f_lattice: lattice_classes(&f, &evolution, 1.0, 1.0)?,
            g_lattice: lattice_classes(&g, &evolution, -1.0, 1.0)?,
        })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn lattice(&self, which: MassiveBranch) -> &[LatticeClass] {
        match which {
            MassiveBranch::F => &self.f_lattice,
            MassiveBranch::G => &self.g_lattice,
        }
    }

    fn coeffs(which: MassiveBranch, gam: Complex64, dgam: Complex64) -> [Complex64; 4] {
        match which {
            MassiveBranch::F => [ONE, gam, ZERO, dgam],
            MassiveBranch::G => [gam, -ONE, dgam, ZERO],
        }
    }

    /// Point `z = sign i m cosh(theta)` with `gamma`, `d gamma / d theta` and `dz / d theta`.
    fn axis_point(&self, theta: f64, sign: f64) -> (Complex64, Complex64, Complex64, Complex64) {
        let (sh, ch) = (theta.sinh(), theta.cosh());
        let m = self.mass;
        let z = Complex64::new(0.0, sign * m * ch);
        let gam = Complex64::new(sh, sign) / ch;
        let dgam = Complex64::new(1.0, -sign * sh) / (ch * ch);
        let dz = Complex64::new(0.0, sign * m * sh);
        (z, gam, dgam, dz)
    }

    /// `d/d theta log h(sign i m cosh theta)`.
    pub fn axis_log_derivative(&self, which: MassiveBranch, theta: f64, sign: f64) -> Result<Complex64> {
        let (z, gam, dgam, dz) = self.axis_point(theta, sign);
        let (x, dx) = block_pair(&self.a, &self.b, &self.lengths, false, z, Self::coeffs(which, gam, dgam), Some(dz))?;
        trace_solve(&x, &dx)
    }

    /// `ln|h| + i arg h` at `sign i m cosh theta`.
    pub fn axis_log_value(&self, which: MassiveBranch, theta: f64, sign: f64) -> Complex64 {
        let (z, gam, dgam, _) = self.axis_point(theta, sign);
        match block_pair(&self.a, &self.b, &self.lengths, false, z, Self::coeffs(which, gam, dgam), None)
            .and_then(|(x, _)| x.log_determinant())
        {
            Ok(ld) => Complex64::new(ld.ln_abs, ld.phase),
            Err(_) => Complex64::new(f64::NAN, f64::NAN),
        }
    }

    /// `d/dt log f_hat(t)` with `f_hat(t) = f(i t)`, `t > m`.
    pub fn f_hat_log_derivative(&self, t: f64) -> Result<Complex64> {
        let m = self.mass;
        if !(t > m) {
            return Err(Error::Domain(format!("need t > m, got {t}")));
        }
        let theta = (t / m).acosh();
        Ok(self.axis_log_derivative(MassiveBranch::F, theta, 1.0)? / (m * theta.sinh()))
    }

    /// Positive-axis integrand `(t^2 - m^2)^{-s/2} d/dt log f_hat(t)`.
    pub fn t_integrand(&self, t: f64, s: Complex64) -> Result<Complex64> {
        let base = (t * t - self.mass * self.mass).ln();
        Ok((-0.5 * s * base).exp() * self.f_hat_log_derivative(t)?)
    }

    fn integrand(&self, theta: f64) -> Result<[Complex64; 4]> {
        Ok([
            self.axis_log_derivative(MassiveBranch::F, theta, 1.0)?,
            self.axis_log_derivative(MassiveBranch::F, theta, -1.0)?,
            self.axis_log_derivative(MassiveBranch::G, theta, 1.0)?,
            self.axis_log_derivative(MassiveBranch::G, theta, -1.0)?,
        ])
    }

    fn samples(&self, probes: &[Complex64]) -> Result<Samples<4>> {
        let m = self.mass;
        let l_min = self.lengths.iter().copied().fold(f64::INFINITY, f64::min);
        let l_max = self.lengths.iter().copied().fold(0.0, f64::max);
        // panels uniform in t up to where coth(t L) has saturated
        let t_sat = (m + 1.0).max(22.0 / l_min);
        let dt = (1.0 / l_max).min(t_sat - m);
        let mut breaks = vec![0.0];
        let mut t = m + dt;
        while t < t_sat {
            breaks.push((t / m).acosh());
            t += dt;
        }
        breaks.push((t_sat / m).acosh());
        // then wide panels until the exponential decay in theta is negligible
        let sigma_min = probes.iter().map(|s| s.re).fold(f64::INFINITY, f64::min);
        if !(sigma_min > -1.0) {
            return Err(Error::StripViolation(format!("Re s = {sigma_min} must exceed -1")));
        }
        let bound = |theta: f64| -> Result<f64> {
            let v = self.integrand(theta)?;
            let mag: f64 = v.iter().map(|x| x.norm()).sum();
            Ok(mag * (-sigma_min * (m * theta.sinh()).ln()).exp() / (1.0 + sigma_min))
        };
        let mut end = *breaks.last().expect("non-empty");
        while bound(end)? > 1e-17 && end < 600.0 {
            end += 2.0;
            breaks.push(end);
        }
        let intervals: Vec<(f64, f64)> = breaks.windows(2).map(|w| (w[0], w[1])).collect();
        let mut mags = [0.0; 4];
        for (k, v) in self.integrand(end)?.iter().enumerate() {
            mags[k] = v.norm();
        }
        Samples::build(
            &intervals,
            |th: f64| (m * th.sinh()).ln(),
            |th| self.integrand(th),
            probes,
            TailBound {
                mags,
                ln_base: (m * end.sinh()).ln(),
                rate: 1.0,
                rate_s: 1.0,
            },
            &self.settings,
        )
    }

    fn lattice_sum(&self, classes: &[LatticeClass], s: Complex64) -> Result<Complex64> {
        let m = self.mass;
        let mut acc = ZERO;
        for c in classes {
            if c.odd == 0 && c.even == 0 {
                continue;
            }
            let l = c.length;
            let all = (-s * (PI / l).ln()).exp() * epstein(s / 2.0, (m * l / PI).powi(2))?;
            let even = (-s * (TAU / l).ln()).exp() * epstein(s / 2.0, (m * l / TAU).powi(2))?;
            acc += f64::from(c.odd) * (all - even) + f64::from(c.even) * even;
        }
        Ok(acc)
    }

    /// `P_f(s) + e^{-i pi s} P_g(s)` with Epstein sums over the lattices.
    pub fn pole_sum(&self, s: Complex64) -> Result<Complex64> {
        Ok(self.lattice_sum(&self.f_lattice, s)? + (-I * PI * s).exp() * self.lattice_sum(&self.g_lattice, s)?)
    }

    /// Derivative of [`Self::pole_sum`] at 0, from `E(0, c) = -1/2` and the
    /// closed form of `E'(0, c)`.
    pub fn pole_sum_prime_zero(&self) -> Complex64 {
        let m = self.mass;
        let part = |classes: &[LatticeClass]| -> (f64, f64) {
            let mut d = 0.0;
            let mut v = 0.0;
            for c in classes {
                let ml = m * c.length;
                let odd = -ml / 4.0 - 0.5 * (-ml).exp().ln_1p();
                let even = 0.5 * m.ln() - ml / 4.0 - 0.5 * (-(-ml).exp_m1()).ln();
                d += f64::from(c.odd) * odd + f64::from(c.even) * even;
                v += -0.5 * f64::from(c.even);
            }
            (d, v)
        };
        let (df, _) = part(&self.f_lattice);
        let (dg, vg) = part(&self.g_lattice);
        Complex64::new(df + dg, -PI * vg)
    }

    /// Number of half-turns of `arg h(i t)` as `t` runs from `m` to infinity,
    /// negated: `p` with `h(i t) ~ gamma_hat^p` in phase.
    pub fn phase_order(&self, which: MassiveBranch) -> Result<i32> {
        let end = self.theta_far();
        let total = phase_change(&|th: Complex64| self.axis_log_value(which, th.re, 1.0), |u| {
            Complex64::new(end * u, 0.0)
        })?;
        let p = -2.0 * total / PI;
        if (p - p.round()).abs() > 1e-6 {
            return Err(Error::Unverifiable(format!(
                "phase change of the imaginary-axis secular function is {total}, not a multiple of pi/2"
            )));
        }
        Ok(p.round() as i32)
    }

    fn theta_far(&self) -> f64 {
        let l_min = self.lengths.iter().copied().fold(f64::INFINITY, f64::min);
        ((40.0 / (self.mass * l_min)).max(2.0)).acosh() + 40.0
    }

    /// Checks that `arg h(i t) - p arg gamma_hat(t)` is constant, which
    /// makes the closed form exact.
    fn check_phase_structure(&self, which: MassiveBranch, p: i32) -> Result<()> {
        let reference = self.axis_log_value(which, 0.0, 1.0).im - f64::from(p) * FRAC_PI_2;
        for &th in &[0.05, 0.3, 0.8, 1.5, 2.5, 4.0, 7.0] {
            let (_, gam, _, _) = self.axis_point(th, 1.0);
            let ph = self.axis_log_value(which, th, 1.0).im - f64::from(p) * gam.arg();
            let d = wrap_phase(ph - reference);
            let d = d.abs().min((d.abs() - PI).abs());
            if d > 1e-8 {
                return Err(Error::Unverifiable(format!(
                    "imaginary-axis phase is not carried by gamma_hat^{p} (deviation {d:.2e} at theta = {th})"
                )));
            }
        }
        Ok(())
    }

    /// `|det(A + B M_hat(m L))|`, `|det(A - iB)|`, `|det(A + iB)|`.
    fn endpoint_moduli(&self) -> Result<(f64, f64, f64)> {
        let at_m = self.axis_log_value(MassiveBranch::F, 0.0, 1.0).re;
        let minus = (&self.a - &self.b.scale(I)).log_determinant()?;
        let plus = (&self.a + &self.b.scale(I)).log_determinant()?;
        if minus.is_zero() || plus.is_zero() {
            return Err(Error::Singular { cond: f64::INFINITY });
        }
        Ok((at_m, minus.ln_abs, plus.ln_abs))
    }

    /// `exp(-zeta'(0))` from [`ZetaRepresentation::zeta_prime_zero_analytic`].
    pub fn determinant_closed_form(&self) -> Result<Complex64> {
        Ok((-self.zeta_prime_zero_analytic()?).exp())
    }
}

impl ZetaRepresentation for MassiveZeta {
    fn evaluate(&self, s: &[Complex64]) -> Result<Vec<ZetaResult>> {
        for &x in s {
            if !(x.re > -1.0 && x.re < 1.0) {
                return Err(Error::StripViolation(format!("Re s = {} outside (-1, 1)", x.re)));
            }
        }
        let samples = self.samples(s)?;
        s.iter()
            .map(|&s| {
                let (v, err) = samples.integrate(s);
                let up = (-I * FRAC_PI_2 * s).exp();
                let down = (I * FRAC_PI_2 * s).exp();
                let c_f = (down * v[1] - up * v[0]) / (TAU * I);
                let c_g = (down * v[3] - up * v[2]) / (TAU * I);
                let neg = (-I * PI * s).exp();
                let parts = ZetaParts {
                    pole_sum: self.pole_sum(s)?,
                    branch_integrals: c_f + neg * c_g,
                    line_term: ZERO,
                };
                Ok(ZetaResult {
                    s,
                    value: parts.total(),
                    err: err / PI,
                    parts,
                    alpha: FRAC_PI_2,
                })
            })
            .collect()
    }

    /// `P'(0) + sum_h [ln|h(i inf) / h(i m)| / 2 - (p_h / 2) ln m] - i pi p_g / 2`.
    ///
    /// Exact when `h(i t) / gamma_hat(t)^{p_h}` has constant phase, which is
    /// verified; otherwise [`Error::Unverifiable`].
    fn zeta_prime_zero_analytic(&self) -> Result<Complex64> {
        let pf = self.phase_order(MassiveBranch::F)?;
        let pg = self.phase_order(MassiveBranch::G)?;
        self.check_phase_structure(MassiveBranch::F, pf)?;
        self.check_phase_structure(MassiveBranch::G, pg)?;
        let (at_m, minus, plus) = self.endpoint_moduli()?;
        let ln_m = self.mass.ln();
        let f_part = 0.5 * (minus - at_m) - 0.5 * f64::from(pf) * ln_m;
        let g_part = 0.5 * (plus - at_m) - 0.5 * f64::from(pg) * ln_m;
        Ok(self.pole_sum_prime_zero() + f_part + g_part - I * FRAC_PI_2 * f64::from(pg))
    }
}

/// `zeta(s)` for a rose from its scalar secular sum.
pub fn zeta_rose(s: Complex64, rose: &RoseGraph, settings: ZetaSettings) -> Result<ZetaResult> {
    MasslessZeta::rose(rose, settings)?.zeta(s)
}

/// `zeta(s)` for general massless vertex conditions.
pub fn zeta_massless(
    s: Complex64,
    vc: &VertexConditions,
    graph: &MetricGraph,
    settings: ZetaSettings,
) -> Result<ZetaResult> {
    MasslessZeta::general(vc, graph, settings)?.zeta(s)
}

/// `zeta(s)` for mass `m > 0`, `-1 < Re s < 1`.
pub fn zeta_massive(
    s: Complex64,
    vc: &VertexConditions,
    graph: &MetricGraph,
    mass: f64,
    settings: ZetaSettings,
) -> Result<ZetaResult> {
    MassiveZeta::new(vc, graph, mass, settings)?.zeta(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::circle_conditions;
    use crate::special::epstein_deriv0;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    fn circle() -> (VertexConditions, MetricGraph) {
        (circle_conditions(), MetricGraph::new(vec![1.0]).unwrap())
    }

    /// `4 (1 + e^{-i pi s}) (2 pi)^{-s} zeta_R(s)`: each `2 pi n` four times.
    fn circle_massless_oracle(s: Complex64) -> Complex64 {
        4.0 * (ONE + (-I * PI * s).exp()) * (-s * TAU.ln()).exp() * riemann_zeta(s).unwrap()
    }

    /// Fourfold `k = 2 pi n` plus `E = +-m` with weight 2 each.
    fn circle_massive_oracle(s: Complex64, m: f64) -> Complex64 {
        let e = epstein(s / 2.0, (m / TAU).powi(2)).unwrap();
        (ONE + (-I * PI * s).exp()) * (4.0 * (-s * TAU.ln()).exp() * e + 2.0 * (-s * m.ln()).exp())
    }

    #[test]
    fn circle_expansion_and_lattice() {
        let (vc, g) = circle();
        let z = MasslessZeta::general(&vc, &g, ZetaSettings::default()).unwrap();
        let e = z.expansion();
        // 4 tan^2(z/2) = z^2 + z^4/6 + ...
        assert_eq!(e.order, -2);
        assert!((e.c0 - ONE).norm() < 1e-12);
        assert_eq!(e.m_estimate, Some(2));
        assert!((e.coefficient(2) - c(1.0 / 6.0, 0.0)).norm() < 1e-10);
        assert_eq!(z.lattice(), &[LatticeClass { length: 1.0, bonds: 1, odd: 2, even: 2 }]);
        assert!((z.limit_at_infinity() - c(-4.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn taylor_log_derivative_matches_exact() {
        let r = RoseGraph::new(vec![1.0, 2f64.sqrt()], vec![0.4, 1.1]).unwrap();
        let eval = SecularEvaluator::rose_sum(&r);
        let e = small_z_expansion(&eval, 64).unwrap();
        assert_eq!(e.order, 1);
        assert!((e.c0.re - r.f_at_zero()).abs() < 1e-12);
        let z = c(0.1, -0.07);
        let exact = eval.log_derivative(z).unwrap() + 1.0 / z;
        assert!((e.log_derivative(z) - exact).norm() < 1e-11);
    }

    #[test]
    fn circle_massless_matches_direct_sum() {
        let (vc, g) = circle();
        let z = MasslessZeta::general(&vc, &g, ZetaSettings::default()).unwrap();
        for s in [c(1.5, 0.0), c(0.5, 0.3), c(-0.7, 0.0), c(0.25, 0.0)] {
            let r = z.zeta(s).unwrap();
            assert!(rel(r.value, circle_massless_oracle(s)) < 1e-9, "s={s}: {} vs {}", r.value, circle_massless_oracle(s));
            assert_eq!(r.parts.total(), r.value);
        }
    }

    #[test]
    fn zeta_at_zero_is_continuous() {
        let (vc, g) = circle();
        let z = MasslessZeta::general(&vc, &g, ZetaSettings::default()).unwrap();
        let v = z.evaluate(&[ZERO, c(1e-7, 0.0)]).unwrap();
        assert!((v[0].value - c(-4.0, 0.0)).norm() < 1e-12);
        assert!((v[0].value - v[1].value).norm() < 1e-5);
    }

    #[test]
    fn circle_massless_determinant() {
        let (vc, g) = circle();
        let z = MasslessZeta::general(&vc, &g, ZetaSettings::default()).unwrap();
        // 4 (-i pi)(-1/2): the (2 pi)^{-s} zeta_R(s) factor has zero slope at 0
        let exact = c(0.0, TAU);
        assert!((z.zeta_prime_zero().unwrap() - exact).norm() < 1e-8);
        assert!((z.zeta_prime_zero_analytic().unwrap() - exact).norm() < 1e-12);
        assert!((z.determinant_closed_form() - ONE).norm() < 1e-12);
    }

    #[test]
    fn rose_determinant_closed_form_and_numeric() {
        let r = RoseGraph::new(vec![1.0], vec![PI]).unwrap();
        let z = MasslessZeta::rose(&r, ZetaSettings::default()).unwrap();
        assert!((z.determinant_closed_form() - c(16.0, 0.0)).norm() < 1e-10);
        let num = (-z.zeta_prime_zero().unwrap()).exp();
        assert!(rel(num, c(16.0, 0.0)) < 1e-7, "{num}");
    }

    #[test]
    fn alpha_independence_massless() {
        let r = RoseGraph::new(vec![1.0, 2f64.sqrt()], vec![0.4, 1.1]).unwrap();
        let pts = [c(0.25, 0.0), c(0.5, 0.3), c(1.5, 0.0)];
        let mut base: Option<Vec<Complex64>> = None;
        for alpha in [PI / 3.0, PI / 2.0, 2.0 * PI / 3.0] {
            let z = MasslessZeta::rose(&r, ZetaSettings::default().with_alpha(alpha)).unwrap();
            let v: Vec<Complex64> = z.evaluate(&pts).unwrap().iter().map(|r| r.value).collect();
            if let Some(b) = &base {
                for (x, y) in v.iter().zip(b) {
                    assert!((x - y).norm() < 1e-9, "alpha={alpha}: {x} vs {y}");
                }
            } else {
                base = Some(v);
            }
        }
    }

    #[test]
    fn rose_and_general_encodings_agree() {
        let r = RoseGraph::new(vec![1.0, 2f64.sqrt()], vec![0.4, 1.1]).unwrap();
        let a = MasslessZeta::rose(&r, ZetaSettings::default()).unwrap();
        let b = MasslessZeta::general(&r.vertex_conditions(), &r.graph(), ZetaSettings::default()).unwrap();
        for s in [c(1.5, 0.0), c(0.3, -0.2)] {
            let (x, y) = (a.zeta(s).unwrap().value, b.zeta(s).unwrap().value);
            assert!(rel(x, y) < 1e-9, "s={s}: {x} vs {y}");
        }
        assert!(rel(a.determinant_closed_form(), b.determinant_closed_form()) < 1e-10);
    }

    #[test]
    fn circle_massive_matches_analytic_spectrum() {
        let (vc, g) = circle();
        for m in [1.0, 0.4] {
            let z = MassiveZeta::new(&vc, &g, m, ZetaSettings::default()).unwrap();
            for s in [c(0.5, 0.0), c(-0.3, 0.0), c(0.2, 0.4)] {
                let v = z.zeta(s).unwrap().value;
                let o = circle_massive_oracle(s, m);
                assert!(rel(v, o) < 1e-9, "m={m} s={s}: {v} vs {o}");
            }
        }
    }

    #[test]
    fn circle_massive_determinant() {
        let (vc, g) = circle();
        let m = 1.0;
        let z = MassiveZeta::new(&vc, &g, m, ZetaSettings::default()).unwrap();
        // zeta(0) = 0 here, so only the bracket contributes: 4 [ln 2 pi + E'(0, (m/2 pi)^2) - ln m]
        let exact = c(4.0 * (TAU.ln() + epstein_deriv0((m / TAU).powi(2)).unwrap() - m.ln()), 0.0);
        assert!((z.zeta_prime_zero().unwrap() - exact).norm() < 1e-8);
        assert!((z.zeta_prime_zero_analytic().unwrap() - exact).norm() < 1e-10);
        let det = z.determinant_closed_form().unwrap();
        let sh = (m / 2.0).sinh();
        assert!(rel(det, c(16.0 * sh.powi(4), 0.0)) < 1e-10);
    }

    #[test]
    fn massive_pole_sum_at_zero() {
        let (vc, g) = circle();
        let z = MassiveZeta::new(&vc, &g, 1.0, ZetaSettings::default()).unwrap();
        // E(0, c) = -1/2 for every c: only the even lattice points survive, weight 2 each in f and g
        assert!((z.pole_sum(ZERO).unwrap() - c(-2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn c0_extract_examples() {
        let r = RoseGraph::new(vec![1.0], vec![FRAC_PI_2]).unwrap();
        let e = c0_extract(&SecularEvaluator::rose(&r), FRAC_PI_2).unwrap();
        assert!((e.c0 - c(-1.0, 0.0)).norm() < 1e-9 && !e.flagged);
        let (vc, g) = circle();
        let f = SecularEvaluator::massless(&vc, &g).unwrap().with_z_power(-2);
        let e = c0_extract(&f, FRAC_PI_2).unwrap();
        // 4 tan^2(z/2) / z^2 -> 1; the matrix form itself loses about 1e-5 at |z| = 1e-6
        assert!((e.c0 - ONE).norm() < 1e-9 && !e.flagged);
        assert!(rel(e.c0, f.eval(c(0.0, 1e-6))) < 1e-4);
        let r0 = RoseGraph::new(vec![1.0, 2.0], vec![0.0, 0.0]).unwrap();
        assert!(c0_extract(&SecularEvaluator::rose(&r0), FRAC_PI_2).unwrap().flagged);
    }

    #[test]
    fn log_derivative_along_ray_matches_rose_formula() {
        let r = RoseGraph::new(vec![1.0, 2f64.sqrt()], vec![0.4, 1.1]).unwrap();
        let eval = SecularEvaluator::rose(&r);
        let d = Complex64::from_polar(1.0, FRAC_PI_2);
        let z = d;
        // f = z S, d/du log f = d (1/z + S'/S)
        let (mut s, mut ds) = (ZERO, ZERO);
        for (&l, &t) in r.lengths().iter().zip(r.thetas()) {
            let w = z * l;
            s += (t.cos() - w.cos()) / w.sin();
            ds += l * (w.sin() * w.sin() - (t.cos() - w.cos()) * w.cos()) / (w.sin() * w.sin());
        }
        let exact = d * (1.0 / z + ds / s);
        assert!((log_derivative(&eval, 1.0, d).unwrap() - exact).norm() < 1e-8);
    }

    #[test]
    fn strips_are_enforced() {
        let (vc, g) = circle();
        assert!(matches!(
            zeta_massless(c(2.5, 0.0), &vc, &g, ZetaSettings::default()),
            Err(Error::StripViolation(_))
        ));
        assert!(matches!(
            zeta_massive(c(1.2, 0.0), &vc, &g, 1.0, ZetaSettings::default()),
            Err(Error::StripViolation(_))
        ));
        assert!(zeta_massless(ONE, &vc, &g, ZetaSettings::default()).is_err());
    }
}
