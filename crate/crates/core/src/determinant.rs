//! Regularized spectral determinants `det' = exp(-zeta'(0))`.
//!
//! Two kinds of closed form are provided. [`DetFormula::Published`] is the
//! textbook expression for each case: [`det_rose`], [`det_massless`],
//! [`det_massive`]. [`DetFormula::Endpoint`] assembles `exp(-zeta'(0))` from
//! the endpoint values of the same contour representation that the numeric
//! path integrates, see [`MasslessZeta::determinant_closed_form`] and
//! [`MassiveZeta::determinant_closed_form`]. The two agree on the rose family
//! and differ where the published forms assume a generic small-`z` limit.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{MetricGraph, RoseGraph, VertexConditions};
use crate::linalg::ComplexMatrix;
use crate::secular::block_pair;
use crate::zeta::{MassiveZeta, MasslessZeta, ZetaRepresentation, ZetaSettings};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// A closed form next to the numeric `exp(-zeta'(0))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetResult {
    pub closed_form: Complex64,
    pub via_zeta: Option<Complex64>,
    /// `|closed - via_zeta| / |closed|` when both are present.
    pub rel_discrepancy: Option<f64>,
}

impl DetResult {
    pub fn new(closed_form: Complex64, via_zeta: Option<Complex64>) -> Self {
        let rel_discrepancy = via_zeta.map(|v| (closed_form - v).norm() / closed_form.norm());
        Self {
            closed_form,
            via_zeta,
            rel_discrepancy,
        }
    }
}

/// Which closed form to compare against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetFormula {
    Published,
    Endpoint,
}

/// `(-1)^{B+1} / B^2 (sum_b (cos theta_b - 1) / L_b)^2 prod_b (2 L_b)^2`.
pub fn det_rose(rose: &RoseGraph) -> Result<Complex64> {
    let f0 = rose.f_at_zero();
    if f0.abs() < 1e-12 {
        return Err(Error::Degenerate(
            "sum of (cos theta - 1)/L vanishes: zero mode present".into(),
        ));
    }
    let b = rose.bond_count() as i32;
    let prod: f64 = rose.lengths().iter().map(|l| (2.0 * l).powi(2)).product();
    let sign = if b % 2 == 0 { -1.0 } else { 1.0 };
    Ok(Complex64::new(sign * f0 * f0 * prod / f64::from(b * b), 0.0))
}

fn bond_sign(b: usize) -> f64 {
    if b.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn nonsingular(m: &ComplexMatrix) -> Result<Complex64> {
    let ld = m.log_determinant()?;
    if ld.is_zero() {
        return Err(Error::Singular { cond: f64::INFINITY });
    }
    Ok(ld.to_complex())
}

/// `c0^2 (-1)^B / det(A - iB)^2 prod_b (2 L_b)^2`.
pub fn det_massless(vc: &VertexConditions, graph: &MetricGraph, c0: Complex64) -> Result<Complex64> {
    vc.check_graph(graph)?;
    if c0.norm() == 0.0 || !c0.re.is_finite() || !c0.im.is_finite() {
        return Err(Error::Degenerate("c0 must be finite and non-zero".into()));
    }
    let d = nonsingular(&(vc.a() - &vc.b().scale(I)))?;
    let prod: f64 = graph.lengths().iter().map(|l| (2.0 * l).powi(2)).product();
    Ok(c0 * c0 * bond_sign(graph.bond_count()) * prod / (d * d))
}

/// `det(A + i B M_hat(mL))^2 / (det(A + B) det(A - B)) (-1)^B prod_b (2 sinh(m L_b) / m)^2`.
pub fn det_massive(vc: &VertexConditions, graph: &MetricGraph, mass: f64) -> Result<Complex64> {
    vc.check_graph(graph)?;
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::Domain(format!("mass {mass} must be positive")));
    }
    let plus = nonsingular(&(vc.a() + vc.b()))?;
    let minus = nonsingular(&(vc.a() - vc.b()))?;
    // A + i B M_hat(mL) is the imaginary-axis block pair at z = i m with unit coefficients
    let (x, _) = block_pair(
        vc.a(),
        vc.b(),
        graph.lengths(),
        false,
        Complex64::new(0.0, mass),
        [ONE, ONE, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)],
        None,
    )?;
    let top = x.log_determinant()?.to_complex();
    let prod: f64 = graph
        .lengths()
        .iter()
        .map(|l| (2.0 * (mass * l).sinh() / mass).powi(2))
        .product();
    Ok(top * top / (plus * minus) * bond_sign(graph.bond_count()) * prod)
}

/// Rose closed form against `exp(-zeta'(0))` from the scalar representation.
pub fn check_rose(rose: &RoseGraph, settings: ZetaSettings) -> Result<DetResult> {
    let closed = det_rose(rose)?;
    let z = MasslessZeta::rose(rose, settings)?;
    Ok(DetResult::new(closed, Some((-z.zeta_prime_zero()?).exp())))
}

/// Massless closed form against `exp(-zeta'(0))` from the determinant
/// representation. The published form takes `c0` from the same expansion.
pub fn check_massless(
    vc: &VertexConditions,
    graph: &MetricGraph,
    formula: DetFormula,
    settings: ZetaSettings,
) -> Result<DetResult> {
    let z = MasslessZeta::general(vc, graph, settings)?;
    let closed = match formula {
        DetFormula::Published => det_massless(vc, graph, z.expansion().c0)?,
        DetFormula::Endpoint => z.determinant_closed_form(),
    };
    Ok(DetResult::new(closed, Some((-z.zeta_prime_zero()?).exp())))
}

/// Massive closed form against `exp(-zeta'(0))`.
pub fn check_massive(
    vc: &VertexConditions,
    graph: &MetricGraph,
    mass: f64,
    formula: DetFormula,
    settings: ZetaSettings,
) -> Result<DetResult> {
    let z = MassiveZeta::new(vc, graph, mass, settings)?;
    let closed = match formula {
        DetFormula::Published => det_massive(vc, graph, mass)?,
        DetFormula::Endpoint => z.determinant_closed_form()?,
    };
    Ok(DetResult::new(closed, Some((-z.zeta_prime_zero()?).exp())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::circle_conditions;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rose_formula_examples() {
        let r = RoseGraph::new(vec![1.0], vec![PI]).unwrap();
        assert!((det_rose(&r).unwrap() - c(16.0, 0.0)).norm() < 1e-12);
        let r = RoseGraph::new(vec![1.0, 1.0], vec![PI, PI]).unwrap();
        assert!((det_rose(&r).unwrap() - c(-64.0, 0.0)).norm() < 1e-12);
        let r = RoseGraph::new(vec![1.0, 2.0], vec![0.0, 0.0]).unwrap();
        assert!(matches!(det_rose(&r), Err(Error::Degenerate(_))));
    }

    #[test]
    fn rose_numeric_matches_formula() {
        let s = ZetaSettings::default();
        for (l, t) in [(vec![1.0], vec![PI]), (vec![1.0, 2f64.sqrt()], vec![0.4, 1.1])] {
            let r = RoseGraph::new(l, t).unwrap();
            let d = check_rose(&r, s).unwrap();
            assert!(d.rel_discrepancy.unwrap() < 1e-7, "{d:?}");
        }
    }

    #[test]
    fn equal_length_rose_numeric() {
        let r = RoseGraph::new(vec![1.0, 1.0], vec![PI, PI]).unwrap();
        let d = check_rose(&r, ZetaSettings::default()).unwrap();
        assert!(d.rel_discrepancy.unwrap() < 1e-7, "{d:?}");
    }

    #[test]
    fn endpoint_forms_match_numeric() {
        let s = ZetaSettings::default();
        let g = MetricGraph::new(vec![1.0]).unwrap();
        let d = check_massless(&circle_conditions(), &g, DetFormula::Endpoint, s).unwrap();
        assert!(d.rel_discrepancy.unwrap() < 1e-7, "{d:?}");
        let d = check_massive(&circle_conditions(), &g, 1.0, DetFormula::Endpoint, s).unwrap();
        assert!(d.rel_discrepancy.unwrap() < 1e-7, "{d:?}");
    }

    #[test]
    fn rose_as_general_agrees_with_rose() {
        let s = ZetaSettings::default();
        for (l, t) in [(vec![1.0], vec![PI]), (vec![1.0, 2f64.sqrt()], vec![0.4, 1.1])] {
            let r = RoseGraph::new(l, t).unwrap();
            let rose = det_rose(&r).unwrap();
            let e = check_massless(&r.vertex_conditions(), &r.graph(), DetFormula::Endpoint, s).unwrap();
            assert!((e.closed_form - rose).norm() / rose.norm() < 1e-8, "{e:?} vs {rose}");
            assert!((e.via_zeta.unwrap() - rose).norm() / rose.norm() < 1e-7);
        }
    }

    #[test]
    fn massive_rose_endpoint_form() {
        let r = RoseGraph::new(vec![1.0], vec![FRAC_PI_2]).unwrap();
        let d = check_massive(&r.vertex_conditions(), &r.graph(), 1.0, DetFormula::Endpoint, ZetaSettings::default())
            .unwrap();
        assert!(d.rel_discrepancy.unwrap() < 1e-7, "{d:?}");
    }

    #[test]
    fn large_mass_slope() {
        // log det' grows like 2 m sum L once e^{-mL} is negligible
        let g = MetricGraph::new(vec![1.0]).unwrap();
        let s = ZetaSettings::default();
        let ld = |m: f64| {
            MassiveZeta::new(&circle_conditions(), &g, m, s)
                .unwrap()
                .determinant_closed_form()
                .unwrap()
                .norm()
                .ln()
        };
        let slope = ld(9.0) - ld(8.0);
        assert!((slope - 2.0).abs() < 0.02, "{slope}");
    }

    #[test]
    fn published_massless_scaling() {
        // L -> 2L multiplies the published form by 2^{2B} (c0 ratio)^2
        let r1 = RoseGraph::new(vec![1.0], vec![1.0]).unwrap();
        let r2 = RoseGraph::new(vec![2.0], vec![1.0]).unwrap();
        let (vc, g1, g2) = (r1.vertex_conditions(), r1.graph(), r2.graph());
        let (c1, c2) = (c(3.0, 0.5), c(1.5, -0.2));
        let ratio = det_massless(&vc, &g2, c2).unwrap() / det_massless(&vc, &g1, c1).unwrap();
        let expect = 4.0 * (c2 / c1).powi(2);
        assert!((ratio - expect).norm() < 1e-12);
    }

    #[test]
    fn singular_conditions_are_reported() {
        let g = MetricGraph::new(vec![1.0]).unwrap();
        // circle: A + B is invertible, A - B too; a zero c0 is refused
        assert!(det_massless(&circle_conditions(), &g, c(0.0, 0.0)).is_err());
        assert!(det_massive(&circle_conditions(), &g, -1.0).is_err());
    }
}
