//! Metric graphs and Dirac vertex conditions.
//!
//! Vertex conditions are a pair of `4B x 4B` matrices `(A, B)` acting on the
//! endpoint vectors `psi+`/`psi-`. Endpoint ordering is part of the public
//! contract: all bond origins first (bond 1..B), then all termini, with two
//! spinor components per endpoint. Connectivity lives entirely in `(A, B)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, DEFAULT_RANK_TOL, DEFAULT_STRUCTURE_TOL};

/// Tolerance for SU(2) membership of spin rotations.
pub const SU2_TOL: f64 = 1e-10;

/// Bond lengths of a finite metric graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricGraph {
    lengths: Vec<f64>,
}

impl MetricGraph {
    pub fn new(lengths: Vec<f64>) -> Result<Self> {
        if lengths.is_empty() {
            return Err(Error::InvalidGraph("a graph needs at least one bond".into()));
        }
        if let Some(l) = lengths.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::InvalidGraph(format!("bond length {l} is not positive and finite")));
        }
        Ok(Self { lengths })
    }

    pub fn bond_count(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn min_length(&self) -> f64 {
        self.lengths.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_length(&self) -> f64 {
        self.lengths.iter().copied().fold(0.0, f64::max)
    }

    pub fn total_length(&self) -> f64 {
        self.lengths.iter().sum()
    }

    /// Lengths repeated once per spinor component: `diag(L1, L1, ..., LB, LB)`.
    pub fn doubled_lengths(&self) -> Vec<f64> {
        self.lengths.iter().flat_map(|&l| [l, l]).collect()
    }
}

/// Outcome of the self-adjointness check on `(A, B)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub size: usize,
    pub rank: usize,
    pub hermitian_residual: f64,
    pub passed: bool,
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "matrix size      : {}", self.size)?;
        writeln!(f, "rank([A|B])      : {} (required {})", self.rank, self.size)?;
        writeln!(f, "max|AB^+ - BA^+| : {:.3e}", self.hermitian_residual)?;
        write!(f, "self-adjoint     : {}", if self.passed { "yes" } else { "no" })
    }
}

/// General vertex conditions `A psi+ + B psi- = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexConditions {
    a: ComplexMatrix,
    b: ComplexMatrix,
}

impl VertexConditions {
    /// Wraps `(A, B)` after checking shapes; self-adjointness is checked by
    /// [`VertexConditions::validate`].
    pub fn new(a: ComplexMatrix, b: ComplexMatrix) -> Result<Self> {
        if !a.is_square() || !b.is_square() || a.rows() != b.rows() {
            return Err(Error::DimensionMismatch(format!(
                "A is {}x{}, B is {}x{}",
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols()
            )));
        }
        if a.rows() == 0 || !a.rows().is_multiple_of(4) {
            return Err(Error::DimensionMismatch(format!(
                "vertex matrices must be 4B x 4B, got {}",
                a.rows()
            )));
        }
        Ok(Self { a, b })
    }

    /// Like [`VertexConditions::new`] but also requires a passing validation.
    pub fn self_adjoint(a: ComplexMatrix, b: ComplexMatrix) -> Result<Self> {
        let vc = Self::new(a, b)?;
        let report = vc.validate();
        if !report.passed {
            return Err(Error::InvalidConditions(format!(
                "rank {} of {}, hermitian residual {:.3e}",
                report.rank, report.size, report.hermitian_residual
            )));
        }
        Ok(vc)
    }

    pub fn a(&self) -> &ComplexMatrix {
        &self.a
    }

    pub fn b(&self) -> &ComplexMatrix {
        &self.b
    }

    pub fn size(&self) -> usize {
        self.a.rows()
    }

    pub fn bond_count(&self) -> usize {
        self.a.rows() / 4
    }

    /// Checks `rank([A|B]) = 4B` and `AB†` Hermitian.
    pub fn validate(&self) -> ValidationReport {
        let size = self.size();
        let rank = self
            .a
            .hcat(&self.b)
            .map(|m| m.rank(DEFAULT_RANK_TOL))
            .unwrap_or(0);
        let ab = &self.a * &self.b.adjoint();
        let scale = self.a.max_abs().max(self.b.max_abs()).max(1.0);
        let hermitian_residual = ab.hermitian_residual().unwrap_or(f64::INFINITY);
        ValidationReport {
            size,
            rank,
            hermitian_residual,
            passed: rank == size && hermitian_residual <= DEFAULT_STRUCTURE_TOL * scale * scale,
        }
    }

    /// Checks that the conditions fit `graph`.
    pub fn check_graph(&self, graph: &MetricGraph) -> Result<()> {
        if self.bond_count() != graph.bond_count() {
            return Err(Error::DimensionMismatch(format!(
                "conditions are for {} bonds, graph has {}",
                self.bond_count(),
                graph.bond_count()
            )));
        }
        Ok(())
    }
}

/// A validated SU(2) matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Su2(ComplexMatrix);

impl Su2 {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if m.rows() != 2 || m.cols() != 2 {
            return Err(Error::NotSu2(format!("shape {}x{}", m.rows(), m.cols())));
        }
        let unit = m.unitary_residual()?;
        let det = m.determinant()?;
        if unit > SU2_TOL || (det - Complex64::new(1.0, 0.0)).norm() > SU2_TOL {
            return Err(Error::NotSu2(format!(
                "unitarity residual {unit:.2e}, det {det}"
            )));
        }
        Ok(Self(m))
    }

    pub fn identity() -> Self {
        Self(ComplexMatrix::identity(2))
    }

    /// `diag(e^{i phi}, e^{-i phi})`.
    pub fn phase(phi: f64) -> Self {
        Self(ComplexMatrix::from_diag(&[
            Complex64::from_polar(1.0, phi),
            Complex64::from_polar(1.0, -phi),
        ]))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    /// Inverse of an SU(2) element is its adjoint.
    pub fn inverse(&self) -> ComplexMatrix {
        self.0.adjoint()
    }
}

/// Angle `theta in [0, pi]` with `cos theta = tr(u_o u_t^{-1}) / 2`.
pub fn theta_from_su2(u_origin: &Su2, u_terminus: &Su2) -> f64 {
    let w = u_origin.matrix() * &u_terminus.inverse();
    let half_trace = 0.5 * (w[(0, 0)] + w[(1, 1)]).re;
    half_trace.clamp(-1.0, 1.0).acos()
}

/// Time-reversal form `A = (Ã ⊗ I2) U`, `B = (B̃ ⊗ I2) U`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinVertexConditions {
    pub a_tilde: ComplexMatrix,
    pub b_tilde: ComplexMatrix,
    pub u_origin: Vec<Su2>,
    pub u_terminus: Vec<Su2>,
}

impl SpinVertexConditions {
    pub fn new(
        a_tilde: ComplexMatrix,
        b_tilde: ComplexMatrix,
        u_origin: Vec<Su2>,
        u_terminus: Vec<Su2>,
    ) -> Result<Self> {
        let n = a_tilde.rows();
        if !a_tilde.is_square() || !b_tilde.is_square() || b_tilde.rows() != n || !n.is_multiple_of(2) || n == 0
        {
            return Err(Error::DimensionMismatch(format!(
                "Ã and B̃ must be 2B x 2B, got {}x{} and {}x{}",
                a_tilde.rows(),
                a_tilde.cols(),
                b_tilde.rows(),
                b_tilde.cols()
            )));
        }
        let bonds = n / 2;
        if u_origin.len() != bonds || u_terminus.len() != bonds {
            return Err(Error::DimensionMismatch(format!(
                "need {bonds} origin and terminus rotations, got {} and {}",
                u_origin.len(),
                u_terminus.len()
            )));
        }
        let svc = Self {
            a_tilde,
            b_tilde,
            u_origin,
            u_terminus,
        };
        let rank = svc.a_tilde.hcat(&svc.b_tilde)?.rank(DEFAULT_RANK_TOL);
        if rank != n {
            return Err(Error::InvalidConditions(format!("rank([Ã|B̃]) = {rank}, need {n}")));
        }
        let res = (&svc.a_tilde * &svc.b_tilde.adjoint()).hermitian_residual()?;
        if res > DEFAULT_STRUCTURE_TOL * svc.a_tilde.max_abs().max(svc.b_tilde.max_abs()).max(1.0).powi(2) {
            return Err(Error::InvalidConditions(format!("ÃB̃† not Hermitian (residual {res:.2e})")));
        }
        Ok(svc)
    }

    pub fn bond_count(&self) -> usize {
        self.u_origin.len()
    }

    /// Per-bond spin rotation angles.
    pub fn thetas(&self) -> Vec<f64> {
        self.u_origin
            .iter()
            .zip(&self.u_terminus)
            .map(|(o, t)| theta_from_su2(o, t))
            .collect()
    }

    /// Block-diagonal `U = diag(u_o^1..u_o^B, u_t^1..u_t^B)`.
    pub fn u_matrix(&self) -> ComplexMatrix {
        let bonds = self.bond_count();
        let mut u = ComplexMatrix::zeros(4 * bonds, 4 * bonds);
        for (slot, rot) in self.u_origin.iter().chain(&self.u_terminus).enumerate() {
            for i in 0..2 {
                for j in 0..2 {
                    u[(2 * slot + i, 2 * slot + j)] = rot.matrix()[(i, j)];
                }
            }
        }
        u
    }

    /// Expands to the full `4B x 4B` pair.
    pub fn expand(&self) -> Result<VertexConditions> {
        let id2 = ComplexMatrix::identity(2);
        let u = self.u_matrix();
        let a = &self.a_tilde.kron(&id2) * &u;
        let b = &self.b_tilde.kron(&id2) * &u;
        VertexConditions::new(a, b)
    }

    /// True when Ã and B̃ have vanishing imaginary parts.
    pub fn is_real(&self) -> bool {
        self.a_tilde
            .as_slice()
            .iter()
            .chain(self.b_tilde.as_slice())
            .all(|z| z.im == 0.0)
    }
}

/// The Neumann-like single-vertex matrices for a rose with `bonds` loops:
/// Ã is the (1, -1) difference chain with a zero last row, B̃ is zero except
/// for a last row of ones. Spin rotations are all the identity.
pub fn rose_conditions(bonds: usize) -> Result<SpinVertexConditions> {
    if bonds == 0 {
        return Err(Error::InvalidGraph("a rose needs at least one bond".into()));
    }
    let n = 2 * bonds;
    let mut at = ComplexMatrix::zeros(n, n);
    let mut bt = ComplexMatrix::zeros(n, n);
    for i in 0..n - 1 {
        at[(i, i)] = Complex64::new(1.0, 0.0);
        at[(i, i + 1)] = Complex64::new(-1.0, 0.0);
    }
    for j in 0..n {
        bt[(n - 1, j)] = Complex64::new(1.0, 0.0);
    }
    SpinVertexConditions::new(
        at,
        bt,
        vec![Su2::identity(); bonds],
        vec![Su2::identity(); bonds],
    )
}

/// Periodic matching `v(0) = v(L)`, `w(0) = w(L)` on a single loop.
///
/// With `psi+ = (v(0), v(L))` and `psi- = (w(0), -w(L))` this is
/// `A = [[I, -I], [0, 0]]`, `B = [[0, 0], [I, I]]` (4x4).
pub fn circle_conditions() -> VertexConditions {
    let one = Complex64::new(1.0, 0.0);
    let mut a = ComplexMatrix::zeros(4, 4);
    let mut b = ComplexMatrix::zeros(4, 4);
    for i in 0..2 {
        a[(i, i)] = one;
        a[(i, i + 2)] = -one;
        b[(i + 2, i)] = one;
        b[(i + 2, i + 2)] = one;
    }
    VertexConditions::new(a, b).expect("circle matrices are 4x4")
}

/// A rose graph: one vertex, `B` loops with spin rotation angles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoseGraph {
    lengths: Vec<f64>,
    thetas: Vec<f64>,
}

impl RoseGraph {
    pub fn new(lengths: Vec<f64>, thetas: Vec<f64>) -> Result<Self> {
        MetricGraph::new(lengths.clone())?;
        if thetas.len() != lengths.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} lengths but {} angles",
                lengths.len(),
                thetas.len()
            )));
        }
        if let Some(t) = thetas.iter().find(|t| !(0.0..=PI).contains(*t)) {
            return Err(Error::InvalidGraph(format!("angle {t} outside [0, pi]")));
        }
        Ok(Self { lengths, thetas })
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn bond_count(&self) -> usize {
        self.lengths.len()
    }

    pub fn graph(&self) -> MetricGraph {
        MetricGraph::new(self.lengths.clone()).expect("validated on construction")
    }

    /// `f(0) = sum_b (cos theta_b - 1) / L_b`.
    pub fn f_at_zero(&self) -> f64 {
        self.lengths
            .iter()
            .zip(&self.thetas)
            .map(|(l, t)| (t.cos() - 1.0) / l)
            .sum()
    }

    /// Time-reversal form realising the angles with
    /// `u_o = diag(e^{i theta}, e^{-i theta})` and `u_t = I`.
    pub fn spin_conditions(&self) -> SpinVertexConditions {
        let mut svc = rose_conditions(self.bond_count()).expect("bond count >= 1");
        svc.u_origin = self.thetas.iter().map(|&t| Su2::phase(t)).collect();
        svc
    }

    pub fn vertex_conditions(&self) -> VertexConditions {
        self.spin_conditions().expand().expect("rose expansion is square")
    }
}

/// Mass and branch-cut angle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiracParams {
    pub mass: f64,
    pub branch_angle: f64,
}

impl Default for DiracParams {
    fn default() -> Self {
        Self {
            mass: 0.0,
            branch_angle: PI / 2.0,
        }
    }
}

impl DiracParams {
    pub fn new(mass: f64, branch_angle: f64) -> Result<Self> {
        if !(mass.is_finite() && mass >= 0.0) {
            return Err(Error::InvalidGraph(format!("mass {mass} must be >= 0")));
        }
        if !(branch_angle > 0.0 && branch_angle < PI) {
            return Err(Error::InvalidGraph(format!(
                "branch angle {branch_angle} outside (0, pi)"
            )));
        }
        Ok(Self { mass, branch_angle })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn graph_rejects_bad_lengths() {
        assert!(MetricGraph::new(vec![]).is_err());
        assert!(MetricGraph::new(vec![1.0, -1.0]).is_err());
        assert!(MetricGraph::new(vec![f64::INFINITY]).is_err());
        assert_eq!(MetricGraph::new(vec![1.0, 2.0]).unwrap().doubled_lengths(), vec![1.0, 1.0, 2.0, 2.0]);
    }

    #[test]
    fn dirichlet_like_passes_and_zero_fails() {
        let vc = VertexConditions::new(ComplexMatrix::identity(8), ComplexMatrix::zeros(8, 8)).unwrap();
        let r = vc.validate();
        assert!(r.passed);
        assert_eq!(r.rank, 8);
        let vc = VertexConditions::new(ComplexMatrix::zeros(4, 4), ComplexMatrix::zeros(4, 4)).unwrap();
        let r = vc.validate();
        assert!(!r.passed);
        assert_eq!(r.rank, 0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        assert!(VertexConditions::new(ComplexMatrix::identity(4), ComplexMatrix::identity(8)).is_err());
        assert!(VertexConditions::new(ComplexMatrix::identity(6), ComplexMatrix::identity(6)).is_err());
    }

    #[test]
    fn rose_matrices_match_display() {
        let svc = rose_conditions(1).unwrap();
        let at = ComplexMatrix::from_real_rows(&[&[1.0, -1.0], &[0.0, 0.0]]).unwrap();
        let bt = ComplexMatrix::from_real_rows(&[&[0.0, 0.0], &[1.0, 1.0]]).unwrap();
        assert_eq!(svc.a_tilde, at);
        assert_eq!(svc.b_tilde, bt);
        let svc = rose_conditions(2).unwrap();
        assert_eq!(svc.a_tilde.row(2), &[c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)]);
        assert!(svc.b_tilde.row(3).iter().all(|z| *z == c(1.0, 0.0)));
    }

    #[test]
    fn rose_products_vanish_for_all_sizes() {
        for bonds in 1..=16 {
            let svc = rose_conditions(bonds).unwrap();
            assert_eq!((&svc.a_tilde * &svc.b_tilde.adjoint()).max_abs(), 0.0);
            // rank([Ã|B̃]) = 2B, hand row reduction gives 2B-1 chain rows plus the ones row
            assert_eq!(svc.a_tilde.hcat(&svc.b_tilde).unwrap().rank(1e-10), 2 * bonds);
        }
    }

    #[test]
    fn expanded_rose_validates_with_exact_zero_product() {
        let rose = RoseGraph::new(vec![1.0, 2f64.sqrt()], vec![0.4, 1.1]).unwrap();
        let vc = rose.vertex_conditions();
        let r = vc.validate();
        assert!(r.passed, "{r}");
        assert!((&vc.a().clone() * &vc.b().adjoint()).max_abs() < 1e-15);
    }

    #[test]
    fn trivial_expansion_is_kron_with_identity() {
        let svc = SpinVertexConditions::new(
            ComplexMatrix::identity(2),
            ComplexMatrix::zeros(2, 2),
            vec![Su2::identity()],
            vec![Su2::identity()],
        )
        .unwrap();
        let vc = svc.expand().unwrap();
        assert_eq!(vc.a(), &ComplexMatrix::identity(4));
        assert_eq!(vc.b(), &ComplexMatrix::zeros(4, 4));
    }

    #[test]
    fn rose_b1_expansion_validates() {
        let vc = rose_conditions(1).unwrap().expand().unwrap();
        assert_eq!(vc.size(), 4);
        assert!(vc.validate().passed);
    }

    #[test]
    fn circle_validates_and_equals_untwisted_rose() {
        let circle = circle_conditions();
        assert!(circle.validate().passed);
        let rose = RoseGraph::new(vec![1.0], vec![0.0]).unwrap().vertex_conditions();
        assert_eq!(circle, rose);
    }

    #[test]
    fn theta_examples() {
        let id = Su2::identity();
        assert!(theta_from_su2(&id, &id).abs() < 1e-12);
        assert!((theta_from_su2(&Su2::phase(0.7), &id) - 0.7).abs() < 1e-12);
        let j = Su2::new(ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]).unwrap()).unwrap();
        assert!((theta_from_su2(&j, &id) - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn theta_invariant_under_common_rotation() {
        let g = Su2::new(
            ComplexMatrix::from_rows(&[
                vec![c(0.6, 0.0), c(0.0, 0.8)],
                vec![c(0.0, 0.8), c(0.6, 0.0)],
            ])
            .unwrap(),
        )
        .unwrap();
        let uo = Su2::phase(0.9);
        let ut = Su2::phase(-0.3);
        let before = theta_from_su2(&uo, &ut);
        let uo2 = Su2::new(g.matrix() * uo.matrix()).unwrap();
        let ut2 = Su2::new(g.matrix() * ut.matrix()).unwrap();
        assert!((theta_from_su2(&uo2, &ut2) - before).abs() < 1e-12);
        assert!((before - 1.2).abs() < 1e-12);
    }

    #[test]
    fn su2_rejects_non_members() {
        let m = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        assert!(matches!(Su2::new(m), Err(Error::NotSu2(_))));
        let m = ComplexMatrix::identity(2).scale(c(1.0 + 1e-6, 0.0));
        assert!(Su2::new(m).is_err());
    }

    #[test]
    fn dirac_params_checked() {
        assert!(DiracParams::new(-1.0, 1.0).is_err());
        assert!(DiracParams::new(0.0, 0.0).is_err());
        assert!(DiracParams::new(0.0, PI).is_err());
        assert!(DiracParams::new(1.0, 1.0).is_ok());
    }
}
