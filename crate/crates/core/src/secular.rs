//! Secular functions whose real zeros are the Dirac eigenvalues `k_j`.
//!
//! All matrix forms use the endpoint ordering of [`crate::graph`]. The block
//! matrix `M(z)` is `[[cot zL, -csc zL], [-csc zL, cot zL]]` with each block
//! diagonal over the `2B` spinor slots.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::{MetricGraph, RoseGraph, SpinVertexConditions, VertexConditions};
use crate::linalg::ComplexMatrix;

/// `|sin(z L_b)|` below this marks a value as pole-adjacent.
pub const POLE_PROXIMITY: f64 = 1e-13;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// `gamma(k) = (sqrt(k^2 + m^2) - m) / k`.
///
/// The root is taken as `k sqrt(1 + m^2/k^2)`, which is the principal
/// `sqrt(k^2 + m^2)` for `Re k > 0` and on the imaginary axis above `i m`,
/// and is analytic off the segment `[-i m, i m]`.
pub fn gamma(k: Complex64, m: f64) -> Result<Complex64> {
    if k == Complex64::new(0.0, 0.0) {
        return Err(Error::Domain("gamma(k) needs k != 0".into()));
    }
    Ok(gamma_unchecked(k, m))
}

fn gamma_unchecked(k: Complex64, m: f64) -> Complex64 {
    if m == 0.0 {
        return ONE;
    }
    let root = k * (ONE + m * m / (k * k)).sqrt();
    (root - m) / k
}

/// `gamma_hat(t) = (sqrt(t^2 - m^2) + i m) / t` for `t > m`, equal to `gamma(i t)`.
pub fn gamma_hat(t: f64, m: f64) -> Result<Complex64> {
    if !(t > m) {
        return Err(Error::Domain(format!("gamma_hat needs t > m, got t={t}, m={m}")));
    }
    Ok(Complex64::new((t * t - m * m).sqrt(), m) / t)
}

/// `(cot w, csc w)` computed from `e^{2iw}` so large `|Im w|` stays finite.
pub fn cot_csc(w: Complex64) -> (Complex64, Complex64) {
    if w.im >= 0.0 {
        let e1 = (I * w).exp();
        let e2 = e1 * e1;
        let den = e2 - ONE;
        (I * (e2 + ONE) / den, 2.0 * I * e1 / den)
    } else {
        let e1 = (-I * w).exp();
        let e2 = e1 * e1;
        let den = ONE - e2;
        (I * (ONE + e2) / den, 2.0 * I * e1 / den)
    }
}

/// `(coth x, csch x)` for complex `x`, stable for large `|Re x|`.
pub fn coth_csch(x: Complex64) -> (Complex64, Complex64) {
    let (cot, csc) = cot_csc(I * x);
    // cot(ix) = -i coth x, csc(ix) = -i csch x
    (I * cot, I * csc)
}

/// Which secular function an evaluator computes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SecularKind {
    MasslessGeneral,
    MassivePositive,
    MassiveNegative,
    MassiveImagF,
    MassiveImagG,
    Rose,
    ReducedTr,
    Evolution,
}

/// A value together with its pole-proximity flag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecularValue {
    pub value: Complex64,
    pub near_pole: bool,
}

#[derive(Clone, Debug)]
enum Data {
    Matrix { a: ComplexMatrix, b: ComplexMatrix },
    Rose { cos_theta: Vec<f64> },
    Reduced { a: ComplexMatrix, b: ComplexMatrix, thetas: Vec<f64> },
}

/// A secular function bound to its graph data. Pure and `Sync`.
#[derive(Clone, Debug)]
pub struct SecularEvaluator {
    kind: SecularKind,
    lengths: Vec<f64>,
    mass: f64,
    z_power: i32,
    data: Data,
}

impl SecularEvaluator {
    fn matrix(kind: SecularKind, vc: &VertexConditions, graph: &MetricGraph, mass: f64) -> Result<Self> {
        vc.check_graph(graph)?;
        if !(mass.is_finite() && mass >= 0.0) {
            return Err(Error::Domain(format!("mass {mass} must be >= 0")));
        }
        Ok(Self {
            kind,
            lengths: graph.lengths().to_vec(),
            mass,
            z_power: 0,
            data: Data::Matrix {
                a: vc.a().clone(),
                b: vc.b().clone(),
            },
        })
    }

    /// `det(A + B M(z))`.
    pub fn massless(vc: &VertexConditions, graph: &MetricGraph) -> Result<Self> {
        Self::matrix(SecularKind::MasslessGeneral, vc, graph, 0.0)
    }

    /// `z^{4B-1} det(A + B M(z))`.
    pub fn massless_prefactored(vc: &VertexConditions, graph: &MetricGraph) -> Result<Self> {
        let mut e = Self::massless(vc, graph)?;
        e.z_power = 4 * graph.bond_count() as i32 - 1;
        Ok(e)
    }

    /// `det(A + gamma(z) B M(z))`.
    pub fn massive_positive(vc: &VertexConditions, graph: &MetricGraph, mass: f64) -> Result<Self> {
        Self::matrix(SecularKind::MassivePositive, vc, graph, mass)
    }

    /// `det(gamma(z) A - B M(z))`.
    pub fn massive_negative(vc: &VertexConditions, graph: &MetricGraph, mass: f64) -> Result<Self> {
        Self::matrix(SecularKind::MassiveNegative, vc, graph, mass)
    }

    /// `f_hat(t) = f(i t)`, i.e. `det(A - i gamma_hat B M_hat(t))` with
    /// `M_hat = [[coth tL, -csch tL], [-csch tL, coth tL]]`.
    pub fn massive_imag_f(vc: &VertexConditions, graph: &MetricGraph, mass: f64) -> Result<Self> {
        Self::matrix(SecularKind::MassiveImagF, vc, graph, mass)
    }

    /// `g_hat(t) = g(i t)`, i.e. `det(gamma_hat A + i B M_hat(t))`.
    pub fn massive_imag_g(vc: &VertexConditions, graph: &MetricGraph, mass: f64) -> Result<Self> {
        Self::matrix(SecularKind::MassiveImagG, vc, graph, mass)
    }

    /// `z sum_b (cos theta_b - cos L_b z) / sin L_b z`.
    pub fn rose(rose: &RoseGraph) -> Self {
        Self {
            kind: SecularKind::Rose,
            lengths: rose.lengths().to_vec(),
            mass: 0.0,
            z_power: 1,
            data: Data::Rose {
                cos_theta: rose.thetas().iter().map(|t| t.cos()).collect(),
            },
        }
    }

    /// The rose sum without the leading factor of `z`.
    pub fn rose_sum(rose: &RoseGraph) -> Self {
        let mut e = Self::rose(rose);
        e.z_power = 0;
        e
    }

    /// Product `d+ d-` of the two `2B x 2B` determinants with `e^{+-i theta_b}`
    /// twisted csc blocks. Equals the full form whenever the bond rotations
    /// `u_o (u_t)^{-1}` share an eigenbasis with matching phase order, as for
    /// the rose.
    pub fn reduced_tr(svc: &SpinVertexConditions, graph: &MetricGraph, mass: f64) -> Result<Self> {
        if svc.bond_count() != graph.bond_count() {
            return Err(Error::DimensionMismatch(format!(
                "conditions are for {} bonds, graph has {}",
                svc.bond_count(),
                graph.bond_count()
            )));
        }
        Ok(Self {
            kind: SecularKind::ReducedTr,
            lengths: graph.lengths().to_vec(),
            mass,
            z_power: 0,
            data: Data::Reduced {
                a: svc.a_tilde.clone(),
                b: svc.b_tilde.clone(),
                thetas: svc.thetas(),
            },
        })
    }

    /// `det(I - T(k) S(k))` with `S = [[0, e^{ikL}], [e^{ikL}, 0]]`.
    pub fn evolution(vc: &VertexConditions, graph: &MetricGraph, mass: f64) -> Result<Self> {
        Self::matrix(SecularKind::Evolution, vc, graph, mass)
    }

    /// The same function multiplied by `z^p` instead of its current power.
    pub fn with_z_power(mut self, p: i32) -> Self {
        self.z_power = p;
        self
    }

    pub fn kind(&self) -> SecularKind {
        self.kind
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Power of `z` multiplying the determinant or sum.
    pub fn z_power(&self) -> i32 {
        self.z_power
    }

    /// True when the evaluator has poles on the lattice `n pi / L_b`.
    pub fn has_lattice_poles(&self) -> bool {
        !matches!(
            self.kind,
            SecularKind::Evolution | SecularKind::MassiveImagF | SecularKind::MassiveImagG
        )
    }

    pub fn near_pole(&self, z: Complex64) -> bool {
        if !self.has_lattice_poles() {
            return false;
        }
        self.lengths.iter().any(|&l| (z * l).sin().norm() < POLE_PROXIMITY)
    }

    pub fn eval_flagged(&self, z: Complex64) -> SecularValue {
        SecularValue {
            value: self.eval(z),
            near_pole: self.near_pole(z),
        }
    }

    /// The secular function at `z`. Non-finite only exactly at a pole.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let lz = self.log_eval(z);
        if lz.re == f64::NEG_INFINITY {
            return Complex64::new(0.0, 0.0);
        }
        lz.exp()
    }

    /// `ln|f(z)| + i arg f(z)`, computed without forming `f` for matrix kinds.
    pub fn log_eval(&self, z: Complex64) -> Complex64 {
        let core = match &self.data {
            Data::Matrix { a, b } => {
                let m = match self.kind {
                    SecularKind::Evolution => self.evolution_matrix(a, b, z),
                    _ => self.secular_matrix(a, b, z),
                };
                match m.and_then(|m| m.log_determinant()) {
                    Ok(ld) => Complex64::new(ld.ln_abs, ld.phase),
                    Err(_) => Complex64::new(f64::NAN, f64::NAN),
                }
            }
            Data::Rose { cos_theta } => {
                let mut sum = Complex64::new(0.0, 0.0);
                for (&l, &c) in self.lengths.iter().zip(cos_theta) {
                    let w = z * l;
                    let (cot, csc) = cot_csc(w);
                    // (c - cos w)/sin w = c csc w - cot w
                    sum += c * csc - cot;
                }
                sum.ln()
            }
            Data::Reduced { a, b, thetas } => {
                let gam = gamma_unchecked(z, self.mass);
                let mut acc = Complex64::new(0.0, 0.0);
                for sign in [1.0, -1.0] {
                    let m = reduced_matrix(a, b, &self.lengths, thetas, gam, z, sign);
                    match m.log_determinant() {
                        Ok(ld) => acc += Complex64::new(ld.ln_abs, ld.phase),
                        Err(_) => return Complex64::new(f64::NAN, f64::NAN),
                    }
                }
                acc
            }
        };
        if self.z_power != 0 {
            core + f64::from(self.z_power) * z.ln()
        } else {
            core
        }
    }

    /// `f'(z) / f(z)`.
    ///
    /// Exact for the plain determinant kinds (as `tr(X^{-1} X')`) and for the
    /// rose sum. The reduced and evolution forms fall back to
    /// [`log_derivative_fd`].
    pub fn log_derivative(&self, z: Complex64) -> Result<Complex64> {
        let core = match (&self.data, self.kind) {
            (Data::Matrix { .. }, SecularKind::Evolution) | (Data::Reduced { .. }, _) => {
                return log_derivative_fd(&|w| self.log_eval(w), z, ONE, 1e-5 * z.norm().max(1.0));
            }
            (Data::Matrix { a, b }, _) => {
                let (x, y) = self.matrix_pair(a, b, z, true)?;
                trace_solve(&x, &y)?
            }
            (Data::Rose { cos_theta }, _) => {
                let mut s = Complex64::new(0.0, 0.0);
                let mut ds = Complex64::new(0.0, 0.0);
                for (&l, &c) in self.lengths.iter().zip(cos_theta) {
                    let (cot, csc) = cot_csc(z * l);
                    s += c * csc - cot;
                    ds += l * csc * (csc - c * cot);
                }
                ds / s
            }
        };
        let v = if self.z_power != 0 {
            core + f64::from(self.z_power) / z
        } else {
            core
        };
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite)
        }
    }

    /// The matrix whose determinant is the secular function (non-evolution kinds).
    fn secular_matrix(&self, a: &ComplexMatrix, b: &ComplexMatrix, z: Complex64) -> Result<ComplexMatrix> {
        Ok(self.matrix_pair(a, b, z, false)?.0)
    }

    /// `X(z) = ca A + cb B M(z)` and, when asked, `X'(z)`.
    fn matrix_pair(
        &self,
        a: &ComplexMatrix,
        b: &ComplexMatrix,
        z: Complex64,
        derivative: bool,
    ) -> Result<(ComplexMatrix, ComplexMatrix)> {
        let m = self.mass;
        let zero = Complex64::new(0.0, 0.0);
        let coeffs = match self.kind {
            SecularKind::MasslessGeneral => [ONE, ONE, zero, zero],
            SecularKind::MassivePositive => [ONE, gamma_unchecked(z, m), zero, gamma_prime(z, m)],
            SecularKind::MassiveNegative => [gamma_unchecked(z, m), -ONE, gamma_prime(z, m), zero],
            SecularKind::MassiveImagF => [ONE, -I * imag_gamma(z, m), zero, -I * imag_gamma_prime(z, m)],
            SecularKind::MassiveImagG => [imag_gamma(z, m), I, imag_gamma_prime(z, m), zero],
            _ => unreachable!("not a plain determinant kind"),
        };
        let imag = matches!(self.kind, SecularKind::MassiveImagF | SecularKind::MassiveImagG);
        let dz = derivative.then_some(ONE);
        block_pair(a, b, &self.lengths, imag, z, coeffs, dz)
    }

    fn evolution_matrix(&self, a: &ComplexMatrix, b: &ComplexMatrix, k: Complex64) -> Result<ComplexMatrix> {
        let gam = gamma_unchecked(k, self.mass);
        let t = transition_matrix_inner(a, b, gam)?;
        let n = a.rows();
        let half = n / 2;
        let phases: Vec<Complex64> = self
            .lengths
            .iter()
            .flat_map(|&l| {
                let e = (I * k * l).exp();
                [e, e]
            })
            .collect();
        // I - T S, where S swaps origin and terminus blocks with phases
        let mut out = ComplexMatrix::identity(n);
        for r in 0..n {
            for j in 0..half {
                out[(r, j)] -= t[(r, j + half)] * phases[j];
                out[(r, j + half)] -= t[(r, j)] * phases[j];
            }
        }
        Ok(out)
    }
}

/// `X = ca A + cb B M(z)` and `dX = dca A + dcb B M(z) + cb B M'(z) dz`, where
/// `coeffs = [ca, cb, dca, dcb]` and `M` uses coth/csch when `imag` is set.
/// The derivative matrix is empty when `dz` is `None`.
pub(crate) fn block_pair(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    lengths: &[f64],
    imag: bool,
    z: Complex64,
    coeffs: [Complex64; 4],
    dz: Option<Complex64>,
) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let [ca, cb, dca, dcb] = coeffs;
    let n = a.rows();
    let half = n / 2;
    let mut cot = Vec::with_capacity(half);
    let mut csc = Vec::with_capacity(half);
    let mut dcot = Vec::with_capacity(half);
    let mut dcsc = Vec::with_capacity(half);
    let step = dz.unwrap_or(ONE);
    for &l in lengths {
        let (c, s) = if imag { coth_csch(z * l) } else { cot_csc(z * l) };
        // cot' = -L csc^2, csc' = -L csc cot (same for coth, csch)
        let (dc, ds) = (-l * s * s * step, -l * s * c * step);
        cot.extend([c, c]);
        csc.extend([s, s]);
        dcot.extend([dc, dc]);
        dcsc.extend([ds, ds]);
    }
    let size = if dz.is_some() { n } else { 0 };
    let mut out = ComplexMatrix::zeros(n, n);
    let mut der = ComplexMatrix::zeros(size, size);
    for r in 0..n {
        for j in 0..half {
            let bo = b[(r, j)];
            let bt = b[(r, j + half)];
            let bm_o = bo * cot[j] - bt * csc[j];
            let bm_t = bt * cot[j] - bo * csc[j];
            out[(r, j)] = ca * a[(r, j)] + cb * bm_o;
            out[(r, j + half)] = ca * a[(r, j + half)] + cb * bm_t;
            if size > 0 {
                let dbm_o = bo * dcot[j] - bt * dcsc[j];
                let dbm_t = bt * dcot[j] - bo * dcsc[j];
                der[(r, j)] = dca * a[(r, j)] + dcb * bm_o + cb * dbm_o;
                der[(r, j + half)] = dca * a[(r, j + half)] + dcb * bm_t + cb * dbm_t;
            }
        }
    }
    if !out.is_finite() || !der.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok((out, der))
}

/// `tr(X^{-1} dX)`.
pub(crate) fn trace_solve(x: &ComplexMatrix, dx: &ComplexMatrix) -> Result<Complex64> {
    let sol = x.solve(dx)?;
    Ok((0..sol.rows()).map(|i| sol[(i, i)]).sum())
}

/// `gamma_hat` continued to complex `t` by the principal root.
fn imag_gamma(t: Complex64, m: f64) -> Complex64 {
    if m == 0.0 {
        return ONE;
    }
    ((t * t - m * m).sqrt() + I * m) / t
}

/// `d gamma / dk = (m - m^2 / R) / k^2` with `R = k sqrt(1 + m^2/k^2)`.
fn gamma_prime(k: Complex64, m: f64) -> Complex64 {
    if m == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let root = k * (ONE + m * m / (k * k)).sqrt();
    (m - m * m / root) / (k * k)
}

fn imag_gamma_prime(t: Complex64, m: f64) -> Complex64 {
    if m == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    (m * m / (t * t - m * m).sqrt() - I * m) / (t * t)
}

/// `d/du log f(z + u d)` at `u = 0` by central differences on `f` itself.
///
/// `log_f` returns `ln|f| + i arg f`; only differences of it are
/// exponentiated, so no branch is ever chosen and huge or tiny `|f|` is
/// harmless. Uses steps `h` and `h/2` with one Richardson level.
pub fn log_derivative_fd<L>(log_f: &L, z: Complex64, direction: Complex64, h: f64) -> Result<Complex64>
where
    L: Fn(Complex64) -> Complex64,
{
    let base = log_f(z);
    if !(base.re.is_finite() && base.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let central = |h: f64| {
        let up = (log_f(z + direction * h) - base).exp();
        let down = (log_f(z - direction * h) - base).exp();
        (up - down) / (2.0 * h)
    };
    let v = (4.0 * central(0.5 * h) - central(h)) / 3.0;
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite)
    }
}

fn reduced_matrix(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    lengths: &[f64],
    thetas: &[f64],
    gam: Complex64,
    z: Complex64,
    sign: f64,
) -> ComplexMatrix {
    let n = a.rows();
    let bonds = n / 2;
    let mut out = a.clone();
    for j in 0..bonds {
        let (cot, csc) = cot_csc(z * lengths[j]);
        let twist = Complex64::from_polar(1.0, sign * thetas[j]);
        // block columns: origin j gets cot from row-block o and -csc e^{-i s theta} from t
        let m_oo = cot;
        let m_to = -csc * twist.conj();
        let m_ot = -csc * twist;
        let m_tt = cot;
        for r in 0..n {
            let bo = b[(r, j)];
            let bt = b[(r, j + bonds)];
            out[(r, j)] += gam * (bo * m_oo + bt * m_to);
            out[(r, j + bonds)] += gam * (bo * m_ot + bt * m_tt);
        }
    }
    out
}

fn transition_matrix_inner(a: &ComplexMatrix, b: &ComplexMatrix, gam: Complex64) -> Result<ComplexMatrix> {
    let ig = I * gam;
    let minus = a - &b.scale(ig);
    let plus = a + &b.scale(ig);
    Ok(minus.solve(&plus)?.scale(-ONE))
}

/// `T = -(A - i gamma B)^{-1} (A + i gamma B)`.
pub fn transition_matrix(vc: &VertexConditions, gamma: Complex64) -> Result<ComplexMatrix> {
    transition_matrix_inner(vc.a(), vc.b(), gamma)
}
