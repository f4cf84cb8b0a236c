//! Riemann zeta, Gamma, modified Bessel `K` and the Epstein-type sum
//! `E(alpha, c) = sum_{n>=1} (n^2 + c)^{-alpha}`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// `zeta_R'(0) = -log(2 pi) / 2`.
pub const ZETA_PRIME_ZERO: f64 = -0.918_938_533_204_672_8;

/// Terms in the Borwein acceleration of the alternating series.
const ETA_TERMS: usize = 50;

fn borwein_weights() -> &'static [f64; ETA_TERMS + 1] {
    use std::sync::OnceLock;
    static D: OnceLock<[f64; ETA_TERMS + 1]> = OnceLock::new();
    D.get_or_init(|| {
        let n = ETA_TERMS as f64;
        let mut d = [0.0; ETA_TERMS + 1];
        let mut term = 1.0;
        let mut acc = 1.0;
        d[0] = acc;
        for i in 0..ETA_TERMS {
            let fi = i as f64;
            term *= 4.0 * (n + fi) * (n - fi) / ((2.0 * fi + 1.0) * (2.0 * fi + 2.0));
            acc += term;
            d[i + 1] = acc;
        }
        d
    })
}

/// Riemann zeta from the Borwein-accelerated Dirichlet eta series.
/// Accurate to about `1e-14` for `Re s > -2` and moderate `Im s`.
pub fn riemann_zeta(s: Complex64) -> Result<Complex64> {
    if s == ONE {
        return Err(Error::Pole("Riemann zeta at s = 1".into()));
    }
    if s == Complex64::new(0.0, 0.0) {
        return Ok(Complex64::new(-0.5, 0.0));
    }
    let d = borwein_weights();
    let dn = d[ETA_TERMS];
    let mut eta = Complex64::new(0.0, 0.0);
    for (k, dk) in d.iter().enumerate().take(ETA_TERMS) {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let base = Complex64::new((k + 1) as f64, 0.0);
        eta += sign * (dk - dn) * base.powc(-s);
    }
    eta = -eta / dn;
    let den = ONE - Complex64::new(2.0, 0.0).powc(ONE - s);
    if den.norm() < 1e-14 {
        return Err(Error::Pole(format!("eta-to-zeta factor vanishes at s = {s}")));
    }
    Ok(eta / den)
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn is_nonpositive_integer(z: Complex64) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re.fract() == 0.0
}

/// `log Gamma(z)` for `Re z >= 1/2` (Lanczos, g = 7).
fn ln_gamma_right(z: Complex64) -> Complex64 {
    let z = z - 1.0;
    let mut x = Complex64::new(LANCZOS[0], 0.0);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

/// Complex Gamma function with reflection for `Re z < 1/2`.
pub fn gamma_fn(z: Complex64) -> Result<Complex64> {
    if is_nonpositive_integer(z) {
        return Err(Error::Pole(format!("Gamma at {}", z.re)));
    }
    if z.re < 0.5 {
        let s = (PI * z).sin();
        Ok(PI / (s * ln_gamma_right(ONE - z).exp()))
    } else {
        Ok(ln_gamma_right(z).exp())
    }
}

/// `1 / Gamma(z)`, entire; zero at the nonpositive integers.
pub fn rgamma(z: Complex64) -> Complex64 {
    if is_nonpositive_integer(z) {
        return Complex64::new(0.0, 0.0);
    }
    if z.re < 0.5 {
        (PI * z).sin() * ln_gamma_right(ONE - z).exp() / PI
    } else {
        (-ln_gamma_right(z)).exp()
    }
}

/// `e^x K_nu(x)` from the trapezoid rule on `int_0^inf e^{-x(cosh t - 1)} cosh(nu t) dt`.
pub fn bessel_k_scaled(nu: Complex64, x: f64) -> Result<Complex64> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!("K_nu(x) needs x > 0, got {x}")));
    }
    // strip-width bound: the discretisation error is about exp(x - pi^2/h)
    let h = (PI * PI / (x + 40.0)).min(0.1);
    let mut sum = 0.5 * ONE;
    let mut j = 1usize;
    loop {
        let t = j as f64 * h;
        let decay = -x * (t.cosh() - 1.0);
        let term = ((nu * t).exp() + (-nu * t).exp()) * 0.5 * decay.exp();
        sum += term;
        if decay + nu.re.abs() * t < -745.0 || (j > 10 && term.norm() < 1e-18 * sum.norm()) {
            break;
        }
        j += 1;
    }
    Ok(sum * h)
}

/// Modified Bessel function of the second kind for complex order.
pub fn bessel_k(nu: Complex64, x: f64) -> Result<Complex64> {
    Ok(bessel_k_scaled(nu, x)? * (-x).exp())
}

fn check_c(c: f64) -> Result<()> {
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!("Epstein parameter c = {c} must be >= 0")));
    }
    Ok(())
}

fn near_half(alpha: Complex64) -> bool {
    (alpha - 0.5).norm() < 1e-12
}

/// `E(alpha, c)` choosing the direct series for `Re alpha > 3/4` and the
/// Bessel continuation otherwise.
pub fn epstein(alpha: Complex64, c: f64) -> Result<Complex64> {
    check_c(c)?;
    if near_half(alpha) {
        return Err(Error::Pole("Epstein sum at alpha = 1/2".into()));
    }
    if c == 0.0 {
        return riemann_zeta(2.0 * alpha);
    }
    if alpha.re > 0.75 {
        epstein_series(alpha, c)
    } else {
        epstein_continuation(alpha, c)
    }
}

/// Direct summation with an Euler-Maclaurin tail. Needs `Re alpha > 1/2`.
pub fn epstein_series(alpha: Complex64, c: f64) -> Result<Complex64> {
    check_c(c)?;
    if alpha.re <= 0.5 {
        return Err(Error::Domain(format!("direct Epstein series needs Re alpha > 1/2, got {alpha}")));
    }
    let big_n = (10.0 * c.sqrt()).max(50.0).ceil();
    let n_terms = big_n as usize;
    let f = |x: f64| Complex64::new(x * x + c, 0.0).powc(-alpha);
    let mut sum = Complex64::new(0.0, 0.0);
    for n in 1..n_terms {
        sum += f(n as f64);
    }
    // int_N^inf (x^2+c)^{-alpha} dx as a binomial series in c/N^2
    let r = c / (big_n * big_n);
    let mut coef = ONE;
    let mut rj = 1.0;
    let mut tail = Complex64::new(0.0, 0.0);
    for j in 0..200 {
        let fj = j as f64;
        let term = coef * rj / (2.0 * alpha - 1.0 + 2.0 * fj);
        tail += term;
        if term.norm() < 1e-18 * tail.norm() {
            break;
        }
        coef *= (-alpha - fj) / (fj + 1.0);
        rj *= r;
    }
    tail *= Complex64::new(big_n, 0.0).powc(ONE - 2.0 * alpha);
    let g = big_n * big_n + c;
    let gc = Complex64::new(g, 0.0);
    let x = big_n;
    let d1 = -2.0 * alpha * x * gc.powc(-alpha - 1.0);
    let a1 = alpha * (alpha + 1.0);
    let d3 = 12.0 * a1 * x * gc.powc(-alpha - 2.0) - 8.0 * a1 * (alpha + 2.0) * x.powi(3) * gc.powc(-alpha - 3.0);
    Ok(sum + tail + 0.5 * f(x) - d1 / 12.0 + d3 / 720.0)
}

/// Continuation through the modified Bessel sum. Needs `c > 0`.
pub fn epstein_continuation(alpha: Complex64, c: f64) -> Result<Complex64> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!("Bessel continuation needs c > 0, got {c}")));
    }
    if near_half(alpha) {
        return Err(Error::Pole("Epstein sum at alpha = 1/2".into()));
    }
    let cc = Complex64::new(c, 0.0);
    let rc = c.sqrt();
    let rg = rgamma(alpha);
    let first = -0.5 * cc.powc(-alpha);
    let second = 0.5 * PI.sqrt() * gamma_fn(alpha - 0.5)? * rg * cc.powc(0.5 - alpha);
    let nu = alpha - 0.5;
    let mut bessel = Complex64::new(0.0, 0.0);
    let mut n = 1usize;
    loop {
        let nf = n as f64;
        let x = 2.0 * PI * nf * rc;
        if x > 740.0 {
            break;
        }
        let term = Complex64::new(nf, 0.0).powc(nu) * bessel_k(nu, x)?;
        bessel += term;
        if term.norm() < 1e-17 * bessel.norm() || n > 100_000 {
            break;
        }
        n += 1;
    }
    let pref = 2.0 * Complex64::new(PI, 0.0).powc(alpha) * rg * cc.powc(0.25 - 0.5 * alpha);
    Ok(first + second + pref * bessel)
}

/// `dE/dalpha` at `alpha = 0`: `log(c)/2 - pi sqrt(c) - log(1 - e^{-2 pi sqrt(c)})`.
pub fn epstein_deriv0(c: f64) -> Result<f64> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!("E'(0, c) needs c > 0, got {c}")));
    }
    let r = c.sqrt();
    Ok(0.5 * c.ln() - PI * r - (-(-2.0 * PI * r).exp()).ln_1p())
}
