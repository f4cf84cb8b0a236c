//! Browser bindings for three computations: the secular sum of a rose with
//! its roots, the rose zeta function on the real `s` axis, and the Epstein
//! sum `E(alpha, c)`.
//!
//! The exported functions return JSON strings. The `*_data` functions hold
//! the logic and run natively as well.

use gdz::graph::RoseGraph;
use gdz::secular::SecularEvaluator;
use gdz::special::epstein;
use gdz::spectrum::{find_roots, pole_lattice, RootOptions};
use gdz::zeta::{MasslessZeta, ZetaRepresentation, ZetaSettings};
use gdz::Complex64;
use serde::Serialize;
use wasm_bindgen::prelude::*;

const MAX_SAMPLES: usize = 20_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoseCurve {
    pub k: Vec<f64>,
    /// `sum_b (cos theta_b - cos k L_b) / sin k L_b`; `None` beside a pole.
    pub value: Vec<Option<f64>>,
    pub roots: Vec<f64>,
    pub poles: Vec<f64>,
}

fn rose(lengths: &[f64], thetas: &[f64]) -> Result<RoseGraph, String> {
    RoseGraph::new(lengths.to_vec(), thetas.to_vec()).map_err(|e| e.to_string())
}

fn samples(n: usize) -> Result<usize, String> {
    if (2..=MAX_SAMPLES).contains(&n) {
        Ok(n)
    } else {
        Err(format!("sample count must lie in 2..={MAX_SAMPLES}"))
    }
}

pub fn rose_curve_data(lengths: &[f64], thetas: &[f64], k_max: f64, n: usize) -> Result<RoseCurve, String> {
    let r = rose(lengths, thetas)?;
    let n = samples(n)?;
    if !(k_max > 0.0 && k_max <= 200.0) {
        return Err("k_max must lie in (0, 200]".into());
    }
    let eval = SecularEvaluator::rose_sum(&r);
    let opts = RootOptions {
        parallel: false,
        ..RootOptions::default()
    };
    let sp = find_roots(&SecularEvaluator::rose(&r), k_max, &opts).map_err(|e| e.to_string())?;
    let k: Vec<f64> = (1..=n).map(|j| k_max * j as f64 / n as f64).collect();
    let value = k
        .iter()
        .map(|&x| {
            let v = eval.eval_flagged(Complex64::new(x, 0.0));
            (!v.near_pole && v.value.re.is_finite()).then_some(v.value.re)
        })
        .collect();
    Ok(RoseCurve {
        k,
        value,
        roots: sp.positive_roots,
        poles: pole_lattice(r.lengths(), k_max),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZetaLine {
    pub s: Vec<f64>,
    pub re: Vec<Option<f64>>,
    pub im: Vec<Option<f64>>,
}

/// Points within `0.02` of the pole at `s = 1` are left empty.
pub fn zeta_line_data(lengths: &[f64], thetas: &[f64], s_min: f64, s_max: f64, n: usize) -> Result<ZetaLine, String> {
    let r = rose(lengths, thetas)?;
    let n = samples(n)?.min(400);
    if !(s_min < s_max && s_min >= -3.0 && s_max <= 3.0) {
        return Err("need -3 <= s_min < s_max <= 3".into());
    }
    let settings = ZetaSettings {
        parallel: false,
        ..ZetaSettings::default()
    };
    let z = MasslessZeta::rose(&r, settings).map_err(|e| e.to_string())?;
    let s: Vec<f64> = (0..n).map(|j| s_min + (s_max - s_min) * j as f64 / (n - 1) as f64).collect();
    let values: Vec<Option<Complex64>> = s
        .iter()
        .map(|&x| {
            if (x - 1.0).abs() <= 0.02 {
                None
            } else {
                z.zeta(Complex64::new(x, 0.0)).ok().map(|r| r.value)
            }
        })
        .collect();
    Ok(ZetaLine {
        re: values.iter().map(|v| v.map(|v| v.re)).collect(),
        im: values.iter().map(|v| v.map(|v| v.im)).collect(),
        s,
    })
}

pub fn epstein_data(alpha: f64, c: f64) -> Result<f64, String> {
    epstein(Complex64::new(alpha, 0.0), c).map(|v| v.re).map_err(|e| e.to_string())
}

fn json<T: Serialize>(v: Result<T, String>) -> Result<String, JsError> {
    let v = v.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn rose_curve(lengths: Vec<f64>, thetas: Vec<f64>, k_max: f64, samples: usize) -> Result<String, JsError> {
    json(rose_curve_data(&lengths, &thetas, k_max, samples))
}

#[wasm_bindgen]
pub fn zeta_line(lengths: Vec<f64>, thetas: Vec<f64>, s_min: f64, s_max: f64, samples: usize) -> Result<String, JsError> {
    json(zeta_line_data(&lengths, &thetas, s_min, s_max, samples))
}

#[wasm_bindgen]
pub fn epstein_value(alpha: f64, c: f64) -> Result<f64, JsError> {
    epstein_data(alpha, c).map_err(|e| JsError::new(&e))
}
