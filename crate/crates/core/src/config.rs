//! JSON graph definitions and CSV result files.
//!
//! Complex numbers are `[re, im]` pairs. Matrices are arrays of rows.
//! Unknown keys are rejected and every field is cross-checked against the
//! graph kind before a [`GraphConfig`] is handed out.

use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::determinant::DetResult;
use crate::error::{Error, Result};
use crate::graph::{circle_conditions, MetricGraph, RoseGraph, SpinVertexConditions, Su2, VertexConditions};
use crate::linalg::ComplexMatrix;
use crate::spectrum::Spectrum;
use crate::zeta::{ZetaResult, ZetaSettings};

pub type Pair = [f64; 2];
pub type PairMatrix = Vec<Vec<Pair>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphKind {
    Rose,
    Circle,
    General,
    SpinGeneral,
}

/// Optional quadrature settings; missing fields keep their defaults.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureOverrides {
    pub tol: Option<f64>,
    pub max_level: Option<u32>,
    pub taylor_terms: Option<usize>,
}

/// The document as written on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(alias = "graph_kind")]
    pub kind: GraphKind,
    pub lengths: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thetas: Option<Vec<f64>>,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<PairMatrix>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<PairMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_origin: Option<Vec<PairMatrix>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_terminus: Option<Vec<PairMatrix>>,
    #[serde(default)]
    pub mass: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadratureOverrides>,
}

fn default_alpha() -> f64 {
    FRAC_PI_2
}

/// Graph data after validation.
#[derive(Clone, Debug, PartialEq)]
pub enum GraphData {
    Rose(RoseGraph),
    Circle,
    General(VertexConditions),
    SpinGeneral(SpinVertexConditions),
}

/// A loaded and validated configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphConfig {
    pub kind: GraphKind,
    pub graph: MetricGraph,
    pub data: GraphData,
    pub mass: f64,
    pub alpha: f64,
    pub settings: ZetaSettings,
    raw: RawConfig,
}

impl GraphConfig {
    /// The full `4B x 4B` pair.
    pub fn vertex_conditions(&self) -> Result<VertexConditions> {
        match &self.data {
            GraphData::Rose(r) => Ok(r.vertex_conditions()),
            GraphData::Circle => Ok(circle_conditions()),
            GraphData::General(vc) => Ok(vc.clone()),
            GraphData::SpinGeneral(svc) => svc.expand(),
        }
    }

    pub fn rose(&self) -> Option<&RoseGraph> {
        match &self.data {
            GraphData::Rose(r) => Some(r),
            _ => None,
        }
    }

    pub fn raw(&self) -> &RawConfig {
        &self.raw
    }

    /// Replaces mass and branch angle, re-validating both.
    pub fn with_overrides(mut self, mass: Option<f64>, alpha: Option<f64>) -> Result<Self> {
        if let Some(m) = mass {
            self.raw.mass = m;
        }
        if let Some(a) = alpha {
            self.raw.alpha = a;
        }
        GraphConfig::from_raw(self.raw)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.raw).expect("config serializes")
    }

    pub fn from_raw(raw: RawConfig) -> Result<Self> {
        let graph = MetricGraph::new(raw.lengths.clone())?;
        let bonds = graph.bond_count();
        if !(raw.mass.is_finite() && raw.mass >= 0.0) {
            return Err(Error::Config(format!("mass {} must be a non-negative number", raw.mass)));
        }
        if !(raw.alpha > 0.0 && raw.alpha < std::f64::consts::PI) {
            return Err(Error::Config(format!("alpha {} must lie in (0, pi)", raw.alpha)));
        }
        let forbid = |name: &str, present: bool| -> Result<()> {
            if present {
                Err(Error::Config(format!("field `{name}` is not used by graph kind {:?}", raw.kind)))
            } else {
                Ok(())
            }
        };
        let has_u = raw.u_origin.is_some() || raw.u_terminus.is_some();
        let data = match raw.kind {
            GraphKind::Rose => {
                forbid("A", raw.a.is_some())?;
                forbid("B", raw.b.is_some())?;
                forbid("u_origin/u_terminus", has_u)?;
                let thetas = raw
                    .thetas
                    .clone()
                    .ok_or_else(|| Error::Config("rose needs `thetas`".into()))?;
                GraphData::Rose(RoseGraph::new(raw.lengths.clone(), thetas)?)
            }
            GraphKind::Circle => {
                forbid("thetas", raw.thetas.is_some())?;
                forbid("A", raw.a.is_some())?;
                forbid("B", raw.b.is_some())?;
                forbid("u_origin/u_terminus", has_u)?;
                if bonds != 1 {
                    return Err(Error::Config(format!("circle has one bond, got {bonds} lengths")));
                }
                GraphData::Circle
            }
            GraphKind::General => {
                forbid("thetas", raw.thetas.is_some())?;
                forbid("u_origin/u_terminus", has_u)?;
                let a = matrix("A", raw.a.as_ref(), 4 * bonds)?;
                let b = matrix("B", raw.b.as_ref(), 4 * bonds)?;
                let vc = VertexConditions::new(a, b)?;
                let report = vc.validate();
                if !report.passed {
                    return Err(Error::InvalidConditions(report.to_string()));
                }
                GraphData::General(vc)
            }
            GraphKind::SpinGeneral => {
                forbid("thetas", raw.thetas.is_some())?;
                let a = matrix("A", raw.a.as_ref(), 2 * bonds)?;
                let b = matrix("B", raw.b.as_ref(), 2 * bonds)?;
                let uo = rotations("u_origin", raw.u_origin.as_ref(), bonds)?;
                let ut = rotations("u_terminus", raw.u_terminus.as_ref(), bonds)?;
                GraphData::SpinGeneral(SpinVertexConditions::new(a, b, uo, ut)?)
            }
        };
        let mut settings = ZetaSettings::default().with_alpha(raw.alpha);
        if let Some(q) = raw.quadrature {
            if let Some(t) = q.tol {
                settings.tol = t;
            }
            if let Some(l) = q.max_level {
                settings.max_level = l;
            }
            if let Some(n) = q.taylor_terms {
                settings.taylor_terms = n;
            }
        }
        if !(settings.tol > 0.0 && settings.tol < 1.0) || settings.max_level < 4 || settings.taylor_terms < 16 {
            return Err(Error::Config("quadrature overrides out of range".into()));
        }
        Ok(Self {
            kind: raw.kind,
            graph,
            data,
            mass: raw.mass,
            alpha: raw.alpha,
            settings,
            raw,
        })
    }
}

fn matrix(name: &str, rows: Option<&PairMatrix>, n: usize) -> Result<ComplexMatrix> {
    let rows = rows.ok_or_else(|| Error::Config(format!("missing matrix `{name}`")))?;
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch(format!("`{name}` must be {n}x{n}")));
    }
    let data: Vec<Vec<Complex64>> = rows
        .iter()
        .map(|r| r.iter().map(|p| Complex64::new(p[0], p[1])).collect())
        .collect();
    let m = ComplexMatrix::from_rows(&data)?;
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(m)
}

fn rotations(name: &str, list: Option<&Vec<PairMatrix>>, bonds: usize) -> Result<Vec<Su2>> {
    match list {
        None => Ok(vec![Su2::identity(); bonds]),
        Some(l) if l.len() != bonds => Err(Error::DimensionMismatch(format!(
            "`{name}` needs {bonds} rotations, got {}",
            l.len()
        ))),
        Some(l) => l.iter().map(|m| Su2::new(matrix(name, Some(m), 2)?)).collect(),
    }
}

fn to_pairs(m: &ComplexMatrix) -> PairMatrix {
    (0..m.rows())
        .map(|i| m.row(i).iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

impl RawConfig {
    /// General-kind document for explicit `4B x 4B` conditions.
    pub fn general(vc: &VertexConditions, graph: &MetricGraph) -> Self {
        Self {
            kind: GraphKind::General,
            lengths: graph.lengths().to_vec(),
            thetas: None,
            a: Some(to_pairs(vc.a())),
            b: Some(to_pairs(vc.b())),
            u_origin: None,
            u_terminus: None,
            mass: 0.0,
            alpha: FRAC_PI_2,
            quadrature: None,
        }
    }
}

/// Parses a JSON document; syntax errors carry line and column.
pub fn parse_config(text: &str) -> Result<GraphConfig> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })?;
    GraphConfig::from_raw(raw)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<GraphConfig> {
    parse_config(&fs::read_to_string(path)?)
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("csv: {other:?}")),
    }
}

pub const SPECTRUM_HEADER: [&str; 2] = ["index", "k"];
pub const ZETA_HEADER: [&str; 5] = ["s_re", "s_im", "zeta_re", "zeta_im", "err"];
pub const DET_HEADER: [&str; 5] = ["closed_re", "closed_im", "viazeta_re", "viazeta_im", "rel_disc"];

/// Distinct positive roots, one row each, indexed from 1.
pub fn write_spectrum<W: Write>(w: W, spectrum: &Spectrum) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(SPECTRUM_HEADER).map_err(csv_err)?;
    for (i, k) in spectrum.positive_roots.iter().enumerate() {
        out.write_record([(i + 1).to_string(), num(*k)]).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_zeta<W: Write>(w: W, rows: &[ZetaResult]) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(ZETA_HEADER).map_err(csv_err)?;
    for r in rows {
        out.write_record([num(r.s.re), num(r.s.im), num(r.value.re), num(r.value.im), num(r.err)])
            .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Missing numeric values are left empty.
pub fn write_det<W: Write>(w: W, det: &DetResult) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(DET_HEADER).map_err(csv_err)?;
    let (vr, vi) = det
        .via_zeta
        .map_or((String::new(), String::new()), |v| (num(v.re), num(v.im)));
    let rel = det.rel_discrepancy.map_or(String::new(), num);
    out.write_record([num(det.closed_form.re), num(det.closed_form.im), vr, vi, rel])
        .map_err(csv_err)?;
    out.flush()?;
    Ok(())
}

fn read_rows<R: Read>(r: R, header: &[&str]) -> Result<Vec<Vec<String>>> {
    let mut rdr = csv::Reader::from_reader(r);
    let got = rdr.headers().map_err(csv_err)?.clone();
    if got.iter().ne(header.iter().copied()) {
        return Err(Error::Config(format!("unexpected CSV header {got:?}")));
    }
    rdr.records()
        .map(|rec| rec.map(|r| r.iter().map(str::to_owned).collect()).map_err(csv_err))
        .collect()
}

fn parse_num(s: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::Config(format!("not a number: {s:?}")))
}

fn parse_opt(s: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse_num(s).map(Some)
    }
}

/// Roots from a spectrum file, in file order.
pub fn read_spectrum<R: Read>(r: R) -> Result<Vec<f64>> {
    read_rows(r, &SPECTRUM_HEADER)?.iter().map(|row| parse_num(&row[1])).collect()
}

/// One row of a zeta file.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZetaRow {
    pub s: Complex64,
    pub value: Complex64,
    pub err: f64,
}

pub fn read_zeta<R: Read>(r: R) -> Result<Vec<ZetaRow>> {
    read_rows(r, &ZETA_HEADER)?
        .iter()
        .map(|row| {
            Ok(ZetaRow {
                s: Complex64::new(parse_num(&row[0])?, parse_num(&row[1])?),
                value: Complex64::new(parse_num(&row[2])?, parse_num(&row[3])?),
                err: parse_num(&row[4])?,
            })
        })
        .collect()
}

pub fn read_det<R: Read>(r: R) -> Result<DetResult> {
    let rows = read_rows(r, &DET_HEADER)?;
    let row = rows
        .first()
        .ok_or_else(|| Error::Config("determinant file has no data row".into()))?;
    let via = match (parse_opt(&row[2])?, parse_opt(&row[3])?) {
        (Some(re), Some(im)) => Some(Complex64::new(re, im)),
        _ => None,
    };
    Ok(DetResult {
        closed_form: Complex64::new(parse_num(&row[0])?, parse_num(&row[1])?),
        via_zeta: via,
        rel_discrepancy: parse_opt(&row[4])?,
    })
}

/// Writes to `path` through a buffered file.
pub fn write_file(path: impl AsRef<Path>, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let mut file = std::io::BufWriter::new(fs::File::create(path)?);
    f(&mut file)?;
    file.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zeta::ZetaParts;

    #[test]
    fn minimal_rose_loads() {
        let c = parse_config(r#"{"kind":"rose","lengths":[1],"thetas":[0],"mass":0,"alpha":1.5707963267948966}"#).unwrap();
        assert_eq!(c.kind, GraphKind::Rose);
        assert_eq!(c.vertex_conditions().unwrap().size(), 4);
    }

    #[test]
    fn general_circle_round_trips() {
        let g = MetricGraph::new(vec![1.0]).unwrap();
        let raw = RawConfig::general(&circle_conditions(), &g);
        let text = serde_json::to_string(&raw).unwrap();
        let c = parse_config(&text).unwrap();
        assert_eq!(c.vertex_conditions().unwrap(), circle_conditions());
        assert_eq!(parse_config(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn rejections() {
        assert!(parse_config(r#"{"kind":"rose","lengths":[-1],"thetas":[0]}"#).is_err());
        assert!(matches!(
            parse_config(r#"{"kind":"rose","lengths":[1],"thetas":[0],"extra":1}"#),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(parse_config(r#"{"kind":"circle","lengths":[1],"thetas":[0]}"#), Err(Error::Config(_))));
        assert!(parse_config(r#"{"kind":"general","lengths":[1],"A":[[[1,0]]],"B":[[[0,0]]]}"#).is_err());
        match parse_config("{\n  \"kind\": \"rose\",\n  \"lengths\": [1,,]\n}") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn overrides_replace_fields() {
        let c = parse_config(r#"{"kind":"circle","lengths":[1]}"#).unwrap();
        let c = c.with_overrides(Some(2.0), Some(1.0)).unwrap();
        assert_eq!((c.mass, c.alpha, c.settings.alpha), (2.0, 1.0, 1.0));
        assert!(c.with_overrides(Some(-1.0), None).is_err());
    }

    #[test]
    fn spectrum_csv_shapes() {
        let mut s = Spectrum::default();
        let mut buf = Vec::new();
        write_spectrum(&mut buf, &s).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "index,k\n");
        s.positive_roots = vec![1.0, 2.0, std::f64::consts::PI];
        let mut buf = Vec::new();
        write_spectrum(&mut buf, &s).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(!text.contains('\r'));
        assert_eq!(read_spectrum(&buf[..]).unwrap(), s.positive_roots);
    }

    #[test]
    fn zeta_and_det_round_trip_bit_exact() {
        let parts = ZetaParts {
            pole_sum: Complex64::new(0.0, 0.0),
            branch_integrals: Complex64::new(0.0, 0.0),
            line_term: Complex64::new(0.0, 0.0),
        };
        let rows: Vec<ZetaResult> = (0..5)
            .map(|j| ZetaResult {
                s: Complex64::new(0.1 * j as f64, -1.0 / 3.0),
                value: Complex64::new((j as f64).sqrt() * 1e-300, std::f64::consts::E * 1e200),
                err: 1.0 / 7.0,
                parts,
                alpha: 1.0,
            })
            .collect();
        let mut buf = Vec::new();
        write_zeta(&mut buf, &rows).unwrap();
        let back = read_zeta(&buf[..]).unwrap();
        for (a, b) in rows.iter().zip(&back) {
            assert_eq!((a.s, a.value, a.err), (b.s, b.value, b.err));
        }
        for d in [
            DetResult::new(Complex64::new(16.0, -1e-17), Some(Complex64::new(15.999999, 2e-12))),
            DetResult::new(Complex64::new(-0.3, 0.0), None),
        ] {
            let mut buf = Vec::new();
            write_det(&mut buf, &d).unwrap();
            assert_eq!(read_det(&buf[..]).unwrap(), d);
        }
    }
}
