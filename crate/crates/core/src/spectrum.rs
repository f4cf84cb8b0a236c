//! Real positive roots of secular functions.
//!
//! The real axis is cut at the pole lattice `n pi / L_b`. Each lattice point
//! gets a small circle whose winding gives its net order, and each open gap
//! gets a box whose winding counts the roots inside. Gaps with roots are
//! scanned for candidates (minima of `|f|` and sign changes of the
//! phase-aligned real part), candidates are refined by contour centroids,
//! and the result must reproduce the box count.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::contour::{centroid, winding_circle_perturbed, winding_rect_perturbed, Rect};
use crate::error::{Error, Result};
use crate::graph::{MetricGraph, VertexConditions};
use crate::secular::{SecularEvaluator, SecularKind};

/// All `n pi / L_b` in `(0, k_max]`, sorted, with near-duplicates merged.
pub fn pole_lattice(lengths: &[f64], k_max: f64) -> Vec<f64> {
    let mut pts = Vec::new();
    for &l in lengths {
        let step = PI / l;
        let mut n = 1u64;
        loop {
            let x = n as f64 * step;
            if x > k_max {
                break;
            }
            pts.push(x);
            n += 1;
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|b, a| (*b - *a).abs() <= 1e-12 * a.abs().max(1.0));
    pts
}

/// Tuning for [`find_roots`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RootOptions {
    /// Scan samples per shortest lattice gap.
    pub samples_per_gap: usize,
    /// Grid doublings tried when a gap's count disagrees with the scan.
    pub max_doublings: usize,
    /// Run gaps on the rayon pool.
    pub parallel: bool,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            samples_per_gap: 8,
            max_doublings: 5,
            parallel: true,
        }
    }
}

/// What a diagnostic row describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SegmentKind {
    LatticePoint,
    Gap,
}

/// Per-segment bookkeeping: winding count versus roots found.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SegmentReport {
    pub kind: SegmentKind,
    pub lo: f64,
    pub hi: f64,
    /// Net winding (zeros minus poles) of the segment contour.
    pub winding: i64,
    /// Roots listed for the segment, with multiplicity.
    pub found: i64,
    /// Grid doublings used (gaps only).
    pub doublings: usize,
}

/// Roots in `(0, k_max]` with multiplicities as counted by winding number.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Spectrum {
    pub positive_roots: Vec<f64>,
    pub multiplicities: Vec<u32>,
    /// Roots of the negative-energy secular function (massive case).
    pub negative_energy_roots: Vec<f64>,
    pub negative_multiplicities: Vec<u32>,
    /// Upper end of the search; moved slightly past `k_max` if a root sat on it.
    pub k_max: f64,
    pub diagnostics: Vec<SegmentReport>,
}

impl Spectrum {
    /// Positive roots counted with multiplicity.
    pub fn count_with_multiplicity(&self) -> u64 {
        self.multiplicities.iter().map(|&m| u64::from(m)).sum()
    }

    /// Sum of positive winding counts over gaps and lattice points.
    pub fn winding_total(&self) -> i64 {
        self.diagnostics.iter().map(|d| d.winding.max(0)).sum()
    }

    /// Gaps whose box count exceeds zero.
    pub fn gap_counts(&self) -> Vec<i64> {
        self.diagnostics
            .iter()
            .filter(|d| d.kind == SegmentKind::Gap)
            .map(|d| d.winding)
            .collect()
    }
}

#[derive(Clone, Copy, Debug)]
struct Gap {
    /// lattice points bounding the gap (0 for the first)
    left: f64,
    right: f64,
    /// contour edges
    lo: f64,
    hi: f64,
    /// the right edge is `k_max` rather than a lattice point, so it may move
    open_end: bool,
}

/// Winding number of `eval` around `rect` (zeros minus poles), with boundary
/// perturbation.
pub fn count_zeros_box(eval: &SecularEvaluator, rect: &Rect) -> Result<i64> {
    let log_f = |z: Complex64| eval.log_eval(z);
    let grow = 0.05 * (rect.im_max - rect.im_min);
    Ok(winding_rect_perturbed(&log_f, rect, grow)?.0)
}

/// Locates every root of `eval` on `(0, k_max]`.
pub fn find_roots(eval: &SecularEvaluator, k_max: f64, opts: &RootOptions) -> Result<Spectrum> {
    if !(k_max > 0.0 && k_max.is_finite()) {
        return Err(Error::Domain(format!("k_max = {k_max} must be positive")));
    }
    if matches!(eval.kind(), SecularKind::MassiveImagF | SecularKind::MassiveImagG) {
        return Err(Error::Domain("imaginary-axis evaluators have no real spectrum".into()));
    }
    let lattice = pole_lattice(eval.lengths(), k_max);
    let mut marks = vec![0.0];
    marks.extend(&lattice);
    let mut min_gap = f64::INFINITY;
    for w in marks.windows(2) {
        min_gap = min_gap.min(w[1] - w[0]);
    }
    if let Some(&last) = marks.last() {
        if k_max > last {
            min_gap = min_gap.min(k_max - last);
        }
    }
    let log_f = |z: Complex64| eval.log_eval(z);

    // radii around lattice points
    let map = |i: usize| -> Result<(f64, i64, f64)> {
        let p = lattice[i];
        let left = if i == 0 { 0.0 } else { lattice[i - 1] };
        let right = lattice.get(i + 1).copied().unwrap_or(f64::INFINITY);
        let rho = (1e-6 * p.max(1.0)).min(0.1 * (p - left).min(right - p));
        let (order, used) = winding_circle_perturbed(&log_f, Complex64::new(p, 0.0), rho)?;
        Ok((p, order, used))
    };
    let points: Vec<(f64, i64, f64)> = par_map(lattice.len(), opts.parallel, map)?;

    let rho0 = 1e-3 * min_gap.min(1.0);
    let mut gaps = Vec::new();
    let mut left = (0.0, rho0);
    for &(p, _, r) in &points {
        gaps.push(Gap {
            left: left.0,
            right: p,
            lo: left.0 + left.1,
            hi: p - r,
            open_end: false,
        });
        left = (p, r);
    }
    if k_max > left.0 + left.1 {
        let next = eval
            .lengths()
            .iter()
            .map(|&l| ((k_max * l / PI).floor() + 1.0) * PI / l)
            .fold(f64::INFINITY, f64::min);
        gaps.push(Gap {
            left: left.0,
            right: next,
            lo: left.0 + left.1,
            hi: k_max,
            open_end: true,
        });
    }

    let solve = |i: usize| solve_gap(eval, &gaps[i], min_gap, opts);
    let gap_results: Vec<(Vec<(f64, u32)>, SegmentReport)> = par_map(gaps.len(), opts.parallel, solve)?;

    let mut roots: Vec<(f64, u32)> = Vec::new();
    let mut diagnostics = Vec::new();
    for (p, order, r) in &points {
        if *order > 0 {
            roots.push((*p, *order as u32));
        }
        diagnostics.push(SegmentReport {
            kind: SegmentKind::LatticePoint,
            lo: p - r,
            hi: p + r,
            winding: *order,
            found: (*order).max(0),
            doublings: 0,
        });
    }
    for (rs, rep) in gap_results {
        roots.extend(rs);
        diagnostics.push(rep);
    }
    // the last gap may have stepped past a root sitting on k_max
    let edge = diagnostics
        .iter()
        .filter(|d| d.kind == SegmentKind::Gap)
        .map(|d| d.hi)
        .fold(k_max, f64::max);
    roots.retain(|r| r.0 <= edge);
    roots.sort_by(|a, b| a.0.total_cmp(&b.0));
    diagnostics.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    Ok(Spectrum {
        positive_roots: roots.iter().map(|r| r.0).collect(),
        multiplicities: roots.iter().map(|r| r.1).collect(),
        negative_energy_roots: Vec::new(),
        negative_multiplicities: Vec::new(),
        k_max: edge,
        diagnostics,
    })
}

/// Positive-energy roots of `det(A + gamma B M)` and negative-energy roots of
/// `det(gamma A - B M)`.
pub fn massive_spectrum(
    vc: &VertexConditions,
    graph: &MetricGraph,
    mass: f64,
    k_max: f64,
    opts: &RootOptions,
) -> Result<Spectrum> {
    let pos = SecularEvaluator::massive_positive(vc, graph, mass)?;
    let neg = SecularEvaluator::massive_negative(vc, graph, mass)?;
    let mut s = find_roots(&pos, k_max, opts)?;
    let n = find_roots(&neg, k_max, opts)?;
    s.negative_energy_roots = n.positive_roots;
    s.negative_multiplicities = n.multiplicities;
    s.diagnostics.extend(n.diagnostics);
    Ok(s)
}

pub(crate) fn par_map<T, F>(n: usize, parallel: bool, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = parallel;
    (0..n).map(f).collect()
}

fn solve_gap(eval: &SecularEvaluator, gap: &Gap, min_gap: f64, opts: &RootOptions) -> Result<(Vec<(f64, u32)>, SegmentReport)> {
    let log_f = |z: Complex64| eval.log_eval(z);
    let mut gap = *gap;
    let mut nudges = 0;
    // a root sitting on k_max blocks the right edge; step past it
    let count = loop {
        let height = (0.5 * (gap.hi - gap.lo)).min(0.5);
        let rect = Rect::around_interval(gap.lo, gap.hi, height)?;
        match winding_rect_perturbed(&log_f, &rect, 0.05 * height) {
            Err(Error::BoundaryProximity { .. }) if gap.open_end && nudges < 5 && gap.hi + 1e-3 * min_gap < gap.right => {
                nudges += 1;
                gap.hi += 1e-4 * min_gap * f64::from(nudges);
            }
            other => break other?.0,
        }
    };
    let gap = &gap;
    let width = gap.hi - gap.lo;
    let height = (0.5 * width).min(0.5);
    let mut report = SegmentReport {
        kind: SegmentKind::Gap,
        lo: gap.lo,
        hi: gap.hi,
        winding: count,
        found: 0,
        doublings: 0,
    };
    if count < 0 {
        return Err(Error::Unverifiable(format!(
            "negative count {count} on gap ({}, {})",
            gap.lo, gap.hi
        )));
    }
    if count == 0 {
        return Ok((Vec::new(), report));
    }
    let base = ((opts.samples_per_gap as f64) * (width / min_gap).max(1.0)).ceil() as usize;
    for d in 0..=opts.max_doublings {
        let n = base.max(8) << d;
        let roots = scan_gap(eval, gap, n, height)?;
        let found: i64 = roots.iter().map(|r| i64::from(r.1)).sum();
        if found == count {
            report.found = found;
            report.doublings = d;
            return Ok((roots, report));
        }
    }
    let roots = isolate(eval, gap, gap.lo, gap.hi, count, height, 0)?;
    let found: i64 = roots.iter().map(|r| i64::from(r.1)).sum();
    if found != count {
        return Err(Error::Unverifiable(format!(
            "gap ({}, {}) has winding {count} but {found} roots were resolved",
            gap.lo, gap.hi
        )));
    }
    report.found = found;
    report.doublings = opts.max_doublings + 1;
    Ok((roots, report))
}

fn scan_gap(eval: &SecularEvaluator, gap: &Gap, n: usize, height: f64) -> Result<Vec<(f64, u32)>> {
    let h = (gap.hi - gap.lo) / n as f64;
    let xs: Vec<f64> = (0..=n).map(|j| gap.lo + h * j as f64).collect();
    let logs: Vec<Complex64> = xs.iter().map(|&x| eval.log_eval(Complex64::new(x, 0.0))).collect();
    // phase alignment from the largest sample
    let phase = logs
        .iter()
        .filter(|v| v.re.is_finite())
        .max_by(|a, b| a.re.total_cmp(&b.re))
        .map_or(0.0, |v| v.im);
    let sign = |v: &Complex64| (v.im - phase).cos() >= 0.0;
    let mut cands = Vec::new();
    for j in 0..=n {
        let m = logs[j].re;
        let lower_left = j == 0 || m < logs[j - 1].re;
        let lower_right = j == n || m < logs[j + 1].re;
        if lower_left && lower_right {
            cands.push(xs[j]);
        }
        if j < n && sign(&logs[j]) != sign(&logs[j + 1]) {
            cands.push(if logs[j].re < logs[j + 1].re { xs[j] } else { xs[j + 1] });
        }
    }
    cands.sort_by(f64::total_cmp);
    cands.dedup();
    let mut roots: Vec<(f64, u32)> = Vec::new();
    for &x in &cands {
        let edge = (x - gap.left).min(gap.right - x);
        let r = (2.0 * h).min(0.9 * edge).min(height);
        if let Some(root) = refine(eval, x, r, gap)? {
            if !roots.iter().any(|q| (q.0 - root.0).abs() <= 1e-9 * root.0.max(1.0)) {
                roots.push(root);
            }
        }
    }
    Ok(roots)
}

/// Centroid refinement around `x` with radius `r`; `None` if no zero inside.
fn refine(eval: &SecularEvaluator, x: f64, r: f64, gap: &Gap) -> Result<Option<(f64, u32)>> {
    let log_f = |z: Complex64| eval.log_eval(z);
    let first = match centroid(&log_f, Complex64::new(x, 0.0), r) {
        Ok(c) => c,
        Err(Error::BoundaryProximity { .. }) => {
            match centroid(&log_f, Complex64::new(x, 0.0), 0.77 * r) {
                Ok(c) => c,
                Err(Error::BoundaryProximity { .. }) => return Ok(None),
                Err(e) => return Err(e),
            }
        }
        Err(e) => return Err(e),
    };
    if first.order <= 0 {
        return Ok(None);
    }
    let mut z = first.z.re;
    if !(z > gap.lo && z < gap.hi) {
        return Ok(None);
    }
    // recentre with a radius that keeps lattice points outside
    let edge = (z - gap.left).min(gap.right - z);
    let r2 = r.min(0.9 * edge);
    let second = centroid(&log_f, Complex64::new(z, 0.0), r2)?;
    if second.order != first.order {
        return Ok(None);
    }
    z = second.z.re;
    // a tight circle must see the same order, otherwise this was a cluster
    let tight = winding_circle_perturbed(&log_f, Complex64::new(z, 0.0), 1e-3 * r2)?.0;
    if tight != second.order {
        return Ok(None);
    }
    Ok(Some((z, second.order as u32)))
}

/// Bisection by box counts until each piece holds a single (possibly
/// multiple) root.
fn isolate(
    eval: &SecularEvaluator,
    gap: &Gap,
    lo: f64,
    hi: f64,
    count: i64,
    height: f64,
    depth: usize,
) -> Result<Vec<(f64, u32)>> {
    if count <= 0 {
        return Ok(Vec::new());
    }
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    if half <= height {
        let sub = Gap { lo, hi, ..*gap };
        if let Some(root) = refine(eval, mid, half, &sub)? {
            if i64::from(root.1) == count {
                return Ok(vec![root]);
            }
        }
    }
    if depth > 60 {
        return Err(Error::Unverifiable(format!("could not separate roots near {mid}")));
    }
    let log_f = |z: Complex64| eval.log_eval(z);
    let split = lo + (hi - lo) * 0.493_827_160_5;
    let h = height.min(hi - lo);
    let (left, _) = winding_rect_perturbed(&log_f, &Rect::around_interval(lo, split, h)?, 0.05 * h)?;
    let mut out = isolate(eval, gap, lo, split, left, h, depth + 1)?;
    out.extend(isolate(eval, gap, split, hi, count - left, h, depth + 1)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{circle_conditions, RoseGraph};

    #[test]
    fn lattice_examples() {
        let l = pole_lattice(&[1.0], 10.0);
        assert_eq!(l.len(), 3);
        assert!((l[2] - 3.0 * PI).abs() < 1e-14);
        let l = pole_lattice(&[1.0, 2.0], 4.0);
        assert_eq!(l.len(), 2);
        assert!((l[0] - PI / 2.0).abs() < 1e-15 && (l[1] - PI).abs() < 1e-15);
        let l = pole_lattice(&[1.0, 2.0], 5.0);
        assert_eq!(l.len(), 3);
        assert_eq!(pole_lattice(&[1.0, 1.0], 7.0).len(), 2);
    }

    fn assert_close(got: &[f64], want: &[f64], tol: f64) {
        assert_eq!(got.len(), want.len(), "{got:?} vs {want:?}");
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() <= tol, "{g} vs {w}");
        }
    }

    #[test]
    fn rose_b1_untwisted_roots() {
        let r = RoseGraph::new(vec![1.0], vec![0.0]).unwrap();
        let s = find_roots(&SecularEvaluator::rose(&r), 20.0, &RootOptions::default()).unwrap();
        assert_close(&s.positive_roots, &[2.0 * PI, 4.0 * PI, 6.0 * PI], 1e-10);
        assert_eq!(s.multiplicities, vec![1, 1, 1]);
    }

    #[test]
    fn circle_general_form_roots() {
        let g = MetricGraph::new(vec![1.0]).unwrap();
        let e = SecularEvaluator::massless(&circle_conditions(), &g).unwrap();
        let s = find_roots(&e, 20.0, &RootOptions::default()).unwrap();
        assert_close(&s.positive_roots, &[2.0 * PI, 4.0 * PI, 6.0 * PI], 1e-10);
        assert_eq!(s.count_with_multiplicity() as i64, s.winding_total());
    }

    #[test]
    fn twisted_rose_interlaces_and_matches_counts() {
        let r = RoseGraph::new(vec![1.0, 2f64.sqrt()], vec![0.4, 1.1]).unwrap();
        let scalar = find_roots(&SecularEvaluator::rose(&r), 15.0, &RootOptions::default()).unwrap();
        let full = find_roots(
            &SecularEvaluator::massless(&r.vertex_conditions(), &r.graph()).unwrap(),
            15.0,
            &RootOptions::default(),
        )
        .unwrap();
        assert_close(&full.positive_roots, &scalar.positive_roots, 1e-10);
        assert!(full.multiplicities.iter().all(|&m| m == 2));
        assert!(scalar.gap_counts().iter().all(|&c| c == 1));
        assert_eq!(scalar.count_with_multiplicity() as i64, scalar.winding_total());
    }

    #[test]
    fn roots_are_real_zeros() {
        let r = RoseGraph::new(vec![1.0, 2f64.sqrt()], vec![0.0, 0.0]).unwrap();
        let e = SecularEvaluator::rose_sum(&r);
        let s = find_roots(&e, 15.0, &RootOptions::default()).unwrap();
        for &k in &s.positive_roots {
            // sum of tan(k L / 2) vanishes on the untwisted rose
            let t: f64 = r.lengths().iter().map(|l| (k * l / 2.0).tan()).sum();
            assert!(t.abs() < 1e-9, "k={k} residual {t}");
        }
    }

    #[test]
    fn box_counts() {
        let g = MetricGraph::new(vec![1.0]).unwrap();
        let e = SecularEvaluator::massless(&circle_conditions(), &g).unwrap();
        let around = Rect::new(2.0 * PI - 0.5, 2.0 * PI + 0.5, -0.5, 0.5).unwrap();
        assert_eq!(count_zeros_box(&e, &around).unwrap(), 2);
        let empty = Rect::new(4.0, 5.0, -0.5, 0.5).unwrap();
        assert_eq!(count_zeros_box(&e, &empty).unwrap(), 0);
        let r = RoseGraph::new(vec![1.0], vec![0.4]).unwrap();
        let pole = Rect::new(PI - 0.1, PI + 0.1, -0.1, 0.1).unwrap();
        assert_eq!(count_zeros_box(&SecularEvaluator::rose(&r), &pole).unwrap(), -1);
    }

    #[test]
    fn massive_circle_keeps_lattice_roots() {
        let g = MetricGraph::new(vec![1.0]).unwrap();
        let s = massive_spectrum(&circle_conditions(), &g, 1.0, 20.0, &RootOptions::default()).unwrap();
        assert_close(&s.positive_roots, &[2.0 * PI, 4.0 * PI, 6.0 * PI], 1e-10);
        assert_close(&s.negative_energy_roots, &[2.0 * PI, 4.0 * PI, 6.0 * PI], 1e-10);
    }

    #[test]
    fn serial_and_parallel_agree() {
        let r = RoseGraph::new(vec![1.0, 1.7], vec![0.3, 2.0]).unwrap();
        let e = SecularEvaluator::rose(&r);
        let a = find_roots(&e, 30.0, &RootOptions::default()).unwrap();
        let b = find_roots(&e, 30.0, &RootOptions { parallel: false, ..Default::default() }).unwrap();
        assert_eq!(a, b);
    }
}
