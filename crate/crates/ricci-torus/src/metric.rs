//! Intrinsic distances of conformal metrics u * g_flat, approximated by
//! shortest paths in a weighted periodic grid graph.
//!
//! Nodes are the n^2 grid points.  For a stencil offset (a, b) the edge
//! weight is sqrt(a^2 + b^2) * h * (s[A] + s[B] + 4 s_mid) / 6 with
//! s = sqrt(u): Simpson quadrature of the conformal line element along the
//! straight segment.  The midpoint lies on the half-step lattice, so its
//! bilinear value is a dyadic average of one, two or four node values; the
//! endpoint sum is accumulated in canonical node order.  Together these make
//! the weight of an edge independent of its orientation, bit for bit.
//!
//! Graph distances can overestimate the continuum distance by at most the
//! stencil anisotropy factor (every direction is within half the largest
//! angular gap of a stencil direction) plus an O(h) snapping term, and can
//! underestimate only through the quadrature error of smooth integrands.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::field::ScalarField;

/// A point on the unit torus, stored with coordinates wrapped to [0, 1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusPoint {
    x: f64,
    y: f64,
}

impl TorusPoint {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::InvalidField(format!("non-finite point ({x}, {y})")));
        }
        Ok(TorusPoint { x: wrap_unit(x), y: wrap_unit(y) })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }
}

fn wrap_unit(t: f64) -> f64 {
    let r = t - t.floor();
    // t just below an integer can round the difference up to exactly 1.
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Distance in the flat unit-area torus: the shortest of the nine planar
/// representatives, via per-axis minimal displacement.
pub fn flat_distance(a: TorusPoint, b: TorusPoint) -> f64 {
    let dx = axis_gap(a.x, b.x);
    let dy = axis_gap(a.y, b.y);
    (dx * dx + dy * dy).sqrt()
}

fn axis_gap(p: f64, q: f64) -> f64 {
    let r = (p - q).abs();
    r.min(1.0 - r)
}

/// Shortest-path stencil: all coprime offsets with Chebyshev norm <= radius.
/// Radius 1, 2, 3 give 8, 16, 32 directions.
#[derive(Clone, Debug)]
pub struct StencilSpec {
    radius: u32,
    offsets: Vec<(i32, i32)>,
}

impl StencilSpec {
    pub fn new(radius: u32) -> Result<Self> {
        if !(1..=3).contains(&radius) {
            return Err(Error::InvalidStencil(radius));
        }
        let r = radius as i32;
        let mut offsets = Vec::new();
        for b in -r..=r {
            for a in -r..=r {
                if (a, b) != (0, 0) && gcd(a.unsigned_abs(), b.unsigned_abs()) == 1 {
                    offsets.push((a, b));
                }
            }
        }
        Ok(StencilSpec { radius, offsets })
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn offsets(&self) -> &[(i32, i32)] {
        &self.offsets
    }

    /// Worst-case ratio of a staircase path to the straight segment:
    /// sec(theta/2) for the largest angular gap theta between directions.
    pub fn max_overestimate_factor(&self) -> f64 {
        let mut angles: Vec<f64> =
            self.offsets.iter().map(|&(a, b)| (b as f64).atan2(a as f64)).collect();
        angles.sort_by(|p, q| p.partial_cmp(q).unwrap());
        let mut max_gap = 0.0f64;
        for i in 0..angles.len() {
            let next = if i + 1 == angles.len() {
                angles[0] + std::f64::consts::TAU
            } else {
                angles[i + 1]
            };
            max_gap = max_gap.max(next - angles[i]);
        }
        1.0 / (0.5 * max_gap).cos()
    }
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Probe point families for distance matrices.
#[derive(Clone, Debug)]
pub enum PointSet {
    /// Low-discrepancy Halton points, bases (2, 3), indices 1..=count.
    Halton { count: usize },
    /// The per_side^2 lattice (a/per_side, b/per_side).
    Lattice { per_side: usize },
    Explicit(Vec<TorusPoint>),
}

pub fn sample_points(set: &PointSet) -> Result<Vec<TorusPoint>> {
    match set {
        PointSet::Halton { count } => {
            if *count == 0 {
                return Err(Error::EmptyInput("halton point count".into()));
            }
            (1..=*count as u64)
                .map(|k| TorusPoint::new(radical_inverse(k, 2), radical_inverse(k, 3)))
                .collect()
        }
        PointSet::Lattice { per_side } => {
            if *per_side == 0 {
                return Err(Error::EmptyInput("lattice per_side".into()));
            }
            let m = *per_side;
            let mut pts = Vec::with_capacity(m * m);
            for b in 0..m {
                for a in 0..m {
                    pts.push(TorusPoint::new(a as f64 / m as f64, b as f64 / m as f64)?);
                }
            }
            Ok(pts)
        }
        PointSet::Explicit(pts) => {
            if pts.is_empty() {
                return Err(Error::EmptyInput("explicit point set".into()));
            }
            Ok(pts.clone())
        }
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Symmetric matrix of pairwise distances with the probe points attached.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    points: Vec<TorusPoint>,
    values: Vec<f64>,
}

impl DistanceMatrix {
    pub fn points(&self) -> &[TorusPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.points.len() + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Entrywise scaling; scaling a metric by c^2 scales distances by c.
    pub fn scale(&self, c: f64) -> DistanceMatrix {
        DistanceMatrix {
            points: self.points.clone(),
            values: self.values.iter().map(|&v| c * v).collect(),
        }
    }

    /// Restriction to the first k points.  A Halton prefix is itself a
    /// Halton set, so this supports stability checks under sample doubling
    /// without recomputing any distances.
    pub fn prefix(&self, k: usize) -> Result<DistanceMatrix> {
        let m = self.points.len();
        if k == 0 || k > m {
            return Err(Error::EmptyInput(format!(
                "prefix length {k} outside 1..={m}"
            )));
        }
        let mut values = Vec::with_capacity(k * k);
        for i in 0..k {
            values.extend_from_slice(&self.values[i * m..i * m + k]);
        }
        Ok(DistanceMatrix { points: self.points[..k].to_vec(), values })
    }

    /// Largest absolute entry difference against a matrix over the same
    /// points.
    pub fn uniform_gap(&self, other: &DistanceMatrix) -> Result<f64> {
        if self.points.len() != other.points.len()
            || self.points.iter().zip(&other.points).any(|(p, q)| p != q)
        {
            return Err(Error::PointSetMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
    }

    /// CSV with one row per point: its coordinates, then its matrix row.
    pub fn to_csv(&self) -> String {
        let m = self.points.len();
        let mut out = String::from("x,y");
        for j in 0..m {
            let _ = write!(out, ",d{j}");
        }
        out.push('\n');
        for (i, p) in self.points.iter().enumerate() {
            let _ = write!(out, "{:.16e},{:.16e}", p.x, p.y);
            for j in 0..m {
                let _ = write!(out, ",{:.16e}", self.values[i * m + j]);
            }
            out.push('\n');
        }
        out
    }
}

/// Pairwise intrinsic distances of the metric u * g_flat between the given
/// points, each snapped to its nearest grid node.
///
/// The matrix is exactly symmetric (each pair is measured once, from the
/// smaller node index) and satisfies the triangle inequality exactly in
/// floating point (a min-plus closure is applied until stable).
pub fn conformal_distance_matrix(
    u: &ScalarField,
    points: &[TorusPoint],
    stencil: &StencilSpec,
) -> Result<DistanceMatrix> {
    if points.is_empty() {
        return Err(Error::EmptyInput("distance matrix point set".into()));
    }
    let min = u.min_value();
    if min <= 0.0 {
        return Err(Error::NonPositiveField(min));
    }
    let n = u.n();
    let s: Vec<f64> = u.values().iter().map(|&v| v.sqrt()).collect();
    let edges = tabulate_edges(stencil, n);

    let nodes: Vec<usize> = points.iter().map(|&p| node_index(p, n)).collect();
    let mut unique = nodes.clone();
    unique.sort_unstable();
    unique.dedup();
    let pos: HashMap<usize, usize> = unique.iter().enumerate().map(|(i, &v)| (v, i)).collect();

    // One single-source pass per distinct node; keep only the probe columns.
    let mut rows: HashMap<usize, Vec<f64>> = HashMap::new();
    for &src in &unique {
        let dist = dijkstra(&s, n, &edges, src);
        rows.insert(src, unique.iter().map(|&t| dist[t]).collect());
    }

    let m = points.len();
    let mut values = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            let (a, b) = (nodes[i], nodes[j]);
            if a == b {
                continue;
            }
            let lo = a.min(b);
            let hi = a.max(b);
            values[i * m + j] = rows[&lo][pos[&hi]];
        }
    }
    min_plus_closure(&mut values, m);
    Ok(DistanceMatrix { points: points.to_vec(), values })
}

fn node_index(p: TorusPoint, n: usize) -> usize {
    let nf = n as f64;
    let ix = (p.x() * nf).round() as usize % n;
    let iy = (p.y() * nf).round() as usize % n;
    iy * n + ix
}

fn tabulate_edges(stencil: &StencilSpec, n: usize) -> Vec<(i32, i32, f64)> {
    let h = 1.0 / n as f64;
    stencil
        .offsets()
        .iter()
        .map(|&(a, b)| (a, b, ((a * a + b * b) as f64).sqrt() * h))
        .collect()
}

#[inline]
fn wrap_add(i: usize, d: i32, m: usize) -> usize {
    (i as i64 + d as i64).rem_euclid(m as i64) as usize
}

/// Weight of the edge from node a = (ax, ay) along offset (dx, dy) to node
/// b.  Orientation independent: the midpoint half-step coordinates satisfy
/// (2 bx - dx) mod 2n = (2 ax + dx) mod 2n, and the endpoint sum uses the
/// smaller node index first.
#[inline]
fn edge_weight(
    s: &[f64],
    n: usize,
    a: usize,
    b: usize,
    ax: usize,
    ay: usize,
    dx: i32,
    dy: i32,
    len_h: f64,
) -> f64 {
    let lo = a.min(b);
    let hi = a.max(b);
    let mx2 = wrap_add(2 * ax, dx, 2 * n);
    let my2 = wrap_add(2 * ay, dy, 2 * n);
    let sm = match (mx2 & 1, my2 & 1) {
        (0, 0) => s[(my2 >> 1) * n + (mx2 >> 1)],
        (1, 0) => {
            let y = (my2 >> 1) * n;
            0.5 * (s[y + (mx2 - 1) / 2] + s[y + ((mx2 + 1) / 2) % n])
        }
        (0, 1) => {
            let x = mx2 >> 1;
            0.5 * (s[((my2 - 1) / 2) * n + x] + s[(((my2 + 1) / 2) % n) * n + x])
        }
        _ => {
            let x0 = (mx2 - 1) / 2;
            let x1 = ((mx2 + 1) / 2) % n;
            let y0 = ((my2 - 1) / 2) * n;
            let y1 = (((my2 + 1) / 2) % n) * n;
            0.25 * ((s[y0 + x0] + s[y0 + x1]) + (s[y1 + x0] + s[y1 + x1]))
        }
    };
    len_h * ((s[lo] + s[hi] + 4.0 * sm) / 6.0)
}

struct HeapEntry {
    dist: f64,
    node: u32,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.dist == other.dist && self.node == other.node
    }
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap, we want the smallest distance.
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap()
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source shortest paths over the stencil graph.  With non-negative
/// weights and monotone floating-point addition this computes, exactly, the
/// minimum over all paths of the left-to-right sum of edge weights, so any
/// label-correcting method must reproduce it bit for bit.
fn dijkstra(s: &[f64], n: usize, edges: &[(i32, i32, f64)], source: usize) -> Vec<f64> {
    let nn = n * n;
    let mut dist = vec![f64::INFINITY; nn];
    let mut done = vec![false; nn];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapEntry { dist: 0.0, node: source as u32 });
    while let Some(HeapEntry { dist: d, node }) = heap.pop() {
        let a = node as usize;
        if done[a] {
            continue;
        }
        done[a] = true;
        let ax = a % n;
        let ay = a / n;
        for &(dx, dy, len_h) in edges {
            let b = wrap_add(ay, dy, n) * n + wrap_add(ax, dx, n);
            if done[b] {
                continue;
            }
            let nd = d + edge_weight(s, n, a, b, ax, ay, dx, dy, len_h);
            if nd < dist[b] {
                dist[b] = nd;
                heap.push(HeapEntry { dist: nd, node: b as u32 });
            }
        }
    }
    dist
}

/// Jacobi min-plus sweeps until the matrix is a fixed point, which makes the
/// triangle inequality hold exactly in floating point and preserves symmetry.
fn min_plus_closure(d: &mut [f64], m: usize) {
    loop {
        let mut next = d.to_vec();
        let mut changed = false;
        for i in 0..m {
            for j in 0..m {
                let mut best = d[i * m + j];
                for k in 0..m {
                    let via = d[i * m + k] + d[k * m + j];
                    if via < best {
                        best = via;
                    }
                }
                if best < d[i * m + j] {
                    next[i * m + j] = best;
                    changed = true;
                }
            }
        }
        d.copy_from_slice(&next);
        if !changed {
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GridSpec;
    use std::f64::consts::PI;

    fn grid(n: usize) -> GridSpec {
        GridSpec::new(n).unwrap()
    }

    fn pt(x: f64, y: f64) -> TorusPoint {
        TorusPoint::new(x, y).unwrap()
    }

    fn smooth_u(n: usize) -> ScalarField {
        ScalarField::from_fn(grid(n), |x, y| {
            1.4 + 0.5 * (2.0 * PI * x).sin() * (2.0 * PI * y).cos() + 0.2 * (4.0 * PI * y).sin()
        })
        .unwrap()
    }

    #[test]
    fn points_wrap_into_unit_square() {
        let p = pt(1.25, -0.25);
        assert_eq!((p.x(), p.y()), (0.25, 0.75));
        assert!(TorusPoint::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn flat_distance_matches_nine_translate_oracle() {
        let pairs = [
            (pt(0.1, 0.1), pt(0.9, 0.9)),
            (pt(0.0, 0.0), pt(0.5, 0.5)),
            (pt(0.3, 0.8), pt(0.7, 0.1)),
            (pt(0.25, 0.0), pt(0.25, 0.0)),
        ];
        for (a, b) in pairs {
            let mut best = f64::INFINITY;
            for tx in -1..=1 {
                for ty in -1..=1 {
                    let dx = a.x() - b.x() + tx as f64;
                    let dy = a.y() - b.y() + ty as f64;
                    best = best.min((dx * dx + dy * dy).sqrt());
                }
            }
            assert!((flat_distance(a, b) - best).abs() <= 1e-15);
            assert_eq!(flat_distance(a, b), flat_distance(b, a));
        }
        let d = flat_distance(pt(0.1, 0.1), pt(0.9, 0.9));
        assert!((d - 0.08f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn stencil_directions_and_anisotropy() {
        for (radius, count, factor) in [(1u32, 8, 1.0824), (2, 16, 1.0275), (3, 32, 1.0131)] {
            let st = StencilSpec::new(radius).unwrap();
            assert_eq!(st.offsets().len(), count);
            for &(a, b) in st.offsets() {
                assert!(a.unsigned_abs().max(b.unsigned_abs()) <= radius);
                assert_eq!(gcd(a.unsigned_abs(), b.unsigned_abs()), 1);
            }
            assert!((st.max_overestimate_factor() - factor).abs() < 1e-3);
        }
        assert!(matches!(StencilSpec::new(0), Err(Error::InvalidStencil(0))));
        assert!(matches!(StencilSpec::new(4), Err(Error::InvalidStencil(4))));
    }

    #[test]
    fn halton_points_start_with_known_values() {
        let pts = sample_points(&PointSet::Halton { count: 3 }).unwrap();
        let expect = [(0.5, 1.0 / 3.0), (0.25, 2.0 / 3.0), (0.75, 1.0 / 9.0)];
        for (p, (x, y)) in pts.iter().zip(expect) {
            assert!((p.x() - x).abs() < 1e-15 && (p.y() - y).abs() < 1e-15);
        }
        assert!(sample_points(&PointSet::Halton { count: 0 }).is_err());
    }

    #[test]
    fn flat_metric_axis_distance_is_exact() {
        let u = ScalarField::constant(grid(64), 1.0).unwrap();
        let pts = vec![pt(0.0, 0.0), pt(0.5, 0.0)];
        let st = StencilSpec::new(2).unwrap();
        let d = conformal_distance_matrix(&u, &pts, &st).unwrap();
        assert_eq!(d.get(0, 1), 0.5);
        assert_eq!(d.get(0, 0), 0.0);
    }

    #[test]
    fn flat_metric_distances_bracket_the_continuum() {
        let n = 64;
        let h = 1.0 / n as f64;
        let u = ScalarField::constant(grid(n), 1.0).unwrap();
        let pts = sample_points(&PointSet::Lattice { per_side: 3 }).unwrap();
        let st = StencilSpec::new(2).unwrap();
        let factor = st.max_overestimate_factor();
        let d = conformal_distance_matrix(&u, &pts, &st).unwrap();
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                let flat = flat_distance(pts[i], pts[j]);
                let got = d.get(i, j);
                assert!(got >= flat - 2.0 * h, "({i},{j}): {got} vs {flat}");
                assert!(got <= factor * flat + 4.0 * h, "({i},{j}): {got} vs {flat}");
            }
        }
    }

    #[test]
    fn quadrupling_u_doubles_distances_exactly() {
        let n = 64;
        let u = smooth_u(n);
        let u4 = ScalarField::from_values(
            u.grid(),
            u.values().iter().map(|&v| 4.0 * v).collect(),
        )
        .unwrap();
        let pts = sample_points(&PointSet::Halton { count: 6 }).unwrap();
        let st = StencilSpec::new(2).unwrap();
        let d1 = conformal_distance_matrix(&u, &pts, &st).unwrap();
        let d4 = conformal_distance_matrix(&u4, &pts, &st).unwrap();
        assert_eq!(d4, d1.scale(2.0));
    }

    #[test]
    fn distances_are_monotone_in_the_conformal_factor() {
        let n = 32;
        let u = smooth_u(n);
        let bigger = ScalarField::from_values(
            u.grid(),
            u.values().iter().map(|&v| v + 0.3).collect(),
        )
        .unwrap();
        let pts = sample_points(&PointSet::Halton { count: 5 }).unwrap();
        let st = StencilSpec::new(1).unwrap();
        let d = conformal_distance_matrix(&u, &pts, &st).unwrap();
        let db = conformal_distance_matrix(&bigger, &pts, &st).unwrap();
        for (a, b) in d.values().iter().zip(db.values()) {
            assert!(b >= a);
        }
    }

    #[test]
    fn grid_translation_leaves_the_matrix_bit_identical() {
        let n = 32;
        let h = 1.0 / n as f64;
        let u = smooth_u(n);
        let (kx, ky) = (9usize, 22usize);
        let ut = u.translated(kx, ky);
        // Dyadic probe coordinates keep the translated points exact.
        let base = [(0.0, 0.0), (0.25, 0.125), (0.5, 0.75), (0.8125, 0.375)];
        let pts: Vec<TorusPoint> = base.iter().map(|&(x, y)| pt(x, y)).collect();
        let shifted: Vec<TorusPoint> = base
            .iter()
            .map(|&(x, y)| pt(x + kx as f64 * h, y + ky as f64 * h))
            .collect();
        let st = StencilSpec::new(2).unwrap();
        let d = conformal_distance_matrix(&u, &pts, &st).unwrap();
        let dt = conformal_distance_matrix(&ut, &shifted, &st).unwrap();
        assert_eq!(d.values(), dt.values());
    }

    #[test]
    fn matrix_satisfies_metric_axioms_exactly() {
        let n = 32;
        let u = smooth_u(n);
        let pts = sample_points(&PointSet::Halton { count: 8 }).unwrap();
        let st = StencilSpec::new(2).unwrap();
        let d = conformal_distance_matrix(&u, &pts, &st).unwrap();
        let m = pts.len();
        for i in 0..m {
            assert_eq!(d.get(i, i), 0.0);
            for j in 0..m {
                assert_eq!(d.get(i, j), d.get(j, i));
                assert!(d.get(i, j) >= 0.0);
                for k in 0..m {
                    assert!(d.get(i, j) <= d.get(i, k) + d.get(k, j));
                }
            }
        }
    }

    #[test]
    fn bellman_ford_sweep_oracle_ties_dijkstra_exactly() {
        let n = 32;
        let u = smooth_u(n);
        let s: Vec<f64> = u.values().iter().map(|&v| v.sqrt()).collect();
        let st = StencilSpec::new(2).unwrap();
        let edges = tabulate_edges(&st, n);
        let src = 5 * n + 17;
        let dj = dijkstra(&s, n, &edges, src);
        let mut bf = vec![f64::INFINITY; n * n];
        bf[src] = 0.0;
        loop {
            let mut changed = false;
            for a in 0..n * n {
                if bf[a].is_infinite() {
                    continue;
                }
                let ax = a % n;
                let ay = a / n;
                for &(dx, dy, len_h) in &edges {
                    let b = wrap_add(ay, dy, n) * n + wrap_add(ax, dx, n);
                    let nd = bf[a] + edge_weight(&s, n, a, b, ax, ay, dx, dy, len_h);
                    if nd < bf[b] {
                        bf[b] = nd;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        assert_eq!(dj, bf);
    }

    #[test]
    fn rejects_bad_inputs() {
        let u = ScalarField::from_fn(grid(8), |x, _| x - 0.4).unwrap();
        let st = StencilSpec::new(1).unwrap();
        let pts = vec![pt(0.0, 0.0)];
        assert!(matches!(
            conformal_distance_matrix(&u, &pts, &st),
            Err(Error::NonPositiveField(_))
        ));
        let ok = ScalarField::constant(grid(8), 1.0).unwrap();
        assert!(matches!(
            conformal_distance_matrix(&ok, &[], &st),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn uniform_gap_compares_matrices_over_identical_points() {
        let u = ScalarField::constant(grid(16), 1.0).unwrap();
        let st = StencilSpec::new(1).unwrap();
        let pts = sample_points(&PointSet::Halton { count: 4 }).unwrap();
        let d = conformal_distance_matrix(&u, &pts, &st).unwrap();
        assert_eq!(d.uniform_gap(&d).unwrap(), 0.0);
        let gap = d.uniform_gap(&d.scale(2.0)).unwrap();
        let max = d.values().iter().cloned().fold(0.0f64, f64::max);
        assert_eq!(gap, max);
        let other = conformal_distance_matrix(
            &u,
            &sample_points(&PointSet::Halton { count: 5 }).unwrap(),
            &st,
        )
        .unwrap();
        assert!(matches!(d.uniform_gap(&other), Err(Error::PointSetMismatch)));
    }

    #[test]
    fn csv_layout_holds_coordinates_then_rows() {
        let u = ScalarField::constant(grid(16), 1.0).unwrap();
        let st = StencilSpec::new(1).unwrap();
        let pts = vec![pt(0.0, 0.0), pt(0.5, 0.0)];
        let d = conformal_distance_matrix(&u, &pts, &st).unwrap();
        let csv = d.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "x,y,d0,d1");
        let row: Vec<f64> = lines[1].split(',').map(|t| t.parse().unwrap()).collect();
        assert_eq!(row, vec![0.0, 0.0, 0.0, 0.5]);
    }
}
