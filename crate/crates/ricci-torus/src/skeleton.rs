//! Thick-skeleton initial data.
//!
//! For order i, the skeleton is the union of minimizing flat geodesics
//! between lattice points (a/i, b/i).  The initial conformal factor is 1 on
//! a band of the given width around the skeleton and climbs through a C^2
//! quintic ramp to exactly 2 outside the band, so total area stays close to
//! 2 while the skeleton region keeps the unit flat metric.

use crate::error::{Error, Result};
use crate::field::{GridSpec, ScalarField};
use crate::metric::TorusPoint;

/// Which lattice pairs contribute geodesic segments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SkeletonMode {
    /// Every unordered pair of lattice points (the skeleton used throughout).
    AllPairs,
    /// Only pairs at the minimal nonzero lattice distance; a sparse variant
    /// kept for exploration.
    NearestNeighbors,
}

/// How lattice points relate to grid nodes when sampling fields.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Alignment {
    /// Require every lattice point to lie exactly on a grid node.
    Strict,
    /// Snap lattice points to their nearest grid nodes and rebuild the
    /// segments from the snapped points.
    Snap,
}

/// A minimizing geodesic between two lattice points, stored as a start point
/// and the minimal displacement vector (components in (-1/2, 1/2], ties
/// resolved to +1/2).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeodesicSegment {
    start: TorusPoint,
    dx: f64,
    dy: f64,
}

impl GeodesicSegment {
    pub fn start(&self) -> TorusPoint {
        self.start
    }

    pub fn displacement(&self) -> (f64, f64) {
        (self.dx, self.dy)
    }

    pub fn length(&self) -> f64 {
        (self.dx * self.dx + self.dy * self.dy).sqrt()
    }
}

#[derive(Clone, Debug)]
pub struct Skeleton {
    order: u32,
    mode: SkeletonMode,
    lattice: Vec<TorusPoint>,
    segments: Vec<GeodesicSegment>,
}

impl Skeleton {
    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn mode(&self) -> SkeletonMode {
        self.mode
    }

    pub fn lattice(&self) -> &[TorusPoint] {
        &self.lattice
    }

    pub fn segments(&self) -> &[GeodesicSegment] {
        &self.segments
    }

    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(|s| s.length()).sum()
    }

    /// The skeleton with every lattice point snapped to its nearest grid
    /// node and segments rebuilt from the snapped points.
    pub fn snapped_to(&self, grid: GridSpec) -> Result<Skeleton> {
        let n = grid.n();
        let nf = n as f64;
        let snapped: Vec<TorusPoint> = self
            .lattice
            .iter()
            .map(|p| {
                TorusPoint::new((p.x() * nf).round() / nf, (p.y() * nf).round() / nf)
            })
            .collect::<Result<_>>()?;
        for (a, pa) in snapped.iter().enumerate() {
            for pb in snapped.iter().take(a) {
                if pa == pb {
                    return Err(Error::ResolutionTooCoarse(format!(
                        "order-{} lattice points collide on an n = {} grid",
                        self.order, n
                    )));
                }
            }
        }
        Ok(assemble(self.order, self.mode, snapped))
    }
}

/// Builds the order-i skeleton: i^2 lattice points and their minimizing
/// geodesics.  For i = 1 the skeleton is the single lattice point.
pub fn build_skeleton(i: u32, mode: SkeletonMode) -> Result<Skeleton> {
    if i == 0 || i > 64 {
        return Err(Error::InvalidOrder(i));
    }
    let mut lattice = Vec::with_capacity((i * i) as usize);
    for b in 0..i {
        for a in 0..i {
            lattice.push(TorusPoint::new(a as f64 / i as f64, b as f64 / i as f64)?);
        }
    }
    Ok(assemble(i, mode, lattice))
}

fn assemble(order: u32, mode: SkeletonMode, lattice: Vec<TorusPoint>) -> Skeleton {
    let mut segments = Vec::new();
    for (b, pb) in lattice.iter().enumerate() {
        for pa in lattice.iter().take(b) {
            let dx = minimal_component(pb.x() - pa.x());
            let dy = minimal_component(pb.y() - pa.y());
            segments.push(GeodesicSegment { start: *pa, dx, dy });
        }
    }
    if mode == SkeletonMode::NearestNeighbors && !segments.is_empty() {
        let min_len = segments.iter().map(GeodesicSegment::length).fold(f64::INFINITY, f64::min);
        segments.retain(|s| s.length() <= min_len * (1.0 + 1e-12));
    }
    Skeleton { order, mode, lattice, segments }
}

/// Wraps a coordinate difference to (-1/2, 1/2]; a half-period tie keeps the
/// positive representative.
fn minimal_component(t: f64) -> f64 {
    let mut r = t - t.floor();
    if r >= 1.0 {
        r = 0.0;
    }
    if r > 0.5 {
        r -= 1.0;
    }
    r
}

/// Flat distance from a point to the skeleton: the minimum over all segments
/// (and, when there are no segments, over the lattice points) of the
/// point-to-segment distance among the nine planar translates.
pub fn distance_to_skeleton(p: TorusPoint, skeleton: &Skeleton) -> f64 {
    let probes = translated_probes(p);
    best_distance_sq(&probes, &seg_records(skeleton), skeleton).sqrt()
}

struct SegRecord {
    sx: f64,
    sy: f64,
    dx: f64,
    dy: f64,
    inv_len2: f64,
}

fn seg_records(skeleton: &Skeleton) -> Vec<SegRecord> {
    skeleton
        .segments
        .iter()
        .map(|s| {
            let len2 = s.dx * s.dx + s.dy * s.dy;
            SegRecord {
                sx: s.start.x(),
                sy: s.start.y(),
                dx: s.dx,
                dy: s.dy,
                inv_len2: if len2 > 0.0 { 1.0 / len2 } else { 0.0 },
            }
        })
        .collect()
}

fn translated_probes(p: TorusPoint) -> [(f64, f64); 9] {
    let mut out = [(0.0, 0.0); 9];
    let mut k = 0;
    for ty in -1..=1 {
        for tx in -1..=1 {
            out[k] = (p.x() + tx as f64, p.y() + ty as f64);
            k += 1;
        }
    }
    out
}

fn best_distance_sq(probes: &[(f64, f64); 9], records: &[SegRecord], skeleton: &Skeleton) -> f64 {
    let mut best = f64::INFINITY;
    if records.is_empty() {
        for q in &skeleton.lattice {
            for &(px, py) in probes {
                let rx = px - q.x();
                let ry = py - q.y();
                best = best.min(rx * rx + ry * ry);
            }
        }
        return best;
    }
    for r in records {
        for &(px, py) in probes {
            let rx = px - r.sx;
            let ry = py - r.sy;
            let t = ((rx * r.dx + ry * r.dy) * r.inv_len2).clamp(0.0, 1.0);
            let qx = rx - t * r.dx;
            let qy = ry - t * r.dy;
            best = best.min(qx * qx + qy * qy);
        }
    }
    best
}

/// Samples the skeleton distance at every grid node.
pub fn skeleton_distance_field(grid: GridSpec, skeleton: &Skeleton) -> ScalarField {
    let n = grid.n();
    let h = grid.h();
    let records = seg_records(skeleton);
    let mut values = Vec::with_capacity(n * n);
    for iy in 0..n {
        for ix in 0..n {
            let p = TorusPoint::new(ix as f64 * h, iy as f64 * h).expect("grid node");
            values.push(best_distance_sq(&translated_probes(p), &records, skeleton).sqrt());
        }
    }
    ScalarField::from_values_unchecked(grid, values)
}

/// C^2 quintic ramp: 0 for s <= 0, 1 for s >= 1.
fn smoothstep_quintic(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
    }
}

/// The initial conformal factor u0 = 1 + psi((d - width) / ramp): exactly 1
/// within `width` of the skeleton and exactly 2 beyond `width + ramp`.
pub fn build_initial_factor(
    grid: GridSpec,
    skeleton: &Skeleton,
    width: f64,
    ramp: f64,
    alignment: Alignment,
) -> Result<ScalarField> {
    let skeleton = aligned_skeleton(grid, skeleton, alignment)?;
    check_band(grid, width, ramp)?;
    let dist = skeleton_distance_field(grid, &skeleton);
    let values: Vec<f64> =
        dist.values().iter().map(|&d| 1.0 + smoothstep_quintic((d - width) / ramp)).collect();
    Ok(ScalarField::from_values_unchecked(grid, values))
}

fn aligned_skeleton(grid: GridSpec, skeleton: &Skeleton, alignment: Alignment) -> Result<Skeleton> {
    match alignment {
        Alignment::Snap => skeleton.snapped_to(grid),
        Alignment::Strict => {
            let nf = grid.n() as f64;
            for p in &skeleton.lattice {
                let (gx, gy) = (p.x() * nf, p.y() * nf);
                if (gx - gx.round()).abs() > 1e-9 || (gy - gy.round()).abs() > 1e-9 {
                    return Err(Error::GridAlignment { n: grid.n(), order: skeleton.order });
                }
            }
            Ok(skeleton.clone())
        }
    }
}

fn check_band(grid: GridSpec, width: f64, ramp: f64) -> Result<()> {
    if !width.is_finite() || !ramp.is_finite() || width <= 0.0 || ramp <= 0.0 {
        return Err(Error::ConfigInvalid(format!(
            "band width {width} and ramp {ramp} must be positive"
        )));
    }
    let floor = 3.0 * grid.h();
    if width + ramp < floor {
        return Err(Error::ResolutionTooCoarse(format!(
            "band width {width} plus ramp {ramp} below 3h = {floor} at n = {}",
            grid.n()
        )));
    }
    Ok(())
}

/// Result of tuning the band width against a target area deficit.
#[derive(Clone, Copy, Debug)]
pub struct CalibrationResult {
    pub width: f64,
    pub ramp: f64,
    pub area: f64,
    pub evaluations: u32,
}

/// Finds the largest band width (with ramp = width) whose initial factor
/// keeps total area >= 2 - target_gap.  Area decreases monotonically in the
/// width, so a bisection on [1.5 h, 1/4] converges; the returned width is
/// always feasible.
pub fn calibrate_width(
    grid: GridSpec,
    skeleton: &Skeleton,
    target_gap: f64,
    alignment: Alignment,
) -> Result<CalibrationResult> {
    if !target_gap.is_finite() || target_gap <= 0.0 || target_gap >= 1.0 {
        return Err(Error::ConfigInvalid(format!(
            "target area gap {target_gap} must lie in (0, 1)"
        )));
    }
    let skeleton = aligned_skeleton(grid, skeleton, alignment)?;
    let dist = skeleton_distance_field(grid, &skeleton);
    let h2 = grid.h() * grid.h();
    let mut evaluations = 0u32;
    let mut area_at = |w: f64| {
        evaluations += 1;
        let mut acc = 0.0;
        for &d in dist.values() {
            acc += 1.0 + smoothstep_quintic((d - w) / w);
        }
        acc * h2
    };
    let floor = 2.0 - target_gap;
    let mut lo = 1.5 * grid.h();
    let mut hi = 0.25;
    if lo >= hi {
        return Err(Error::ResolutionTooCoarse(format!(
            "grid n = {} leaves no admissible band width",
            grid.n()
        )));
    }
    let area_lo = area_at(lo);
    if area_lo < floor {
        return Err(Error::ResolutionTooCoarse(format!(
            "thinnest resolvable band already leaves area {area_lo} < {floor}"
        )));
    }
    let mut area = area_lo;
    let area_hi = area_at(hi);
    if area_hi >= floor {
        return Ok(CalibrationResult { width: hi, ramp: hi, area: area_hi, evaluations });
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        let a = area_at(mid);
        if a >= floor {
            lo = mid;
            area = a;
        } else {
            hi = mid;
        }
    }
    Ok(CalibrationResult { width: lo, ramp: lo, area, evaluations })
}
