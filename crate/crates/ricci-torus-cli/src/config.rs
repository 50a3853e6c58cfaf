//! Experiment configuration: JSON with strict unknown-key rejection.
//!
//! A silent typo in a tolerance or resolution key would invalidate every
//! claim the report makes, so parsing is deliberately unforgiving: unknown
//! keys are errors, and every (i, n, gap) triple is dry-run through the
//! width calibration before any stepping can begin.

use ricci_torus::skeleton::{build_skeleton, calibrate_width, Alignment, SkeletonMode};
use ricci_torus::{
    sample_points, Error, GridSpec, PointSet, Result, Scheme, SchemeConfig, StencilSpec,
    TorusPoint,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Imex,
    Rk4,
}

impl From<SchemeKind> for Scheme {
    fn from(k: SchemeKind) -> Scheme {
        match k {
            SchemeKind::Imex => Scheme::Imex,
            SchemeKind::Rk4 => Scheme::Rk4,
        }
    }
}

/// A per-lattice-order value: either one number for every i or an explicit
/// map keyed by the decimal representation of i.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerOrder<T> {
    Single(T),
    Map(BTreeMap<String, T>),
}

impl<T: Copy> PerOrder<T> {
    pub fn resolve(&self, i: u32, field: &str) -> Result<T> {
        match self {
            PerOrder::Single(v) => Ok(*v),
            PerOrder::Map(m) => m.get(&i.to_string()).copied().ok_or_else(|| {
                Error::ConfigInvalid(format!("{field} has no entry for i = {i}"))
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointKind {
    Halton,
    Lattice,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointsConfig {
    #[serde(default = "default_point_kind")]
    pub kind: PointKind,
    #[serde(default = "default_point_count")]
    pub count: usize,
    /// Consumed only by the random kind; halton and lattice are seedless.
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_point_kind() -> PointKind {
    PointKind::Halton
}
fn default_point_count() -> usize {
    64
}
fn default_seed() -> u64 {
    7
}
fn default_points() -> PointsConfig {
    PointsConfig { kind: default_point_kind(), count: default_point_count(), seed: default_seed() }
}
fn default_scheme() -> SchemeKind {
    SchemeKind::Imex
}
fn default_cfl() -> f64 {
    0.5
}
fn default_stencil() -> u32 {
    2
}
fn default_t_star() -> f64 {
    0.2
}
fn default_out_dir() -> String {
    "out".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub i_list: Vec<u32>,
    pub n: PerOrder<usize>,
    /// Upper bound on the initial area deficit 2 - area(u0) per order; the
    /// calibrated band is the widest one keeping the deficit below this.
    /// None means 1/i (1/2 at i = 1, where 1/i is the degenerate maximum).
    #[serde(default)]
    pub target_gap: Option<PerOrder<f64>>,
    #[serde(default = "default_scheme")]
    pub scheme: SchemeKind,
    #[serde(default)]
    pub imex_dt: Option<f64>,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    /// Off by default: band-calibrated data rings past the 1e-8 tolerance
    /// on the first few steps, and the guard treats that as fatal.
    #[serde(default)]
    pub max_principle_guard: bool,
    #[serde(default = "default_stencil")]
    pub stencil_radius: u32,
    pub t_end: f64,
    #[serde(default = "default_t_star")]
    pub t_star: f64,
    #[serde(default = "default_points")]
    pub points: PointsConfig,
    /// Times at which distance matrices are measured; 0 means the initial
    /// metric. None means [0, t_star]. Empty disables distance work.
    #[serde(default)]
    pub distance_times: Option<Vec<f64>>,
    #[serde(default = "default_out_dir")]
    pub out_dir: String,
    #[serde(default)]
    pub emit_snapshots: bool,
}

impl ExperimentConfig {
    pub fn gap_for(&self, i: u32) -> Result<f64> {
        match &self.target_gap {
            // 1/i, except that i = 1 would ask for area exactly 1, the
            // degenerate endpoint of the admissible range; 1/2 yields the
            // same maximal-width band (width caps at 1/4 long before the
            // deficit reaches either value).
            None => Ok(if i == 1 { 0.5 } else { 1.0 / i as f64 }),
            Some(g) => g.resolve(i, "target_gap"),
        }
    }

    pub fn n_for(&self, i: u32) -> Result<usize> {
        self.n.resolve(i, "n")
    }

    pub fn scheme_config(&self) -> SchemeConfig {
        SchemeConfig {
            scheme: self.scheme.into(),
            cfl: self.cfl,
            imex_dt: self.imex_dt,
            max_principle_guard: self.max_principle_guard,
        }
    }

    pub fn distance_times(&self) -> Vec<f64> {
        match &self.distance_times {
            Some(ts) => ts.clone(),
            None => {
                if self.t_star > 0.0 {
                    vec![0.0, self.t_star]
                } else {
                    vec![0.0]
                }
            }
        }
    }

    /// The measurement points: the configured sample set followed by the
    /// i x i lattice snapped to the grid, so block prefixes of a distance
    /// matrix select pure sample points.
    pub fn measurement_points(&self, i: u32, n: usize) -> Result<Vec<TorusPoint>> {
        let mut pts = match self.points.kind {
            PointKind::Halton => sample_points(&PointSet::Halton { count: self.points.count })?,
            PointKind::Lattice => {
                let per_side = (self.points.count as f64).sqrt().ceil() as usize;
                let all = sample_points(&PointSet::Lattice { per_side })?;
                all.into_iter().take(self.points.count).collect()
            }
            PointKind::Random => {
                use rand::{Rng, SeedableRng};
                if self.points.count == 0 {
                    return Err(Error::EmptyInput("random point count".into()));
                }
                let mut rng = rand::rngs::StdRng::seed_from_u64(self.points.seed);
                (0..self.points.count)
                    .map(|_| TorusPoint::new(rng.gen::<f64>(), rng.gen::<f64>()))
                    .collect::<Result<Vec<_>>>()?
            }
        };
        let snap = |x: f64| (x * n as f64).round() / n as f64 % 1.0;
        for a in 0..i {
            for b in 0..i {
                pts.push(TorusPoint::new(
                    snap(a as f64 / i as f64),
                    snap(b as f64 / i as f64),
                )?);
            }
        }
        Ok(pts)
    }

    pub fn validate(&self) -> Result<()> {
        if self.i_list.is_empty() {
            return Err(Error::ConfigInvalid("i_list is empty".into()));
        }
        for w in self.i_list.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::ConfigInvalid(
                    "i_list must be strictly increasing".into(),
                ));
            }
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::ConfigInvalid(format!("t_end {} must be positive", self.t_end)));
        }
        if !(self.t_star.is_finite() && self.t_star > 0.0 && self.t_star <= self.t_end) {
            return Err(Error::ConfigInvalid(format!(
                "t_star {} must lie in (0, t_end = {}]",
                self.t_star, self.t_end
            )));
        }
        self.scheme_config().validate()?;
        StencilSpec::new(self.stencil_radius)?;
        if self.points.count == 0 {
            return Err(Error::ConfigInvalid("points.count must be positive".into()));
        }
        if let Some(ts) = &self.distance_times {
            for w in ts.windows(2) {
                if !(w[0] < w[1]) {
                    return Err(Error::ConfigInvalid(
                        "distance_times must be strictly increasing".into(),
                    ));
                }
            }
            for &t in ts {
                if !(t.is_finite() && (0.0..=self.t_end).contains(&t)) {
                    return Err(Error::ConfigInvalid(format!(
                        "distance time {t} outside [0, t_end = {}]",
                        self.t_end
                    )));
                }
            }
        }
        // Feasibility, before any stepping: each (i, n, gap) must calibrate.
        for &i in &self.i_list {
            let n = self.n_for(i)?;
            let grid = GridSpec::new(n)
                .map_err(|e| Error::ConfigInvalid(format!("n for i = {i}: {e}")))?;
            let gap = self.gap_for(i)?;
            if !(gap.is_finite() && gap > 0.0 && gap < 1.0) {
                return Err(Error::ConfigInvalid(format!(
                    "target_gap {gap} for i = {i} must lie in (0, 1)"
                )));
            }
            let sk = build_skeleton(i, SkeletonMode::AllPairs)?.snapped_to(grid)?;
            calibrate_width(grid, &sk, gap, Alignment::Snap).map_err(|e| {
                Error::ConfigInvalid(format!("i = {i} at n = {n} is unresolvable: {e}"))
            })?;
        }
        Ok(())
    }
}

/// Parses without semantic validation; callers that mutate the config (CLI
/// overrides) validate once afterward.
pub fn parse_config_syntax(text: &str) -> Result<ExperimentConfig> {
    serde_json::from_str(text).map_err(|e| Error::ConfigSyntax(e.to_string()))
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg = parse_config_syntax(text)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn serialize_config(cfg: &ExperimentConfig) -> String {
    serde_json::to_string_pretty(cfg).expect("config serialization is infallible")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_documented_defaults() {
        let cfg = parse_config(r#"{"i_list":[2],"n":256,"t_end":1.0}"#).unwrap();
        assert_eq!(cfg.scheme, SchemeKind::Imex);
        assert_eq!(cfg.stencil_radius, 2);
        assert_eq!(cfg.t_star, 0.2);
        assert_eq!(cfg.points.kind, PointKind::Halton);
        assert_eq!(cfg.points.count, 64);
        assert_eq!(cfg.points.seed, 7);
        assert_eq!(cfg.gap_for(2).unwrap(), 0.5);
        assert_eq!(cfg.distance_times(), vec![0.0, 0.2]);
        assert_eq!(cfg.out_dir, "out");
        assert!(!cfg.emit_snapshots);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse_config(r#"{"i_list":[2],"n":256,"t_end":1.0,"t_oops":0.3}"#).unwrap_err();
        assert!(matches!(err, Error::ConfigSyntax(_)), "{err}");
    }

    #[test]
    fn roundtrip_is_identity() {
        let cfg = parse_config(
            r#"{"i_list":[1,2],"n":{"1":64,"2":128},"t_end":0.5,
                "target_gap":{"1":0.4,"2":0.25},"distance_times":[0.0,0.2]}"#,
        )
        .unwrap();
        let again = parse_config(&serialize_config(&cfg)).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn infeasible_pair_fails_before_any_stepping() {
        // Tiny grid: i = 3 bands cannot fit three cells of width under 1/4.
        let err = parse_config(r#"{"i_list":[3],"n":8,"t_end":1.0}"#).unwrap_err();
        assert!(matches!(err, Error::ConfigInvalid(_)), "{err}");
    }

    #[test]
    fn order_resolved_values_miss_cleanly() {
        let err = parse_config(r#"{"i_list":[1,2],"n":{"1":64},"t_end":1.0}"#).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("no entry for i = 2"), "{msg}");
    }

    #[test]
    fn bad_time_windows_are_config_errors() {
        for text in [
            r#"{"i_list":[2],"n":64,"t_end":0.1,"t_star":0.2}"#,
            r#"{"i_list":[2],"n":64,"t_end":1.0,"distance_times":[0.2,0.2]}"#,
            r#"{"i_list":[2],"n":64,"t_end":1.0,"distance_times":[0.5,2.0]}"#,
        ] {
            let err = parse_config(text).unwrap_err();
            assert!(matches!(err, Error::ConfigInvalid(_)), "{text}: {err}");
        }
    }

    #[test]
    fn measurement_points_end_with_the_snapped_lattice() {
        let cfg = parse_config(r#"{"i_list":[2],"n":256,"t_end":1.0}"#).unwrap();
        let pts = cfg.measurement_points(2, 256).unwrap();
        assert_eq!(pts.len(), 64 + 4);
        assert_eq!((pts[64].x(), pts[64].y()), (0.0, 0.0));
        assert_eq!((pts[67].x(), pts[67].y()), (0.5, 0.5));
    }

    #[test]
    fn random_points_are_seed_deterministic() {
        let mk = |seed: u64| {
            let cfg = parse_config(&format!(
                r#"{{"i_list":[1],"n":64,"t_end":1.0,
                    "points":{{"kind":"random","count":5,"seed":{seed}}}}}"#
            ))
            .unwrap();
            cfg.measurement_points(1, 64).unwrap()
        };
        assert_eq!(mk(7), mk(7));
        assert_ne!(mk(7), mk(8));
    }
}
