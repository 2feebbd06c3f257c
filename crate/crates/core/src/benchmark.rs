//! A floor-plan heat benchmark defined by data: a declarative geometry
//! format, model assembly from it, and experiment configuration files.
//!
//! The geometry is a JSON document listing axis-aligned features (walls,
//! doors, windows, heaters) on a rectangular domain with unit background
//! conductivity:
//!
//! * features that touch the outer boundary model heat exchange with the
//!   exterior: their value is the exchange coefficient weighting `∫ u v`
//!   over the covered boundary edges, and the exterior temperature `u_out`
//!   enters the load through the same edges;
//! * interior walls, doors and windows override the background diffusion
//!   coefficient on their rectangle;
//! * heaters are uniform volume sources on their rectangle.
//!
//! Each feature either carries a `fixed_value` or is `parametric` with a
//! `param_index` and box `bounds`, in which case its coefficient becomes an
//! optimization variable. Every coefficient enters the weak form linearly,
//! so the assembled operators decompose affinely in the parameter.
//!
//! ## Geometry schema
//!
//! ```json
//! {
//!   "domain": { "x0": 0.0, "x1": 2.0, "y0": 0.0, "y1": 1.0 },
//!   "u_out": 5.0,
//!   "domain_of_interest": { "x0": 0.1, "x1": 0.55, "y0": 0.6, "y1": 0.95 },
//!   "features": [
//!     { "name": "wall_south", "kind": "wall",
//!       "rect": { "x0": 0.0, "x1": 2.0, "y0": 0.0, "y1": 0.04 },
//!       "fixed_value": 0.025 },
//!     { "name": "door_0", "kind": "door",
//!       "rect": { "x0": 0.76, "x1": 0.8, "y0": 0.4, "y1": 0.52 },
//!       "parametric": true, "param_index": 0, "bounds": [0.025, 0.1] }
//!   ]
//! }
//! ```
//!
//! Rules checked by [`GeometrySpec::validate`]: rectangles lie inside the
//! domain and have positive area; parametric indices form a gap-free,
//! duplicate-free range `0..P`; parametric features carry `bounds` (and no
//! `fixed_value`), fixed features carry `fixed_value` (and neither
//! `param_index` nor `bounds`); diffusion and exchange coefficients stay
//! strictly positive over their range so the operator remains coercive and
//! the min-theta coercivity bound applies; interior diffusion features do
//! not overlap (their coefficients would add up where they do).
//!
//! ## Experiment schema
//!
//! ```json
//! {
//!   "geometry": "../assets/floorplan.json",
//!   "nx": 100, "ny": 50,
//!   "sigma_d": 100.0, "sigma": [0.001],
//!   "mu_d": [0.05, 0.08, 30, 60, 45, 20, 70, 55, 40, 0.03, 0.06, 0.09],
//!   "seed": 2024, "starts": 10, "method": "tr_pg", "tau_foc": 1e-6
//! }
//! ```
//!
//! `geometry` is resolved relative to the config file. A single-entry
//! `sigma` is broadcast to all parameters; `mu_d` defaults to the box
//! midpoint. The tracking target is reachable by construction: the desired
//! state is the model's own solution at `mu_d`, so the objective attains
//! its global minimum `1` exactly there.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assemble::{
    assemble_boundary_load, assemble_boundary_mass, assemble_load, assemble_mass,
    assemble_stiffness, h1_product,
};
use crate::fom::SolveError;
use crate::mesh::{build_structured_mesh, Region};
use crate::model::{
    AffineMatrix, AffineVector, FullOrderModel, ModelError, ParameterBox, ThetaFunction, ThetaTerm,
};
use crate::sparse::{BandedCholesky, CsrMatrix};

/// What a feature physically is. The kind determines how a boundary-touching
/// feature is labeled in diagnostics; the assembly role is decided by
/// geometry (boundary contact) and kind (heaters are always sources).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Wall,
    Door,
    Window,
    Heater,
}

impl FeatureKind {
    pub fn label(self) -> &'static str {
        match self {
            FeatureKind::Wall => "wall",
            FeatureKind::Door => "door",
            FeatureKind::Window => "window",
            FeatureKind::Heater => "heater",
        }
    }
}

/// One axis-aligned feature of the floor plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Feature {
    pub name: String,
    pub kind: FeatureKind,
    pub rect: Region,
    #[serde(default)]
    pub parametric: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<[f64; 2]>,
}

/// How a feature enters the weak form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    /// Conductivity override on an interior rectangle.
    Diffusion,
    /// Heat exchange with the exterior through boundary edges.
    Exchange,
    /// Volume source.
    Source,
}

/// A complete floor plan: domain, exterior temperature, tracking region and
/// feature list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    pub domain: Region,
    pub u_out: f64,
    pub domain_of_interest: Region,
    pub features: Vec<Feature>,
}

/// Everything that can go wrong while loading or assembling a benchmark.
#[derive(Debug, Error)]
pub enum BenchmarkError {
    #[error("feature '{name}': {reason}")]
    InvalidFeature { name: String, reason: String },
    #[error("geometry: {0}")]
    InvalidGeometry(String),
    #[error("experiment config: {0}")]
    InvalidConfig(String),
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, BenchmarkError> {
    let text = fs::read_to_string(path).map_err(|source| BenchmarkError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| BenchmarkError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

fn rect_is_proper(rect: &Region) -> bool {
    rect.x0 < rect.x1 && rect.y0 < rect.y1
}

fn rect_inside(rect: &Region, domain: &Region) -> bool {
    domain.x0 <= rect.x0 && rect.x1 <= domain.x1 && domain.y0 <= rect.y0 && rect.y1 <= domain.y1
}

impl GeometrySpec {
    /// Reads and validates a geometry file.
    pub fn from_file(path: &Path) -> Result<Self, BenchmarkError> {
        let geometry: GeometrySpec = read_json(path)?;
        geometry.validate()?;
        Ok(geometry)
    }

    /// Checks the schema rules listed in the module documentation.
    pub fn validate(&self) -> Result<(), BenchmarkError> {
        if !rect_is_proper(&self.domain) {
            return Err(BenchmarkError::InvalidGeometry("domain has empty interior".into()));
        }
        if !rect_is_proper(&self.domain_of_interest)
            || !rect_inside(&self.domain_of_interest, &self.domain)
        {
            return Err(BenchmarkError::InvalidGeometry(
                "domain of interest must be a proper rectangle inside the domain".into(),
            ));
        }
        if !self.u_out.is_finite() {
            return Err(BenchmarkError::InvalidGeometry("exterior temperature must be finite".into()));
        }

        let mut index_owner: Vec<Option<&str>> = vec![None; self.n_params()];
        for f in &self.features {
            let fail = |reason: &str| -> Result<(), BenchmarkError> {
                Err(BenchmarkError::InvalidFeature { name: f.name.clone(), reason: reason.into() })
            };
            if !rect_is_proper(&f.rect) {
                return fail("rectangle has empty interior");
            }
            if !rect_inside(&f.rect, &self.domain) {
                return fail("rectangle reaches outside the domain");
            }
            if f.parametric {
                if f.fixed_value.is_some() {
                    return fail("parametric features must not carry a fixed value");
                }
                let Some(idx) = f.param_index else {
                    return fail("parametric features need a parameter index");
                };
                let Some([lo, hi]) = f.bounds else {
                    return fail("parametric features need bounds");
                };
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    return fail("bounds must be a finite, ordered pair");
                }
                if self.role_of(f) != Role::Source && lo <= 0.0 {
                    return fail("diffusion and exchange coefficients need a positive lower bound");
                }
                match index_owner.get_mut(idx) {
                    None => return fail("parameter indices must form a gap-free range starting at 0"),
                    Some(slot @ None) => *slot = Some(&f.name),
                    Some(Some(owner)) => {
                        let reason = format!("parameter index {idx} is already taken by '{owner}'");
                        return Err(BenchmarkError::InvalidFeature { name: f.name.clone(), reason });
                    }
                }
            } else {
                if f.param_index.is_some() || f.bounds.is_some() {
                    return fail("fixed features must not carry a parameter index or bounds");
                }
                let Some(value) = f.fixed_value else {
                    return fail("fixed features need a fixed value");
                };
                if !value.is_finite() {
                    return fail("fixed value must be finite");
                }
                if self.role_of(f) != Role::Source && value <= 0.0 {
                    return fail("diffusion and exchange coefficients must be positive");
                }
            }
        }

        // Overlapping diffusion rectangles would add their coefficients up
        // instead of overriding the background, so they are rejected.
        let diffusive: Vec<&Feature> =
            self.features.iter().filter(|f| self.role_of(f) == Role::Diffusion).collect();
        for (i, a) in diffusive.iter().enumerate() {
            for b in &diffusive[i + 1..] {
                if a.rect.overlaps(&b.rect) {
                    return Err(BenchmarkError::InvalidGeometry(format!(
                        "diffusion features '{}' and '{}' overlap",
                        a.name, b.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Number of optimization parameters.
    pub fn n_params(&self) -> usize {
        self.features.iter().filter(|f| f.parametric).count()
    }

    /// Box bounds in parameter-index order.
    pub fn parameter_box(&self) -> ParameterBox {
        let p = self.n_params();
        let mut lower = DVector::zeros(p);
        let mut upper = DVector::zeros(p);
        for f in &self.features {
            if let (true, Some(idx), Some([lo, hi])) = (f.parametric, f.param_index, f.bounds) {
                lower[idx] = lo;
                upper[idx] = hi;
            }
        }
        ParameterBox::new(lower, upper)
    }

    /// Feature names in parameter-index order, for report headers.
    pub fn parameter_names(&self) -> Vec<String> {
        let mut names = vec![String::new(); self.n_params()];
        for f in &self.features {
            if let (true, Some(idx)) = (f.parametric, f.param_index) {
                names[idx] = f.name.clone();
            }
        }
        names
    }

    fn role_of(&self, f: &Feature) -> Role {
        if f.kind == FeatureKind::Heater {
            Role::Source
        } else if self.touches_boundary(&f.rect) {
            Role::Exchange
        } else {
            Role::Diffusion
        }
    }

    fn touches_boundary(&self, rect: &Region) -> bool {
        rect.x0 <= self.domain.x0
            || rect.x1 >= self.domain.x1
            || rect.y0 <= self.domain.y0
            || rect.y1 >= self.domain.y1
    }
}

/// Which optimizer an experiment runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    FomBfgs,
    TrNcd,
    TrPg,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::FomBfgs => "fom_bfgs",
            Method::TrNcd => "tr_ncd",
            Method::TrPg => "tr_pg",
        }
    }
}

fn default_sigma_d() -> f64 {
    100.0
}

fn default_sigma() -> Vec<f64> {
    vec![1e-3]
}

fn default_starts() -> usize {
    10
}

fn default_tau_foc() -> f64 {
    1e-6
}

/// One experiment: mesh resolution, objective weights, target parameter,
/// reproducibility seed and optimizer selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Geometry file, relative to the config file's directory.
    pub geometry: PathBuf,
    pub nx: usize,
    pub ny: usize,
    /// Tracking weight on the domain of interest.
    #[serde(default = "default_sigma_d")]
    pub sigma_d: f64,
    /// Per-parameter regularization weights; one entry is broadcast to all.
    #[serde(default = "default_sigma")]
    pub sigma: Vec<f64>,
    /// Desired parameter; box midpoint when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_d: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
    /// Number of random starting parameters for `optimize`.
    #[serde(default = "default_starts")]
    pub starts: usize,
    #[serde(default)]
    pub method: Method,
    /// First-order criticality tolerance.
    #[serde(default = "default_tau_foc")]
    pub tau_foc: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outdir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Reads a config file without touching the geometry it points to.
    pub fn from_file(path: &Path) -> Result<Self, BenchmarkError> {
        read_json(path)
    }

    /// The geometry path resolved against the config file's directory.
    pub fn geometry_path(&self, config_path: &Path) -> PathBuf {
        if self.geometry.is_absolute() {
            self.geometry.clone()
        } else {
            config_path.parent().unwrap_or(Path::new(".")).join(&self.geometry)
        }
    }

    /// Checks the config against a validated geometry.
    pub fn validate_for(&self, geometry: &GeometrySpec) -> Result<(), BenchmarkError> {
        if self.nx == 0 || self.ny == 0 {
            return Err(BenchmarkError::InvalidConfig("mesh resolution must be positive".into()));
        }
        if !(self.sigma_d.is_finite() && self.sigma_d > 0.0) {
            return Err(BenchmarkError::InvalidConfig("sigma_d must be positive".into()));
        }
        if !(self.tau_foc.is_finite() && self.tau_foc > 0.0) {
            return Err(BenchmarkError::InvalidConfig("tau_foc must be positive".into()));
        }
        if self.starts == 0 {
            return Err(BenchmarkError::InvalidConfig("at least one start is required".into()));
        }
        let p = geometry.n_params();
        self.tikhonov_weights(p)?;
        self.desired_parameter(&geometry.parameter_box())?;
        Ok(())
    }

    /// Regularization weights broadcast to the parameter dimension.
    pub fn tikhonov_weights(&self, p: usize) -> Result<DVector<f64>, BenchmarkError> {
        let entries: Vec<f64> = match self.sigma.len() {
            1 => vec![self.sigma[0]; p],
            n if n == p => self.sigma.clone(),
            n => {
                return Err(BenchmarkError::InvalidConfig(format!(
                    "sigma has {n} entries but the geometry has {p} parameters"
                )))
            }
        };
        if entries.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(BenchmarkError::InvalidConfig("sigma entries must be positive".into()));
        }
        Ok(DVector::from_vec(entries))
    }

    /// The desired parameter, defaulting to the box midpoint.
    pub fn desired_parameter(&self, bounds: &ParameterBox) -> Result<DVector<f64>, BenchmarkError> {
        match &self.mu_d {
            None => Ok(bounds.midpoint()),
            Some(values) => {
                if values.len() != bounds.dim() {
                    return Err(BenchmarkError::InvalidConfig(format!(
                        "mu_d has {} entries but the geometry has {} parameters",
                        values.len(),
                        bounds.dim()
                    )));
                }
                let mu_d = DVector::from_vec(values.clone());
                if !bounds.contains(&mu_d) {
                    return Err(BenchmarkError::InvalidConfig(
                        "mu_d lies outside the parameter box".into(),
                    ));
                }
                Ok(mu_d)
            }
        }
    }
}

/// Reads an experiment config and the geometry it references, validating
/// both.
pub fn load_experiment(config_path: &Path) -> Result<(ExperimentConfig, GeometrySpec), BenchmarkError> {
    let config = ExperimentConfig::from_file(config_path)?;
    let geometry = GeometrySpec::from_file(&config.geometry_path(config_path))?;
    config.validate_for(&geometry)?;
    Ok((config, geometry))
}

/// Assembles the full-order model for a geometry at the given resolution.
///
/// The build is two-phase: the state equation is assembled first and solved
/// once at the desired parameter to produce the reachable target state; the
/// tracking functional is then built around that target, so the objective's
/// global minimum is `1`, attained exactly at the desired parameter.
pub fn build_benchmark(
    geometry: &GeometrySpec,
    nx: usize,
    ny: usize,
    experiment: &ExperimentConfig,
) -> Result<FullOrderModel, BenchmarkError> {
    geometry.validate()?;
    let p = geometry.n_params();
    let bounds = geometry.parameter_box();
    let weights = experiment.tikhonov_weights(p)?;
    let mu_d = experiment.desired_parameter(&bounds)?;
    if nx == 0 || ny == 0 {
        return Err(BenchmarkError::InvalidConfig("mesh resolution must be positive".into()));
    }

    let mesh = build_structured_mesh(geometry.domain, nx, ny);
    let n = mesh.n_nodes();

    // Background conductivity 1 everywhere; diffusion features carve their
    // rectangle out of it and re-add it with their own coefficient.
    let mut base_matrix = assemble_stiffness(&mesh, &geometry.domain);
    let mut base_load = DVector::zeros(n);
    let mut a_parametric: Vec<(usize, CsrMatrix)> = Vec::new();
    let mut l_parametric: Vec<(usize, DVector<f64>)> = Vec::new();

    for f in &geometry.features {
        match geometry.role_of(f) {
            Role::Diffusion => {
                let stiffness = assemble_stiffness(&mesh, &f.rect);
                base_matrix = base_matrix.sub(&stiffness);
                match f.fixed_value {
                    Some(value) => base_matrix = base_matrix.add(&stiffness.scaled(value)),
                    None => a_parametric.push((f.param_index.unwrap(), stiffness)),
                }
            }
            Role::Exchange => {
                let exchange = assemble_boundary_mass(&mesh, &f.rect);
                let inflow = assemble_boundary_load(&mesh, &f.rect) * geometry.u_out;
                match f.fixed_value {
                    Some(value) => {
                        base_matrix = base_matrix.add(&exchange.scaled(value));
                        base_load += inflow * value;
                    }
                    None => {
                        let idx = f.param_index.unwrap();
                        a_parametric.push((idx, exchange));
                        l_parametric.push((idx, inflow));
                    }
                }
            }
            Role::Source => {
                let source = assemble_load(&mesh, &f.rect);
                match f.fixed_value {
                    Some(value) => base_load += source * value,
                    None => l_parametric.push((f.param_index.unwrap(), source)),
                }
            }
        }
    }
    a_parametric.sort_by_key(|(idx, _)| *idx);
    l_parametric.sort_by_key(|(idx, _)| *idx);

    let mut a_components = vec![(ThetaFunction::constant(1.0, p), base_matrix)];
    a_components
        .extend(a_parametric.into_iter().map(|(i, m)| (ThetaFunction::coordinate(i, p), m)));
    let mut l_components = vec![(ThetaFunction::constant(1.0, p), base_load)];
    l_components
        .extend(l_parametric.into_iter().map(|(i, v)| (ThetaFunction::coordinate(i, p), v)));
    let a = AffineMatrix::new(a_components);
    let l = AffineVector::new(l_components);

    // Phase one: the reachable target is the state at the desired parameter.
    let a_at_mu_d = a.evaluate(&mu_d);
    let factor = BandedCholesky::factor(&a_at_mu_d).map_err(SolveError::from)?;
    let u_d = factor.solve_refined(&a_at_mu_d, &l.evaluate(&mu_d));

    // Phase two: tracking functional on the domain of interest around the
    // target, plus regularization and the constant offset that keeps the
    // objective at exactly 1 in the minimum.
    let tracking_mass = assemble_mass(&mesh, &geometry.domain_of_interest);
    let sigma_d = experiment.sigma_d;
    let j = AffineVector::new(vec![(
        ThetaFunction::constant(1.0, p),
        tracking_mass.mul_vec(&u_d) * (-sigma_d),
    )]);
    let k = AffineMatrix::new(vec![(ThetaFunction::constant(0.5 * sigma_d, p), tracking_mass.clone())]);
    let offset = 1.0 + 0.5 * sigma_d * tracking_mass.bilinear(&u_d, &u_d);
    let theta_term = ThetaTerm::new(sigma_d, weights, mu_d.clone(), offset);

    Ok(FullOrderModel::assemble(a, l, j, k, theta_term, h1_product(&mesh), bounds, mu_d)?)
}

/// The state the tracking functional aims at: the model's own solution at
/// the desired parameter. Rebuilding it from the finished model reproduces
/// the target used during assembly.
pub fn make_desired_state(
    fom: &FullOrderModel,
    mu_d: &DVector<f64>,
) -> Result<DVector<f64>, SolveError> {
    Ok(crate::fom::solve_primal(fom, mu_d)?.u)
}

/// A compact six-parameter floor plan on the unit square, small enough for
/// validation sweeps on coarse meshes: a vertical wall with a door splits
/// the room, two heaters sit near the floor, and one window in the north
/// wall has a parametric exchange coefficient.
pub fn six_parameter_floorplan() -> GeometrySpec {
    let fixed = |name: &str, kind: FeatureKind, rect: Region, value: f64| Feature {
        name: name.into(),
        kind,
        rect,
        parametric: false,
        param_index: None,
        fixed_value: Some(value),
        bounds: None,
    };
    let parametric = |name: &str, kind: FeatureKind, rect: Region, idx: usize, lo: f64, hi: f64| Feature {
        name: name.into(),
        kind,
        rect,
        parametric: true,
        param_index: Some(idx),
        fixed_value: None,
        bounds: Some([lo, hi]),
    };
    use FeatureKind::{Door, Heater, Wall, Window};
    GeometrySpec {
        domain: Region::new(0.0, 1.0, 0.0, 1.0),
        u_out: 5.0,
        domain_of_interest: Region::new(0.05, 0.45, 0.55, 0.95),
        features: vec![
            fixed("wall_south", Wall, Region::new(0.0, 1.0, 0.0, 0.04), 0.025),
            fixed("wall_west", Wall, Region::new(0.0, 0.04, 0.04, 0.96), 0.025),
            fixed("wall_east", Wall, Region::new(0.96, 1.0, 0.04, 0.96), 0.025),
            fixed("wall_north_left", Wall, Region::new(0.0, 0.3, 0.96, 1.0), 0.025),
            fixed("wall_north_right", Wall, Region::new(0.7, 1.0, 0.96, 1.0), 0.025),
            parametric("door_0", Door, Region::new(0.48, 0.52, 0.6, 0.72), 0, 0.025, 0.1),
            parametric("wall_low", Wall, Region::new(0.48, 0.52, 0.04, 0.6), 1, 0.025, 0.1),
            parametric("heater_0", Heater, Region::new(0.1, 0.3, 0.08, 0.12), 2, 0.0, 100.0),
            parametric("heater_1", Heater, Region::new(0.7, 0.9, 0.08, 0.12), 3, 0.0, 100.0),
            parametric("window_0", Window, Region::new(0.3, 0.7, 0.96, 1.0), 4, 0.3, 2.0),
            parametric("wall_high", Wall, Region::new(0.48, 0.52, 0.72, 0.96), 5, 0.025, 0.1),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fom;
    use crate::optimizer::{projected_bfgs, OptimizeOptions, TerminationReason};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn experiment_for(geometry: &GeometrySpec, nx: usize, ny: usize) -> ExperimentConfig {
        let p = geometry.n_params();
        ExperimentConfig {
            geometry: PathBuf::from("unused.json"),
            nx,
            ny,
            sigma_d: 100.0,
            sigma: vec![1e-3; p.max(1)],
            mu_d: None,
            seed: 0,
            starts: 1,
            method: Method::FomBfgs,
            tau_foc: 1e-6,
            outdir: None,
        }
    }

    #[test]
    fn geometry_files_round_trip_through_json() {
        let geometry = six_parameter_floorplan();
        let text = serde_json::to_string_pretty(&geometry).unwrap();
        let back: GeometrySpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, geometry);
        back.validate().unwrap();
        assert_eq!(back.n_params(), 6);
        assert_eq!(back.parameter_names()[4], "window_0");
        let bounds = back.parameter_box();
        assert_eq!(bounds.lower().as_slice(), &[0.025, 0.025, 0.0, 0.0, 0.3, 0.025]);
        assert_eq!(bounds.upper().as_slice(), &[0.1, 0.1, 100.0, 100.0, 2.0, 0.1]);
    }

    #[test]
    fn the_shipped_floor_plan_has_twelve_parameters() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../assets/floorplan.json");
        let geometry = GeometrySpec::from_file(&path).unwrap();
        assert_eq!(geometry.n_params(), 12);
        assert_eq!(geometry.domain, Region::new(0.0, 2.0, 0.0, 1.0));
        assert_eq!(geometry.u_out, 5.0);

        // Two doors, seven heaters, three parametric walls, in that order.
        let names = geometry.parameter_names();
        assert!(names[..2].iter().all(|n| n.starts_with("door")));
        assert!(names[2..9].iter().all(|n| n.starts_with("heater")));
        assert!(names[9..].iter().all(|n| n.starts_with("wall")));

        let config = experiment_for(&geometry, 20, 10);
        let fom = build_benchmark(&geometry, 20, 10, &config).unwrap();
        assert_eq!(fom.n_params(), 12);
        let (primal, dual) = fom::solve_pair(&fom, &fom.bounds.midpoint()).unwrap();
        let value = fom::objective(&fom, &primal);
        assert!((value - 1.0).abs() <= 1e-9, "objective at the default target is {value}");
        assert!(fom::gradient(&fom, &primal, &dual).norm() <= 1e-8);
    }

    #[test]
    fn the_shipped_desk_config_loads_and_validates() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/desk.json");
        let (config, geometry) = load_experiment(&path).unwrap();
        assert_eq!(config.nx, 100);
        assert_eq!(config.ny, 50);
        assert_eq!(config.method, Method::TrPg);
        assert_eq!(geometry.n_params(), 12);
        let mu_d = config.desired_parameter(&geometry.parameter_box()).unwrap();
        assert_eq!(mu_d.len(), 12);
    }

    #[test]
    fn malformed_geometries_are_rejected() {
        let base = six_parameter_floorplan();

        let mut outside = base.clone();
        outside.features[5].rect = Region::new(0.9, 1.2, 0.4, 0.5);
        assert!(matches!(outside.validate(), Err(BenchmarkError::InvalidFeature { .. })));

        let mut duplicate = base.clone();
        duplicate.features[6].param_index = Some(0);
        assert!(matches!(duplicate.validate(), Err(BenchmarkError::InvalidFeature { .. })));

        let mut gap = base.clone();
        gap.features[6].param_index = Some(9);
        assert!(matches!(gap.validate(), Err(BenchmarkError::InvalidFeature { .. })));

        let mut missing_bounds = base.clone();
        missing_bounds.features[5].bounds = None;
        assert!(matches!(missing_bounds.validate(), Err(BenchmarkError::InvalidFeature { .. })));

        let mut leaky = base.clone();
        leaky.features[5].bounds = Some([0.0, 0.1]);
        assert!(matches!(leaky.validate(), Err(BenchmarkError::InvalidFeature { .. })));

        let mut overlapping = base.clone();
        overlapping.features[6].rect = Region::new(0.4, 0.6, 0.5, 0.7);
        assert!(matches!(overlapping.validate(), Err(BenchmarkError::InvalidGeometry(_))));

        let mut both = base.clone();
        both.features[5].fixed_value = Some(0.05);
        assert!(matches!(both.validate(), Err(BenchmarkError::InvalidFeature { .. })));
    }

    #[test]
    fn config_weights_broadcast_and_validate() {
        let geometry = six_parameter_floorplan();
        let mut config = experiment_for(&geometry, 10, 10);

        config.sigma = vec![0.5];
        let weights = config.tikhonov_weights(6).unwrap();
        assert_eq!(weights.as_slice(), &[0.5; 6]);

        config.sigma = vec![1.0, 2.0];
        assert!(matches!(config.tikhonov_weights(6), Err(BenchmarkError::InvalidConfig(_))));

        config.sigma = vec![1e-3];
        config.mu_d = Some(vec![0.05, 0.05, 50.0, 50.0, 1.0, 0.05]);
        config.validate_for(&geometry).unwrap();

        config.mu_d = Some(vec![0.05, 0.05, 500.0, 50.0, 1.0, 0.05]);
        assert!(matches!(config.validate_for(&geometry), Err(BenchmarkError::InvalidConfig(_))));

        config.mu_d = Some(vec![0.05]);
        assert!(matches!(config.validate_for(&geometry), Err(BenchmarkError::InvalidConfig(_))));
    }

    #[test]
    fn zero_parametric_geometry_solves_at_the_empty_parameter() {
        let mut geometry = six_parameter_floorplan();
        for f in &mut geometry.features {
            if f.parametric {
                let [lo, hi] = f.bounds.take().unwrap();
                f.parametric = false;
                f.param_index = None;
                f.fixed_value = Some(0.5 * (lo + hi));
            }
        }
        geometry.validate().unwrap();
        assert_eq!(geometry.n_params(), 0);

        let config = experiment_for(&geometry, 12, 12);
        let fom = build_benchmark(&geometry, 12, 12, &config).unwrap();
        assert_eq!(fom.n_params(), 0);
        let mu = DVector::zeros(0);
        let (primal, dual) = fom::solve_pair(&fom, &mu).unwrap();
        let value = fom::objective(&fom, &primal);
        assert!(value.is_finite());
        // The desired parameter defaulted to the (empty) midpoint, so the
        // solve at the empty parameter reproduces the target exactly.
        assert!((value - 1.0).abs() <= 1e-9, "objective at the target is {value}");
        assert_eq!(fom::gradient(&fom, &primal, &dual).len(), 0);
    }

    #[test]
    fn heaters_off_keeps_the_room_at_the_exterior_temperature() {
        let geometry = six_parameter_floorplan();
        let config = experiment_for(&geometry, 12, 12);
        let fom = build_benchmark(&geometry, 12, 12, &config).unwrap();

        // Both heaters at their lower bound 0: no sources anywhere, and the
        // exchange boundary drives the state to the exterior temperature.
        let mu = DVector::from_vec(vec![0.05, 0.05, 0.0, 0.0, 1.0, 0.05]);
        let primal = fom::solve_primal(&fom, &mu).unwrap();
        let max = primal.u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = primal.u.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(max <= geometry.u_out + 1e-8, "max temperature {max}");
        assert!(min >= geometry.u_out - 1e-8, "min temperature {min}");
    }

    #[test]
    fn the_desired_parameter_is_the_exact_optimum() {
        let geometry = six_parameter_floorplan();
        let mut config = experiment_for(&geometry, 15, 15);
        config.mu_d = Some(vec![0.04, 0.06, 30.0, 70.0, 0.8, 0.03]);
        let fom = build_benchmark(&geometry, 15, 15, &config).unwrap();
        let mu_d = DVector::from_vec(config.mu_d.clone().unwrap());

        // The target state is reproduced by a fresh solve.
        let u_d = make_desired_state(&fom, &mu_d).unwrap();
        let (primal, dual) = fom::solve_pair(&fom, &mu_d).unwrap();
        assert!((&primal.u - &u_d).norm() <= 1e-10 * u_d.norm());

        // Objective 1, gradient 0 at the desired parameter.
        let value = fom::objective(&fom, &primal);
        assert!((value - 1.0).abs() <= 1e-9, "objective at the target is {value}");
        let grad = fom::gradient(&fom, &primal, &dual);
        assert!(grad.norm() <= 1e-9, "gradient norm at the target is {}", grad.norm());

        // Started at the optimum, the optimizer stops without iterating.
        let run = projected_bfgs(
            |mu| fom::solve_primal(&fom, mu).ok().map(|p| fom::objective(&fom, &p)),
            |mu| {
                let (p, d) = fom::solve_pair(&fom, mu).unwrap();
                fom::gradient(&fom, &p, &d)
            },
            &mu_d,
            &fom.bounds,
            OptimizeOptions::new(),
        );
        assert_eq!(run.reason, TerminationReason::Foc);
        assert_eq!(run.iterations(), 0);
    }

    #[test]
    fn a_random_start_recovers_the_desired_parameter() {
        let geometry = six_parameter_floorplan();
        let mut config = experiment_for(&geometry, 15, 15);
        config.mu_d = Some(vec![0.04, 0.06, 30.0, 70.0, 0.8, 0.03]);
        let fom = build_benchmark(&geometry, 15, 15, &config).unwrap();
        let mu_d = DVector::from_vec(config.mu_d.clone().unwrap());

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let start = fom.bounds.sample(&mut rng);
        let run = projected_bfgs(
            |mu| fom::solve_primal(&fom, mu).ok().map(|p| fom::objective(&fom, &p)),
            |mu| {
                let (p, d) = fom::solve_pair(&fom, mu).unwrap();
                fom::gradient(&fom, &p, &d)
            },
            &start,
            &fom.bounds,
            OptimizeOptions { max_iter: 5000, ..OptimizeOptions::new() },
        );
        assert_eq!(run.reason, TerminationReason::Foc, "stopped after {} iterations", run.iterations());
        let rel = (&run.mu - &mu_d).norm() / mu_d.norm();
        assert!(rel <= 1e-3, "recovered parameter is {rel:.2e} away from the target");
    }
}
