//! Operations shared by the command line and the HTTP service.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use trivine::estimate::{
    all_candidates, fit_nonsimplified_binned, fit_simplified_vine, simplified_approx, BinnedOptions, FitOptions, FitResult,
    StructureCriterion,
};
use trivine::field::{bundle, margin_contours, sample_density, Bundle, GridSpec, MarginContours, Pair, DEFAULT_LEVELS};
use trivine::io::Table3;
use trivine::kde::rank_transform;
use trivine::{scenarios, Family, Rotation, VineSpec3D};

/// Meshes with more vertices than this are sent in single precision.
pub const QUANTIZE_ABOVE: usize = 20_000;

/// A model given by registry id or explicitly.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Scenario(String),
    Spec(VineSpec3D),
}

impl Model {
    pub fn resolve(&self) -> trivine::Result<VineSpec3D> {
        match self {
            Model::Scenario(id) => Ok(scenarios::get(id)?.spec),
            Model::Spec(s) => {
                s.validate()?;
                Ok(s.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantize {
    #[default]
    Auto,
    Always,
    Never,
}

#[derive(Debug, Clone, Serialize)]
pub struct MeshResponse {
    #[serde(flatten)]
    pub bundle: Bundle,
    pub quantized: bool,
    pub quantize_above: usize,
    /// Requested levels the field never reaches.
    pub empty_levels: Vec<f64>,
}

pub fn mesh(spec: &VineSpec3D, grid: &GridSpec, levels: &[f64], quantize: Quantize) -> trivine::Result<MeshResponse> {
    let field = sample_density(spec, grid)?;
    let mut b = bundle(&field, levels, Some(spec))?;
    let vertices: usize = b.levels.iter().map(|l| l.mesh.vertices.len()).sum();
    let quantized = match quantize {
        Quantize::Auto => vertices > QUANTIZE_ABOVE,
        Quantize::Always => true,
        Quantize::Never => false,
    };
    if quantized {
        for l in &mut b.levels {
            l.mesh = l.mesh.quantized();
        }
    }
    let empty_levels = b.levels.iter().filter(|l| l.level >= b.field_max).map(|l| l.level).collect();
    Ok(MeshResponse {
        bundle: b,
        quantized,
        quantize_above: QUANTIZE_ABOVE,
        empty_levels,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Margins {
    pub margins: Vec<MarginContours>,
}

pub fn margins(spec: &VineSpec3D, pairs: &[Pair], lo: f64, hi: f64, n: usize, levels: &[f64]) -> trivine::Result<Margins> {
    let margins = pairs
        .iter()
        .map(|&p| margin_contours(spec, p, lo, hi, n, levels))
        .collect::<trivine::Result<_>>()?;
    Ok(Margins { margins })
}

#[derive(Debug, Clone, Serialize)]
pub struct TauCurve {
    pub u2: Vec<f64>,
    pub tau: Vec<f64>,
}

/// The conditional tau at `points` equally spaced `u2` in `[0, 1]`, with the
/// end points pulled in to `1e-6`.
pub fn tau_curve(spec: &VineSpec3D, points: usize) -> trivine::Result<TauCurve> {
    let u2: Vec<f64> = (0..points)
        .map(|i| (i as f64 / (points - 1) as f64).clamp(1e-6, 1.0 - 1e-6))
        .collect();
    let tau = spec.tau_curve(&u2)?;
    Ok(TauCurve { u2, tau })
}

pub fn candidates(families: Option<&[Family]>) -> Vec<(Family, Rotation)> {
    match families {
        None => all_candidates(),
        Some(fs) => all_candidates().into_iter().filter(|(f, _)| fs.contains(f)).collect(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Approx {
    pub truth: VineSpec3D,
    pub approx: VineSpec3D,
    pub fit: FitResult,
    pub tau_hat: f64,
    /// The truth's conditional tau, to set against the constant `tau_hat`.
    pub tau_curve: TauCurve,
}

pub fn approx(spec: &VineSpec3D, n: usize, seed: u64, families: Option<&[Family]>, points: usize) -> trivine::Result<Approx> {
    let (approx, fit) = simplified_approx(spec, n, seed, &candidates(families))?;
    Ok(Approx {
        truth: spec.clone(),
        approx,
        tau_hat: fit.copula.tau(),
        fit,
        tau_curve: tau_curve(spec, points)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Simplified,
    Nonsimplified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    /// Raw measurements, rank-transformed before fitting.
    #[default]
    Raw,
    /// Already on the copula scale.
    Uniform,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct FitRequest {
    pub mode: Mode,
    pub scale: Scale,
    pub structure: StructureCriterion,
    pub bins: usize,
    pub bootstrap: usize,
    pub seed: u64,
    pub families: Option<Vec<Family>>,
}

impl Default for FitRequest {
    fn default() -> Self {
        let b = BinnedOptions::default();
        FitRequest {
            mode: Mode::Simplified,
            scale: Scale::Raw,
            structure: StructureCriterion::default(),
            bins: b.bins,
            bootstrap: b.bootstrap,
            seed: 0,
            families: None,
        }
    }
}

/// Fits a vine to `table`. The result is a JSON object with the fitted
/// order, the column names in model order, the spec and the pair fits.
pub fn fit(table: &Table3, req: &FitRequest) -> trivine::Result<Value> {
    let data = match req.scale {
        Scale::Raw => rank_transform(&table.rows),
        Scale::Uniform => {
            if let Some(v) = table.rows.iter().flatten().find(|v| !(**v > 0.0 && **v < 1.0)) {
                return Err(trivine::Error::Domain { what: "u", value: *v });
            }
            table.rows.clone()
        }
    };
    let opts = FitOptions {
        candidates: candidates(req.families.as_deref()),
        structure: req.structure,
    };
    let (order, mut out) = match req.mode {
        Mode::Simplified => {
            let f = fit_simplified_vine(&data, &opts)?;
            (f.order, serde_json::to_value(&f)?)
        }
        Mode::Nonsimplified => {
            let b = fit_nonsimplified_binned(
                &data,
                &BinnedOptions {
                    bins: req.bins,
                    bootstrap: req.bootstrap,
                    seed: req.seed,
                    fit: opts,
                    ..BinnedOptions::default()
                },
            )?;
            (b.order, serde_json::to_value(&b)?)
        }
    };
    let obj = out.as_object_mut().unwrap();
    let mode = match req.mode {
        Mode::Simplified => "simplified",
        Mode::Nonsimplified => "nonsimplified",
    };
    obj.insert("mode".into(), mode.into());
    obj.insert("names".into(), order.map(|j| table.names[j].clone()).to_vec().into());
    Ok(out)
}

pub fn default_levels() -> Vec<f64> {
    DEFAULT_LEVELS.to_vec()
}
