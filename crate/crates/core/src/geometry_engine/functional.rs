//! Integrated functionals and finite-difference second variations.

use serde::{Deserialize, Serialize};

use super::curvature::{invert, CurvatureBundle, InvariantSet};
use super::model::{su2_pair_structure, ConformalPerturbation, LieGroupModel, MetricModel, ProductSpheres};
use super::quadrature::polar_rule;
use super::GeometryError;
use crate::spectral_forms::FunctionalId;

const MIN_NODES: usize = 16;
const MAX_NODES: usize = 1024;
const QUADRATURE_TOL: f64 = 1e-10;

fn integrand(functional: FunctionalId, inv: &InvariantSet) -> Result<f64, GeometryError> {
    Ok(match functional {
        FunctionalId::Ric => inv.ric_sq,
        FunctionalId::S => inv.s * inv.s,
        FunctionalId::Ft { t } => inv.ric_sq + t * inv.s * inv.s,
        FunctionalId::R => inv.riem_sq,
        FunctionalId::W2 => inv.weyl_sq,
        FunctionalId::WnHalf => {
            return Err(GeometryError::InvalidModel("W_{n/2} is not evaluated by the oracle".into()))
        }
    })
}

/// Integral of the functional and the volume.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Integral {
    value: f64,
    volume: f64,
}

impl Integral {
    fn normalized(&self, n: usize) -> f64 {
        self.volume.powf((4.0 - n as f64) / n as f64) * self.value
    }
}

fn sphere_integral(
    functional: FunctionalId,
    model: &ProductSpheres,
    norm: f64,
    nodes: usize,
) -> Result<Integral, GeometryError> {
    let Some(p) = &model.perturbation else {
        let pt = model.polar_point(0.0);
        let b = CurvatureBundle::from_metric_jets(&model.metric_jets(&pt, 1.0)?)?;
        let volume: f64 = model
            .dims
            .iter()
            .zip(&model.radii)
            .map(|(d, r)| super::quadrature::sphere_volume(*d, *r))
            .product();
        return Ok(Integral { value: integrand(functional, &b.invariants())? * volume, volume });
    };
    let na = model.dims[p.source] as i32;
    let nb = model.dims[p.target] as f64;
    let pre = model.polar_prefactor(p.source);
    let (mut value, mut volume) = (0.0, 0.0);
    for (theta, w) in polar_rule(nodes) {
        let pt = model.polar_point(theta);
        let b = CurvatureBundle::from_metric_jets(&model.metric_jets(&pt, norm)?)?;
        let ratio = model.conformal_weight(theta, norm);
        let dens = ratio.powf(nb / 2.0) * w * theta.sin().powi(na - 1);
        value += dens * integrand(functional, &b.invariants())?;
        volume += dens;
    }
    Ok(Integral { value: value * pre, volume: volume * pre })
}

/// Quadrature level at which two successive doublings agree, for the given model.
fn resolve_nodes(functional: FunctionalId, model: &ProductSpheres, norm: f64) -> Result<usize, GeometryError> {
    if model.perturbation.is_none() {
        return Ok(MIN_NODES);
    }
    let mut nodes = MIN_NODES;
    let mut prev = sphere_integral(functional, model, norm, nodes)?;
    while nodes < MAX_NODES {
        nodes *= 2;
        let cur = sphere_integral(functional, model, norm, nodes)?;
        let scale = cur.value.abs().max(cur.volume * 1e-300).max(f64::MIN_POSITIVE);
        if (cur.value - prev.value).abs() <= QUADRATURE_TOL * scale
            && (cur.volume - prev.volume).abs() <= QUADRATURE_TOL * cur.volume
        {
            return Ok(nodes);
        }
        prev = cur;
    }
    Err(GeometryError::QuadratureNotConverged { nodes: MAX_NODES })
}

fn lie_integral(functional: FunctionalId, model: &LieGroupModel) -> Result<Integral, GeometryError> {
    let g = model.frame_metric();
    let (_, det) = invert(&g, 6)?;
    let b = CurvatureBundle::from_lie_algebra(&su2_pair_structure(model.radii), &g, 6)?;
    let volume = model.reference_volume() * det.sqrt();
    Ok(Integral { value: integrand(functional, &b.invariants())? * volume, volume })
}

/// Integral of the functional over a globally integrable model, optionally
/// volume-normalized as V^{(4−n)/n}·F.
pub fn functional_value(functional: FunctionalId, model: &MetricModel, normalized: bool) -> Result<f64, GeometryError> {
    let (integral, n) = match model {
        MetricModel::ProductSpheres(p) => {
            p.validate()?;
            let norm = if p.perturbation.is_some() { p.harmonic_normalization() } else { 1.0 };
            let nodes = resolve_nodes(functional, p, norm)?;
            (sphere_integral(functional, p, norm, nodes)?, p.total_dim())
        }
        MetricModel::LieGroup(l) => (lie_integral(functional, l)?, 6),
        MetricModel::HyperbolicChart { .. } | MetricModel::ProductChart { .. } => {
            return Err(GeometryError::NotIntegrable("chart models support pointwise evaluation only".into()))
        }
    };
    Ok(if normalized { integral.normalized(n) } else { integral.value })
}

/// One-parameter model family through a critical metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum FdFamily {
    /// Round sphere product perturbed by t·f·g_B, f a unit-norm zonal harmonic on factor A.
    ConformalSpheres { dims: Vec<u32>, radii: Vec<f64>, source: usize, target: usize, harmonic_degree: u32 },
    /// SU(2)×SU(2) perturbed by t·α_0⊙α_1 with unit-norm Killing co-frames.
    MixedTTLie { radii: [f64; 2] },
}

impl FdFamily {
    pub fn conformal_unit_s3s3() -> Self {
        FdFamily::ConformalSpheres { dims: vec![3, 3], radii: vec![1.0, 1.0], source: 0, target: 1, harmonic_degree: 1 }
    }

    pub fn mixed_unit_s3s3() -> Self {
        FdFamily::MixedTTLie { radii: [1.0, 1.0] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FdOptions {
    /// Amplitude step in units of the pointwise size of the direction; (machine ε)^{1/6} when absent.
    pub base_step: Option<f64>,
    /// Largest accepted Richardson error, relative to max(|value|, 1).
    pub tolerance: f64,
    /// Largest accepted first derivative, relative to max(|value|, 1).
    pub criticality_tolerance: f64,
}

impl Default for FdOptions {
    fn default() -> Self {
        FdOptions { base_step: None, tolerance: 1e-6, criticality_tolerance: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdResult {
    pub value: f64,
    pub error_estimate: f64,
    pub first_derivative: f64,
    pub first_derivative_error: f64,
    pub step: f64,
}

/// Centered 5-point stencils at h and h/2 with Richardson extrapolation.
/// Returns (d², err², d¹, err¹).
pub(crate) fn richardson<F>(f: F, h: f64) -> Result<(f64, f64, f64, f64), GeometryError>
where
    F: Fn(f64) -> Result<f64, GeometryError>,
{
    let f0 = f(0.0)?;
    let (fp1, fm1) = (f(h)?, f(-h)?);
    let (fp2, fm2) = (f(2.0 * h)?, f(-2.0 * h)?);
    let (fph, fmh) = (f(0.5 * h)?, f(-0.5 * h)?);
    let d2_h = (-fp2 + 16.0 * fp1 - 30.0 * f0 + 16.0 * fm1 - fm2) / (12.0 * h * h);
    let d2_half = (-fp1 + 16.0 * fph - 30.0 * f0 + 16.0 * fmh - fm1) / (3.0 * h * h);
    let d1_h = (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h);
    let d1_half = (fm1 - 8.0 * fmh + 8.0 * fph - fp1) / (6.0 * h);
    Ok((
        (16.0 * d2_half - d2_h) / 15.0,
        (d2_half - d2_h).abs(),
        (16.0 * d1_half - d1_h) / 15.0,
        (d1_half - d1_h).abs(),
    ))
}

fn check(result: FdResult, opts: &FdOptions) -> Result<FdResult, GeometryError> {
    let scale = result.value.abs().max(1.0);
    if result.error_estimate > opts.tolerance * scale {
        return Err(GeometryError::StepSelectionFailed { error: result.error_estimate, value: result.value });
    }
    if result.first_derivative.abs() > opts.criticality_tolerance * scale {
        return Err(GeometryError::NotCritical { first_derivative: result.first_derivative });
    }
    Ok(result)
}

/// d²/dt² at t = 0 of the volume-normalized functional along the family,
/// divided by V_0^{(4−n)/n} so the value is the constrained Hessian ⟨(∇F)'(h), h⟩.
pub fn fd_second_variation(functional: FunctionalId, family: &FdFamily, opts: &FdOptions) -> Result<FdResult, GeometryError> {
    let base = opts.base_step.unwrap_or(f64::EPSILON.powf(1.0 / 6.0));
    match family {
        FdFamily::ConformalSpheres { dims, radii, source, target, harmonic_degree } => {
            let model = |t: f64| {
                ProductSpheres::new(dims.clone(), radii.clone()).with_perturbation(ConformalPerturbation {
                    amplitude: t,
                    source: *source,
                    target: *target,
                    harmonic_degree: *harmonic_degree,
                })
            };
            let unit = model(0.0);
            unit.validate()?;
            let norm = unit.harmonic_normalization();
            let alpha = (dims[*source] as f64 - 1.0) / 2.0;
            // sup |c·C_ℓ^α| = c·C_ℓ^α(1) = c·binom(ℓ + 2α − 1, ℓ)
            let peak = (0..*harmonic_degree).fold(1.0, |acc, k| acc * (2.0 * alpha + k as f64) / (k as f64 + 1.0));
            let h = base / (norm * peak);
            let n = unit.total_dim();
            let nodes = resolve_nodes(functional, &model(2.0 * h), norm)?;
            let eval = |t: f64| -> Result<f64, GeometryError> {
                Ok(sphere_integral(functional, &model(t), norm, nodes)?.normalized(n))
            };
            let v0 = sphere_integral(functional, &unit, norm, nodes)?.volume;
            finish(eval, h, v0, n, opts)
        }
        FdFamily::MixedTTLie { radii } => {
            let unit = LieGroupModel::new(*radii);
            let v0 = unit.reference_volume();
            let h = base * v0.sqrt() / 2f64.sqrt();
            let eval = |t: f64| -> Result<f64, GeometryError> {
                Ok(lie_integral(functional, &LieGroupModel::new(*radii).with_amplitude(t))?.normalized(6))
            };
            finish(eval, h, v0, 6, opts)
        }
    }
}

fn finish<F>(eval: F, h: f64, v0: f64, n: usize, opts: &FdOptions) -> Result<FdResult, GeometryError>
where
    F: Fn(f64) -> Result<f64, GeometryError>,
{
    let (d2, e2, d1, e1) = richardson(eval, h)?;
    let k = v0.powf((4.0 - n as f64) / n as f64);
    check(
        FdResult { value: d2 / k, error_estimate: e2 / k, first_derivative: d1 / k, first_derivative_error: e1 / k, step: h },
        opts,
    )
}

/// Pointwise tensor linearization ⟨Ř'(h), h⟩ on SU(2)×SU(2) along the unit
/// mixed Killing direction, integrated over the group (homogeneous).
pub fn fd_rcheck_pairing(radii: [f64; 2], opts: &FdOptions) -> Result<FdResult, GeometryError> {
    let unit = LieGroupModel::new(radii);
    let v0 = unit.reference_volume();
    let dir = unit.direction();
    let g0 = unit.frame_metric();
    let b0 = CurvatureBundle::from_lie_algebra(&su2_pair_structure(radii), &g0, 6)?;
    let base = opts.base_step.unwrap_or(f64::EPSILON.powf(1.0 / 6.0));
    let h = base * v0.sqrt() / 2f64.sqrt();
    let eval = |t: f64| -> Result<f64, GeometryError> {
        let b = CurvatureBundle::from_lie_algebra(&su2_pair_structure(radii), &LieGroupModel::new(radii).with_amplitude(t).frame_metric(), 6)?;
        Ok(b0.pair2(&b.rcheck(), &dir) * v0)
    };
    let (_, _, d1, e1) = richardson(eval, h)?;
    let scale = d1.abs().max(1.0);
    if e1 > opts.tolerance * scale {
        return Err(GeometryError::StepSelectionFailed { error: e1, value: d1 });
    }
    Ok(FdResult { value: d1, error_estimate: e1, first_derivative: d1, first_derivative_error: e1, step: h })
}
