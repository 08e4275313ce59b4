//! Concrete model metrics and their curvature at a point.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::curvature::CurvatureBundle;
use super::jet::Jet;
use super::quadrature::{polar_rule, sphere_volume};
use super::GeometryError;

/// g + t·f·g_B with f the normalized zonal harmonic of degree `harmonic_degree`
/// in the polar angle of factor `source`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConformalPerturbation {
    pub amplitude: f64,
    pub source: usize,
    pub target: usize,
    #[serde(default = "first_harmonic")]
    pub harmonic_degree: u32,
}

fn first_harmonic() -> u32 {
    1
}

/// Product of round spheres in hyperspherical coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductSpheres {
    pub dims: Vec<u32>,
    pub radii: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<ConformalPerturbation>,
}

/// g + t·α_0⊙α_1 with α_0 = e^1, α_1 = e^4 scaled to unit L² norm on their factors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixedTTPerturbation {
    pub amplitude: f64,
}

/// Left-invariant metric on SU(2)×SU(2); the frame is orthonormal for the
/// bi-invariant metric of two round 3-spheres with the given radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LieGroupModel {
    pub radii: [f64; 2],
    /// Row-major 6×6 frame components; identity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<MixedTTPerturbation>,
}

/// Constant-curvature factor in conformally flat coordinates,
/// g = 4/(1 + K|x|²)²·δ (stereographic for K > 0, Poincaré ball for K < 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartFactor {
    pub dim: u32,
    pub curvature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum MetricModel {
    ProductSpheres(ProductSpheres),
    LieGroup(LieGroupModel),
    HyperbolicChart { dim: u32 },
    ProductChart { factors: Vec<ChartFactor> },
}

impl ProductSpheres {
    pub fn new(dims: Vec<u32>, radii: Vec<f64>) -> Self {
        ProductSpheres { dims, radii, perturbation: None }
    }

    pub fn with_perturbation(mut self, p: ConformalPerturbation) -> Self {
        self.perturbation = Some(p);
        self
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().map(|d| *d as usize).sum()
    }

    fn offset(&self, k: usize) -> usize {
        self.dims[..k].iter().map(|d| *d as usize).sum()
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |m: &str| Err(GeometryError::InvalidModel(m.to_string()));
        if self.dims.is_empty() || self.dims.len() != self.radii.len() {
            return bad("dims and radii must be nonempty and of equal length");
        }
        if self.dims.iter().any(|d| *d == 0) || self.radii.iter().any(|r| !(*r > 0.0)) {
            return bad("dims must be positive and radii positive");
        }
        if let Some(p) = &self.perturbation {
            let k = self.dims.len();
            if p.source >= k || p.target >= k || p.source == p.target {
                return bad("perturbation needs distinct source and target factors");
            }
            if self.dims[p.source] < 2 {
                return bad("perturbation source factor needs dim ≥ 2");
            }
            if p.harmonic_degree == 0 {
                return bad("harmonic degree must be at least 1");
            }
        }
        Ok(())
    }

    /// Laplace eigenvalue of the perturbing harmonic.
    pub fn harmonic_eigenvalue(&self) -> Option<f64> {
        self.perturbation.as_ref().map(|p| {
            let l = p.harmonic_degree as f64;
            let n = self.dims[p.source] as f64;
            let r = self.radii[p.source];
            l * (l + n - 1.0) / (r * r)
        })
    }

    /// Gegenbauer polynomial C_ℓ^α at a jet argument, α = (n_A − 1)/2.
    fn zonal(&self, x: &Jet) -> Jet {
        let p = self.perturbation.as_ref().expect("perturbation present");
        let alpha = (self.dims[p.source] as f64 - 1.0) / 2.0;
        let n = x.dim();
        let mut prev = Jet::constant(1.0, n);
        let mut cur = x.scale(2.0 * alpha);
        for l in 2..=p.harmonic_degree {
            let lf = l as f64;
            let next = (&(x * &cur).scale(2.0 * (lf + alpha - 1.0)) - &prev.scale(lf + 2.0 * alpha - 2.0))
                .scale(1.0 / lf);
            prev = cur;
            cur = next;
        }
        if p.harmonic_degree == 0 {
            prev
        } else {
            cur
        }
    }

    /// Product of the sphere volumes other than the source, times r_A^{n_A}·|S^{n_A−1}|.
    pub(crate) fn polar_prefactor(&self, source: usize) -> f64 {
        let mut c = sphere_volume(self.dims[source] - 1, 1.0) * self.radii[source].powi(self.dims[source] as i32);
        for (k, (d, r)) in self.dims.iter().zip(&self.radii).enumerate() {
            if k != source {
                c *= sphere_volume(*d, *r);
            }
        }
        c
    }

    /// L² normalization constant c with ‖c·C_ℓ(cos θ)‖ = 1 on the unperturbed product.
    pub fn harmonic_normalization(&self) -> f64 {
        let p = self.perturbation.as_ref().expect("perturbation present");
        let na = self.dims[p.source] as i32;
        let integral: f64 = polar_rule(256)
            .iter()
            .map(|(th, w)| {
                let v = self.zonal(&Jet::constant(th.cos(), 1)).v;
                w * v * v * th.sin().powi(na - 1)
            })
            .sum();
        1.0 / (integral * self.polar_prefactor(p.source)).sqrt()
    }

    /// Metric jets at a coordinate point, with a precomputed normalization.
    pub(crate) fn metric_jets(&self, point: &[f64], norm: f64) -> Result<Vec<Jet>, GeometryError> {
        let n = self.total_dim();
        if point.len() != n {
            return Err(GeometryError::InvalidModel(format!("point needs {n} coordinates")));
        }
        let x: Vec<Jet> = (0..n).map(|i| Jet::variable(point[i], i, n)).collect();
        let mut g = vec![Jet::constant(0.0, n); n * n];
        let weight = match &self.perturbation {
            Some(p) if p.amplitude != 0.0 => {
                let polar = &x[self.offset(p.source)];
                let w = self.zonal(&polar.cos()).scale(p.amplitude * norm).add_scalar(1.0);
                if !(w.v > 0.0) {
                    return Err(GeometryError::DegenerateMetric(format!(
                        "conformal weight {} is not positive",
                        w.v
                    )));
                }
                Some((p.target, w))
            }
            _ => None,
        };
        for (k, (d, r)) in self.dims.iter().zip(&self.radii).enumerate() {
            let o = self.offset(k);
            let mut s2 = Jet::constant(r * r, n);
            for j in 0..*d as usize {
                let mut entry = s2.clone();
                if let Some((tgt, w)) = &weight {
                    if *tgt == k {
                        entry = &entry * w;
                    }
                }
                g[(o + j) * n + o + j] = entry;
                s2 = &s2 * &x[o + j].sin().powi(2);
            }
        }
        Ok(g)
    }

    /// Conformal factor 1 + t·c·C_ℓ(cos θ) on the target factor.
    pub(crate) fn conformal_weight(&self, theta: f64, norm: f64) -> f64 {
        match &self.perturbation {
            Some(p) => 1.0 + p.amplitude * norm * self.zonal(&Jet::constant(theta.cos(), 1)).v,
            None => 1.0,
        }
    }

    /// Coordinates with the source polar angle set to `theta` and all other angles generic.
    pub(crate) fn polar_point(&self, theta: f64) -> Vec<f64> {
        let mut pt = vec![0.5 * PI; self.total_dim()];
        for (k, d) in self.dims.iter().enumerate() {
            let o = self.offset(k);
            pt[o + *d as usize - 1] = 0.3;
        }
        if let Some(p) = &self.perturbation {
            pt[self.offset(p.source)] = theta;
        }
        pt
    }
}

/// Structure constants C^d_{ab} of su(2)⊕su(2) with [e_a, e_b] = (2/r) ε_{abc} e_c per block.
pub fn su2_pair_structure(radii: [f64; 2]) -> Vec<f64> {
    let n = 6;
    let mut c = vec![0.0; n * n * n];
    for (blk, r) in radii.iter().enumerate() {
        let o = 3 * blk;
        let k = 2.0 / r;
        for (a, b, d) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            c[((o + a) * n + o + b) * n + o + d] = k;
            c[((o + b) * n + o + a) * n + o + d] = -k;
        }
    }
    c
}

impl LieGroupModel {
    pub fn new(radii: [f64; 2]) -> Self {
        LieGroupModel { radii, metric: None, perturbation: None }
    }

    pub fn with_amplitude(mut self, t: f64) -> Self {
        self.perturbation = Some(MixedTTPerturbation { amplitude: t });
        self
    }

    /// Volume of the bi-invariant reference metric.
    pub fn reference_volume(&self) -> f64 {
        self.radii.iter().map(|r| sphere_volume(3, *r)).product()
    }

    /// Unit-norm mixed direction e^1⊙e^4/√(V_0 V_1), frame components.
    pub fn direction(&self) -> Vec<f64> {
        let mut h = vec![0.0; 36];
        let c = 1.0 / self.reference_volume().sqrt();
        h[3] = c;
        h[3 * 6] = c;
        h
    }

    pub fn frame_metric(&self) -> Vec<f64> {
        let mut g = self.metric.clone().unwrap_or_else(|| {
            let mut id = vec![0.0; 36];
            for i in 0..6 {
                id[i * 7] = 1.0;
            }
            id
        });
        if let Some(p) = self.perturbation {
            for (gi, hi) in g.iter_mut().zip(self.direction()) {
                *gi += p.amplitude * hi;
            }
        }
        g
    }
}

fn chart_metric_jets(factors: &[ChartFactor], point: &[f64]) -> Result<Vec<Jet>, GeometryError> {
    let n: usize = factors.iter().map(|f| f.dim as usize).sum();
    if point.len() != n {
        return Err(GeometryError::InvalidModel(format!("point needs {n} coordinates")));
    }
    let x: Vec<Jet> = (0..n).map(|i| Jet::variable(point[i], i, n)).collect();
    let mut g = vec![Jet::constant(0.0, n); n * n];
    let mut o = 0;
    for f in factors {
        let d = f.dim as usize;
        let mut r2 = Jet::constant(0.0, n);
        for xi in &x[o..o + d] {
            r2 = &r2 + &(xi * xi);
        }
        let denom = r2.scale(f.curvature).add_scalar(1.0);
        if !(denom.v > 0.0) {
            return Err(GeometryError::DegenerateMetric("point outside the chart domain".into()));
        }
        let phi = denom.recip().scale(2.0);
        let entry = &phi * &phi;
        for i in o..o + d {
            g[i * n + i] = entry.clone();
        }
        o += d;
    }
    Ok(g)
}

impl MetricModel {
    pub fn dim(&self) -> usize {
        match self {
            MetricModel::ProductSpheres(p) => p.total_dim(),
            MetricModel::LieGroup(_) => 6,
            MetricModel::HyperbolicChart { dim } => *dim as usize,
            MetricModel::ProductChart { factors } => factors.iter().map(|f| f.dim as usize).sum(),
        }
    }
}

/// Curvature of `model` at `point` (ignored for homogeneous Lie-group models).
pub fn curvature_at(model: &MetricModel, point: &[f64]) -> Result<CurvatureBundle, GeometryError> {
    match model {
        MetricModel::ProductSpheres(p) => {
            p.validate()?;
            let norm = if p.perturbation.is_some() { p.harmonic_normalization() } else { 1.0 };
            CurvatureBundle::from_metric_jets(&p.metric_jets(point, norm)?)
        }
        MetricModel::LieGroup(l) => {
            CurvatureBundle::from_lie_algebra(&su2_pair_structure(l.radii), &l.frame_metric(), 6)
        }
        MetricModel::HyperbolicChart { dim } => {
            CurvatureBundle::from_metric_jets(&chart_metric_jets(&[ChartFactor { dim: *dim, curvature: -1.0 }], point)?)
        }
        MetricModel::ProductChart { factors } => CurvatureBundle::from_metric_jets(&chart_metric_jets(factors, point)?),
    }
}
