//! Closed-form second-variation quadratic forms on products of Einstein
//! manifolds, parameterized by spectral data.
//!
//! Normalization: every value is per unit `‖f‖_{L²} = 1` for conformal-scale
//! directions and per `‖α_0‖ = ‖α_1‖ = 1` for mixed TT directions.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance for equality tests on Einstein constants.
pub const REL_TOL: f64 = 1e-12;

const WNHALF_NOTE: &str =
    "value is the W2 form; the W_{n/2} Hessian carries the constant factor ‖W‖^((n−4)/2), which does not change its sign";

/// Value reported for a factor TT block of a factor known to be unstable.
pub const UNSTABLE_FACTOR_SENTINEL: f64 = -1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormError {
    #[error("invalid spectral data: {0}")]
    InvalidSpectralData(String),
    #[error("unsupported combination: {0}")]
    UnsupportedCombination(String),
    #[error("not critical: {0}")]
    NotCritical(String),
    #[error("missing factor data: {0}")]
    MissingFactorData(String),
    #[error("domain error: {0}")]
    DomainError(String),
}

type Result<T> = std::result::Result<T, FormError>;

pub(crate) fn approx_eq(a: f64, b: f64, rel: f64) -> bool {
    let scale = a.abs().max(b.abs());
    (a - b).abs() <= rel * scale || (a == 0.0 && b == 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FactorKind {
    Sphere,
    HyperbolicQuotient,
    ComplexProjective,
    AbstractEinstein,
    SpaceForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TriState {
    Yes,
    No,
    #[default]
    Unknown,
}

/// Factor F_t-stability fact on the open interval `t_min < t < t_max`
/// (missing bounds are unbounded).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FtRule {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    pub status: TriState,
}

impl FtRule {
    pub fn all(status: TriState) -> Self {
        FtRule { t_min: None, t_max: None, status }
    }

    pub fn contains(&self, t: f64) -> bool {
        self.t_min.map_or(true, |lo| t > lo) && self.t_max.map_or(true, |hi| t < hi)
    }
}

/// One closed Einstein factor, carried as spectral data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FactorSpec", into = "FactorSpec")]
pub struct EinsteinFactor {
    pub kind: FactorKind,
    pub dim: u32,
    pub einstein_const: f64,
    pub sectional: Option<f64>,
    pub mu_fn: Option<f64>,
    pub mu_oneform: Option<f64>,
    pub ric_stable: TriState,
    pub ft_stable: Vec<FtRule>,
}

/// Serialized form of [`EinsteinFactor`]; `einstein_const` may be omitted
/// when it follows from the kind and the sectional curvature.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorSpec {
    pub kind: FactorKind,
    pub dim: u32,
    #[serde(default)]
    pub einstein_const: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sectional: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_fn: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_oneform: Option<f64>,
    #[serde(default)]
    pub ric_stable: TriState,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ft_stable: Vec<FtRule>,
}

impl From<EinsteinFactor> for FactorSpec {
    fn from(f: EinsteinFactor) -> Self {
        FactorSpec {
            kind: f.kind,
            dim: f.dim,
            einstein_const: Some(f.einstein_const),
            sectional: f.sectional,
            mu_fn: f.mu_fn,
            mu_oneform: f.mu_oneform,
            ric_stable: f.ric_stable,
            ft_stable: f.ft_stable,
        }
    }
}

impl TryFrom<FactorSpec> for EinsteinFactor {
    type Error = FormError;

    fn try_from(s: FactorSpec) -> Result<Self> {
        let n = s.dim as f64;
        let lambda = match (s.einstein_const, s.sectional, s.kind) {
            (Some(l), _, _) => l,
            (None, Some(k), FactorKind::Sphere | FactorKind::SpaceForm | FactorKind::HyperbolicQuotient) => {
                (n - 1.0) * k
            }
            (None, None, FactorKind::Sphere) => n - 1.0,
            (None, None, FactorKind::HyperbolicQuotient) => -(n - 1.0),
            (None, None, FactorKind::ComplexProjective) => n + 2.0,
            _ => {
                return Err(FormError::InvalidSpectralData(format!(
                    "{:?} factor needs einstein_const or sectional",
                    s.kind
                )))
            }
        };
        let sectional = match (s.sectional, s.kind) {
            (Some(k), _) => Some(k),
            (None, FactorKind::Sphere | FactorKind::HyperbolicQuotient) if s.dim > 1 => Some(lambda / (n - 1.0)),
            _ => None,
        };
        let mut f = EinsteinFactor {
            kind: s.kind,
            dim: s.dim,
            einstein_const: lambda,
            sectional,
            mu_fn: s.mu_fn,
            mu_oneform: s.mu_oneform,
            ric_stable: s.ric_stable,
            ft_stable: s.ft_stable,
        };
        if f.kind == FactorKind::Sphere {
            let k = f.sectional.unwrap_or(1.0);
            f.mu_fn.get_or_insert(n * k);
            f.mu_oneform.get_or_insert(2.0 * (n - 1.0) * k);
        }
        if f.kind == FactorKind::ComplexProjective {
            f.mu_fn.get_or_insert(2.0 * lambda);
        }
        f.validate()?;
        Ok(f)
    }
}

impl EinsteinFactor {
    /// Round sphere of the given radius.
    pub fn sphere(dim: u32, radius: f64) -> Self {
        let k = 1.0 / (radius * radius);
        let n = dim as f64;
        EinsteinFactor {
            kind: FactorKind::Sphere,
            dim,
            einstein_const: (n - 1.0) * k,
            sectional: Some(k),
            mu_fn: Some(n * k),
            mu_oneform: Some(2.0 * (n - 1.0) * k),
            ric_stable: TriState::Unknown,
            ft_stable: Vec::new(),
        }
    }

    /// Compact hyperbolic quotient with sectional curvature `k < 0`.
    pub fn hyperbolic(dim: u32, k: f64, mu_fn: Option<f64>) -> Self {
        EinsteinFactor {
            kind: FactorKind::HyperbolicQuotient,
            dim,
            einstein_const: (dim as f64 - 1.0) * k,
            sectional: Some(k),
            mu_fn,
            mu_oneform: None,
            ric_stable: TriState::Unknown,
            ft_stable: Vec::new(),
        }
    }

    pub fn space_form(dim: u32, k: f64) -> Self {
        EinsteinFactor {
            kind: FactorKind::SpaceForm,
            dim,
            einstein_const: (dim as f64 - 1.0) * k,
            sectional: Some(k),
            mu_fn: None,
            mu_oneform: None,
            ric_stable: TriState::Unknown,
            ft_stable: Vec::new(),
        }
    }

    /// Complex projective space of complex dimension `m` with Einstein constant `lambda`.
    pub fn complex_projective(m: u32, lambda: f64) -> Self {
        EinsteinFactor {
            kind: FactorKind::ComplexProjective,
            dim: 2 * m,
            einstein_const: lambda,
            sectional: None,
            mu_fn: Some(2.0 * lambda),
            mu_oneform: None,
            ric_stable: TriState::Unknown,
            ft_stable: Vec::new(),
        }
    }

    pub fn abstract_einstein(dim: u32, lambda: f64) -> Self {
        EinsteinFactor {
            kind: FactorKind::AbstractEinstein,
            dim,
            einstein_const: lambda,
            sectional: None,
            mu_fn: None,
            mu_oneform: None,
            ric_stable: TriState::Unknown,
            ft_stable: Vec::new(),
        }
    }

    pub fn with_mu_fn(mut self, mu: f64) -> Self {
        self.mu_fn = Some(mu);
        self
    }

    pub fn with_mu_oneform(mut self, mu: f64) -> Self {
        self.mu_oneform = Some(mu);
        self
    }

    pub fn with_ric_stable(mut self, s: TriState) -> Self {
        self.ric_stable = s;
        self
    }

    pub fn with_ft_rule(mut self, rule: FtRule) -> Self {
        self.ft_stable.push(rule);
        self
    }

    /// Stored F_t-stability fact for `t`; first matching rule wins.
    pub fn ft_fact(&self, t: f64) -> TriState {
        self.ft_stable
            .iter()
            .find(|r| r.contains(t))
            .map_or(TriState::Unknown, |r| r.status)
    }

    /// True for constant-curvature kinds.
    pub fn is_constant_curvature(&self) -> bool {
        matches!(self.kind, FactorKind::Sphere | FactorKind::SpaceForm)
            || (self.kind == FactorKind::HyperbolicQuotient && self.sectional.is_some())
    }

    /// Squared norm |R|² of the factor curvature tensor, for constant curvature.
    pub fn riemann_sq(&self) -> Option<f64> {
        let n = self.dim as f64;
        if self.dim == 1 {
            return Some(0.0);
        }
        if !self.is_constant_curvature() {
            return None;
        }
        self.sectional.map(|k| 2.0 * n * (n - 1.0) * k * k)
    }

    /// Metric scaled by `c`: λ, K and eigenvalues scale by 1/c.
    pub fn rescaled(&self, c: f64) -> Self {
        let mut f = self.clone();
        f.einstein_const /= c;
        f.sectional = f.sectional.map(|k| k / c);
        f.mu_fn = f.mu_fn.map(|m| m / c);
        f.mu_oneform = f.mu_oneform.map(|m| m / c);
        f
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(FormError::InvalidSpectralData(m));
        let n = self.dim as f64;
        let l = self.einstein_const;
        if self.dim == 0 {
            return bad("dim must be at least 1".into());
        }
        if !l.is_finite() {
            return bad("einstein_const must be finite".into());
        }
        if let Some(mu) = self.mu_fn {
            if !(mu > 0.0 && mu.is_finite()) {
                return bad(format!("mu_fn must be positive, got {mu}"));
            }
            if l > 0.0 && self.dim > 1 && mu < n * l / (n - 1.0) * (1.0 - REL_TOL) {
                return bad(format!(
                    "mu_fn = {mu} violates the Lichnerowicz bound {}",
                    n * l / (n - 1.0)
                ));
            }
        }
        if let Some(mu) = self.mu_oneform {
            if !(mu >= 0.0) {
                return bad(format!("mu_oneform must be nonnegative, got {mu}"));
            }
            if l > 0.0 && mu < l * (1.0 - REL_TOL) {
                return bad(format!("mu_oneform = {mu} below the Bochner bound {l}"));
            }
        }
        if let Some(k) = self.sectional {
            if self.dim > 1 && !approx_eq(l, (n - 1.0) * k, 1e-12) {
                return bad(format!("einstein_const {l} inconsistent with sectional {k}"));
            }
        }
        match self.kind {
            FactorKind::Sphere => {
                let Some(k) = self.sectional else {
                    return bad("Sphere factor requires sectional".into());
                };
                if k <= 0.0 {
                    return bad("Sphere factor requires sectional > 0".into());
                }
                if let Some(mu) = self.mu_fn {
                    if !approx_eq(mu, n * k, 1e-12) {
                        return bad(format!("Sphere mu_fn must equal n·K = {}", n * k));
                    }
                }
            }
            FactorKind::SpaceForm => {
                if self.sectional.is_none() && self.dim > 1 {
                    return bad("SpaceForm factor requires sectional".into());
                }
            }
            FactorKind::HyperbolicQuotient => {
                if self.dim > 1 && l >= 0.0 {
                    return bad("HyperbolicQuotient factor requires einstein_const < 0".into());
                }
            }
            FactorKind::ComplexProjective => {
                if self.dim % 2 != 0 || l <= 0.0 {
                    return bad("ComplexProjective factor needs even real dim and λ > 0".into());
                }
            }
            FactorKind::AbstractEinstein => {}
        }
        Ok(())
    }
}

/// Ordered product of Einstein factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductSpace {
    pub factors: Vec<EinsteinFactor>,
}

/// Relation between the Einstein constants of a two-factor product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SignCase {
    /// λ_0 = λ_1 = λ.
    Equal(f64),
    /// λ_0 = −λ_1 with `positive` the index of the factor with λ > 0.
    Opposite { positive: usize, lambda: f64 },
}

impl ProductSpace {
    pub fn new(factors: Vec<EinsteinFactor>) -> Self {
        ProductSpace { factors }
    }

    pub fn pair(a: EinsteinFactor, b: EinsteinFactor) -> Self {
        ProductSpace { factors: vec![a, b] }
    }

    pub fn total_dim(&self) -> u32 {
        self.factors.iter().map(|f| f.dim).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.factors.len() < 2 {
            return Err(FormError::InvalidSpectralData(
                "a product needs at least two factors".into(),
            ));
        }
        for f in &self.factors {
            f.validate()?;
        }
        Ok(())
    }

    fn require_pair(&self) -> Result<()> {
        self.validate()?;
        if self.factors.len() != 2 {
            return Err(FormError::UnsupportedCombination(
                "closed forms exist for two-factor products only".into(),
            ));
        }
        Ok(())
    }

    pub fn lambdas(&self) -> (f64, f64) {
        (self.factors[0].einstein_const, self.factors[1].einstein_const)
    }

    /// Sign case of a two-factor product, or `None` when |λ_0| ≠ |λ_1|.
    pub fn sign_case(&self) -> Option<SignCase> {
        let (l0, l1) = self.lambdas();
        if approx_eq(l0, l1, REL_TOL) {
            Some(SignCase::Equal(l0))
        } else if approx_eq(l0, -l1, REL_TOL) {
            let positive = if l0 > 0.0 { 0 } else { 1 };
            Some(SignCase::Opposite { positive, lambda: l0.abs() })
        } else {
            None
        }
    }

    /// Critical for Ric iff |λ_0| = |λ_1|.
    pub fn is_ric_critical(&self) -> bool {
        self.factors.len() == 2 && self.sign_case().is_some()
    }

    /// Total scalar curvature s = Σ n_i λ_i.
    pub fn scalar(&self) -> f64 {
        self.factors.iter().map(|f| f.dim as f64 * f.einstein_const).sum()
    }

    /// Critical for S iff Einstein or scalar-flat.
    pub fn is_s_critical(&self) -> bool {
        let (l0, l1) = self.lambdas();
        approx_eq(l0, l1, REL_TOL) || self.scalar().abs() <= REL_TOL * (l0.abs() + l1.abs()) * self.total_dim() as f64
    }

    /// Critical for F_t: Ric-critical, and opposite signs need n_0 = n_1 unless t = 0.
    pub fn is_ft_critical(&self, t: f64) -> bool {
        match self.sign_case() {
            None => false,
            Some(SignCase::Equal(_)) => true,
            Some(SignCase::Opposite { .. }) => t == 0.0 || self.factors[0].dim == self.factors[1].dim,
        }
    }
}

/// Admissible Hessian test direction, carried as spectral data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum VariationDirection {
    /// h = f·g_B with f a unit-norm eigenfunction (eigenvalue `mu`) on factor A.
    ConformalScale {
        source_factor: usize,
        target_factor: usize,
        mu: f64,
        #[serde(default = "one")]
        norm_f: f64,
    },
    /// h = α_0 ⊙ α_1 with unit-norm divergence-free 1-forms.
    MixedTT {
        nu0: f64,
        nu1: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        norm_laplacian_sq0: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        norm_laplacian_sq1: Option<f64>,
    },
    /// TT tensor pulled back from one factor.
    FactorTT {
        factor: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        factor_hessian_lower_bound: Option<f64>,
    },
}

fn one() -> f64 {
    1.0
}

impl VariationDirection {
    pub fn conformal(source_factor: usize, target_factor: usize, mu: f64) -> Self {
        VariationDirection::ConformalScale { source_factor, target_factor, mu, norm_f: 1.0 }
    }

    pub fn mixed(nu0: f64, nu1: f64) -> Self {
        VariationDirection::MixedTT { nu0, nu1, norm_laplacian_sq0: None, norm_laplacian_sq1: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum FunctionalId {
    Ric,
    S,
    Ft { t: f64 },
    R,
    W2,
    WnHalf,
}

impl fmt::Display for FunctionalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionalId::Ric => write!(f, "Ric"),
            FunctionalId::S => write!(f, "S"),
            FunctionalId::Ft { t } => write!(f, "Ft({t})"),
            FunctionalId::R => write!(f, "R"),
            FunctionalId::W2 => write!(f, "W2"),
            FunctionalId::WnHalf => write!(f, "WnHalf"),
        }
    }
}

/// One labeled term: `laplacian_coeff·laplacian_value + gradient_coeff·gradient_value + constant`.
///
/// For conformal directions the values are ‖Δf‖² and ‖df‖²; for mixed TT
/// directions ‖Δα_i‖² and ⟨Δα_i, α_i⟩.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormTerm {
    pub source: String,
    pub laplacian_coeff: f64,
    pub laplacian_value: f64,
    pub gradient_coeff: f64,
    pub gradient_value: f64,
    pub constant: f64,
    pub contribution: f64,
}

impl FormTerm {
    fn new(source: &str, lc: f64, lv: f64, gc: f64, gv: f64, constant: f64) -> Self {
        FormTerm {
            source: source.to_string(),
            laplacian_coeff: lc,
            laplacian_value: lv,
            gradient_coeff: gc,
            gradient_value: gv,
            constant,
            contribution: lc * lv + gc * gv + constant,
        }
    }

    fn constant(source: &str, c: f64) -> Self {
        FormTerm::new(source, 0.0, 0.0, 0.0, 0.0, c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticFormReport {
    pub functional: FunctionalId,
    pub direction: VariationDirection,
    pub value: f64,
    pub terms: Vec<FormTerm>,
    pub defined: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl QuadraticFormReport {
    fn from_terms(functional: FunctionalId, direction: VariationDirection, terms: Vec<FormTerm>) -> Self {
        let value = terms.iter().map(|t| t.contribution).sum();
        QuadraticFormReport { functional, direction, value, terms, defined: true, notes: Vec::new() }
    }

    fn undefined(functional: FunctionalId, direction: VariationDirection, note: &str) -> Self {
        QuadraticFormReport {
            functional,
            direction,
            value: 0.0,
            terms: Vec::new(),
            defined: false,
            notes: vec![note.to_string()],
        }
    }

    fn note(mut self, n: impl Into<String>) -> Self {
        self.notes.push(n.into());
        self
    }

    /// Sum of the absolute sizes of all summands; the scale for zero tests.
    pub fn magnitude(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| (t.laplacian_coeff * t.laplacian_value).abs() + (t.gradient_coeff * t.gradient_value).abs() + t.constant.abs())
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LemmaTerm {
    /// ⟨(δ^D d^D r)'(h), h⟩
    DeltaDdDr,
    /// ⟨(D*D r)'(h), h⟩
    DstarDr,
    /// ⟨(r∘r)'(h), h⟩
    RcircR,
    /// ⟨Ř'(h), h⟩
    RcheckPrime,
    /// ⟨(∇S)'(h), h⟩
    GradS,
}

/// Conformal direction resolved against a product: f on `src`, scaling `tgt`.
#[derive(Debug, Clone, Copy)]
struct Conf {
    src: usize,
    tgt: usize,
    n_i: f64,
    n: f64,
    lam_i: f64,
    lam_sum: f64,
    mu: f64,
}

fn resolve_conformal(product: &ProductSpace, dir: &VariationDirection) -> Result<Conf> {
    product.require_pair()?;
    let VariationDirection::ConformalScale { source_factor, target_factor, mu, norm_f } = *dir else {
        return Err(FormError::UnsupportedCombination("expected a ConformalScale direction".into()));
    };
    if source_factor > 1 || target_factor > 1 || source_factor == target_factor {
        return Err(FormError::InvalidSpectralData(format!(
            "conformal direction needs distinct factor indices in {{0,1}}, got {source_factor}→{target_factor}"
        )));
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(FormError::InvalidSpectralData(format!("mu must be positive, got {mu}")));
    }
    if norm_f != 1.0 {
        return Err(FormError::InvalidSpectralData("norm_f is fixed to 1".into()));
    }
    let src = &product.factors[source_factor];
    if src.einstein_const > 0.0 && src.dim > 1 {
        let n = src.dim as f64;
        let bound = n * src.einstein_const / (n - 1.0);
        if mu < bound * (1.0 - REL_TOL) {
            return Err(FormError::InvalidSpectralData(format!(
                "mu = {mu} below the Lichnerowicz bound {bound} of the source factor"
            )));
        }
    }
    if let Some(first) = src.mu_fn {
        if mu < first * (1.0 - REL_TOL) {
            return Err(FormError::InvalidSpectralData(format!(
                "mu = {mu} below the first eigenvalue {first} of the source factor"
            )));
        }
    }
    let tgt = &product.factors[target_factor];
    Ok(Conf {
        src: source_factor,
        tgt: target_factor,
        n_i: tgt.dim as f64,
        n: product.total_dim() as f64,
        lam_i: tgt.einstein_const,
        lam_sum: src.einstein_const + tgt.einstein_const,
        mu,
    })
}

/// Mixed TT direction resolved against a product.
#[derive(Debug, Clone, Copy)]
struct Mixed {
    n0: f64,
    n1: f64,
    l0: f64,
    l1: f64,
    nu0: f64,
    nu1: f64,
    q0: f64,
    q1: f64,
}

impl Mixed {
    fn n(&self) -> f64 {
        self.n0 + self.n1
    }

    /// ‖Δα_0‖² + ‖Δα_1‖² + 2ν_0ν_1
    fn x(&self) -> f64 {
        self.q0 + self.q1 + 2.0 * self.nu0 * self.nu1
    }

    fn swapped(&self) -> Mixed {
        Mixed {
            n0: self.n1,
            n1: self.n0,
            l0: self.l1,
            l1: self.l0,
            nu0: self.nu1,
            nu1: self.nu0,
            q0: self.q1,
            q1: self.q0,
        }
    }
}

/// Options for spectral validation of mixed TT data.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormOptions {
    /// Require ν_i > λ_i strictly when λ_i > 0.
    #[serde(default)]
    pub strict_bochner: bool,
}

fn resolve_mixed(product: &ProductSpace, dir: &VariationDirection, opts: &FormOptions) -> Result<Mixed> {
    product.require_pair()?;
    let VariationDirection::MixedTT { nu0, nu1, norm_laplacian_sq0, norm_laplacian_sq1 } = *dir else {
        return Err(FormError::UnsupportedCombination("expected a MixedTT direction".into()));
    };
    let (l0, l1) = product.lambdas();
    let check = |i: usize, nu: f64, q: Option<f64>, l: f64| -> Result<f64> {
        if !(nu >= 0.0 && nu.is_finite()) {
            return Err(FormError::InvalidSpectralData(format!("nu{i} must be nonnegative, got {nu}")));
        }
        if l > 0.0 {
            let violates = if opts.strict_bochner { nu <= l } else { nu < l * (1.0 - REL_TOL) };
            if violates {
                return Err(FormError::InvalidSpectralData(format!(
                    "nu{i} = {nu} violates the Bochner bound against λ = {l}"
                )));
            }
        }
        if let Some(first) = product.factors[i].mu_oneform {
            if nu < first * (1.0 - REL_TOL) {
                return Err(FormError::InvalidSpectralData(format!(
                    "nu{i} = {nu} below the first co-closed eigenvalue {first}"
                )));
            }
        }
        let q = q.unwrap_or(nu * nu);
        if q < nu * nu * (1.0 - REL_TOL) {
            return Err(FormError::InvalidSpectralData(format!(
                "norm_laplacian_sq{i} = {q} below nu{i}² = {}",
                nu * nu
            )));
        }
        Ok(q)
    };
    let q0 = check(0, nu0, norm_laplacian_sq0, l0)?;
    let q1 = check(1, nu1, norm_laplacian_sq1, l1)?;
    Ok(Mixed {
        n0: product.factors[0].dim as f64,
        n1: product.factors[1].dim as f64,
        l0,
        l1,
        nu0,
        nu1,
        q0,
        q1,
    })
}

fn conformal_lemma_term(term: LemmaTerm, product: &ProductSpace, c: &Conf) -> Result<FormTerm> {
    let mu2 = c.mu * c.mu;
    Ok(match term {
        LemmaTerm::DeltaDdDr => FormTerm::new("delta_dd_r.conformal", c.n_i, mu2, -c.n_i * c.lam_sum, c.mu, 0.0),
        LemmaTerm::DstarDr => FormTerm::new("dstar_d_r.conformal", c.n_i / 2.0, mu2, -c.n_i * c.lam_i, c.mu, 0.0),
        LemmaTerm::RcircR => FormTerm::new(
            "r_circ_r.conformal",
            0.0,
            mu2,
            c.lam_i * c.n_i,
            c.mu,
            -c.lam_i * c.lam_i * c.n_i,
        ),
        LemmaTerm::RcheckPrime => {
            let tgt = &product.factors[c.tgt];
            let rsq = tgt.riemann_sq().filter(|_| tgt.is_constant_curvature()).ok_or_else(|| {
                FormError::UnsupportedCombination(format!(
                    "⟨Ř'(h),h⟩ needs a constant-curvature target factor, got {:?}",
                    tgt.kind
                ))
            })?;
            FormTerm::constant("r_check.conformal", -rsq)
        }
        LemmaTerm::GradS => return scal_conformal(product, c),
    })
}

fn scal_conformal(product: &ProductSpace, c: &Conf) -> Result<FormTerm> {
    let mu2 = c.mu * c.mu;
    let (ni, n) = (c.n_i, c.n);
    match product.sign_case() {
        Some(SignCase::Equal(l)) => Ok(FormTerm::new(
            "grad_s.conformal.equal",
            2.0 * ni * ni,
            mu2,
            l * (n * ni * (ni - 1.0) - 4.0 * ni * ni),
            c.mu,
            ni * l * l * (2.0 * ni - n * (ni - 2.0)),
        )),
        Some(SignCase::Opposite { lambda, .. }) if product.factors[0].dim == product.factors[1].dim => {
            let m2 = ni * ni;
            Ok(FormTerm::new(
                "grad_s.conformal.opposite",
                2.0 * m2,
                mu2,
                -4.0 * m2 * c.lam_i,
                c.mu,
                2.0 * m2 * lambda * lambda,
            ))
        }
        _ if product.is_s_critical() => Err(FormError::UnsupportedCombination(
            "no closed conformal S form for scalar-flat products with n_0 ≠ n_1".into(),
        )),
        _ => Err(FormError::NotCritical("product is not critical for S".into())),
    }
}

fn mixed_l1(m: &Mixed) -> f64 {
    2.0 * m.x() - 2.5 * (m.l0 + m.l1) * (m.nu0 + m.nu1) + 4.0 * m.l0 * m.l1
}

fn mixed_l2(m: &Mixed) -> f64 {
    m.x() + 4.0 * m.l0 * m.l1 - 0.5 * (3.0 * m.l0 + 5.0 * m.l1) * m.nu0 - 0.5 * (3.0 * m.l1 + 5.0 * m.l0) * m.nu1
}

fn mixed_l3(m: &Mixed) -> f64 {
    (m.l0 + m.l1) * (m.nu0 + m.nu1) - 2.0 * m.l0 * m.l1
}

fn is_unit_pair(product: &ProductSpace) -> bool {
    let k = |i: usize| product.factors[i].sectional;
    product.factors.iter().all(|f| f.is_constant_curvature())
        && k(0).is_some_and(|k| approx_eq(k, 1.0, REL_TOL))
        && k(1).is_some_and(|k| approx_eq(k, -1.0, REL_TOL))
}

fn mixed_rcheck(product: &ProductSpace, m: &Mixed) -> Result<FormTerm> {
    if !product.factors.iter().all(|f| f.is_constant_curvature() || f.dim == 1) {
        return Err(FormError::UnsupportedCombination(
            "⟨Ř'(h),h⟩ on mixed TT directions needs constant-curvature factors".into(),
        ));
    }
    if is_unit_pair(product) {
        return Ok(FormTerm::new(
            "r_check.mixed_tt.unit_curvature",
            0.0,
            0.0,
            2.0,
            m.nu0,
            -2.0 * m.nu1 - 4.0 * (m.n0 + m.n1 - 2.0),
        ));
    }
    // generic constant curvature: 2(ν_0 − λ_0) − 2(ν_1 − λ_1) − 2(λ_0 − λ_1)
    Ok(FormTerm::new(
        "r_check.mixed_tt.generic",
        0.0,
        0.0,
        2.0,
        m.nu0,
        -2.0 * m.nu1 - 4.0 * (m.l0 - m.l1),
    ))
}

fn mixed_lemma_term(term: LemmaTerm, product: &ProductSpace, m: &Mixed) -> Result<FormTerm> {
    let sum_nu = m.nu0 + m.nu1;
    let q = m.q0 + m.q1;
    let cross = 2.0 * m.nu0 * m.nu1;
    Ok(match term {
        LemmaTerm::DeltaDdDr => FormTerm::new(
            "delta_dd_r.mixed_tt",
            2.0,
            q,
            -2.5 * (m.l0 + m.l1),
            sum_nu,
            2.0 * cross + 4.0 * m.l0 * m.l1,
        ),
        LemmaTerm::DstarDr => FormTerm::new("dstar_d_r.mixed_tt", 1.0, q, 0.0, 0.0, mixed_l2(m) - q),
        LemmaTerm::RcircR => FormTerm::new("r_circ_r.mixed_tt", 0.0, 0.0, m.l0 + m.l1, sum_nu, -2.0 * m.l0 * m.l1),
        LemmaTerm::RcheckPrime => return mixed_rcheck(product, m),
        LemmaTerm::GradS => {
            let s = m.n0 * m.l0 + m.n1 * m.l1;
            FormTerm::new("grad_s.mixed_tt", 0.0, 0.0, -2.0 * s, sum_nu, 4.0 * s * s / m.n())
        }
    })
}

/// L²-pairing of one linearized gradient building block against a direction.
pub fn lemma_term(term: LemmaTerm, direction: &VariationDirection, product: &ProductSpace) -> Result<f64> {
    lemma_form_term(term, direction, product).map(|t| t.contribution)
}

/// As [`lemma_term`], returning the labeled breakdown.
pub fn lemma_form_term(term: LemmaTerm, direction: &VariationDirection, product: &ProductSpace) -> Result<FormTerm> {
    match direction {
        VariationDirection::ConformalScale { .. } => {
            let c = resolve_conformal(product, direction)?;
            conformal_lemma_term(term, product, &c)
        }
        VariationDirection::MixedTT { .. } => {
            let m = resolve_mixed(product, direction, &FormOptions::default())?;
            mixed_lemma_term(term, product, &m)
        }
        VariationDirection::FactorTT { .. } => Err(FormError::UnsupportedCombination(
            "lemma terms are defined for conformal and mixed TT directions".into(),
        )),
    }
}

/// Trace contributions completing the Ric conformal form from the lemma
/// terms: ½⟨Δs'(h)g + (|r|²)'(h)g, h⟩ + 2λ²‖h‖².
pub fn conformal_ric_trace_terms(direction: &VariationDirection, product: &ProductSpace) -> Result<f64> {
    let c = resolve_conformal(product, direction)?;
    let lam = product.factors[c.src].einstein_const.abs();
    let ni2 = c.n_i * c.n_i;
    Ok(0.5 * ni2 * (c.mu * c.mu - c.lam_i * c.mu + c.lam_sum * c.mu - 2.0 * c.lam_i * c.lam_i)
        + 2.0 * lam * lam * c.n_i)
}

fn ric_conformal_term(product: &ProductSpace, c: &Conf) -> Result<FormTerm> {
    let (ni, mu) = (c.n_i, c.mu);
    match product.sign_case() {
        Some(SignCase::Equal(l)) => Ok(FormTerm::new(
            "ric.conformal.equal",
            ni * (ni + 1.0) / 2.0,
            mu * mu,
            l * ni * (ni - 6.0) / 2.0,
            mu,
            -l * l * ni * (ni - 4.0),
        )),
        Some(SignCase::Opposite { lambda, .. }) => Ok(FormTerm::new(
            "ric.conformal.opposite",
            ni * (ni + 1.0) / 2.0,
            mu * mu,
            -c.lam_i * ni * (ni + 2.0) / 2.0,
            mu,
            -lambda * lambda * ni * (ni - 4.0),
        )),
        None => Err(FormError::NotCritical("|λ_0| ≠ |λ_1|: product is not critical for Ric".into())),
    }
}

fn ft_conformal_term(product: &ProductSpace, c: &Conf, t: f64) -> Result<FormTerm> {
    if t == 0.0 {
        return ric_conformal_term(product, c);
    }
    let (ni, n, mu) = (c.n_i, c.n, c.mu);
    match product.sign_case() {
        Some(SignCase::Equal(l)) => Ok(FormTerm::new(
            "ft.conformal.equal",
            ni * ((4.0 * t + 1.0) * ni + 1.0) / 2.0,
            mu * mu,
            l * ni / 2.0 * (2.0 * t * (n * (ni - 1.0) - 4.0 * ni) + ni - 6.0),
            mu,
            -l * l * ni * (t * (n * (ni - 2.0) - 2.0 * ni) + ni - 4.0),
        )),
        Some(SignCase::Opposite { lambda, .. }) if product.factors[0].dim == product.factors[1].dim => {
            let m = ni;
            Ok(FormTerm::new(
                "ft.conformal.opposite",
                m * ((4.0 * t + 1.0) * m + 1.0) / 2.0,
                mu * mu,
                -c.lam_i * m * ((8.0 * t + 1.0) * m + 2.0) / 2.0,
                mu,
                lambda * lambda * m * (m * (2.0 * t - 1.0) + 4.0),
            ))
        }
        _ => Err(FormError::NotCritical(format!("product is not critical for F_t at t = {t}"))),
    }
}

/// Curvature ±1 space-form pair; returns the index of the spherical factor.
fn unit_space_form_pair(product: &ProductSpace) -> Option<usize> {
    if !product.factors.iter().all(|f| f.is_constant_curvature()) {
        return None;
    }
    let k0 = product.factors[0].sectional?;
    let k1 = product.factors[1].sectional?;
    if approx_eq(k0, 1.0, REL_TOL) && approx_eq(k1, -1.0, REL_TOL) {
        Some(0)
    } else if approx_eq(k0, -1.0, REL_TOL) && approx_eq(k1, 1.0, REL_TOL) {
        Some(1)
    } else {
        None
    }
}

fn r_conformal_term(product: &ProductSpace, c: &Conf) -> Result<FormTerm> {
    if unit_space_form_pair(product).is_none() || product.factors[0].dim != product.factors[1].dim {
        return Err(FormError::UnsupportedCombination(
            "conformal R form needs S^n×H^n space forms of curvature ±1".into(),
        ));
    }
    let m = c.n_i;
    Ok(FormTerm::new(
        "r.conformal.unit_space_forms",
        2.0 * m,
        c.mu * c.mu,
        0.0,
        c.mu,
        -2.0 * m * (m - 1.0) * (m - 4.0),
    ))
}

/// Hessian of `functional` along a conformal-scale direction.
pub fn hessian_conformal(
    functional: FunctionalId,
    product: &ProductSpace,
    direction: &VariationDirection,
) -> Result<QuadraticFormReport> {
    let c = resolve_conformal(product, direction)?;
    let d = direction.clone();
    let report = |terms| QuadraticFormReport::from_terms(functional, d.clone(), terms);
    match functional {
        FunctionalId::Ric => Ok(report(vec![ric_conformal_term(product, &c)?])),
        FunctionalId::S => Ok(report(vec![scal_conformal(product, &c)?])),
        FunctionalId::Ft { t } => Ok(report(vec![ft_conformal_term(product, &c, t)?])),
        FunctionalId::R => Ok(report(vec![r_conformal_term(product, &c)?])),
        FunctionalId::W2 | FunctionalId::WnHalf => {
            let (Ok(r), Ok(ric), Ok(s)) = (
                r_conformal_term(product, &c),
                ric_conformal_term(product, &c),
                scal_conformal(product, &c),
            ) else {
                return Ok(QuadraticFormReport::undefined(
                    functional,
                    d,
                    "no conformal W2 form outside S^n×H^n unit space forms",
                ));
            };
            let mut rep = report(weyl_terms(c.n, r, ric, s)).note("composed as H_R − 4/(n−2)·(H_Ric − H_S/(2(n−1)))");
            if functional == FunctionalId::WnHalf {
                rep = rep.note(WNHALF_NOTE);
            }
            Ok(rep)
        }
    }
}

fn weyl_terms(n: f64, r: FormTerm, ric: FormTerm, s: FormTerm) -> Vec<FormTerm> {
    let a = -4.0 / (n - 2.0);
    let b = 4.0 / ((n - 2.0) * 2.0 * (n - 1.0));
    let scale = |t: FormTerm, k: f64, label: &str| {
        FormTerm::new(
            label,
            t.laplacian_coeff * k,
            t.laplacian_value,
            t.gradient_coeff * k,
            t.gradient_value,
            t.constant * k,
        )
    };
    vec![
        scale(r, 1.0, "w2.compose.r"),
        scale(ric, a, "w2.compose.ric"),
        scale(s, b, "w2.compose.s"),
    ]
}

fn mixed_terms(source: &str, m: &Mixed, g0: f64, g1: f64, constant: f64) -> Vec<FormTerm> {
    vec![
        FormTerm::new(&format!("{source}.factor0"), 1.0, m.q0, g0, m.nu0, 0.0),
        FormTerm::new(&format!("{source}.factor1"), 1.0, m.q1, g1, m.nu1, 0.0),
        FormTerm::constant(&format!("{source}.cross"), 2.0 * m.nu0 * m.nu1),
        FormTerm::constant(&format!("{source}.constant"), constant),
    ]
}

fn ric_mixed_terms(product: &ProductSpace, m: &Mixed) -> Result<Vec<FormTerm>> {
    match product.sign_case() {
        Some(SignCase::Equal(l)) => Ok(mixed_terms("ric.mixed_tt.equal", m, -5.0 * l, -5.0 * l, 8.0 * l * l)),
        Some(SignCase::Opposite { .. }) => Ok(mixed_terms("ric.mixed_tt.opposite", m, -m.l0, -m.l1, 0.0)),
        None => Err(FormError::NotCritical("|λ_0| ≠ |λ_1|: product is not critical for Ric".into())),
    }
}

/// Ric mixed TT form assembled from the building blocks for arbitrary
/// λ_0, λ_1: L1 − L2 − 2·L3 + (2/n)|r|²‖h‖² with ‖h‖² = 2.
fn ric_mixed_general(m: &Mixed) -> f64 {
    mixed_l1(m) - mixed_l2(m) - 2.0 * mixed_l3(m) + 4.0 / m.n() * (m.n0 * m.l0 * m.l0 + m.n1 * m.l1 * m.l1)
}

fn s_mixed_value(m: &Mixed) -> f64 {
    let s = m.n0 * m.l0 + m.n1 * m.l1;
    4.0 * s * s / m.n() - 2.0 * s * (m.nu0 + m.nu1)
}

/// Mixed TT data on a curvature ±1 pair, reordered so factor 0 is spherical;
/// the circle case n_1 = 1 is admitted with a spherical factor 0.
fn unit_pair_mixed(product: &ProductSpace, m: &Mixed) -> Result<Mixed> {
    let f = &product.factors;
    if f[1].dim == 1 && f[0].sectional.is_some_and(|k| approx_eq(k, 1.0, REL_TOL)) && f[0].is_constant_curvature()
    {
        return Ok(*m);
    }
    if f[0].dim == 1 && f[1].sectional.is_some_and(|k| approx_eq(k, 1.0, REL_TOL)) && f[1].is_constant_curvature()
    {
        return Ok(m.swapped());
    }
    match unit_space_form_pair(product) {
        Some(0) if f[0].dim >= 3 && f[1].dim >= 3 => Ok(*m),
        Some(1) if f[0].dim >= 3 && f[1].dim >= 3 => Ok(m.swapped()),
        _ => Err(FormError::UnsupportedCombination(
            "R and W2 mixed TT forms need space forms of curvature +1 and −1 (dims ≥ 3, or a circle factor)".into(),
        )),
    }
}

fn r_mixed_terms(m: &Mixed) -> Vec<FormTerm> {
    let (n0, n1, n) = (m.n0, m.n1, m.n());
    let d = n1 - n0;
    let constant = -8.0 * (n0 - 1.0) * (n1 - 1.0) + 8.0 * (n - 2.0) + 8.0 / n * (n0 * (n0 - 1.0) + n1 * (n1 - 1.0));
    vec![
        FormTerm::new("r.mixed_tt.factor0", 4.0, m.q0, 5.0 * d - 4.0, m.nu0, 0.0),
        FormTerm::new("r.mixed_tt.factor1", 4.0, m.q1, 5.0 * d + 4.0, m.nu1, 0.0),
        FormTerm::constant("r.mixed_tt.cross", 8.0 * m.nu0 * m.nu1),
        FormTerm::constant("r.mixed_tt.constant", constant),
    ]
}

fn w2_mixed_terms(m: &Mixed) -> Vec<FormTerm> {
    let (n0, n1, n) = (m.n0, m.n1, m.n());
    let k = 4.0 * (n - 3.0) / (n - 2.0);
    let g0 = 5.0 * (n1 - n0) + 4.0 * (n0 - 2.0 * n1 + 1.0) / (n - 2.0);
    let g1 = 5.0 * (n1 - n0) + 4.0 * (2.0 * n0 - n1 - 1.0) / (n - 2.0);
    let constant = 8.0 * (n1 - n0).powi(2) * (n - 1.0) / (n * (n - 2.0)) + 8.0 * (n - 2.0)
        + 8.0 * (n0 * (n0 - 1.0) + n1 * (n1 - 1.0)) / n
        - 8.0 * (n1 - 1.0) * (n0 - 1.0) * (n - 4.0) / (n - 2.0)
        - 16.0 * (n0 * (n0 - 1.0).powi(2) + n1 * (n1 - 1.0).powi(2)) / (n * (n - 2.0));
    vec![
        FormTerm::new("w2.mixed_tt.factor0", k, m.q0, g0, m.nu0, 0.0),
        FormTerm::new("w2.mixed_tt.factor1", k, m.q1, g1, m.nu1, 0.0),
        FormTerm::constant("w2.mixed_tt.cross", k * 2.0 * m.nu0 * m.nu1),
        FormTerm::constant("w2.mixed_tt.constant", constant),
    ]
}

/// Hessian of `functional` along a mixed TT direction α_0 ⊙ α_1.
pub fn hessian_mixed_tt(
    functional: FunctionalId,
    product: &ProductSpace,
    direction: &VariationDirection,
) -> Result<QuadraticFormReport> {
    hessian_mixed_tt_with(functional, product, direction, &FormOptions::default())
}

pub fn hessian_mixed_tt_with(
    functional: FunctionalId,
    product: &ProductSpace,
    direction: &VariationDirection,
    opts: &FormOptions,
) -> Result<QuadraticFormReport> {
    let m = resolve_mixed(product, direction, opts)?;
    let d = direction.clone();
    let report = |terms| QuadraticFormReport::from_terms(functional, d.clone(), terms);
    match functional {
        FunctionalId::Ric => Ok(report(ric_mixed_terms(product, &m)?)),
        FunctionalId::S => {
            if !product.is_s_critical() {
                return Err(FormError::NotCritical("product is not critical for S".into()));
            }
            Ok(report(vec![mixed_lemma_term(LemmaTerm::GradS, product, &m)?]))
        }
        FunctionalId::Ft { t } => {
            if t == 0.0 {
                return Ok(report(ric_mixed_terms(product, &m)?));
            }
            match product.sign_case() {
                Some(SignCase::Equal(l)) => {
                    let n = m.n();
                    Ok(report(mixed_terms(
                        "ft.mixed_tt.equal",
                        &m,
                        -l * (5.0 + 2.0 * t * n),
                        -l * (5.0 + 2.0 * t * n),
                        4.0 * l * l * (2.0 + t * n),
                    )))
                }
                Some(SignCase::Opposite { .. }) if m.n0 == m.n1 => {
                    Ok(report(mixed_terms("ft.mixed_tt.opposite", &m, -m.l0, -m.l1, 0.0)))
                }
                _ => Err(FormError::NotCritical(format!("product is not critical for F_t at t = {t}"))),
            }
        }
        FunctionalId::R => {
            let u = unit_pair_mixed(product, &m)?;
            Ok(report(r_mixed_terms(&u)))
        }
        FunctionalId::W2 => {
            let u = unit_pair_mixed(product, &m)?;
            Ok(report(w2_mixed_terms(&u)))
        }
        FunctionalId::WnHalf => {
            let u = unit_pair_mixed(product, &m)?;
            Ok(report(w2_mixed_terms(&u)).note(WNHALF_NOTE))
        }
    }
}

/// Building-block composition of the mixed TT Hessians for arbitrary
/// Einstein constants, bypassing criticality gates. Used by identity suites.
pub fn mixed_tt_components(product: &ProductSpace, direction: &VariationDirection) -> Result<MixedComponents> {
    let m = resolve_mixed(product, direction, &FormOptions::default())?;
    Ok(MixedComponents { ric: ric_mixed_general(&m), s: s_mixed_value(&m) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedComponents {
    pub ric: f64,
    pub s: f64,
}

/// Lower bound for the Hessian on TT tensors pulled back from one factor.
pub fn hessian_factor_tt(
    functional: FunctionalId,
    product: &ProductSpace,
    direction: &VariationDirection,
) -> Result<QuadraticFormReport> {
    product.validate()?;
    let VariationDirection::FactorTT { factor, factor_hessian_lower_bound } = *direction else {
        return Err(FormError::UnsupportedCombination("expected a FactorTT direction".into()));
    };
    let f = product.factors.get(factor).ok_or_else(|| {
        FormError::InvalidSpectralData(format!("factor index {factor} out of range"))
    })?;
    let d = direction.clone();
    if let Some(bound) = factor_hessian_lower_bound {
        return Ok(QuadraticFormReport::from_terms(functional, d, vec![FormTerm::constant("factor_tt.bound", bound)])
            .note("factor-level bound, supplied by the caller"));
    }
    let ric_like = match functional {
        FunctionalId::Ric => true,
        FunctionalId::Ft { t } => t == 0.0,
        _ => false,
    };
    if ric_like && f.ric_stable == TriState::No {
        return Ok(QuadraticFormReport::from_terms(
            functional,
            d,
            vec![FormTerm::constant("factor_tt.unstable_sentinel", UNSTABLE_FACTOR_SENTINEL)],
        )
        .note("factor flagged unstable; nonpositive sentinel"));
    }
    Err(FormError::MissingFactorData(format!("no Hessian bound for factor {factor}")))
}

/// Dispatch on the direction type.
pub fn hessian(
    functional: FunctionalId,
    product: &ProductSpace,
    direction: &VariationDirection,
) -> Result<QuadraticFormReport> {
    match direction {
        VariationDirection::ConformalScale { .. } => hessian_conformal(functional, product, direction),
        VariationDirection::MixedTT { .. } => hessian_mixed_tt(functional, product, direction),
        VariationDirection::FactorTT { .. } => hessian_factor_tt(functional, product, direction),
    }
}

/// Threshold c(a) for equal negative λ; −∞ when the condition is vacuous.
pub fn threshold_c(a: u32) -> Result<f64> {
    if a < 3 {
        return Err(FormError::DomainError(format!("threshold_c needs a ≥ 3, got {a}")));
    }
    if a <= 4 {
        return Ok(f64::NEG_INFINITY);
    }
    let a = a as f64;
    Ok((a - 6.0 + (9.0 * a * a - 36.0 * a + 4.0).sqrt()) / (2.0 * (a + 1.0)))
}

/// Threshold on μ_1/λ for a function on the negative factor scaling a
/// positive factor of dimension `n0`; −∞ when vacuous.
pub fn opposite_threshold(n0: u32) -> Result<f64> {
    if n0 < 3 {
        return Err(FormError::DomainError(format!("opposite_threshold needs n0 ≥ 3, got {n0}")));
    }
    let n = n0 as f64;
    let disc = 9.0 * n * n - 20.0 * n - 28.0;
    if disc < 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok((n + 2.0 + disc.sqrt()) / (2.0 * (n + 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum PolynomialKind {
    RicWarped { a: u32 },
    FtOpposite { n: u32, t: f64, branch: u8 },
}

pub fn stability_polynomial(kind: PolynomialKind, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(FormError::DomainError(format!("x must be nonnegative, got {x}")));
    }
    match kind {
        PolynomialKind::RicWarped { a } => {
            if a < 3 {
                return Err(FormError::DomainError(format!("a must be at least 3, got {a}")));
            }
            let a = a as f64;
            Ok((a + 1.0) * x * x - (a - 6.0) * x - 2.0 * (a - 4.0))
        }
        PolynomialKind::FtOpposite { n, t, branch } => {
            let c = ft_coefficients(n, t)?;
            let b = match branch {
                0 => c.b0,
                1 => c.b1,
                _ => return Err(FormError::DomainError(format!("branch must be 0 or 1, got {branch}"))),
            };
            Ok(c.a * x * x + b * x + c.c)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FtCoefficients {
    pub a: f64,
    pub b0: f64,
    pub b1: f64,
    pub c: f64,
    /// D = 4nt(8n−7) + 9n² − 20n − 28, the case-tree discriminant.
    pub d: f64,
}

impl FtCoefficients {
    /// b_0² − 4ac, the discriminant of the branch polynomials themselves.
    pub fn branch_discriminant(&self) -> f64 {
        self.b0 * self.b0 - 4.0 * self.a * self.c
    }
}

pub fn ft_coefficients(n: u32, t: f64) -> Result<FtCoefficients> {
    if n < 3 {
        return Err(FormError::DomainError(format!("n must be at least 3, got {n}")));
    }
    let n = n as f64;
    let b0 = -((8.0 * t + 1.0) * n + 2.0);
    Ok(FtCoefficients {
        a: (4.0 * t + 1.0) * n + 1.0,
        b0,
        b1: -b0,
        c: 2.0 * (2.0 * t - 1.0) * n + 8.0,
        d: 4.0 * n * t * (8.0 * n - 7.0) + (9.0 * n * n - 20.0 * n - 28.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s3s3() -> ProductSpace {
        ProductSpace::pair(EinsteinFactor::sphere(3, 1.0), EinsteinFactor::sphere(3, 1.0))
    }

    fn s3h3() -> ProductSpace {
        ProductSpace::pair(EinsteinFactor::space_form(3, 1.0), EinsteinFactor::space_form(3, -1.0))
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1.0)
    }

    #[test]
    fn lemma_examples() {
        let p = s3s3();
        let d = VariationDirection::conformal(0, 1, 3.0);
        assert!(close(lemma_term(LemmaTerm::DeltaDdDr, &d, &p).unwrap(), -9.0));
        assert!(close(lemma_term(LemmaTerm::RcircR, &d, &p).unwrap(), 6.0));
        assert!(close(lemma_term(LemmaTerm::DstarDr, &d, &p).unwrap(), -4.5));
        assert!(close(lemma_term(LemmaTerm::RcheckPrime, &d, &p).unwrap(), -12.0));
    }

    #[test]
    fn rcheck_mixed_forms() {
        let d = VariationDirection::mixed(4.0, 2.0);
        // unit ±1 pair: 2ν_0 − 2ν_1 − 4(n_0 + n_1 − 2)
        assert!(close(lemma_term(LemmaTerm::RcheckPrime, &d, &s3h3()).unwrap(), 8.0 - 4.0 - 16.0));
        // generic form on unit S³×S³ with equal data is antisymmetric, hence zero
        let d = VariationDirection::mixed(4.0, 4.0);
        assert!(close(lemma_term(LemmaTerm::RcheckPrime, &d, &s3s3()).unwrap(), 0.0));
        let p = ProductSpace::pair(EinsteinFactor::abstract_einstein(3, 2.0), EinsteinFactor::sphere(3, 1.0));
        assert!(matches!(
            lemma_term(LemmaTerm::RcheckPrime, &d, &p),
            Err(FormError::UnsupportedCombination(_))
        ));
    }

    #[test]
    fn conformal_examples() {
        let p = s3s3();
        let d = VariationDirection::conformal(0, 1, 3.0);
        assert!(close(hessian_conformal(FunctionalId::Ric, &p, &d).unwrap().value, 39.0));
        assert!(close(hessian_conformal(FunctionalId::S, &p, &d).unwrap().value, 162.0));
        assert!(close(hessian_conformal(FunctionalId::Ft { t: 1.0 }, &p, &d).unwrap().value, 201.0));
        let r = hessian_conformal(FunctionalId::W2, &p, &d).unwrap();
        assert!(!r.defined);
        assert!(matches!(
            hessian_conformal(FunctionalId::R, &p, &d),
            Err(FormError::UnsupportedCombination(_))
        ));
    }

    #[test]
    fn conformal_not_critical() {
        let p = ProductSpace::pair(EinsteinFactor::sphere(3, 1.0), EinsteinFactor::sphere(3, 2.0));
        let d = VariationDirection::conformal(0, 1, 3.0);
        assert!(matches!(hessian_conformal(FunctionalId::Ric, &p, &d), Err(FormError::NotCritical(_))));
    }

    #[test]
    fn lichnerowicz_rejected() {
        let d = VariationDirection::conformal(0, 1, 2.0);
        assert!(matches!(
            hessian_conformal(FunctionalId::Ric, &s3s3(), &d),
            Err(FormError::InvalidSpectralData(_))
        ));
    }

    #[test]
    fn mixed_examples() {
        let d = VariationDirection::mixed(4.0, 4.0);
        assert!(close(hessian_mixed_tt(FunctionalId::Ric, &s3s3(), &d).unwrap().value, 16.0));
        assert!(close(hessian_mixed_tt(FunctionalId::S, &s3s3(), &d).unwrap().value, -96.0));
        let d = VariationDirection::mixed(4.0, 2.0);
        assert!(close(hessian_mixed_tt(FunctionalId::W2, &s3h3(), &d).unwrap().value, 120.0));
    }

    #[test]
    fn opposite_sign_boundary() {
        let lam = 1.5;
        let p = ProductSpace::pair(
            EinsteinFactor::abstract_einstein(4, lam),
            EinsteinFactor::abstract_einstein(4, -lam),
        );
        let strict = FormOptions { strict_bochner: true };
        let d = VariationDirection::mixed(lam, lam);
        assert!(matches!(
            hessian_mixed_tt_with(FunctionalId::Ric, &p, &d, &strict),
            Err(FormError::InvalidSpectralData(_))
        ));
        let d = VariationDirection::MixedTT {
            nu0: 2.0 * lam,
            nu1: 0.0,
            norm_laplacian_sq0: Some(4.0 * lam * lam),
            norm_laplacian_sq1: Some(0.0),
        };
        let v = hessian_mixed_tt_with(FunctionalId::Ric, &p, &d, &strict).unwrap().value;
        assert!(close(v, 2.0 * lam * lam));
    }

    #[test]
    fn factor_tt_contract() {
        let p = ProductSpace::pair(EinsteinFactor::sphere(5, 1.0), EinsteinFactor::hyperbolic(5, -1.0, None));
        let d = VariationDirection::FactorTT { factor: 0, factor_hessian_lower_bound: Some(2.5) };
        assert_eq!(hessian_factor_tt(FunctionalId::Ric, &p, &d).unwrap().value, 2.5);
        let d = VariationDirection::FactorTT { factor: 1, factor_hessian_lower_bound: None };
        assert!(matches!(hessian_factor_tt(FunctionalId::Ric, &p, &d), Err(FormError::MissingFactorData(_))));
        let mut q = p.clone();
        q.factors[1].ric_stable = TriState::No;
        assert!(hessian_factor_tt(FunctionalId::Ric, &q, &d).unwrap().value <= 0.0);
    }

    #[test]
    fn thresholds() {
        assert_eq!(threshold_c(3).unwrap(), f64::NEG_INFINITY);
        assert_eq!(threshold_c(4).unwrap(), f64::NEG_INFINITY);
        assert!(close(threshold_c(5).unwrap(), 0.5));
        assert!(close(threshold_c(6).unwrap(), 2.0 * 7f64.sqrt() / 7.0));
        assert!(threshold_c(2).is_err());
        assert!(close(opposite_threshold(4).unwrap(), 1.2));
        assert!(close(opposite_threshold(5).unwrap(), (7.0 + 97f64.sqrt()) / 12.0));
        assert_eq!(opposite_threshold(3).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn polynomials() {
        assert!(close(stability_polynomial(PolynomialKind::RicWarped { a: 3 }, 1.0).unwrap(), 9.0));
        assert!(stability_polynomial(PolynomialKind::RicWarped { a: 5 }, 0.5).unwrap().abs() < 1e-12);
        let p = stability_polynomial(PolynomialKind::FtOpposite { n: 3, t: 0.0, branch: 0 }, 1.0).unwrap();
        assert!(close(p, 1.0));
        assert!(stability_polynomial(PolynomialKind::RicWarped { a: 5 }, -1.0).is_err());
    }

    #[test]
    fn ft_coefficient_examples() {
        let c = ft_coefficients(3, 0.0).unwrap();
        assert_eq!((c.a, c.b0, c.b1, c.c, c.d), (4.0, -5.0, 5.0, 2.0, -7.0));
        assert!(ft_coefficients(22, -23.0 / 88.0).unwrap().a.abs() < 1e-12);
        assert!(ft_coefficients(4, -0.09).unwrap().d.abs() < 1e-12);
        // the case-tree D differs from the branch discriminant b² − 4ac
        let c = ft_coefficients(3, 1.0 / 3.0).unwrap();
        assert!(close(c.branch_discriminant(), -23.0));
        assert!(close(c.d, 61.0));
    }

    #[test]
    fn factor_spec_defaults() {
        let f: EinsteinFactor = serde_json::from_str(r#"{"kind":"Sphere","dim":5}"#).unwrap();
        assert_eq!(f.einstein_const, 4.0);
        assert_eq!(f.mu_fn, Some(5.0));
        let f: EinsteinFactor = serde_json::from_str(r#"{"kind":"HyperbolicQuotient","dim":5,"mu_fn":10}"#).unwrap();
        assert_eq!(f.einstein_const, -4.0);
        let bad = serde_json::from_str::<EinsteinFactor>(r#"{"kind":"Sphere","dim":5,"mu_fn":3}"#);
        assert!(bad.is_err());
        let bad = serde_json::from_str::<EinsteinFactor>(r#"{"kind":"Sphere","dim":5,"colour":1}"#);
        assert!(bad.is_err());
    }
}
