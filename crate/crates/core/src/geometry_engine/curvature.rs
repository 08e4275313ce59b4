//! Christoffel symbols, Riemann, Ricci and scalar curvature from metric jets,
//! and the Lie-algebra route for left-invariant metrics.
//!
//! Conventions: R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z,
//! R_{ijkl} = g(R(∂_i,∂_j)∂_k, ∂_l), Ric_{jk} = R^i_{ijk}.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::jet::Jet;
use super::GeometryError;

/// Curvature data at one point, in a declared coordinate or frame basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureBundle {
    pub dim: usize,
    pub metric: Vec<f64>,
    pub inverse: Vec<f64>,
    /// All-lower Riemann tensor, index order (i, j, k, l).
    pub riemann: Vec<f64>,
    pub ricci: Vec<f64>,
    pub scalar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantSet {
    pub s: f64,
    pub ric_sq: f64,
    pub riem_sq: f64,
    pub weyl_sq: f64,
}

/// Largest violations of the curvature identities, relative to max |R_{ijkl}|.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryResiduals {
    pub antisymmetry: f64,
    pub pair_symmetry: f64,
    pub bianchi: f64,
    pub ricci_contraction: f64,
}

pub(crate) fn invert(metric: &[f64], n: usize) -> Result<(Vec<f64>, f64), GeometryError> {
    let m = DMatrix::from_row_slice(n, n, metric);
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| GeometryError::DegenerateMetric("metric is not positive definite".into()))?;
    let det = chol.determinant();
    let inv = chol.inverse();
    Ok((inv.as_slice().to_vec(), det))
}

impl CurvatureBundle {
    fn idx4(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        let n = self.dim;
        ((i * n + j) * n + k) * n + l
    }

    pub fn r(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.riemann[self.idx4(i, j, k, l)]
    }

    /// Assemble from the mixed tensor R^l_{ijk}, stored at ((i n + j) n + k) n + l.
    fn from_mixed(metric: Vec<f64>, inverse: Vec<f64>, mixed: &[f64], n: usize) -> Self {
        let mut riemann = vec![0.0; n * n * n * n];
        let mut ricci = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let base = ((i * n + j) * n + k) * n;
                    for l in 0..n {
                        let mut acc = 0.0;
                        for m in 0..n {
                            acc += metric[l * n + m] * mixed[base + m];
                        }
                        riemann[base + l] = acc;
                    }
                }
            }
        }
        for j in 0..n {
            for k in 0..n {
                let mut acc = 0.0;
                for i in 0..n {
                    acc += mixed[((i * n + j) * n + k) * n + i];
                }
                ricci[j * n + k] = acc;
            }
        }
        let mut scalar = 0.0;
        for j in 0..n {
            for k in 0..n {
                scalar += inverse[j * n + k] * ricci[j * n + k];
            }
        }
        CurvatureBundle { dim: n, metric, inverse, riemann, ricci, scalar }
    }

    /// Curvature from the metric components as order-2 jets in the chart coordinates.
    pub fn from_metric_jets(g: &[Jet]) -> Result<Self, GeometryError> {
        let n = (g.len() as f64).sqrt().round() as usize;
        let metric: Vec<f64> = g.iter().map(|j| j.v).collect();
        let (inv, _) = invert(&metric, n)?;
        let dg = |i: usize, j: usize, k: usize| g[i * n + j].g[k];
        let ddg = |i: usize, j: usize, k: usize, l: usize| g[i * n + j].h[k * n + l];
        // first-kind symbols [ij, m] = ½(∂_i g_mj + ∂_j g_mi − ∂_m g_ij) and their derivatives
        let mut gam1 = vec![0.0; n * n * n];
        let mut dgam1 = vec![0.0; n * n * n * n];
        for i in 0..n {
            for j in 0..n {
                for m in 0..n {
                    gam1[(i * n + j) * n + m] = 0.5 * (dg(m, j, i) + dg(m, i, j) - dg(i, j, m));
                    for k in 0..n {
                        dgam1[((k * n + i) * n + j) * n + m] =
                            0.5 * (ddg(m, j, i, k) + ddg(m, i, j, k) - ddg(i, j, m, k));
                    }
                }
            }
        }
        // Γ^l_{ij} = g^{lm}[ij, m]
        let mut gam = vec![0.0; n * n * n];
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let mut acc = 0.0;
                    for m in 0..n {
                        acc += inv[l * n + m] * gam1[(i * n + j) * n + m];
                    }
                    gam[(l * n + i) * n + j] = acc;
                }
            }
        }
        // ∂_k g^{lm} = −g^{la} ∂_k g_{ab} g^{bm}
        let mut dinv = vec![0.0; n * n * n];
        for k in 0..n {
            for l in 0..n {
                for m in 0..n {
                    let mut acc = 0.0;
                    for a in 0..n {
                        for b in 0..n {
                            acc -= inv[l * n + a] * dg(a, b, k) * inv[b * n + m];
                        }
                    }
                    dinv[(k * n + l) * n + m] = acc;
                }
            }
        }
        // ∂_k Γ^l_{ij}
        let mut dgam = vec![0.0; n * n * n * n];
        for k in 0..n {
            for l in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let mut acc = 0.0;
                        for m in 0..n {
                            acc += dinv[(k * n + l) * n + m] * gam1[(i * n + j) * n + m]
                                + inv[l * n + m] * dgam1[((k * n + i) * n + j) * n + m];
                        }
                        dgam[((k * n + l) * n + i) * n + j] = acc;
                    }
                }
            }
        }
        let gm = |l: usize, i: usize, j: usize| gam[(l * n + i) * n + j];
        let dgm = |k: usize, l: usize, i: usize, j: usize| dgam[((k * n + l) * n + i) * n + j];
        let mut mixed = vec![0.0; n * n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut acc = dgm(i, l, j, k) - dgm(j, l, i, k);
                        for m in 0..n {
                            acc += gm(l, i, m) * gm(m, j, k) - gm(l, j, m) * gm(m, i, k);
                        }
                        mixed[((i * n + j) * n + k) * n + l] = acc;
                    }
                }
            }
        }
        Ok(Self::from_mixed(metric, inv, &mixed, n))
    }

    /// Curvature of a left-invariant metric `metric` (frame components) on a
    /// Lie group with structure constants `c[(a n + b) n + d]` = C^d_{ab},
    /// [e_a, e_b] = C^d_{ab} e_d.
    pub fn from_lie_algebra(structure: &[f64], metric: &[f64], n: usize) -> Result<Self, GeometryError> {
        let (inv, _) = invert(metric, n)?;
        let c = |a: usize, b: usize, d: usize| structure[(a * n + b) * n + d];
        // ⟨[e_a, e_b], e_e⟩
        let mut br = vec![0.0; n * n * n];
        for a in 0..n {
            for b in 0..n {
                for e in 0..n {
                    let mut acc = 0.0;
                    for d in 0..n {
                        acc += c(a, b, d) * metric[d * n + e];
                    }
                    br[(a * n + b) * n + e] = acc;
                }
            }
        }
        let bk = |a: usize, b: usize, e: usize| br[(a * n + b) * n + e];
        // Γ^d_{ab}: ∇_{e_a} e_b = Γ^d_{ab} e_d via Koszul
        let mut gam = vec![0.0; n * n * n];
        for a in 0..n {
            for b in 0..n {
                for d in 0..n {
                    let mut acc = 0.0;
                    for e in 0..n {
                        let k = 0.5 * (bk(a, b, e) - bk(b, e, a) + bk(e, a, b));
                        acc += inv[d * n + e] * k;
                    }
                    gam[(d * n + a) * n + b] = acc;
                }
            }
        }
        let gm = |d: usize, a: usize, b: usize| gam[(d * n + a) * n + b];
        let mut mixed = vec![0.0; n * n * n * n];
        for a in 0..n {
            for b in 0..n {
                for cc in 0..n {
                    for f in 0..n {
                        let mut acc = 0.0;
                        for d in 0..n {
                            acc += gm(d, b, cc) * gm(f, a, d) - gm(d, a, cc) * gm(f, b, d) - c(a, b, d) * gm(f, d, cc);
                        }
                        mixed[((a * n + b) * n + cc) * n + f] = acc;
                    }
                }
            }
        }
        Ok(Self::from_mixed(metric.to_vec(), inv, &mixed, n))
    }

    /// Fully contracted square Σ T_{..}T^{..} of a lower 4-tensor with the inverse metric.
    fn norm_sq4(&self, t: &[f64]) -> f64 {
        let n = self.dim;
        let gi = &self.inverse;
        // raise one index at a time
        let mut cur = t.to_vec();
        for slot in 0..4 {
            let mut next = vec![0.0; cur.len()];
            let stride = n.pow(3 - slot as u32);
            for base in 0..cur.len() {
                let idx = (base / stride) % n;
                let rest = base - idx * stride;
                let mut acc = 0.0;
                for m in 0..n {
                    acc += gi[idx * n + m] * cur[rest + m * stride];
                }
                next[base] = acc;
            }
            cur = next;
        }
        cur.iter().zip(t).map(|(a, b)| a * b).sum()
    }

    fn norm_sq2(&self, t: &[f64]) -> f64 {
        let n = self.dim;
        let gi = &self.inverse;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        acc += gi[i * n + k] * gi[j * n + l] * t[i * n + j] * t[k * n + l];
                    }
                }
            }
        }
        acc
    }

    /// Ř_{ij} = R_{iabc} R_j^{abc}, lower indices.
    pub fn rcheck(&self) -> Vec<f64> {
        let n = self.dim;
        let gi = &self.inverse;
        let mut raised = vec![0.0; n * n * n * n];
        // R_j^{abc}: raise the last three slots
        for j in 0..n {
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        let mut acc = 0.0;
                        for p in 0..n {
                            for q in 0..n {
                                for r in 0..n {
                                    acc += gi[a * n + p] * gi[b * n + q] * gi[c * n + r] * self.r(j, p, q, r);
                                }
                            }
                        }
                        raised[self.idx4(j, a, b, c)] = acc;
                    }
                }
            }
        }
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        for c in 0..n {
                            acc += self.r(i, a, b, c) * raised[self.idx4(j, a, b, c)];
                        }
                    }
                }
                out[i * n + j] = acc;
            }
        }
        out
    }

    /// ⟨A, B⟩ for lower 2-tensors using the bundle metric.
    pub fn pair2(&self, a: &[f64], b: &[f64]) -> f64 {
        let n = self.dim;
        let gi = &self.inverse;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        acc += gi[i * n + k] * gi[j * n + l] * a[i * n + j] * b[k * n + l];
                    }
                }
            }
        }
        acc
    }

    pub fn invariants(&self) -> InvariantSet {
        let n = self.dim as f64;
        let riem_sq = self.norm_sq4(&self.riemann);
        let ric_sq = self.norm_sq2(&self.ricci);
        let s = self.scalar;
        let mut weyl_sq = if self.dim >= 3 {
            riem_sq - 4.0 / (n - 2.0) * (ric_sq - s * s / (2.0 * (n - 1.0)))
        } else {
            0.0
        };
        if weyl_sq < 0.0 && weyl_sq > -1e-10 * riem_sq.max(1.0) {
            weyl_sq = 0.0;
        }
        InvariantSet { s, ric_sq, riem_sq, weyl_sq }
    }

    pub fn symmetry_residuals(&self) -> SymmetryResiduals {
        let n = self.dim;
        let scale = self.riemann.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
        let (mut anti, mut pair, mut bianchi) = (0.0f64, 0.0f64, 0.0f64);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        anti = anti.max((self.r(i, j, k, l) + self.r(j, i, k, l)).abs());
                        anti = anti.max((self.r(i, j, k, l) + self.r(i, j, l, k)).abs());
                        pair = pair.max((self.r(i, j, k, l) - self.r(k, l, i, j)).abs());
                        bianchi =
                            bianchi.max((self.r(i, j, k, l) + self.r(j, k, i, l) + self.r(k, i, j, l)).abs());
                    }
                }
            }
        }
        let mut contraction = 0.0f64;
        let rscale = self.ricci.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
        for j in 0..n {
            for k in 0..n {
                let mut acc = 0.0;
                for i in 0..n {
                    for l in 0..n {
                        acc += self.inverse[i * n + l] * self.r(i, j, k, l);
                    }
                }
                contraction = contraction.max((acc - self.ricci[j * n + k]).abs());
            }
        }
        SymmetryResiduals {
            antisymmetry: anti / scale,
            pair_symmetry: pair / scale,
            bianchi: bianchi / scale,
            ricci_contraction: contraction / rscale,
        }
    }
}
