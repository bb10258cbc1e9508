//! Discrete conjugated operators.
//!
//! With `f = e^{λφ} u`, the Laplace operator splits as
//! `∂_t² - (S + A)` with
//!
//! * `S = -Δ - λ²|∇φ|² - V2` (symmetric),
//! * `A = λ(2∇φ·∇ + Δφ)` (skew-symmetric),
//!
//! and `ψ = δ λ φ''`. All stencils are second order and conservative: `Δ`
//! and `∇·φ''∇` are assembled in divergence form on cell faces, and `A` is
//! written as `λ(∇φ·∇ + ∇·(∇φ ·))` so that `W A` is exactly antisymmetric
//! for the node quadrature weights `W`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::{GridSpec, ScalarField, C64};
use crate::numerics::{linear_fit, pairwise_sum, pairwise_sum_by};
use crate::potential::Profile;
use crate::weights::Weight;

/// Minimum fitted order for [`verify_commutator`] to pass.
pub const COMMUTATOR_ORDER_FLOOR: f64 = 1.9;

#[derive(Clone)]
pub struct OperatorBundle {
    pub weight: Weight,
    pub lambda_c: f64,
    pub delta: f64,
    pub grid: GridSpec,
    v2: Option<Profile>,
    node_w: Vec<f64>,
    node_r: Vec<f64>,
    /// Unsigned radial `φ'`.
    node_phi1: Vec<f64>,
    node_phi2: Vec<f64>,
    node_bilap: Vec<f64>,
    node_psi: Vec<f64>,
    node_lap_psi: Vec<f64>,
    node_psi1: Vec<f64>,
    node_v2: Vec<f64>,
    /// Centered difference of `V2` in the radial direction.
    node_dv2: Vec<f64>,
    /// `r^(n-1)` at faces (1 on the line).
    face_k: Vec<f64>,
    /// `r^(n-1) ∂φ` at faces, signed on the line.
    face_drift: Vec<f64>,
    face_phi2: Vec<f64>,
    face_psi: Vec<f64>,
}

impl std::fmt::Debug for OperatorBundle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OperatorBundle")
            .field("weight", &self.weight.kind)
            .field("lambda_c", &self.lambda_c)
            .field("delta", &self.delta)
            .field("grid", &self.grid)
            .field("has_v2", &self.v2.is_some())
            .finish()
    }
}

/// Assembles `S`, `A` and `ψ` on `grid`.
pub fn assemble_bundle(
    w: &Weight,
    lambda_c: f64,
    delta: f64,
    grid: GridSpec,
    v2: Option<Profile>,
) -> Result<OperatorBundle> {
    if !(lambda_c > 0.0) {
        return Err(invalid("lambda_c", format!("{lambda_c} must be positive")));
    }
    if !(delta > 0.0) {
        return Err(invalid("delta", format!("{delta} must be positive")));
    }
    if !w.is_certified_to(grid.r_max) {
        return Err(Error::UncertifiedWeight {
            required: grid.r_max,
            certified: w.certified_range,
        });
    }
    let n = grid.dimension;
    let h = grid.spacing();
    let nodes = grid.num_points;
    let scale = delta * lambda_c;

    struct Node {
        r: f64,
        phi1: f64,
        phi2: f64,
        phi3: f64,
        bilap: f64,
        lap_phi2: f64,
    }
    let node: Vec<Node> = (0..nodes)
        .into_par_iter()
        .map(|i| {
            let r = grid.radius(i);
            let d = w.derivatives(r);
            Node {
                r,
                phi1: d[0],
                phi2: d[1],
                phi3: d[2],
                bilap: w.bilaplacian(r, n),
                lap_phi2: w.laplacian_of_second_derivative(r, n),
            }
        })
        .collect();
    let faces: Vec<(f64, f64, f64)> = (0..nodes - 1)
        .into_par_iter()
        .map(|i| {
            let x = grid.face_coord(i);
            let d = w.derivatives(x.abs());
            let k = grid.face_measure(i);
            (k, k * d[0] * x.signum(), d[1])
        })
        .collect();

    let (node_v2, node_dv2) = match &v2 {
        Some(v) => {
            let vals: Vec<f64> = node.iter().map(|p| v(p.r)).collect();
            let dv: Vec<f64> = (0..nodes)
                .map(|i| {
                    let r = node[i].r;
                    if r == 0.0 {
                        0.0
                    } else {
                        (v(r + h) - v(r - h)) / (2.0 * h)
                    }
                })
                .collect();
            (vals, dv)
        }
        None => (vec![0.0; nodes], vec![0.0; nodes]),
    };

    Ok(OperatorBundle {
        weight: w.clone(),
        lambda_c,
        delta,
        grid,
        v2,
        node_w: grid.weights(),
        node_r: node.iter().map(|p| p.r).collect(),
        node_phi1: node.iter().map(|p| p.phi1).collect(),
        node_phi2: node.iter().map(|p| p.phi2).collect(),
        node_bilap: node.iter().map(|p| p.bilap).collect(),
        node_psi: node.iter().map(|p| scale * p.phi2).collect(),
        node_lap_psi: node.iter().map(|p| scale * p.lap_phi2).collect(),
        node_psi1: node.iter().map(|p| scale * p.phi3).collect(),
        node_v2,
        node_dv2,
        face_k: faces.iter().map(|f| f.0).collect(),
        face_drift: faces.iter().map(|f| f.1).collect(),
        face_phi2: faces.iter().map(|f| f.2).collect(),
        face_psi: faces.iter().map(|f| scale * f.2).collect(),
    })
}

impl OperatorBundle {
    pub fn has_v2(&self) -> bool {
        self.v2.is_some()
    }

    /// Same weight, parameters and `V2` on another grid.
    pub fn on_grid(&self, grid: GridSpec) -> Result<Self> {
        assemble_bundle(&self.weight, self.lambda_c, self.delta, grid, self.v2.clone())
    }

    /// Same weight and grid with different Carleman parameters.
    pub fn with_parameters(&self, lambda_c: f64, delta: f64) -> Result<Self> {
        assemble_bundle(&self.weight, lambda_c, delta, self.grid, self.v2.clone())
    }

    pub fn weights(&self) -> &[f64] {
        &self.node_w
    }
    pub fn radii(&self) -> &[f64] {
        &self.node_r
    }
    /// Unsigned radial `φ'` at the nodes.
    pub fn phi1(&self) -> &[f64] {
        &self.node_phi1
    }
    pub fn phi2(&self) -> &[f64] {
        &self.node_phi2
    }
    pub fn bilap(&self) -> &[f64] {
        &self.node_bilap
    }
    pub fn psi(&self) -> &[f64] {
        &self.node_psi
    }
    /// `Δψ` at the nodes.
    pub fn lap_psi(&self) -> &[f64] {
        &self.node_lap_psi
    }
    /// Radial `ψ'` at the nodes.
    pub fn psi1(&self) -> &[f64] {
        &self.node_psi1
    }
    pub fn v2_values(&self) -> &[f64] {
        &self.node_v2
    }
    pub fn v2_radial_derivative(&self) -> &[f64] {
        &self.node_dv2
    }
    pub fn face_phi2(&self) -> &[f64] {
        &self.face_phi2
    }
    pub fn face_psi(&self) -> &[f64] {
        &self.face_psi
    }

    /// `∇φ D²φ ∇φ = φ''(φ')²` at node `i`.
    pub fn hessian_quadratic(&self, i: usize) -> f64 {
        self.node_phi2[i] * self.node_phi1[i] * self.node_phi1[i]
    }

    fn check(&self, f: &[C64]) -> Result<()> {
        if f.len() != self.grid.num_points {
            return Err(Error::GridMismatch(format!(
                "{} values for {} nodes",
                f.len(),
                self.grid.num_points
            )));
        }
        Ok(())
    }

    /// Divergence-form operator `∇·c∇` with face coefficients `c`.
    pub fn divergence_form(&self, f: &[C64], face_coeff: &[f64]) -> Vec<C64> {
        let n = f.len();
        let h2 = self.grid.spacing() * self.grid.spacing();
        let h = self.grid.spacing();
        (0..n)
            .map(|i| {
                let mut acc = C64::new(0.0, 0.0);
                if i + 1 < n {
                    acc += (f[i + 1] - f[i]) * (self.face_k[i] * face_coeff[i]);
                }
                if i > 0 {
                    acc -= (f[i] - f[i - 1]) * (self.face_k[i - 1] * face_coeff[i - 1]);
                }
                // face_k / (h w) reduces to 1/h² on the line
                acc * (h / (h2 * self.node_w[i]))
            })
            .collect()
    }

    pub fn laplacian(&self, f: &[C64]) -> Vec<C64> {
        let ones = vec![1.0; self.face_k.len()];
        self.divergence_form(f, &ones)
    }

    /// `S f = -Δf - λ²φ'² f - V2 f`.
    pub fn apply_s_raw(&self, f: &[C64]) -> Vec<C64> {
        let lap = self.laplacian(f);
        let l2 = self.lambda_c * self.lambda_c;
        (0..f.len())
            .map(|i| {
                let pot = l2 * self.node_phi1[i] * self.node_phi1[i] + self.node_v2[i];
                -lap[i] - f[i] * pot
            })
            .collect()
    }

    /// `A f = λ(2∇φ·∇f + Δφ f)` in skew form.
    pub fn apply_a_raw(&self, f: &[C64]) -> Vec<C64> {
        let n = f.len();
        (0..n)
            .map(|i| {
                let mut acc = C64::new(0.0, 0.0);
                if i + 1 < n {
                    acc += f[i + 1] * self.face_drift[i];
                }
                if i > 0 {
                    acc -= f[i - 1] * self.face_drift[i - 1];
                }
                acc * (self.lambda_c / self.node_w[i])
            })
            .collect()
    }

    pub fn apply_psi_raw(&self, f: &[C64]) -> Vec<C64> {
        f.iter().zip(&self.node_psi).map(|(v, p)| v * p).collect()
    }

    /// `(SA - AS) f` from the discrete operators.
    pub fn commutator_discrete_raw(&self, f: &[C64]) -> Vec<C64> {
        let sa = self.apply_s_raw(&self.apply_a_raw(f));
        let as_ = self.apply_a_raw(&self.apply_s_raw(f));
        sa.iter().zip(&as_).map(|(a, b)| a - b).collect()
    }

    /// Closed-form commutator
    /// `-λ(4∇·D²φ∇ - 4λ²∇φD²φ∇φ + Δ²φ) + 2λφ'(∂_rV2)₊ - 2λφ'(∂_rV2)₋`.
    pub fn commutator_closed_raw(&self, f: &[C64]) -> Vec<C64> {
        let lam = self.lambda_c;
        let div = self.divergence_form(f, &self.face_phi2);
        (0..f.len())
            .map(|i| {
                let zero_order =
                    -4.0 * lam * lam * self.hessian_quadratic(i) + self.node_bilap[i];
                let mut out = -lam * (div[i] * 4.0 + f[i] * zero_order);
                if self.v2.is_some() {
                    let d = self.node_dv2[i];
                    if d != 0.0 {
                        // ties (d == 0) belong to the positive part
                        let (pos, neg) = if d >= 0.0 { (d, 0.0) } else { (0.0, -d) };
                        let drift = 2.0 * lam * self.node_phi1[i];
                        out += f[i] * (drift * pos - drift * neg);
                    }
                }
                out
            })
            .collect()
    }

    /// Discrete inner product `Σ w f ḡ` with pairwise summation.
    pub fn inner(&self, f: &[C64], g: &[C64]) -> C64 {
        let re = pairwise_sum_by(f.len(), |i| self.node_w[i] * (f[i] * g[i].conj()).re);
        let im = pairwise_sum_by(f.len(), |i| self.node_w[i] * (f[i] * g[i].conj()).im);
        C64::new(re, im)
    }

    pub fn norm_sq(&self, f: &[C64]) -> f64 {
        pairwise_sum_by(f.len(), |i| self.node_w[i] * f[i].norm_sqr())
    }

    /// `Σ w c |f|²` for node coefficients `c`.
    pub fn weighted_mass(&self, f: &[C64], coeff: impl Fn(usize) -> f64) -> f64 {
        pairwise_sum_by(f.len(), |i| self.node_w[i] * coeff(i) * f[i].norm_sqr())
    }

    /// Face quadrature of `∫ c |∇f|²` with face coefficients `c`.
    pub fn gradient_energy(&self, f: &[C64], face_coeff: &[f64]) -> f64 {
        let h = self.grid.spacing();
        pairwise_sum_by(f.len().saturating_sub(1), |i| {
            self.face_k[i] * face_coeff[i] * (f[i + 1] - f[i]).norm_sqr() / h
        })
    }

    /// `∫ |∇f|²`, restricted to faces accepted by `keep(face_radius)`.
    pub fn gradient_energy_where(&self, f: &[C64], keep: impl Fn(f64) -> bool) -> f64 {
        let h = self.grid.spacing();
        pairwise_sum_by(f.len().saturating_sub(1), |i| {
            if keep(self.grid.face_coord(i).abs()) {
                self.face_k[i] * (f[i + 1] - f[i]).norm_sqr() / h
            } else {
                0.0
            }
        })
    }

    /// `∇f` (radial component) at faces, `(f[i+1] - f[i]) / h`.
    pub fn face_gradient(&self, f: &[C64]) -> Vec<C64> {
        let h = self.grid.spacing();
        f.windows(2).map(|w| (w[1] - w[0]) / h).collect()
    }

    /// Signed `∂φ` on the line, radial `φ'` otherwise, at node `i`.
    pub fn phi_gradient(&self, i: usize) -> f64 {
        if self.grid.is_radial() {
            self.node_phi1[i]
        } else {
            self.node_phi1[i] * self.grid.coord(i).signum()
        }
    }

    pub fn apply_s(&self, f: &ScalarField) -> Result<ScalarField> {
        self.grid.ensure_same(&f.grid)?;
        self.check(&f.values)?;
        Ok(ScalarField {
            grid: self.grid,
            values: self.apply_s_raw(&f.values),
        })
    }

    pub fn apply_a(&self, f: &ScalarField) -> Result<ScalarField> {
        self.grid.ensure_same(&f.grid)?;
        self.check(&f.values)?;
        Ok(ScalarField {
            grid: self.grid,
            values: self.apply_a_raw(&f.values),
        })
    }
}

/// Applies the closed-form commutator to `f`.
pub fn commutator_closed_apply(b: &OperatorBundle, f: &ScalarField) -> Result<ScalarField> {
    b.grid.ensure_same(&f.grid)?;
    b.check(&f.values)?;
    Ok(ScalarField {
        grid: b.grid,
        values: b.commutator_closed_raw(&f.values),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceLevel {
    pub h: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub levels: Vec<ConvergenceLevel>,
    /// Least-squares slope of `log e` against `log h`; absent when every
    /// residual vanishes.
    pub fitted_order: Option<f64>,
    pub pass: bool,
}

/// Fits a convergence order to `(h, residual)` pairs.
pub fn fit_order(levels: &[ConvergenceLevel], floor: f64) -> (Option<f64>, bool) {
    let usable: Vec<&ConvergenceLevel> = levels.iter().filter(|l| l.residual > 0.0).collect();
    if usable.is_empty() {
        return (None, true);
    }
    if usable.len() < 2 {
        return (None, false);
    }
    let xs: Vec<f64> = usable.iter().map(|l| l.h.ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|l| l.residual.ln()).collect();
    let (slope, _, _) = linear_fit(&xs, &ys);
    (Some(slope), slope >= floor)
}

/// Refinement study of `(SA - AS) f - [S, A]_closed f`.
///
/// `refinements` is the number of grid levels; each level halves `h`,
/// starting from `b.grid`. `f` is resampled at every level.
pub fn verify_commutator(
    b: &OperatorBundle,
    f: &(dyn Fn(f64) -> C64 + Sync),
    refinements: usize,
) -> Result<ConvergenceReport> {
    if refinements < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            got: refinements,
        });
    }
    ScalarField::from_fn(b.grid, f).ensure_interior_supported()?;
    let mut grids = vec![b.grid];
    for _ in 1..refinements {
        let last = *grids.last().expect("non-empty");
        grids.push(last.refined());
    }
    let levels = grids
        .par_iter()
        .map(|&g| {
            let bundle = b.on_grid(g)?;
            let field = ScalarField::from_fn(g, f);
            let discrete = bundle.commutator_discrete_raw(&field.values);
            let closed = bundle.commutator_closed_raw(&field.values);
            let interior = |i: usize| g.is_interior(i);
            let err = pairwise_sum_by(g.num_points, |i| {
                if interior(i) {
                    bundle.node_w[i] * (discrete[i] - closed[i]).norm_sqr()
                } else {
                    0.0
                }
            });
            let norm = pairwise_sum_by(g.num_points, |i| {
                if interior(i) {
                    bundle.node_w[i] * field.values[i].norm_sqr()
                } else {
                    0.0
                }
            });
            let residual = if norm == 0.0 { 0.0 } else { (err / norm).sqrt() };
            Ok(ConvergenceLevel {
                h: g.spacing(),
                residual,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (fitted_order, pass) = fit_order(&levels, COMMUTATOR_ORDER_FLOOR);
    Ok(ConvergenceReport {
        levels,
        fitted_order,
        pass,
    })
}

/// Terms of the integration-by-parts identity for `Re∫(S+A)f ψ f̄`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IbpTerms {
    pub lhs: f64,
    pub grad_term: f64,
    pub lap_psi_term: f64,
    pub potential_term: f64,
    pub drift_term: f64,
    pub v2_term: f64,
}

impl IbpTerms {
    pub fn rhs(&self) -> f64 {
        self.grad_term + self.lap_psi_term + self.potential_term + self.drift_term + self.v2_term
    }

    pub fn scale(&self) -> f64 {
        pairwise_sum(&[
            self.grad_term.abs(),
            self.lap_psi_term.abs(),
            self.potential_term.abs(),
            self.drift_term.abs(),
            self.v2_term.abs(),
        ])
    }
}

/// Both sides of the identity
/// `Re∫(S+A)f ψf̄ = ∫ψ|∇f|² - ½∫Δψ|f|² - λ²∫|∇φ|²ψ|f|² - λ∫|f|²∇φ·∇ψ`
/// (plus `-∫V2 ψ|f|²` when `V2` is present).
pub fn ibp_terms(b: &OperatorBundle, f: &ScalarField) -> Result<IbpTerms> {
    b.grid.ensure_same(&f.grid)?;
    let v = &f.values;
    let s = b.apply_s_raw(v);
    let a = b.apply_a_raw(v);
    let sa: Vec<C64> = s.iter().zip(&a).map(|(x, y)| x + y).collect();
    let lhs = b.inner(&sa, &b.apply_psi_raw(v)).re;
    let lam = b.lambda_c;
    Ok(IbpTerms {
        lhs,
        grad_term: b.gradient_energy(v, &b.face_psi),
        lap_psi_term: -0.5 * b.weighted_mass(v, |i| b.node_lap_psi[i]),
        potential_term: -lam
            * lam
            * b.weighted_mass(v, |i| b.node_phi1[i] * b.node_phi1[i] * b.node_psi[i]),
        drift_term: -lam * b.weighted_mass(v, |i| b.node_phi1[i] * b.node_psi1[i]),
        v2_term: -b.weighted_mass(v, |i| b.node_v2[i] * b.node_psi[i]),
    })
}

/// Normalized mismatch of the integration-by-parts identity.
pub fn verify_ibp_identity(b: &OperatorBundle, f: &ScalarField) -> Result<f64> {
    f.ensure_interior_supported()?;
    let t = ibp_terms(b, f)?;
    let scale = t.scale();
    if scale == 0.0 {
        return Ok((t.lhs - t.rhs()).abs());
    }
    Ok((t.lhs - t.rhs()).abs() / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::build_power_weight;
    use std::sync::Arc;

    fn log_weight(r: f64) -> Weight {
        let mut w = Weight::log_linear().unwrap();
        assert!(w.certify(r.max(2.0), 1e-3 * r.max(2.0)).unwrap().passed);
        w
    }

    fn bump(c: f64, s: f64) -> impl Fn(f64) -> C64 + Sync {
        move |x: f64| {
            let z = (x - c) / s;
            C64::new((-0.5 * z * z).exp(), 0.3 * (-0.5 * z * z).exp() * z)
        }
    }

    fn dense(b: &OperatorBundle, op: impl Fn(&[C64]) -> Vec<C64>) -> Vec<Vec<C64>> {
        let n = b.grid.num_points;
        (0..n)
            .map(|j| {
                let mut e = vec![C64::new(0.0, 0.0); n];
                e[j] = C64::new(1.0, 0.0);
                op(&e)
            })
            .collect()
    }

    /// Dense transpose comparison of `W S` and `W A` on a 64-point grid.
    #[test]
    fn dense_symmetry_and_skew_symmetry() {
        for grid in [GridSpec::line(4.0, 64).unwrap(), GridSpec::new(3, 4.0, 64).unwrap()] {
            let w = log_weight(4.0);
            let v2: Profile = Arc::new(|r: f64| 1.0 / (1.0 + r * r));
            let b = assemble_bundle(&w, 1.0, 0.01, grid, Some(v2)).unwrap();
            let s_cols = dense(&b, |f| b.apply_s_raw(f));
            let a_cols = dense(&b, |f| b.apply_a_raw(f));
            let wts = b.weights();
            let n = grid.num_points;
            for i in 0..n {
                for j in 0..n {
                    // (W M)_{ij} = w_i M_{ij}; column j holds M_{·j}
                    let ws_ij = wts[i] * s_cols[j][i];
                    let ws_ji = wts[j] * s_cols[i][j];
                    assert!((ws_ij - ws_ji).norm() <= 1e-10 * (1.0 + ws_ij.norm()));
                    let wa_ij = wts[i] * a_cols[j][i];
                    let wa_ji = wts[j] * a_cols[i][j];
                    assert!((wa_ij + wa_ji).norm() <= 1e-10 * (1.0 + wa_ij.norm()));
                }
            }
        }
    }

    #[test]
    fn zero_field_maps_to_zero() {
        let w = log_weight(5.0);
        let g = GridSpec::line(5.0, 101).unwrap();
        let b = assemble_bundle(&w, 1.0, 0.01, g, None).unwrap();
        let z = ScalarField::zeros(g);
        assert!(b.apply_s(&z).unwrap().values.iter().all(|v| v.norm() == 0.0));
        assert!(b.apply_a(&z).unwrap().values.iter().all(|v| v.norm() == 0.0));
        assert!(commutator_closed_apply(&b, &z).unwrap().values.iter().all(|v| v.norm() == 0.0));
        assert_eq!(verify_ibp_identity(&b, &z).unwrap(), 0.0);
    }

    #[test]
    fn psi_is_delta_lambda_phi2() {
        let w = log_weight(6.0);
        let g = GridSpec::new(3, 6.0, 301).unwrap();
        let b = assemble_bundle(&w, 2.0, 0.01, g, None).unwrap();
        for i in 0..g.num_points {
            let r = g.radius(i);
            assert!((b.psi()[i] - 0.02 * w.eval(r).unwrap().phi2).abs() < 1e-15);
        }
    }

    #[test]
    fn assembly_preconditions() {
        let g = GridSpec::line(5.0, 101).unwrap();
        let raw = Weight::log_linear().unwrap();
        assert!(matches!(
            assemble_bundle(&raw, 1.0, 0.01, g, None),
            Err(Error::UncertifiedWeight { .. })
        ));
        let w = log_weight(5.0);
        assert!(assemble_bundle(&w, 0.0, 0.01, g, None).is_err());
        assert!(assemble_bundle(&w, 1.0, -1.0, g, None).is_err());
    }

    #[test]
    fn skew_part_has_zero_real_pairing() {
        let w = log_weight(6.0);
        let g = GridSpec::line(6.0, 301).unwrap();
        let b = assemble_bundle(&w, 3.0, 0.01, g, None).unwrap();
        let f = ScalarField::from_fn(g, bump(0.7, 0.6));
        let af = b.apply_a_raw(&f.values);
        let pairing = b.inner(&af, &f.values).re;
        assert!(pairing.abs() <= 1e-10 * b.norm_sq(&f.values));
    }

    #[test]
    fn line_commutator_matches_symbolic_formula() {
        // -λ(4(φ''f')' - 4λ²φ''φ'²f + φ''''f) for a Gaussian, derivatives by hand.
        let w = log_weight(8.0);
        let lam = 1.5;
        let g = GridSpec::line(8.0, 8001).unwrap();
        let b = assemble_bundle(&w, lam, 0.01, g, None).unwrap();
        let f = |x: f64| (-(x - 1.2) * (x - 1.2)).exp();
        let f1 = |x: f64| -2.0 * (x - 1.2) * f(x);
        let f2 = |x: f64| (4.0 * (x - 1.2) * (x - 1.2) - 2.0) * f(x);
        let field = ScalarField::from_fn(g, |x| C64::new(f(x), 0.0));
        let closed = commutator_closed_apply(&b, &field).unwrap();
        for k in 0..10 {
            let i = 3000 + 200 * k;
            let x = g.coord(i);
            let j = w.eval(x.abs()).unwrap();
            let s = x.signum();
            let phi3_signed = j.phi3 * s;
            let expected = -lam
                * (4.0 * (phi3_signed * f1(x) + j.phi2 * f2(x))
                    - 4.0 * lam * lam * j.phi2 * j.phi1 * j.phi1 * f(x)
                    + j.phi4 * f(x));
            assert!(
                (closed.values[i].re - expected).abs() < 1e-5 * (1.0 + expected.abs()),
                "x = {x}: {} vs {expected}",
                closed.values[i].re
            );
        }
    }

    #[test]
    fn commutator_converges_at_second_order() {
        let w = log_weight(10.0);
        let g = GridSpec::with_spacing(1, 10.0, 0.1).unwrap();
        let b = assemble_bundle(&w, 1.0, 0.01, g, None).unwrap();
        let rep = verify_commutator(&b, &bump(3.5, 0.5), 4).unwrap();
        let order = rep.fitted_order.unwrap();
        assert!(rep.pass && (order - 2.0).abs() < 0.1, "{rep:?}");
    }

    #[test]
    fn commutator_order_drops_across_the_junction() {
        // the weight is only C4 at r = 1
        let w = log_weight(10.0);
        let g = GridSpec::with_spacing(1, 10.0, 0.1).unwrap();
        let b = assemble_bundle(&w, 1.0, 0.01, g, None).unwrap();
        let rep = verify_commutator(&b, &bump(0.8, 0.9), 4).unwrap();
        let order = rep.fitted_order.unwrap();
        assert!(!rep.pass && (order - 1.5).abs() < 0.15, "{rep:?}");
    }

    #[test]
    fn commutator_check_on_power_weight() {
        let mut w = build_power_weight(0.0).unwrap();
        assert!(w.certify(10.0, 1e-2).unwrap().passed);
        let g = GridSpec::with_spacing(1, 10.0, 0.1).unwrap();
        let b = assemble_bundle(&w, 1.0, 0.01, g, None).unwrap();
        let rep = verify_commutator(&b, &bump(-4.0, 0.5), 4).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn radial_commutator_with_bump_away_from_origin() {
        let w = log_weight(8.0);
        let g = GridSpec::with_spacing(3, 8.0, 0.1).unwrap();
        let b = assemble_bundle(&w, 1.0, 0.01, g, None).unwrap();
        let rep = verify_commutator(&b, &bump(3.0, 0.5), 4).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn commutator_of_zero_field_is_exact() {
        let w = log_weight(5.0);
        let g = GridSpec::with_spacing(1, 5.0, 0.1).unwrap();
        let b = assemble_bundle(&w, 1.0, 0.01, g, None).unwrap();
        let rep = verify_commutator(&b, &|_| C64::new(0.0, 0.0), 3).unwrap();
        assert!(rep.levels.iter().all(|l| l.residual == 0.0));
        assert!(rep.pass && rep.fitted_order.is_none());
        assert!(verify_commutator(&b, &|_| C64::new(0.0, 0.0), 2).is_err());
    }

    #[test]
    fn boundary_supported_field_is_rejected() {
        let w = log_weight(5.0);
        let g = GridSpec::with_spacing(1, 5.0, 0.1).unwrap();
        let b = assemble_bundle(&w, 1.0, 0.01, g, None).unwrap();
        assert!(matches!(
            verify_commutator(&b, &|_| C64::new(1.0, 0.0), 3),
            Err(Error::BoundarySupported { .. })
        ));
    }

    #[test]
    fn increasing_v2_adds_positive_drift_term_only() {
        let w = log_weight(6.0);
        let g = GridSpec::line(6.0, 601).unwrap();
        let v2: Profile = Arc::new(|r: f64| r.atan());
        let plain = assemble_bundle(&w, 1.0, 0.01, g, None).unwrap();
        let with = assemble_bundle(&w, 1.0, 0.01, g, Some(v2)).unwrap();
        let f = ScalarField::from_fn(g, bump(0.5, 0.7));
        let a = plain.commutator_closed_raw(&f.values);
        let c = with.commutator_closed_raw(&f.values);
        for i in 0..g.num_points {
            let d = with.v2_radial_derivative()[i];
            assert!(d >= 0.0);
            let expected = a[i] + f.values[i] * (2.0 * with.phi1()[i] * d);
            assert!((c[i] - expected).norm() <= 1e-12 * (1.0 + expected.norm()));
        }
    }

    #[test]
    fn zero_v2_reduces_bitwise() {
        let w = log_weight(6.0);
        let g = GridSpec::line(6.0, 601).unwrap();
        let zero: Profile = Arc::new(|_| 0.0);
        let plain = assemble_bundle(&w, 2.0, 0.01, g, None).unwrap();
        let with = assemble_bundle(&w, 2.0, 0.01, g, Some(zero)).unwrap();
        let f = ScalarField::from_fn(g, bump(0.5, 0.7));
        assert_eq!(plain.commutator_closed_raw(&f.values), with.commutator_closed_raw(&f.values));
    }

    #[test]
    fn ibp_identity_residual_is_second_order() {
        for (dim, center) in [(1usize, 0.9), (2, 2.0)] {
            let w = log_weight(8.0);
            let mut res = Vec::new();
            for h in [0.04, 0.02, 0.01] {
                let g = GridSpec::with_spacing(dim, 8.0, h).unwrap();
                let b = assemble_bundle(&w, 1.0, 0.05, g, None).unwrap();
                let f = ScalarField::from_fn(g, bump(center, 0.6));
                let r = verify_ibp_identity(&b, &f).unwrap();
                assert!(r <= 10.0 * h * h, "dim {dim}, h {h}: {r}");
                res.push(r);
            }
            let order = (res[0] / res[2]).log2() / 2.0;
            assert!(order > 1.8, "dim {dim}: {res:?}");
        }
    }
}
