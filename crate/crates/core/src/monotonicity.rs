//! The monotonicity ledger and its supporting identities.
//!
//! For `P f = (∂_t² - (S+A)) f` the pairing
//! `p(t) = ⟨Af, ∂_t f⟩ + ⟨ψf, ∂_t f⟩` satisfies
//!
//! ```text
//! ½⟨[S,A]f,f⟩ + ⟨ψ∂_tf,∂_tf⟩ + ‖Af‖² + Re⟨ψf,(S+A)f⟩
//!     = -Re⟨Af,Pf⟩ - Re⟨ψf,Pf⟩ + d/dt Re p(t)
//! ```
//!
//! and integrating in time with two Cauchy-Schwarz steps gives the ledger
//! inequality evaluated by [`evaluate_ledger`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::{GridSpec, SpaceTimeField, C64};
use crate::numerics::pairwise_sum_by;
use crate::operators::OperatorBundle;

/// Safety factor in `tol_ledger = 100 (h² + k²) max(1, E)`.
pub const LEDGER_TOL_FACTOR: f64 = 100.0;
/// Safety factor in the identity tolerance `10 (h² + k²)`.
pub const IDENTITY_TOL_FACTOR: f64 = 10.0;
/// Scale `ε` in the `(1 + log(R/ε))² / R` chain weight.
pub const CHAIN_EPSILON: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CauchySchwarzCheck {
    /// `|∫⟨Af, Pf⟩ dt|`
    pub af_pairing: f64,
    /// `½∫∫|Af|² + ½∫∫|Pf|²`
    pub af_bound: f64,
    /// `|∫⟨ψf, Pf⟩ dt|`
    pub psi_pairing: f64,
    /// `½∫∫ψ²|f|² + ½∫∫|Pf|²`
    pub psi_bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarlemanLedger {
    /// `½∫∫⟨[S,A]f, f⟩`
    pub commutator_term: f64,
    /// `∫∫ψ|∂_t f|²`
    pub psi_dt_term: f64,
    /// `½∫∫|Af|²`
    pub af_term: f64,
    /// `Re∫∫(S+A)f ψf̄`
    pub cross_term: f64,
    /// `∫∫|(∂_t² - (S+A))f|²`
    pub rhs_source: f64,
    /// `½∫∫ψ²|f|²`
    pub psi_sq_term: f64,
    /// Larger of the two readings below; used in `rhs`.
    pub boundary_term: f64,
    /// `|p(T₁)| - |p(T₀)|`
    pub boundary_abs_difference: f64,
    /// `|p(T₁) - p(T₀)|`
    pub boundary_difference_abs: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    /// `∫∫(|f|² + |∂_t f|² + |∇f|²)`
    pub field_energy: f64,
    pub tol_ledger: f64,
    pub cauchy_schwarz: CauchySchwarzCheck,
    pub h: f64,
    pub k: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, Default)]
struct SliceTerms {
    commutator: f64,
    psi_dt: f64,
    af: f64,
    cross: f64,
    source: f64,
    psi_sq: f64,
    pair_a: f64,
    pair_psi: f64,
    energy: f64,
    pairing: C64,
}

fn ensure_compatible(f: &SpaceTimeField, b: &OperatorBundle, min_slices: usize) -> Result<()> {
    if f.grid != b.grid {
        return Err(Error::GridMismatch(format!("{:?} vs {:?}", f.grid, b.grid)));
    }
    if f.num_times() < min_slices {
        return Err(Error::TooFewSamples {
            needed: min_slices,
            got: f.num_times(),
        });
    }
    Ok(())
}

fn add(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// `(∂_t² - (S+A)) f` at slice `k` from centered differences.
fn source_at(f: &SpaceTimeField, b: &OperatorBundle, k: usize) -> Vec<C64> {
    let v = &f.values[k];
    let sa = add(&b.apply_s_raw(v), &b.apply_a_raw(v));
    f.dtt_at(k).iter().zip(&sa).map(|(x, y)| x - y).collect()
}

fn slice_terms(b: &OperatorBundle, f: &[C64], ft: &[C64], src: &[C64]) -> SliceTerms {
    let s = b.apply_s_raw(f);
    let a = b.apply_a_raw(f);
    let psi_f = b.apply_psi_raw(f);
    let sa = add(&s, &a);
    let psi = b.psi();
    let ones = vec![1.0; f.len().saturating_sub(1)];
    SliceTerms {
        commutator: b.inner(&a, &s).re,
        psi_dt: b.weighted_mass(ft, |i| psi[i]),
        af: 0.5 * b.norm_sq(&a),
        cross: b.inner(&sa, &psi_f).re,
        source: b.norm_sq(src),
        psi_sq: 0.5 * b.weighted_mass(f, |i| psi[i] * psi[i]),
        pair_a: b.inner(&a, src).re,
        pair_psi: b.inner(&psi_f, src).re,
        energy: b.norm_sq(f) + b.norm_sq(ft) + b.gradient_energy(f, &ones),
        pairing: b.inner(&a, ft) + b.inner(&psi_f, ft),
    }
}

fn trapezoid(dt: f64, n: usize, value: impl Fn(usize) -> f64) -> f64 {
    dt * pairwise_sum_by(n, |k| {
        let w = if k == 0 || k + 1 == n { 0.5 } else { 1.0 };
        w * value(k)
    })
}

/// Evaluates every term of the ledger inequality for `f`.
///
/// Without an explicit `source`, `(∂_t² - (S+A))f` is formed from centered
/// time differences of `f`.
pub fn evaluate_ledger(
    f: &SpaceTimeField,
    b: &OperatorBundle,
    source: Option<&SpaceTimeField>,
) -> Result<CarlemanLedger> {
    ensure_compatible(f, b, 5)?;
    f.ensure_interior_supported()?;
    if let Some(s) = source {
        if s.grid != f.grid || s.num_times() != f.num_times() || s.dt != f.dt || s.t0 != f.t0 {
            return Err(Error::GridMismatch("source and field sample different grids".into()));
        }
    }
    let m = f.num_times();
    let slices: Vec<SliceTerms> = (0..m)
        .into_par_iter()
        .map(|k| {
            let ft = f.dt_at(k);
            let src = match source {
                Some(s) => s.values[k].clone(),
                None => source_at(f, b, k),
            };
            slice_terms(b, &f.values[k], &ft, &src)
        })
        .collect();
    let dt = f.dt;
    let int = |g: fn(&SliceTerms) -> f64| trapezoid(dt, m, |k| g(&slices[k]));

    let commutator_term = int(|s| s.commutator);
    let psi_dt_term = int(|s| s.psi_dt);
    let af_term = int(|s| s.af);
    let cross_term = int(|s| s.cross);
    let rhs_source = int(|s| s.source);
    let psi_sq_term = int(|s| s.psi_sq);
    let field_energy = int(|s| s.energy);
    let pair_a = int(|s| s.pair_a);
    let pair_psi = int(|s| s.pair_psi);

    let p0 = slices[0].pairing;
    let p1 = slices[m - 1].pairing;
    let boundary_abs_difference = p1.norm() - p0.norm();
    let boundary_difference_abs = (p1 - p0).norm();
    let boundary_term = boundary_abs_difference.max(boundary_difference_abs);

    let lhs = commutator_term + psi_dt_term + af_term + cross_term;
    let rhs = rhs_source + psi_sq_term + boundary_term;
    let margin = rhs - lhs;
    let h = b.grid.spacing();
    let tol_ledger = LEDGER_TOL_FACTOR * (h * h + dt * dt) * field_energy.max(1.0);

    let cs_tol = tol_ledger;
    let af_bound = af_term + 0.5 * rhs_source;
    let psi_bound = psi_sq_term + 0.5 * rhs_source;
    let cauchy_schwarz = CauchySchwarzCheck {
        af_pairing: pair_a.abs(),
        af_bound,
        psi_pairing: pair_psi.abs(),
        psi_bound,
        holds: pair_a.abs() <= af_bound + cs_tol && pair_psi.abs() <= psi_bound + cs_tol,
    };

    Ok(CarlemanLedger {
        commutator_term,
        psi_dt_term,
        af_term,
        cross_term,
        rhs_source,
        psi_sq_term,
        boundary_term,
        boundary_abs_difference,
        boundary_difference_abs,
        lhs,
        rhs,
        margin,
        field_energy,
        tol_ledger,
        cauchy_schwarz,
        h,
        k: dt,
        pass: margin >= -tol_ledger && cauchy_schwarz.holds,
    })
}

/// Per-time terms of the pointwise identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentitySample {
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub samples: Vec<IdentitySample>,
    /// `max |lhs - rhs|` over interior times divided by the largest sum of
    /// absolute terms.
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Checks the pointwise-in-time identity behind the ledger at every
/// interior time and returns the normalized mismatch.
pub fn verify_identity_eq1(f: &SpaceTimeField, b: &OperatorBundle) -> Result<f64> {
    Ok(identity_report(f, b)?.residual)
}

pub fn identity_report(f: &SpaceTimeField, b: &OperatorBundle) -> Result<IdentityReport> {
    ensure_compatible(f, b, 7)?;
    f.ensure_interior_supported()?;
    let m = f.num_times();
    // pairings are needed at k ± 1 with centered ∂_t, so k runs over 2..m-3
    let pairing: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|k| {
            if k == 0 || k + 1 == m {
                return 0.0;
            }
            let v = &f.values[k];
            let ft = f.dt_at(k);
            (b.inner(&b.apply_a_raw(v), &ft) + b.inner(&b.apply_psi_raw(v), &ft)).re
        })
        .collect();
    let rows: Vec<(IdentitySample, f64)> = (2..m - 2)
        .into_par_iter()
        .map(|k| {
            let v = &f.values[k];
            let ft = f.dt_at(k);
            let src = source_at(f, b, k);
            let s = b.apply_s_raw(v);
            let a = b.apply_a_raw(v);
            let psi_f = b.apply_psi_raw(v);
            let sa = add(&s, &a);
            let psi = b.psi();
            let lhs_terms = [
                b.inner(&a, &s).re,
                b.weighted_mass(&ft, |i| psi[i]),
                b.norm_sq(&a),
                b.inner(&psi_f, &sa).re,
            ];
            let rhs_terms = [
                -b.inner(&a, &src).re,
                -b.inner(&psi_f, &src).re,
                (pairing[k + 1] - pairing[k - 1]) / (2.0 * f.dt),
            ];
            let lhs: f64 = lhs_terms.iter().sum();
            let rhs: f64 = rhs_terms.iter().sum();
            let scale: f64 = lhs_terms.iter().chain(&rhs_terms).map(|x| x.abs()).sum();
            (IdentitySample { t: f.time(k), lhs, rhs }, scale)
        })
        .collect();
    let scale = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let worst = rows
        .iter()
        .map(|r| (r.0.lhs - r.0.rhs).abs())
        .fold(0.0, f64::max);
    let residual = if scale == 0.0 { worst } else { worst / scale };
    let h = b.grid.spacing();
    let tolerance = IDENTITY_TOL_FACTOR * (h * h + f.dt * f.dt);
    Ok(IdentityReport {
        samples: rows.into_iter().map(|r| r.0).collect(),
        residual,
        tolerance,
        pass: residual <= tolerance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HTrace {
    pub times: Vec<f64>,
    #[serde(rename = "H")]
    pub h: Vec<f64>,
    pub hdot_analytic: Vec<f64>,
    pub hdot_numeric: Vec<f64>,
}

impl HTrace {
    /// `max |Ḣ_analytic - Ḣ_numeric|` over slices `2..M-3`, relative to the
    /// largest `|Ḣ_analytic|` there (absolute when that vanishes). The end
    /// slices mix one-sided and centered stencils and only agree to first
    /// order.
    pub fn mismatch(&self) -> f64 {
        let m = self.hdot_analytic.len();
        let range = if m >= 5 { 2..m - 2 } else { 0..m };
        let worst = range
            .clone()
            .map(|k| (self.hdot_analytic[k] - self.hdot_numeric[k]).abs())
            .fold(0.0, f64::max);
        let scale = range.map(|k| self.hdot_analytic[k].abs()).fold(0.0, f64::max);
        if scale == 0.0 {
            worst
        } else {
            worst / scale
        }
    }
}

/// `H(t) = ⟨∂_tf,∂_tf⟩ - ⟨Sf,f⟩ + ⟨ψf,f⟩` and both versions of its time
/// derivative.
pub fn h_trace(f: &SpaceTimeField, b: &OperatorBundle) -> Result<HTrace> {
    ensure_compatible(f, b, 4)?;
    let m = f.num_times();
    let rows: Vec<(f64, f64)> = (0..m)
        .into_par_iter()
        .map(|k| {
            let v = &f.values[k];
            let ft = f.dt_at(k);
            let src = source_at(f, b, k);
            let psi_f = b.apply_psi_raw(v);
            let h = b.norm_sq(&ft) - b.inner(&b.apply_s_raw(v), v).re + b.inner(&psi_f, v).re;
            let hdot = 2.0 * b.inner(&b.apply_a_raw(v), &ft).re
                + 2.0 * b.inner(&psi_f, &ft).re
                + 2.0 * b.inner(&src, &ft).re;
            (h, hdot)
        })
        .collect();
    let h: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let dt = f.dt;
    let hdot_numeric = (0..m)
        .map(|k| {
            if k == 0 {
                (-3.0 * h[0] + 4.0 * h[1] - h[2]) / (2.0 * dt)
            } else if k + 1 == m {
                (3.0 * h[m - 1] - 4.0 * h[m - 2] + h[m - 3]) / (2.0 * dt)
            } else {
                (h[k + 1] - h[k - 1]) / (2.0 * dt)
            }
        })
        .collect();
    Ok(HTrace {
        times: f.times(),
        h,
        hdot_analytic: rows.iter().map(|r| r.1).collect(),
        hdot_numeric,
    })
}

/// Radial cutoff `χ_R`: 1 on `r <= R`, 0 on `r >= 2R`, quintic smoothstep
/// between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffBounds {
    /// `max |∇χ_R| · R / 2`; at most 1 when the gradient bound holds.
    pub gradient_ratio: f64,
    /// `max |Δχ_R| · R² / 2`; at most 1 when the Laplacian bound holds.
    pub laplacian_ratio: f64,
    pub gradient_ok: bool,
    pub laplacian_ok: bool,
    pub identity_inside: bool,
    pub support_ok: bool,
    pub passed: bool,
}

impl CutoffSpec {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(invalid("radius", format!("{radius} must be positive")));
        }
        Ok(Self { radius })
    }

    fn tau(&self, r: f64) -> Option<f64> {
        let t = (r - self.radius) / self.radius;
        (t > 0.0 && t < 1.0).then_some(t)
    }

    pub fn value(&self, r: f64) -> f64 {
        let r = r.abs();
        if r <= self.radius {
            return 1.0;
        }
        match self.tau(r) {
            Some(t) => 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t),
            None => 0.0,
        }
    }

    /// Radial derivative `χ_R'`.
    pub fn derivative(&self, r: f64) -> f64 {
        match self.tau(r.abs()) {
            Some(t) => -30.0 * t * t * (1.0 - t) * (1.0 - t) / self.radius,
            None => 0.0,
        }
    }

    pub fn second_derivative(&self, r: f64) -> f64 {
        match self.tau(r.abs()) {
            Some(t) => -60.0 * t * (1.0 - t) * (1.0 - 2.0 * t) / (self.radius * self.radius),
            None => 0.0,
        }
    }

    pub fn laplacian(&self, r: f64, n: usize) -> f64 {
        let r = r.abs();
        if r == 0.0 {
            return 0.0;
        }
        self.second_derivative(r) + (n as f64 - 1.0) * self.derivative(r) / r
    }

    /// Checks the four defining properties at every node of `grid`.
    pub fn check_bounds(&self, grid: &GridSpec) -> CutoffBounds {
        let big_r = self.radius;
        let mut grad: f64 = 0.0;
        let mut lap: f64 = 0.0;
        let mut inside = true;
        let mut support = true;
        for i in 0..grid.num_points {
            let r = grid.radius(i);
            grad = grad.max(self.derivative(r).abs() * big_r / 2.0);
            lap = lap.max(self.laplacian(r, grid.dimension).abs() * big_r * big_r / 2.0);
            if r <= big_r && self.value(r) != 1.0 {
                inside = false;
            }
            if r >= 2.0 * big_r && self.value(r) != 0.0 {
                support = false;
            }
        }
        let gradient_ok = grad <= 1.0;
        let laplacian_ok = lap <= 1.0;
        CutoffBounds {
            gradient_ratio: grad,
            laplacian_ratio: lap,
            gradient_ok,
            laplacian_ok,
            identity_inside: inside,
            support_ok: support,
            passed: gradient_ok && laplacian_ok && inside && support,
        }
    }

    /// `(1 + log(R/ε))² / R`.
    pub fn chain_weight(&self) -> f64 {
        let l = 1.0 + (self.radius / CHAIN_EPSILON).ln();
        l * l / self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalizedLedger {
    pub radius: f64,
    /// Ledger of `f_R = χ_R f`; its source is formed from `f_R` directly and
    /// so contains the cutoff commutator terms.
    pub ledger: CarlemanLedger,
    /// `∫∫(|f(Δχ_R - 2λ∇φ·∇χ_R)| + 2|∇χ_R·∇f|)²`
    pub cutoff_source: f64,
    /// `λ²∫∫_shell |f|²φ''φ'² + ∫∫_shell φ''|∇f|²` over `R <= |x| <= 2R`.
    pub shell_bulk: f64,
    pub chain_weight: f64,
    /// `chain_weight · shell_bulk`
    pub chain_rhs: f64,
    pub bounds: CutoffBounds,
}

/// Ledger of the localized field `χ_R f` and the weighted shell quantity of
/// the cutoff chain.
pub fn localized_ledger(
    f: &SpaceTimeField,
    b: &OperatorBundle,
    cutoff: &CutoffSpec,
) -> Result<LocalizedLedger> {
    ensure_compatible(f, b, 5)?;
    let grid = b.grid;
    let big_r = cutoff.radius;
    if 2.0 * big_r > grid.interior_limit() {
        return Err(invalid(
            "cutoff radius",
            format!(
                "support 2R = {} exceeds the interior limit {}",
                2.0 * big_r,
                grid.interior_limit()
            ),
        ));
    }
    let chi: Vec<f64> = (0..grid.num_points).map(|i| cutoff.value(grid.radius(i))).collect();
    let fr = f.map_space(|i, v| v * chi[i]);
    let ledger = evaluate_ledger(&fr, b, None)?;

    let n = grid.dimension;
    let h = grid.spacing();
    let lam = b.lambda_c;
    let sign = |i: usize| if grid.is_radial() { 1.0 } else { grid.coord(i).signum() };
    let grad_chi: Vec<f64> = (0..grid.num_points)
        .map(|i| sign(i) * cutoff.derivative(grid.radius(i)))
        .collect();
    let lap_chi: Vec<f64> = (0..grid.num_points)
        .map(|i| cutoff.laplacian(grid.radius(i), n))
        .collect();
    let in_shell = |r: f64| r >= big_r && r <= 2.0 * big_r;
    let m = f.num_times();
    let per_slice: Vec<(f64, f64)> = (0..m)
        .into_par_iter()
        .map(|k| {
            let v = &f.values[k];
            let last = v.len() - 1;
            let src = pairwise_sum_by(v.len(), |i| {
                if grad_chi[i] == 0.0 && lap_chi[i] == 0.0 {
                    return 0.0;
                }
                let grad_f = if i == 0 || i == last {
                    C64::new(0.0, 0.0)
                } else {
                    (v[i + 1] - v[i - 1]) / (2.0 * h)
                };
                let zero_order = (v[i] * (lap_chi[i] - 2.0 * lam * b.phi_gradient(i) * grad_chi[i])).norm();
                let first_order = 2.0 * (grad_f * grad_chi[i]).norm();
                let total = zero_order + first_order;
                b.weights()[i] * total * total
            });
            let mass = b.weighted_mass(v, |i| {
                if in_shell(grid.radius(i)) {
                    lam * lam * b.hessian_quadratic(i)
                } else {
                    0.0
                }
            });
            let shell_phi2: Vec<f64> = (0..grid.num_points - 1)
                .map(|i| if in_shell(grid.face_coord(i).abs()) { b.face_phi2()[i] } else { 0.0 })
                .collect();
            (src, mass + b.gradient_energy(v, &shell_phi2))
        })
        .collect();
    let cutoff_source = trapezoid(f.dt, m, |k| per_slice[k].0);
    let shell_bulk = trapezoid(f.dt, m, |k| per_slice[k].1);
    let chain_weight = cutoff.chain_weight();
    Ok(LocalizedLedger {
        radius: big_r,
        ledger,
        cutoff_source,
        shell_bulk,
        chain_weight,
        chain_rhs: chain_weight * shell_bulk,
        bounds: cutoff.check_bounds(&grid),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySequenceReport {
    pub times: Vec<f64>,
    /// `g(t) = ∫ψ|∂_tf|² + λ∫φ''|∇f|² + λ³∫|f|²φ''φ'²`
    pub g: Vec<f64>,
    pub time_integral: f64,
    /// `(t, g(t))` at interior local minima of `g`, in time order.
    pub local_minima: Vec<(f64, f64)>,
    /// `sup_t |p_R(t)| / ∫(ψ|∂_tf|² + φ''|∇f|²)` when a cutoff is given.
    pub lemma_constant: Option<f64>,
}

/// Time profile of the bulk density and its local minima; with a cutoff,
/// also the constant bounding the localized boundary pairing by the bulk.
pub fn boundary_sequence_scan(
    f: &SpaceTimeField,
    b: &OperatorBundle,
    cutoff: Option<&CutoffSpec>,
) -> Result<BoundarySequenceReport> {
    ensure_compatible(f, b, 3)?;
    let grid = b.grid;
    let lam = b.lambda_c;
    let psi = b.psi();
    let chi: Option<Vec<f64>> =
        cutoff.map(|c| (0..grid.num_points).map(|i| c.value(grid.radius(i))).collect());
    let rows: Vec<(f64, Option<f64>)> = (0..f.num_times())
        .into_par_iter()
        .map(|k| {
            let v = &f.values[k];
            let ft = f.dt_at(k);
            let psi_dt = b.weighted_mass(&ft, |i| psi[i]);
            let grad = b.gradient_energy(v, b.face_phi2());
            let mass = b.weighted_mass(v, |i| b.hessian_quadratic(i));
            let g = psi_dt + lam * grad + lam * lam * lam * mass;
            let ratio = chi.as_ref().map(|chi| {
                let fr: Vec<C64> = v.iter().zip(chi).map(|(x, c)| x * c).collect();
                let frt: Vec<C64> = ft.iter().zip(chi).map(|(x, c)| x * c).collect();
                let p = b.inner(&b.apply_a_raw(&fr), &frt) + b.inner(&b.apply_psi_raw(&fr), &frt);
                let denom = psi_dt + grad;
                if denom > 0.0 {
                    p.norm() / denom
                } else {
                    0.0
                }
            });
            (g, ratio)
        })
        .collect();
    let g: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let m = g.len();
    let local_minima = (1..m.saturating_sub(1))
        .filter(|&k| g[k] <= g[k - 1] && g[k] < g[k + 1])
        .map(|k| (f.time(k), g[k]))
        .collect();
    let lemma_constant = cutoff.map(|_| rows.iter().filter_map(|r| r.1).fold(0.0, f64::max));
    Ok(BoundarySequenceReport {
        times: f.times(),
        time_integral: trapezoid(f.dt, m, |k| g[k]),
        g,
        local_minima,
        lemma_constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::assemble_bundle;
    use crate::weights::Weight;

    fn bundle(dim: usize, r_max: f64, h: f64, lam: f64, delta: f64) -> OperatorBundle {
        let mut w = Weight::log_linear().unwrap();
        assert!(w.certify(r_max.max(2.0), 1e-3 * r_max.max(2.0)).unwrap().passed);
        let g = GridSpec::with_spacing(dim, r_max, h).unwrap();
        assemble_bundle(&w, lam, delta, g, None).unwrap()
    }

    fn moving_bump(t: f64, x: f64) -> C64 {
        let z = x - 0.3 * t.sin() - 0.5;
        C64::from_polar((-2.0 * z * z).exp(), 0.7 * t + 0.2 * x)
    }

    #[test]
    fn zero_field_has_zero_ledger() {
        let b = bundle(1, 6.0, 0.05, 1.0, 0.01);
        let f = SpaceTimeField::zeros(b.grid, 0.0, 1.0, 11).unwrap();
        let l = evaluate_ledger(&f, &b, None).unwrap();
        assert_eq!(l.lhs, 0.0);
        assert_eq!(l.rhs, 0.0);
        assert_eq!(l.margin, 0.0);
        assert!(l.pass);
        assert_eq!(verify_identity_eq1(&f, &b).unwrap(), 0.0);
        assert!(h_trace(&f, &b).unwrap().h.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn ledger_needs_five_slices() {
        let b = bundle(1, 6.0, 0.05, 1.0, 0.01);
        let f = SpaceTimeField::zeros(b.grid, 0.0, 1.0, 4).unwrap();
        assert!(matches!(
            evaluate_ledger(&f, &b, None),
            Err(Error::TooFewSamples { needed: 5, got: 4 })
        ));
        assert!(verify_identity_eq1(&SpaceTimeField::zeros(b.grid, 0.0, 1.0, 6).unwrap(), &b).is_err());
    }

    #[test]
    fn ledger_holds_with_squared_terms_nonnegative() {
        let b = bundle(1, 6.0, 0.02, 2.0, 0.01);
        let f = SpaceTimeField::from_fn(b.grid, 0.0, 2.0, 101, moving_bump).unwrap();
        let l = evaluate_ledger(&f, &b, None).unwrap();
        assert!(l.psi_dt_term >= 0.0 && l.af_term >= 0.0);
        assert!(l.rhs_source >= 0.0 && l.psi_sq_term >= 0.0);
        assert!(l.pass, "{l:?}");
        assert!(l.cauchy_schwarz.holds);
    }

    #[test]
    fn identity_residual_is_second_order() {
        let mut res = Vec::new();
        for (h, m) in [(0.04, 41), (0.02, 81)] {
            let b = bundle(1, 6.0, h, 1.0, 0.01);
            let f = SpaceTimeField::from_fn(b.grid, 0.0, 1.0, m, moving_bump).unwrap();
            let rep = identity_report(&f, &b).unwrap();
            assert!(rep.pass, "{h}: {}", rep.residual);
            res.push(rep.residual);
        }
        assert!((res[0] / res[1]).log2() >= 1.9, "{res:?}");
    }

    #[test]
    fn h_trace_derivative_matches() {
        let mut mis = Vec::new();
        for m in [41, 81] {
            let b = bundle(1, 6.0, 0.02, 1.0, 0.01);
            let f = SpaceTimeField::from_fn(b.grid, 0.0, 1.0, m, moving_bump).unwrap();
            mis.push(h_trace(&f, &b).unwrap().mismatch());
        }
        assert!(mis[1] < 1e-2 && (mis[0] / mis[1]).log2() > 1.8, "{mis:?}");
    }

    #[test]
    fn h_is_nonnegative_when_s_form_is_nonpositive() {
        // large λ makes -λ²φ'² dominate -Δ, so ⟨Sf,f⟩ <= 0
        let b = bundle(1, 6.0, 0.02, 10.0, 0.01);
        let f = SpaceTimeField::from_fn(b.grid, 0.0, 1.0, 21, |t, x| {
            C64::new((-(x - 2.0) * (x - 2.0)).exp() * (1.0 + t), 0.0)
        })
        .unwrap();
        for k in 0..f.num_times() {
            let v = &f.values[k];
            assert!(b.inner(&b.apply_s_raw(v), v).re <= 0.0);
        }
        assert!(h_trace(&f, &b).unwrap().h.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn quintic_cutoff_bounds() {
        let c = CutoffSpec::new(4.0).unwrap();
        let g = GridSpec::line(20.0, 4001).unwrap();
        let bounds = c.check_bounds(&g);
        assert!(bounds.gradient_ok && bounds.identity_inside && bounds.support_ok);
        assert!((bounds.gradient_ratio - 0.9375).abs() < 1e-3);
        assert_eq!(c.value(4.0), 1.0);
        assert_eq!(c.value(8.0), 0.0);
        assert!((c.value(6.0) - 0.5).abs() < 1e-15);
        assert!(CutoffSpec::new(0.0).is_err());
    }

    #[test]
    fn cutoff_derivatives_match_differences() {
        let c = CutoffSpec::new(2.0).unwrap();
        for r in [2.3, 2.9, 3.5] {
            let e = 1e-5;
            let d = (c.value(r + e) - c.value(r - e)) / (2.0 * e);
            let dd = (c.derivative(r + e) - c.derivative(r - e)) / (2.0 * e);
            assert!((d - c.derivative(r)).abs() < 1e-8);
            assert!((dd - c.second_derivative(r)).abs() < 1e-7);
        }
    }

    #[test]
    fn cutoff_is_invisible_on_compact_support() {
        let b = bundle(1, 8.0, 0.04, 1.0, 0.01);
        let f = SpaceTimeField::from_fn(b.grid, 0.0, 1.0, 21, |t, x| {
            let s = x / 1.5;
            let bump = if s.abs() < 1.0 { (1.0 - 1.0 / (1.0 - s * s)).exp() } else { 0.0 };
            C64::new(bump * t.cos(), 0.0)
        })
        .unwrap();
        let plain = evaluate_ledger(&f, &b, None).unwrap();
        let loc = localized_ledger(&f, &b, &CutoffSpec::new(2.0).unwrap()).unwrap();
        assert_eq!(plain, loc.ledger);
        assert_eq!(loc.cutoff_source, 0.0);
        assert!(localized_ledger(&f, &b, &CutoffSpec::new(3.9).unwrap()).is_err());
    }

    #[test]
    fn boundary_scan_on_zero_and_periodic_fields() {
        let b = bundle(1, 6.0, 0.05, 1.0, 0.01);
        let z = SpaceTimeField::zeros(b.grid, 0.0, 1.0, 11).unwrap();
        let rep = boundary_sequence_scan(&z, &b, None).unwrap();
        assert!(rep.g.iter().all(|&g| g == 0.0));
        assert!(rep.lemma_constant.is_none());

        let mut integrals = Vec::new();
        for periods in [1.0, 2.0] {
            let t1 = periods * 2.0 * std::f64::consts::PI;
            let f = SpaceTimeField::from_fn(b.grid, 0.0, t1, (200.0 * periods) as usize + 1, |t, x| {
                C64::new(t.cos() * (-(x * x)).exp(), 0.0)
            })
            .unwrap();
            let rep = boundary_sequence_scan(&f, &b, Some(&CutoffSpec::new(1.0).unwrap())).unwrap();
            assert!(rep.lemma_constant.unwrap() > 0.0);
            assert!(!rep.local_minima.is_empty());
            integrals.push(rep.time_integral);
        }
        assert!((integrals[1] / integrals[0] - 2.0).abs() < 1e-2, "{integrals:?}");
    }
}
