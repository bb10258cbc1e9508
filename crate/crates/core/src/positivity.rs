//! Positivity of the commutator plus multiplier terms, and empirical
//! absorption thresholds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::{ScalarField, C64};
use crate::monotonicity::CutoffSpec;
use crate::numerics::pairwise_sum_by;
use crate::operators::OperatorBundle;
use crate::potential::PotentialSpec;

/// Floor for every empirical constant.
pub const C_MIN: f64 = 0.01;

/// The seven integrals of the positivity decomposition, with `C` split at
/// `|x| = ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TermDecomposition {
    /// `4λ∫∇f D²φ ∇f̄`
    pub a: f64,
    /// `4λ³∫|f|²φ''φ'²`
    pub b: f64,
    /// `-λ∫|f|²Δ²φ`
    pub c: f64,
    /// `∫ψ|∇f|²`
    pub d: f64,
    /// `-½∫Δψ|f|²`
    pub e: f64,
    /// `-λ²∫|f|²ψφ'²`
    pub f: f64,
    /// `-λ∫|f|²φ'ψ'`
    pub g: f64,
    pub c1: f64,
    pub c2: f64,
    pub epsilon: f64,
    /// `λ³∫_{|x|>=ε}|f|²φ''φ'²`
    pub outer_bulk: f64,
}

impl TermDecomposition {
    pub fn total(&self) -> f64 {
        self.a + self.b + self.c + self.d + self.e + self.f + self.g
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid("epsilon", format!("{epsilon} is outside (0, 1)")));
    }
    Ok(())
}

pub fn term_decomposition(
    f: &ScalarField,
    b: &OperatorBundle,
    epsilon: f64,
) -> Result<TermDecomposition> {
    check_epsilon(epsilon)?;
    if f.grid != b.grid {
        return Err(Error::GridMismatch(format!("{:?} vs {:?}", f.grid, b.grid)));
    }
    f.ensure_interior_supported()?;
    let v = &f.values;
    let lam = b.lambda_c;
    let r = b.radii();
    let (phi1, bilap, psi, lap_psi, psi1) = (b.phi1(), b.bilap(), b.psi(), b.lap_psi(), b.psi1());
    let c_part = |inside: bool| {
        -lam * b.weighted_mass(v, |i| if (r[i] < epsilon) == inside { bilap[i] } else { 0.0 })
    };
    let c1 = c_part(true);
    let c2 = c_part(false);
    Ok(TermDecomposition {
        a: 4.0 * lam * b.gradient_energy(v, b.face_phi2()),
        b: 4.0 * lam.powi(3) * b.weighted_mass(v, |i| b.hessian_quadratic(i)),
        c: c1 + c2,
        d: b.gradient_energy(v, b.face_psi()),
        e: -0.5 * b.weighted_mass(v, |i| lap_psi[i]),
        f: -lam * lam * b.weighted_mass(v, |i| psi[i] * phi1[i] * phi1[i]),
        g: -lam * b.weighted_mass(v, |i| phi1[i] * psi1[i]),
        c1,
        c2,
        epsilon,
        outer_bulk: lam.powi(3)
            * b.weighted_mass(v, |i| if r[i] >= epsilon { b.hessian_quadratic(i) } else { 0.0 }),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    pub terms: TermDecomposition,
    /// `A + ... + G`
    pub lhs: f64,
    /// `λ∫φ''|∇f|² + λ³∫|f|²φ''φ'²`
    pub denominator: f64,
    /// `lhs / denominator`; absent for the zero field.
    pub ratio: Option<f64>,
    /// `(A+B+E+G) / (A+B)`; absent for the zero field.
    pub multiplier_ratio: Option<f64>,
    pub c_min: f64,
    pub vacuous: bool,
    pub pass: bool,
}

/// Largest `C` with `A+...+G >= C (λ∫φ''|∇f|² + λ³∫|f|²φ''φ'²)` for `f`.
pub fn verify_positivity(
    f: &ScalarField,
    b: &OperatorBundle,
    epsilon: f64,
) -> Result<PositivityReport> {
    let terms = term_decomposition(f, b, epsilon)?;
    let lam = b.lambda_c;
    let denominator = lam * b.gradient_energy(&f.values, b.face_phi2())
        + lam.powi(3) * b.weighted_mass(&f.values, |i| b.hessian_quadratic(i));
    let lhs = terms.total();
    if denominator == 0.0 {
        return Ok(PositivityReport {
            terms,
            lhs,
            denominator,
            ratio: None,
            multiplier_ratio: None,
            c_min: C_MIN,
            vacuous: true,
            pass: true,
        });
    }
    let ratio = lhs / denominator;
    let ab = terms.a + terms.b;
    let multiplier_ratio = (terms.a + terms.b + terms.e + terms.g) / ab;
    Ok(PositivityReport {
        terms,
        lhs,
        denominator,
        ratio: Some(ratio),
        multiplier_ratio: Some(multiplier_ratio),
        c_min: C_MIN,
        vacuous: false,
        pass: ratio >= C_MIN && multiplier_ratio >= C_MIN,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoincareReport {
    pub epsilon: f64,
    /// `∫_{|x|<=2ε} χ²|f|²`
    pub mass: f64,
    /// `∫|∇(χf)|²`
    pub cutoff_gradient: f64,
    /// `∫_{|x|<=2ε} |∇f|²`
    pub inner_gradient: f64,
    /// `∫_{ε<=|x|<=2ε} |f|²`
    pub shell_mass: f64,
    /// `mass / (ε² cutoff_gradient)`
    pub constant: f64,
    /// `mass / (ε² inner_gradient + shell_mass)`
    pub expansion_constant: f64,
    pub holds: bool,
}

/// Empirical constant in `∫χ²|f|² <= c ε² ∫|∇(χf)|²` for a cutoff equal to
/// 1 on `|x| <= ε` and supported in `|x| <= 2ε`.
pub fn localized_poincare_check(f: &ScalarField, epsilon: f64) -> Result<PoincareReport> {
    let grid = f.grid;
    if !(epsilon > 0.0) || 4.0 * epsilon >= grid.r_max {
        return Err(invalid(
            "epsilon",
            format!("{epsilon} must lie in (0, r_max / 4 = {})", grid.r_max / 4.0),
        ));
    }
    if 2.0 * epsilon < 4.0 * grid.spacing() {
        return Err(invalid("epsilon", format!("{epsilon} is unresolved by the grid")));
    }
    let chi = CutoffSpec::new(epsilon)?;
    let w = grid.weights();
    let h = grid.spacing();
    let v = &f.values;
    let cf: Vec<C64> = (0..v.len()).map(|i| v[i] * chi.value(grid.radius(i))).collect();
    let face_grad = |u: &[C64], keep: &dyn Fn(f64) -> bool| {
        pairwise_sum_by(u.len() - 1, |i| {
            let x = grid.face_coord(i).abs();
            if keep(x) {
                grid.face_measure(i) * (u[i + 1] - u[i]).norm_sqr() / h
            } else {
                0.0
            }
        })
    };
    let mass = pairwise_sum_by(v.len(), |i| w[i] * cf[i].norm_sqr());
    let cutoff_gradient = face_grad(&cf, &|_| true);
    let inner_gradient = face_grad(v, &|x| x <= 2.0 * epsilon);
    let shell_mass = pairwise_sum_by(v.len(), |i| {
        let r = grid.radius(i);
        if r >= epsilon && r <= 2.0 * epsilon {
            w[i] * v[i].norm_sqr()
        } else {
            0.0
        }
    });
    let e2 = epsilon * epsilon;
    let ratio = |num: f64, den: f64| if num == 0.0 { 0.0 } else { num / den };
    let constant = ratio(mass, e2 * cutoff_gradient);
    let expansion_constant = ratio(mass, e2 * inner_gradient + shell_mass);
    Ok(PoincareReport {
        epsilon,
        mass,
        cutoff_gradient,
        inner_gradient,
        shell_mass,
        constant,
        expansion_constant,
        holds: constant.is_finite() && expansion_constant.is_finite(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointwiseBound {
    pub delta: f64,
    pub lambda_c: f64,
    /// `min_i (λφ''φ'² - ψφ'²) - (1 - 3δ)φ''φ'²` over the nodes.
    pub min_slack: f64,
    pub pass: bool,
}

/// Nodewise check of `λφ''φ'² - ψφ'² >= (1 - 3δ) φ''φ'²`.
pub fn pointwise_bound_check(b: &OperatorBundle) -> PointwiseBound {
    let c = 1.0 - 3.0 * b.delta;
    let lam = b.lambda_c;
    let mut min_slack = f64::INFINITY;
    let mut pass = true;
    for i in 0..b.grid.num_points {
        let q = b.hessian_quadratic(i);
        let p1 = b.phi1()[i];
        let left = lam * q - b.psi()[i] * p1 * p1;
        let slack = left - c * q;
        min_slack = min_slack.min(slack);
        if slack < -1e-12 * (left.abs() + q.abs()) {
            pass = false;
        }
    }
    PointwiseBound {
        delta: b.delta,
        lambda_c: lam,
        min_slack,
        pass,
    }
}

/// Smallest ratio, over `suite`, of
/// `(4λ³∫φ''φ'²|f|² - 2λ∫φ'(∂_rV₂)₋|f|²) / (λ³∫φ''φ'²|f|²)`.
pub fn repulsive_absorption_constant(b: &OperatorBundle, suite: &[ScalarField]) -> Result<f64> {
    if !b.has_v2() {
        return Err(invalid("v2", "the bundle carries no repulsive potential"));
    }
    let lam = b.lambda_c;
    let mut worst = f64::INFINITY;
    for f in suite {
        if f.grid != b.grid {
            return Err(Error::GridMismatch("suite field on another grid".into()));
        }
        let bulk = lam.powi(3) * b.weighted_mass(&f.values, |i| b.hessian_quadratic(i));
        if bulk == 0.0 {
            continue;
        }
        let dv = b.v2_radial_derivative();
        let neg = b.weighted_mass(&f.values, |i| b.phi1()[i] * (-dv[i]).max(0.0));
        worst = worst.min((4.0 * bulk - 2.0 * lam * neg) / bulk);
    }
    Ok(worst)
}

/// Empirical absorption constants for one field at one `(λ, δ)`.
///
/// Each is `1 - (term to absorb) / (bulk terms)`, so the absorption holds
/// with generic constant 1 exactly when the value is positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionConstants {
    /// `1 - λ²∫|W̃φ'|²|f|² / λ³∫|f|²φ''φ'²`
    pub c1: f64,
    /// `1 - ∫V²|f|² / (λ∫φ''|∇f|² + λ³∫|f|²φ''φ'²)`
    pub c2: f64,
    /// `1 - ∫|W·(∂_t,∇)f|² / (∫ψ|∂_tf|² + λ∫φ''|∇f|²)`
    pub c3: f64,
    /// `1 - ∫ψ²|f|² / (λ∫φ''|∇f|² + λ³∫|f|²φ''φ'²)`
    pub c4: f64,
}

impl AbsorptionConstants {
    pub fn min(&self) -> f64 {
        self.c1.min(self.c2).min(self.c3).min(self.c4)
    }

    fn pointwise_min(self, o: Self) -> Self {
        Self {
            c1: self.c1.min(o.c1),
            c2: self.c2.min(o.c2),
            c3: self.c3.min(o.c3),
            c4: self.c4.min(o.c4),
        }
    }

    fn ones() -> Self {
        Self {
            c1: 1.0,
            c2: 1.0,
            c3: 1.0,
            c4: 1.0,
        }
    }
}

fn one_minus(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        1.0
    } else if den == 0.0 {
        f64::NEG_INFINITY
    } else {
        1.0 - num / den
    }
}

/// Absorption constants for a static field at `t = 0`; the time derivative
/// is replaced by the proxy `|∂_t f| = |f|`.
pub fn absorption_constants(
    f: &ScalarField,
    b: &OperatorBundle,
    potential: &PotentialSpec,
) -> AbsorptionConstants {
    let v = &f.values;
    let lam = b.lambda_c;
    let r = b.radii();
    let grid = b.grid;
    let h = grid.spacing();
    let pot: Vec<f64> = r.iter().map(|&x| (potential.v)(0.0, x)).collect();
    let wt: Vec<f64> = r.iter().map(|&x| (potential.w_time)(0.0, x)).collect();
    let wr: Vec<f64> = r.iter().map(|&x| (potential.w_radial)(0.0, x)).collect();
    let p1 = lam * b.gradient_energy(v, b.face_phi2());
    let p3 = lam.powi(3) * b.weighted_mass(v, |i| b.hessian_quadratic(i));
    let pt = b.weighted_mass(v, |i| b.psi()[i]);
    let w_drift = lam * lam * b.weighted_mass(v, |i| (wr[i] * b.phi1()[i]).powi(2));
    let v_term = b.weighted_mass(v, |i| pot[i] * pot[i]);
    let last = v.len() - 1;
    let w_first = pairwise_sum_by(v.len(), |i| {
        let grad = if i == 0 || i == last {
            C64::new(0.0, 0.0)
        } else {
            // radial component, signed along x on the line
            (v[i + 1] - v[i - 1]) / (2.0 * h)
        };
        let sign = if grid.is_radial() { 1.0 } else { grid.coord(i).signum() };
        b.weights()[i] * (v[i] * wt[i] + grad * (wr[i] * sign)).norm_sqr()
    });
    let psi_sq = b.weighted_mass(v, |i| b.psi()[i] * b.psi()[i]);
    AbsorptionConstants {
        c1: one_minus(w_drift, p3),
        c2: one_minus(v_term, p1 + p3),
        c3: one_minus(w_first, pt + p1),
        c4: one_minus(psi_sq, p1 + p3),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCell {
    pub lambda: f64,
    pub delta: f64,
    pub constants: AbsorptionConstants,
    pub min_constant: f64,
    /// Smallest positivity ratio over the suite at `ε = λ^(-1/2)`.
    pub positivity_ratio: f64,
    /// Smallest `(A+B+E+G)/(A+B)` over the suite.
    pub multiplier_ratio: f64,
    pub pointwise: PointwiseBound,
    pub absorption_pass: bool,
    pub positivity_pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    /// Least `λ` from which every larger tested `λ` passes all four
    /// absorption inequalities at the smallest `δ`.
    pub lambda_hat0: Option<f64>,
    /// Largest tested `δ` passing positivity and the pointwise bound at the
    /// largest `λ`.
    pub delta_star: Option<f64>,
    /// `λ^(-1/2)` at the largest tested `λ`.
    pub epsilon_used: f64,
    pub field_suite_size: usize,
    /// Constants at the largest `λ` and smallest `δ`.
    pub constants_at_top: AbsorptionConstants,
    pub c_min: f64,
    pub cells: Vec<ThresholdCell>,
}

fn sorted_unique(values: &[f64], name: &'static str) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(invalid(name, "grid is empty"));
    }
    if values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(invalid(name, "entries must be positive and finite"));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    Ok(v)
}

/// Scans `(λ, δ)` for the absorption and positivity thresholds over
/// `suite`, reusing the weight, grid and `V₂` of `template`.
pub fn scan_thresholds(
    potential: &PotentialSpec,
    template: &OperatorBundle,
    lambda_grid: &[f64],
    delta_grid: &[f64],
    suite: &[ScalarField],
) -> Result<ThresholdReport> {
    let lambdas = sorted_unique(lambda_grid, "lambda_grid")?;
    let deltas = sorted_unique(delta_grid, "delta_grid")?;
    if suite.is_empty() {
        return Err(invalid("field_suite", "suite is empty"));
    }
    for f in suite {
        if f.grid != template.grid {
            return Err(Error::GridMismatch("suite field on another grid".into()));
        }
        f.ensure_interior_supported()?;
    }
    let pairs: Vec<(f64, f64)> = lambdas
        .iter()
        .flat_map(|&l| deltas.iter().map(move |&d| (l, d)))
        .collect();
    let cells = pairs
        .par_iter()
        .map(|&(lambda, delta)| {
            let b = template.with_parameters(lambda, delta)?;
            let eps = lambda.powf(-0.5).min(0.5);
            let mut constants = AbsorptionConstants::ones();
            let mut positivity_ratio = f64::INFINITY;
            let mut multiplier_ratio = f64::INFINITY;
            for f in suite {
                constants = constants.pointwise_min(absorption_constants(f, &b, potential));
                let p = verify_positivity(f, &b, eps)?;
                if let (Some(r), Some(m)) = (p.ratio, p.multiplier_ratio) {
                    positivity_ratio = positivity_ratio.min(r);
                    multiplier_ratio = multiplier_ratio.min(m);
                }
            }
            let pointwise = pointwise_bound_check(&b);
            let min_constant = constants.min();
            Ok(ThresholdCell {
                lambda,
                delta,
                constants,
                min_constant,
                positivity_ratio,
                multiplier_ratio,
                pointwise,
                absorption_pass: min_constant >= C_MIN,
                positivity_pass: positivity_ratio >= C_MIN
                    && multiplier_ratio >= C_MIN
                    && pointwise.pass,
            })
        })
        .collect::<Result<Vec<ThresholdCell>>>()?;

    let nd = deltas.len();
    let cell = |li: usize, di: usize| &cells[li * nd + di];
    let mut lambda_hat0 = None;
    for li in (0..lambdas.len()).rev() {
        if cell(li, 0).absorption_pass {
            lambda_hat0 = Some(lambdas[li]);
        } else {
            break;
        }
    }
    let top = lambdas.len() - 1;
    let delta_star = (0..nd)
        .rev()
        .find(|&di| cell(top, di).positivity_pass)
        .map(|di| deltas[di]);
    Ok(ThresholdReport {
        lambda_hat0,
        delta_star,
        epsilon_used: lambdas[top].powf(-0.5),
        field_suite_size: suite.len(),
        constants_at_top: cell(top, 0).constants,
        c_min: C_MIN,
        cells,
    })
}

/// `1, 2, 4, ..., 256`.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..9).map(|k| f64::from(1u32 << k)).collect()
}

pub fn default_delta_grid() -> Vec<f64> {
    vec![1e-4, 1e-3, 1e-2, 1e-1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GridSpec;
    use crate::operators::assemble_bundle;
    use crate::suite::compact_bump_suite;
    use crate::weights::Weight;

    fn bundle(dim: usize, r_max: f64, h: f64, lam: f64, delta: f64) -> OperatorBundle {
        let mut w = Weight::log_linear().unwrap();
        assert!(w.certify(r_max.max(2.0), 1e-3 * r_max.max(2.0)).unwrap().passed);
        let g = GridSpec::with_spacing(dim, r_max, h).unwrap();
        assemble_bundle(&w, lam, delta, g, None).unwrap()
    }

    fn gaussian(g: GridSpec, c: f64, s: f64) -> ScalarField {
        ScalarField::from_fn(g, |x| {
            let z = (x - c) / s;
            C64::from_polar((-0.5 * z * z).exp(), 0.4 * x)
        })
    }

    #[test]
    fn zero_field_is_vacuous() {
        let b = bundle(1, 6.0, 0.02, 1.0, 0.01);
        let z = ScalarField::zeros(b.grid);
        let t = term_decomposition(&z, &b, 0.5).unwrap();
        assert_eq!(t.total(), 0.0);
        let p = verify_positivity(&z, &b, 0.5).unwrap();
        assert!(p.vacuous && p.pass && p.ratio.is_none());
        assert!(term_decomposition(&z, &b, 1.0).is_err());
        assert!(term_decomposition(&z, &b, 0.0).is_err());
    }

    #[test]
    fn gaussian_terms_have_expected_signs() {
        let b = bundle(1, 6.0, 0.02, 1.0, 0.01);
        let t = term_decomposition(&gaussian(b.grid, 0.5, 0.6), &b, 0.5).unwrap();
        assert!(t.a >= 0.0 && t.b >= 0.0 && t.d >= 0.0);
        assert_eq!(t.c, t.c1 + t.c2);
    }

    #[test]
    fn decomposition_matches_operator_forms() {
        for dim in [1usize, 3] {
            let mut errs = Vec::new();
            for h in [0.02, 0.01] {
                let b = bundle(dim, 6.0, h, 2.0, 0.05);
                let f = gaussian(b.grid, 1.5, 0.5);
                let t = term_decomposition(&f, &b, 0.5).unwrap();
                let comm = b.inner(&b.commutator_closed_raw(&f.values), &f.values).re;
                let sa: Vec<C64> = b
                    .apply_s_raw(&f.values)
                    .iter()
                    .zip(b.apply_a_raw(&f.values))
                    .map(|(x, y)| x + y)
                    .collect();
                let cross = b.inner(&sa, &b.apply_psi_raw(&f.values)).re;
                let direct = comm + cross;
                errs.push((t.total() - direct).abs() / direct.abs());
            }
            assert!(errs[1] < 1e-3, "{dim}: {errs:?}");
            assert!(errs[0] / errs[1] > 3.0, "{dim}: {errs:?}");
        }
    }

    #[test]
    fn suite_positivity_small_and_large_delta() {
        let b = bundle(1, 6.0, 0.01, 5.0, 1e-3);
        let suite: Vec<ScalarField> = compact_bump_suite(7, 20, b.grid)
            .iter()
            .map(|s| s.sample(b.grid))
            .collect();
        for f in &suite {
            let p = verify_positivity(f, &b, 0.4).unwrap();
            assert!(p.pass, "{p:?}");
        }
        let big = b.with_parameters(5.0, 10.0).unwrap();
        let failures = suite
            .iter()
            .filter(|f| !verify_positivity(f, &big, 0.4).unwrap().pass)
            .count();
        assert!(failures > 0);
    }

    #[test]
    fn pointwise_bound_for_small_delta() {
        for delta in [1e-4, 1e-2, 0.1] {
            let b = bundle(1, 10.0, 0.01, 1.0, delta);
            assert!(pointwise_bound_check(&b).pass);
            // the stronger λ-scaled form holds as well
            for i in 0..b.grid.num_points {
                let q = b.hessian_quadratic(i);
                let p1 = b.phi1()[i];
                assert!(q - b.psi()[i] * p1 * p1 >= (1.0 - 3.0 * delta) * q - 1e-14);
            }
        }
    }

    #[test]
    fn poincare_constants() {
        let g = GridSpec::line(4.0, 4001).unwrap();
        let one = ScalarField::from_fn(g, |_| C64::new(1.0, 0.0));
        let rep = localized_poincare_check(&one, 0.25).unwrap();
        assert!(rep.holds && rep.constant > 0.0);
        // all gradient of χf sits in the transition shell
        assert!(rep.inner_gradient < 1e-20);
        let zero = localized_poincare_check(&ScalarField::zeros(g), 0.25).unwrap();
        assert_eq!(zero.constant, 0.0);
        assert!(localized_poincare_check(&one, 1.0).is_err());

        let lin = ScalarField::from_fn(g, |x| C64::new(x, 0.0));
        let cs: Vec<f64> = [0.4, 0.2, 0.1]
            .iter()
            .map(|&e| localized_poincare_check(&lin, e).unwrap().constant)
            .collect();
        assert!((cs[0] - cs[2]).abs() / cs[0] < 1e-2, "{cs:?}");
    }

    #[test]
    fn threshold_scan_without_potential_passes_everywhere() {
        let b = bundle(1, 6.0, 0.02, 1.0, 1e-3);
        let suite: Vec<ScalarField> = compact_bump_suite(1, 5, b.grid)
            .iter()
            .map(|s| s.sample(b.grid))
            .collect();
        let rep = scan_thresholds(&PotentialSpec::zero(), &b, &[1.0, 4.0, 16.0], &[1e-3], &suite)
            .unwrap();
        assert_eq!(rep.lambda_hat0, Some(1.0));
        assert!(scan_thresholds(&PotentialSpec::zero(), &b, &[], &[1e-3], &suite).is_err());
    }

    #[test]
    fn threshold_nondecreasing_in_decay_constant() {
        let b = bundle(1, 6.0, 0.02, 1.0, 1e-3);
        let suite: Vec<ScalarField> = compact_bump_suite(3, 6, b.grid)
            .iter()
            .map(|s| s.sample(b.grid))
            .collect();
        let grid = default_lambda_grid();
        let v = PotentialSpec::sech_well(2.0, 1.0).unwrap();
        let base = scan_thresholds(&v, &b, &grid, &[1e-3], &suite).unwrap();
        let big = scan_thresholds(&v.scaled(10.0), &b, &grid, &[1e-3], &suite).unwrap();
        let l0 = base.lambda_hat0.unwrap();
        let l1 = big.lambda_hat0.unwrap_or(f64::INFINITY);
        assert!(l1 >= l0, "{l0} {l1}");
    }

    #[test]
    fn repulsive_absorption() {
        use std::sync::Arc;
        let mut w = Weight::log_linear().unwrap();
        assert!(w.certify(6.0, 6e-3).unwrap().passed);
        let g = GridSpec::with_spacing(1, 6.0, 0.02).unwrap();
        let v2: crate::potential::Profile = Arc::new(|r: f64| 0.5 / (1.0 + r * r));
        let b = assemble_bundle(&w, 8.0, 1e-3, g, Some(v2)).unwrap();
        let suite: Vec<ScalarField> =
            compact_bump_suite(5, 8, g).iter().map(|s| s.sample(g)).collect();
        assert!(repulsive_absorption_constant(&b, &suite).unwrap() >= C_MIN);
    }
}
