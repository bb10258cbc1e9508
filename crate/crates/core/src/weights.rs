//! Radial Carleman weights.
//!
//! Two families are supported. The log-linear weight is an even polynomial
//! `a1 r^2 + a2 r^4 + a3 r^6 + a4 r^8` on `[0, 1]` glued to
//! `3r - ∫_1^r ds / (1 + log s) + a5` for `r > 1`. The power-law weight uses the
//! same inner polynomial glued to `r^p + a5` with `p = (4 - 2α) / 3`. In both
//! cases the coefficients are fixed by matching value and derivatives 1..=4 at
//! `r = 1`, and convexity is checked after the fact by [`certify_weight`].

use nalgebra::{Matrix4, Vector4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::{format_f17, integrate};

/// Absolute tolerance of the outer-branch quadrature.
pub const OUTER_QUADRATURE_TOL: f64 = 1e-12;
/// Largest accepted jet mismatch at the junction.
pub const JUNCTION_TOL: f64 = 1e-10;

const INNER_EXPONENTS: [i32; 4] = [2, 4, 6, 8];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightKind {
    LogLinear,
    PowerLaw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightCoefficients {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    /// Additive constant of the outer branch.
    pub a5: f64,
    pub junction_radius: f64,
}

impl WeightCoefficients {
    pub fn inner(&self) -> [f64; 4] {
        [self.a1, self.a2, self.a3, self.a4]
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.a1, self.a2, self.a3, self.a4, self.a5]
    }
}

/// `φ` and its first four radial derivatives at one radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightJet {
    pub phi: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub phi3: f64,
    pub phi4: f64,
}

impl WeightJet {
    pub fn to_array(&self) -> [f64; 5] {
        [self.phi, self.phi1, self.phi2, self.phi3, self.phi4]
    }

    /// `∇φ D²φ ∇φ` for a radial weight, which is `φ'' (φ')²`.
    pub fn hessian_quadratic(&self) -> f64 {
        self.phi2 * self.phi1 * self.phi1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weight {
    pub kind: WeightKind,
    pub coeffs: WeightCoefficients,
    /// Outer exponent, power-law weights only.
    pub p: Option<f64>,
    /// Least `M` with `φ(r) <= M r` (log-linear) or `φ(r) <= M max(r, r^p)`
    /// (power-law) on the certified range; set by [`Weight::certify`].
    pub linear_bound_m: Option<f64>,
    /// Upper end of the range certified by [`Weight::certify`].
    pub certified_range: Option<f64>,
}

fn falling(e: i32, m: i32) -> f64 {
    (0..m).map(|j| (e - j) as f64).product()
}

/// Solves for `a1..a4` such that the inner polynomial has derivatives
/// `target[0..4]` (orders 1..=4) at `r = 1`.
fn solve_inner(target: [f64; 4]) -> Result<[f64; 4]> {
    let mut m = Matrix4::zeros();
    for (row, order) in (1..=4).enumerate() {
        for (col, &e) in INNER_EXPONENTS.iter().enumerate() {
            m[(row, col)] = falling(e, order);
        }
    }
    let rhs = Vector4::from_row_slice(&target);
    let sol = m.lu().solve(&rhs).ok_or(Error::SingularSystem)?;
    Ok([sol[0], sol[1], sol[2], sol[3]])
}

fn inner_value(a: &[f64; 4]) -> f64 {
    a.iter().sum()
}

/// Outer log-linear derivatives at `r > 0` (orders 1..=4).
fn log_outer_derivs(r: f64) -> [f64; 4] {
    let l = 1.0 + r.ln();
    [
        3.0 - 1.0 / l,
        1.0 / (r * l * l),
        -(l + 2.0) / (r * r * l * l * l),
        (2.0 * l * l + 6.0 * l + 6.0) / (r * r * r * l * l * l * l),
    ]
}

fn power_outer_derivs(r: f64, p: f64) -> [f64; 4] {
    [
        p * r.powf(p - 1.0),
        p * (p - 1.0) * r.powf(p - 2.0),
        p * (p - 1.0) * (p - 2.0) * r.powf(p - 3.0),
        p * (p - 1.0) * (p - 2.0) * (p - 3.0) * r.powf(p - 4.0),
    ]
}

/// Coefficients of the log-linear weight, matched through order 4 at `r = 1`
/// to the outer jet `(3 + a5, 2, 1, -3, 14)`.
pub fn solve_log_weight_coefficients() -> Result<WeightCoefficients> {
    let target = log_outer_derivs(1.0);
    let a = solve_inner(target)?;
    Ok(WeightCoefficients {
        a1: a[0],
        a2: a[1],
        a3: a[2],
        a4: a[3],
        a5: inner_value(&a) - 3.0,
        junction_radius: 1.0,
    })
}

/// Power-law weight with `p = (4 - 2α) / 3`; requires `0 <= α < 1/2`.
pub fn build_power_weight(alpha: f64) -> Result<Weight> {
    if !(0.0..0.5).contains(&alpha) {
        return Err(invalid("alpha", format!("{alpha} is outside [0, 1/2)")));
    }
    let p = (4.0 - 2.0 * alpha) / 3.0;
    let a = solve_inner(power_outer_derivs(1.0, p))?;
    let coeffs = WeightCoefficients {
        a1: a[0],
        a2: a[1],
        a3: a[2],
        a4: a[3],
        a5: inner_value(&a) - 1.0,
        junction_radius: 1.0,
    };
    Ok(Weight::from_parts(WeightKind::PowerLaw, coeffs, Some(p)))
}

/// Convenience wrapper over [`Weight::eval`].
pub fn eval_weight(w: &Weight, r: f64) -> Result<WeightJet> {
    w.eval(r)
}

impl Weight {
    pub fn log_linear() -> Result<Self> {
        Ok(Self::from_parts(
            WeightKind::LogLinear,
            solve_log_weight_coefficients()?,
            None,
        ))
    }

    /// Builds an uncertified weight from raw coefficients. Used for perturbed
    /// weights in negative tests; nothing is checked here.
    pub fn from_parts(kind: WeightKind, coeffs: WeightCoefficients, p: Option<f64>) -> Self {
        Self {
            kind,
            coeffs,
            p,
            linear_bound_m: None,
            certified_range: None,
        }
    }

    fn exponent(&self) -> f64 {
        self.p.unwrap_or(1.0)
    }

    /// Jet of the inner polynomial branch, valid for any `r >= 0`.
    pub fn inner_jet(&self, r: f64) -> WeightJet {
        let a = self.coeffs.inner();
        let mut d = [0.0; 5];
        for (order, slot) in d.iter_mut().enumerate() {
            *slot = INNER_EXPONENTS
                .iter()
                .zip(a.iter())
                .filter(|(&e, _)| e >= order as i32)
                .map(|(&e, &c)| c * falling(e, order as i32) * r.powi(e - order as i32))
                .sum();
        }
        WeightJet {
            phi: d[0],
            phi1: d[1],
            phi2: d[2],
            phi3: d[3],
            phi4: d[4],
        }
    }

    fn outer_derivs(&self, r: f64) -> [f64; 4] {
        match self.kind {
            WeightKind::LogLinear => log_outer_derivs(r),
            WeightKind::PowerLaw => power_outer_derivs(r, self.exponent()),
        }
    }

    fn outer_value(&self, r: f64) -> f64 {
        match self.kind {
            WeightKind::LogLinear => {
                let tail = integrate(|s| 1.0 / (1.0 + s.ln()), 1.0, r, OUTER_QUADRATURE_TOL);
                3.0 * r - tail + self.coeffs.a5
            }
            WeightKind::PowerLaw => r.powf(self.exponent()) + self.coeffs.a5,
        }
    }

    /// Jet of the outer branch, valid for `r > 0`.
    pub fn outer_jet(&self, r: f64) -> WeightJet {
        let d = self.outer_derivs(r);
        WeightJet {
            phi: self.outer_value(r),
            phi1: d[0],
            phi2: d[1],
            phi3: d[2],
            phi4: d[3],
        }
    }

    /// Piecewise jet: inner branch on `[0, 1]`, outer branch beyond.
    pub fn eval(&self, r: f64) -> Result<WeightJet> {
        if r < 0.0 || r.is_nan() {
            return Err(Error::NegativeRadius(r));
        }
        Ok(self.jet(r))
    }

    pub(crate) fn jet(&self, r: f64) -> WeightJet {
        if r <= self.coeffs.junction_radius {
            self.inner_jet(r)
        } else {
            self.outer_jet(r)
        }
    }

    /// Derivatives of orders 1..=4 only; skips the outer quadrature.
    pub fn derivatives(&self, r: f64) -> [f64; 4] {
        if r <= self.coeffs.junction_radius {
            let j = self.inner_jet(r);
            [j.phi1, j.phi2, j.phi3, j.phi4]
        } else {
            self.outer_derivs(r)
        }
    }

    /// Laplacian of the radial weight in `n` dimensions.
    pub fn laplacian(&self, r: f64, n: usize) -> f64 {
        let nm1 = n as f64 - 1.0;
        if r <= self.coeffs.junction_radius {
            let nf = n as i32;
            INNER_EXPONENTS
                .iter()
                .zip(self.coeffs.inner())
                .map(|(&e, c)| c * (e * (e + nf - 2)) as f64 * r.powi(e - 2))
                .sum()
        } else {
            let d = self.outer_derivs(r);
            d[1] + nm1 * d[0] / r
        }
    }

    /// Bi-Laplacian `Δ²φ` of the radial weight in `n` dimensions.
    pub fn bilaplacian(&self, r: f64, n: usize) -> f64 {
        let nm1 = n as f64 - 1.0;
        if r <= self.coeffs.junction_radius {
            let nf = n as i32;
            INNER_EXPONENTS
                .iter()
                .zip(self.coeffs.inner())
                .filter(|(&e, _)| e >= 4)
                .map(|(&e, c)| {
                    c * (e * (e + nf - 2) * (e - 2) * (e + nf - 4)) as f64 * r.powi(e - 4)
                })
                .sum()
        } else {
            let d = self.outer_derivs(r);
            d[3] + 2.0 * nm1 * d[2] / r + nm1 * (nm1 - 2.0) * (d[1] / (r * r) - d[0] / (r * r * r))
        }
    }

    /// Laplacian of `φ''` (as a radial function) in `n` dimensions.
    pub fn laplacian_of_second_derivative(&self, r: f64, n: usize) -> f64 {
        let nm1 = n as f64 - 1.0;
        if r <= self.coeffs.junction_radius {
            let nf = n as i32;
            INNER_EXPONENTS
                .iter()
                .zip(self.coeffs.inner())
                .filter(|(&e, _)| e >= 4)
                .map(|(&e, c)| {
                    c * (e * (e - 1) * (e - 2) * (e + nf - 4)) as f64 * r.powi(e - 4)
                })
                .sum()
        } else {
            let d = self.outer_derivs(r);
            d[3] + nm1 * d[2] / r
        }
    }

    /// Absolute jet mismatches (orders 0..=4) between the two branches at the
    /// junction.
    pub fn junction_residuals(&self) -> [f64; 5] {
        let r = self.coeffs.junction_radius;
        let inner = self.inner_jet(r).to_array();
        let outer = self.outer_jet(r).to_array();
        let mut out = [0.0; 5];
        for k in 0..5 {
            out[k] = (inner[k] - outer[k]).abs();
        }
        out
    }

    /// Reference growth `r` (log-linear) or `max(r, r^p)` (power-law) used by
    /// the linear bound.
    fn growth(&self, r: f64) -> f64 {
        match self.kind {
            WeightKind::LogLinear => r,
            WeightKind::PowerLaw => r.max(r.powf(self.exponent())),
        }
    }

    /// Lower-bound profile of `φ''(φ')²` beyond the junction.
    fn outer_shape(&self, r: f64) -> f64 {
        match self.kind {
            WeightKind::LogLinear => {
                let l = 1.0 + r.ln();
                1.0 / (r * l * l)
            }
            WeightKind::PowerLaw => r.powf(3.0 * self.exponent() - 4.0),
        }
    }

    /// Decay exponent of `|Δ²φ|` beyond the junction.
    fn bilap_decay_exponent(&self) -> f64 {
        match self.kind {
            WeightKind::LogLinear => 3.0,
            WeightKind::PowerLaw => 4.0 - self.exponent(),
        }
    }

    /// Certifies the weight on `[0, r_max]` in dimension 1 and, on success,
    /// records the certified range and linear bound on `self`.
    pub fn certify(&mut self, r_max: f64, h: f64) -> Result<WeightCertificate> {
        let cert = certify_weight_in(self, r_max, h, 1)?;
        if cert.passed {
            self.certified_range = Some(r_max);
            self.linear_bound_m = Some(cert.linear_bound_m);
        }
        Ok(cert)
    }

    pub fn is_certified_to(&self, r: f64) -> bool {
        self.certified_range.is_some_and(|c| c >= r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateFailure {
    pub field: String,
    pub radius: Option<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightCertificate {
    pub kind: WeightKind,
    pub p: Option<f64>,
    pub coefficients: [f64; 5],
    /// The same coefficients printed with 17 significant digits.
    pub coefficients_decimal: [String; 5],
    pub c4_residuals: [f64; 5],
    /// `min φ''` over the grid.
    pub convexity_margin: f64,
    pub convexity_argmin: f64,
    /// `min φ''(φ')²` over the grid nodes with `r > 0`.
    pub hessian_quad_lower: f64,
    /// `min φ''(φ')² / r²` over `(0, 1]`.
    pub inner_shape_constant: f64,
    /// `min φ''(φ')² / shape(r)` beyond the junction, where `shape` is
    /// `1 / (r (1 + log r)²)` (log-linear) or `r^(3p - 4)` (power-law).
    pub outer_shape_ratio: f64,
    /// `sup |Δ²φ|` over the grid.
    pub bilap_sup: f64,
    /// `sup |Δ²φ| r^k` beyond the junction, `k = 3` (log-linear) or `4 - p`.
    pub bilap_decay_constant: f64,
    /// `min φ(r)` over grid nodes with `r > 0`.
    pub positivity_min: f64,
    pub phi_at_zero: f64,
    pub linear_bound_m: f64,
    pub dimension: usize,
    pub range: [f64; 2],
    pub grid_spacing: f64,
    pub passed: bool,
    pub failures: Vec<CertificateFailure>,
}

/// Certifies `w` on `[0, r_max]` with spacing `h` (dimension 1).
pub fn certify_weight(w: &Weight, r_max: f64, h: f64) -> Result<WeightCertificate> {
    certify_weight_in(w, r_max, h, 1)
}

#[derive(Clone, Copy)]
struct NodeStats {
    r: f64,
    phi: f64,
    phi2: f64,
    quad: f64,
    bilap: f64,
}

/// Certifies `w` on `[0, r_max]` with spacing `h`, evaluating `Δ²φ` in
/// dimension `n`.
pub fn certify_weight_in(w: &Weight, r_max: f64, h: f64, n: usize) -> Result<WeightCertificate> {
    if !(r_max > 1.0) {
        return Err(invalid("r_max", format!("{r_max} must exceed 1")));
    }
    if !(h > 0.0) || h > 1e-3 * r_max * (1.0 + 1e-12) {
        return Err(invalid("h", format!("{h} must lie in (0, 1e-3 * r_max]")));
    }
    if n == 0 {
        return Err(invalid("n", "dimension must be positive"));
    }
    let steps = (r_max / h).ceil() as usize;
    let stats: Vec<NodeStats> = (0..=steps)
        .into_par_iter()
        .map(|i| {
            let r = (i as f64 * h).min(r_max);
            let jet = w.jet(r);
            NodeStats {
                r,
                phi: jet.phi,
                phi2: jet.phi2,
                quad: jet.hessian_quadratic(),
                bilap: w.bilaplacian(r, n),
            }
        })
        .collect();

    let junction = w.coeffs.junction_radius;
    let c4_residuals = w.junction_residuals();
    let mut convexity_margin = f64::INFINITY;
    let mut convexity_argmin = 0.0;
    let mut hessian_quad_lower = f64::INFINITY;
    let mut inner_shape_constant = f64::INFINITY;
    let mut outer_shape_ratio = f64::INFINITY;
    let mut bilap_sup: f64 = 0.0;
    let mut bilap_decay_constant: f64 = 0.0;
    let mut positivity_min = f64::INFINITY;
    let mut positivity_argmin = 0.0;
    let mut linear_bound_m: f64 = 0.0;
    let mut finite = true;
    for s in &stats {
        finite &= s.phi.is_finite() && s.phi2.is_finite() && s.bilap.is_finite();
        if s.phi2 < convexity_margin {
            convexity_margin = s.phi2;
            convexity_argmin = s.r;
        }
        bilap_sup = bilap_sup.max(s.bilap.abs());
        if s.r > 0.0 {
            hessian_quad_lower = hessian_quad_lower.min(s.quad);
            if s.phi < positivity_min {
                positivity_min = s.phi;
                positivity_argmin = s.r;
            }
            linear_bound_m = linear_bound_m.max(s.phi / w.growth(s.r));
            if s.r <= junction {
                inner_shape_constant = inner_shape_constant.min(s.quad / (s.r * s.r));
            } else {
                outer_shape_ratio = outer_shape_ratio.min(s.quad / w.outer_shape(s.r));
                bilap_decay_constant =
                    bilap_decay_constant.max(s.bilap.abs() * s.r.powf(w.bilap_decay_exponent()));
            }
        }
    }
    let phi_at_zero = stats[0].phi;

    let mut failures = Vec::new();
    for (k, &res) in c4_residuals.iter().enumerate() {
        if !(res <= JUNCTION_TOL) {
            failures.push(CertificateFailure {
                field: format!("c4_residuals[{k}]"),
                radius: Some(junction),
                value: res,
            });
        }
    }
    if !(convexity_margin > 0.0) {
        failures.push(CertificateFailure {
            field: "convexity_margin".into(),
            radius: Some(convexity_argmin),
            value: convexity_margin,
        });
    }
    if phi_at_zero != 0.0 {
        failures.push(CertificateFailure {
            field: "phi_at_zero".into(),
            radius: Some(0.0),
            value: phi_at_zero,
        });
    }
    if !(positivity_min > 0.0) {
        failures.push(CertificateFailure {
            field: "positivity_min".into(),
            radius: Some(positivity_argmin),
            value: positivity_min,
        });
    }
    if !(inner_shape_constant > 0.0) {
        failures.push(CertificateFailure {
            field: "inner_shape_constant".into(),
            radius: None,
            value: inner_shape_constant,
        });
    }
    // The log-linear lower bound carries an explicit unit constant.
    let outer_floor = match w.kind {
        WeightKind::LogLinear => 1.0,
        WeightKind::PowerLaw => 0.0,
    };
    if r_max > junction && !(outer_shape_ratio > outer_floor) {
        failures.push(CertificateFailure {
            field: "outer_shape_ratio".into(),
            radius: None,
            value: outer_shape_ratio,
        });
    }
    if !finite {
        failures.push(CertificateFailure {
            field: "non_finite_jet".into(),
            radius: None,
            value: f64::NAN,
        });
    }

    let coefficients = w.coeffs.to_array();
    Ok(WeightCertificate {
        kind: w.kind,
        p: w.p,
        coefficients,
        coefficients_decimal: coefficients.map(format_f17),
        c4_residuals,
        convexity_margin,
        convexity_argmin,
        hessian_quad_lower,
        inner_shape_constant,
        outer_shape_ratio,
        bilap_sup,
        bilap_decay_constant,
        positivity_min,
        phi_at_zero,
        linear_bound_m,
        dimension: n,
        range: [0.0, r_max],
        grid_spacing: h,
        passed: failures.is_empty(),
        failures,
    })
}
