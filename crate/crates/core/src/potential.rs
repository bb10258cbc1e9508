//! Radial potentials with declared decay envelopes.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::field::GridSpec;

/// Static radial profile `r -> value`.
pub type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
/// Space-time radial profile `(t, r) -> value`.
pub type SpaceTimeProfile = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Zero-order potential `V`, first-order coefficient `W = (W_t, W_r x̂)` and
/// an optional repulsive part `V2`, all radial.
///
/// Only the radial component of the spatial part `W̃` is modelled; tangential
/// components do not act on radial fields.
#[derive(Clone)]
pub struct PotentialSpec {
    pub label: String,
    pub v: SpaceTimeProfile,
    pub w_time: SpaceTimeProfile,
    pub w_radial: SpaceTimeProfile,
    pub v2: Option<Profile>,
    /// Declared envelope `|V| <= c_decay (1 + r²)^(-alpha/2)`.
    pub c_decay: f64,
    pub alpha: f64,
    /// Declared envelope `|W| <= w_c_decay (1 + r²)^(-w_alpha/2)`.
    pub w_c_decay: f64,
    pub w_alpha: f64,
}

impl fmt::Debug for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PotentialSpec")
            .field("label", &self.label)
            .field("c_decay", &self.c_decay)
            .field("alpha", &self.alpha)
            .field("w_c_decay", &self.w_c_decay)
            .field("w_alpha", &self.w_alpha)
            .field("has_v2", &self.v2.is_some())
            .finish()
    }
}

fn zero_profile() -> SpaceTimeProfile {
    Arc::new(|_, _| 0.0)
}

fn envelope(c: f64, alpha: f64, r: f64) -> f64 {
    c * (1.0 + r * r).powf(-0.5 * alpha)
}

impl PotentialSpec {
    pub fn zero() -> Self {
        Self {
            label: "zero".into(),
            v: zero_profile(),
            w_time: zero_profile(),
            w_radial: zero_profile(),
            v2: None,
            c_decay: 0.0,
            alpha: 1.0,
            w_c_decay: 0.0,
            w_alpha: 1.0,
        }
    }

    /// `V(r) = -depth sech²(r / width)`, declared with `alpha = 1` and the
    /// smallest constant that makes the envelope hold.
    pub fn sech_well(depth: f64, width: f64) -> Result<Self> {
        if !(depth >= 0.0) {
            return Err(invalid("depth", format!("{depth} must be nonnegative")));
        }
        if !(width > 0.0) {
            return Err(invalid("width", format!("{width} must be positive")));
        }
        let alpha = 1.0;
        // sup_r sech²(r/w) (1 + r²)^(1/2) on a fine grid, padded slightly.
        let kappa = (0..=200_000)
            .map(|i| {
                let r = i as f64 * 1e-3;
                let s = 1.0 / (r / width).cosh();
                s * s * (1.0 + r * r).sqrt()
            })
            .fold(1.0, f64::max)
            * (1.0 + 1e-9);
        Ok(Self {
            label: format!("sech-well(depth={depth}, width={width})"),
            v: Arc::new(move |_, r| {
                let s = 1.0 / (r / width).cosh();
                -depth * s * s
            }),
            c_decay: depth * kappa,
            alpha,
            ..Self::zero()
        })
    }

    /// `V(r) = c_decay (1 + r²)^(-alpha/2)`.
    pub fn power_decay(c_decay: f64, alpha: f64) -> Result<Self> {
        if !(c_decay >= 0.0) {
            return Err(invalid("c_decay", format!("{c_decay} must be nonnegative")));
        }
        if !(alpha >= 0.0) {
            return Err(invalid("alpha", format!("{alpha} must be nonnegative")));
        }
        Ok(Self {
            label: format!("power-decay(C={c_decay}, alpha={alpha})"),
            v: Arc::new(move |_, r| envelope(c_decay, alpha, r)),
            c_decay,
            alpha,
            ..Self::zero()
        })
    }

    /// Sets `W` to `amplitude (1 + r²)^(-w_alpha/2)` in modulus, split evenly
    /// between the time and radial components.
    pub fn with_w(mut self, amplitude: f64, w_alpha: f64) -> Self {
        let component = amplitude * std::f64::consts::FRAC_1_SQRT_2;
        let profile: SpaceTimeProfile = Arc::new(move |_, r| envelope(component, w_alpha, r));
        self.w_time = profile.clone();
        self.w_radial = profile;
        self.w_c_decay = amplitude.abs();
        self.w_alpha = w_alpha;
        self
    }

    pub fn with_v2(mut self, v2: Profile) -> Self {
        self.v2 = Some(v2);
        self
    }

    /// Scales `V` and its declared constant by `factor`.
    pub fn scaled(mut self, factor: f64) -> Self {
        let v = self.v.clone();
        self.v = Arc::new(move |t, r| factor * v(t, r));
        self.c_decay *= factor.abs();
        self.label = format!("{} x {factor}", self.label);
        self
    }

    /// Checks the declared envelopes on the grid nodes at time `t`.
    pub fn check_decay(&self, grid: &GridSpec, t: f64) -> DecayCheck {
        let mut v_ratio: f64 = 0.0;
        let mut w_ratio: f64 = 0.0;
        for i in 0..grid.num_points {
            let r = grid.radius(i);
            let v = (self.v)(t, r).abs();
            let w = (self.w_time)(t, r).hypot((self.w_radial)(t, r));
            v_ratio = v_ratio.max(ratio(v, envelope(self.c_decay, self.alpha, r)));
            w_ratio = w_ratio.max(ratio(w, envelope(self.w_c_decay, self.w_alpha, r)));
        }
        DecayCheck {
            v_ratio_max: v_ratio,
            w_ratio_max: w_ratio,
            passed: v_ratio <= 1.0 + 1e-12 && w_ratio <= 1.0 + 1e-12,
        }
    }
}

fn ratio(value: f64, bound: f64) -> f64 {
    if value == 0.0 {
        0.0
    } else if bound == 0.0 {
        f64::INFINITY
    } else {
        value / bound
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayCheck {
    pub v_ratio_max: f64,
    pub w_ratio_max: f64,
    pub passed: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn library_potentials_meet_their_envelopes() {
        let g = GridSpec::line(20.0, 4001).unwrap();
        for p in [
            PotentialSpec::zero(),
            PotentialSpec::sech_well(2.0, 1.0).unwrap(),
            PotentialSpec::sech_well(1.0, 3.0).unwrap(),
            PotentialSpec::power_decay(1.5, 0.6).unwrap().with_w(0.5, 0.6),
        ] {
            let c = p.check_decay(&g, 0.0);
            assert!(c.passed, "{p:?}: {c:?}");
        }
    }

    #[test]
    fn understated_constant_is_caught() {
        let g = GridSpec::line(10.0, 1001).unwrap();
        let mut p = PotentialSpec::sech_well(2.0, 1.0).unwrap();
        p.c_decay = 1.0;
        assert!(!p.check_decay(&g, 0.0).passed);
    }

    #[test]
    fn sech_well_shape() {
        let p = PotentialSpec::sech_well(2.0, 1.0).unwrap();
        assert_eq!((p.v)(0.0, 0.0), -2.0);
        let s = 1.0 / 1f64.cosh();
        assert!(((p.v)(3.0, 1.0) + 2.0 * s * s).abs() < 1e-15);
    }
}
