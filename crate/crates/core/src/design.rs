//! Integrated-photonics design calculations: fiber-waveguide mode overlap
//! and birefringent directional-coupler design.
//!
//! The waveguides' slight H/V birefringence (Δn ≈ 1e-5) makes the evanescent
//! coupling rate polarization dependent, so a coupler length can be chosen
//! where H returns entirely to its input mode while V transfers entirely to
//! the neighbour — an on-chip polarizing splitter. Coupled-mode theory at
//! zero detuning gives the cross-coupled power `sin²(κ(λ)·L)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An elliptical Gaussian mode, stored as field radii (half the mode-field
/// diameter) along the two transverse axes, in µm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianMode {
    pub wx: f64,
    pub wy: f64,
}

impl GaussianMode {
    pub fn new(wx: f64, wy: f64) -> Result<GaussianMode> {
        if wx <= 0.0 || wy <= 0.0 || !wx.is_finite() || !wy.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "mode radii must be positive, got {wx} x {wy}"
            )));
        }
        Ok(GaussianMode { wx, wy })
    }

    /// From mode-field diameters (the units datasheets quote).
    pub fn from_mfd(dx: f64, dy: f64) -> Result<GaussianMode> {
        GaussianMode::new(dx / 2.0, dy / 2.0)
    }

    pub fn circular_mfd(d: f64) -> Result<GaussianMode> {
        GaussianMode::from_mfd(d, d)
    }
}

/// Power overlap of two aligned elliptical Gaussian modes:
/// `η = [2w₁ₓw₂ₓ/(w₁ₓ²+w₂ₓ²)]·[2w₁ᵧw₂ᵧ/(w₁ᵧ²+w₂ᵧ²)]`.
/// Symmetric in its arguments and 1 exactly when the modes are identical.
pub fn overlap_efficiency(m1: &GaussianMode, m2: &GaussianMode) -> f64 {
    let axis = |w1: f64, w2: f64| 2.0 * w1 * w2 / (w1 * w1 + w2 * w2);
    axis(m1.wx, m2.wx) * axis(m1.wy, m2.wy)
}

/// Relative improvement `η_new/η_old − 1`.
pub fn improvement_ratio(eta_new: f64, eta_old: f64) -> f64 {
    eta_new / eta_old - 1.0
}

/// A directional coupler: coupling rates per polarization at the design
/// wavelength, interaction length, and the first-order dispersion of the
/// rates.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CouplerSpec {
    /// Coupling rate for H at the design wavelength, 1/mm.
    pub kappa_h: f64,
    /// Coupling rate for V at the design wavelength, 1/mm.
    pub kappa_v: f64,
    /// Length of the coupling region, mm.
    pub length_mm: f64,
    /// dκ/dλ for H, (1/mm)/nm.
    pub dkappa_h: f64,
    /// dκ/dλ for V, (1/mm)/nm.
    pub dkappa_v: f64,
    /// Design wavelength, nm.
    pub design_wavelength_nm: f64,
}

impl CouplerSpec {
    pub fn validate(&self) -> Result<()> {
        if self.kappa_h <= 0.0 || self.kappa_v <= 0.0 || self.length_mm <= 0.0 {
            return Err(Error::InvalidParameter(
                "coupling rates and length must be positive".into(),
            ));
        }
        Ok(())
    }

    fn kappa(&self, pol: CouplerPol, wavelength_nm: f64) -> f64 {
        let detuning = wavelength_nm - self.design_wavelength_nm;
        match pol {
            CouplerPol::H => self.kappa_h + detuning * self.dkappa_h,
            CouplerPol::V => self.kappa_v + detuning * self.dkappa_v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplerPol {
    H,
    V,
}

/// Fraction of power transferred to the neighbouring waveguide:
/// `sin²(κ_pol(λ)·L)` with `κ_pol(λ) = κ_pol + (λ−λ₀)·dκ/dλ`.
pub fn cross_coupling(spec: &CouplerSpec, pol: CouplerPol, wavelength_nm: f64) -> f64 {
    let arg = spec.kappa(pol, wavelength_nm) * spec.length_mm;
    arg.sin().powi(2)
}

/// Result of a polarizing-splitter length search.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PbsDesign {
    pub spec: CouplerSpec,
    /// H power leaking to the wrong (cross) port, `sin²(κ_H L)`.
    pub leakage_h: f64,
    /// V power leaking to the wrong (return) port, `cos²(κ_V L)`.
    pub leakage_v: f64,
}

impl PbsDesign {
    pub fn leakage(&self) -> f64 {
        self.leakage_h + self.leakage_v
    }
}

/// Find the coupler length `L ≤ max_length` minimizing the splitter leakage
/// `ε(L) = sin²(κ_H·L) + cos²(κ_V·L)` (H should return, V should transfer).
///
/// Exact solutions (`ε = 0`) exist when `κ_H/κ_V = 2m/(2n+1)`; otherwise the
/// best commensuration within the length budget is returned, so longer
/// budgets can only improve the result.
pub fn design_pbs(kappa_h: f64, kappa_v: f64, max_length_mm: f64) -> Result<PbsDesign> {
    if kappa_h <= 0.0 || kappa_v <= 0.0 || !kappa_h.is_finite() || !kappa_v.is_finite() {
        return Err(Error::InvalidParameter(
            "coupling rates must be positive and finite".into(),
        ));
    }
    if (kappa_h - kappa_v).abs() < 1e-12 {
        return Err(Error::InvalidParameter(
            "a polarizing splitter needs different coupling rates for H and V".into(),
        ));
    }
    if max_length_mm <= 0.0 {
        return Err(Error::InvalidParameter("max_length must be positive".into()));
    }
    let leakage = |l: f64| (kappa_h * l).sin().powi(2) + (kappa_v * l).cos().powi(2);
    let derivative = |l: f64| kappa_h * (2.0 * kappa_h * l).sin() - kappa_v * (2.0 * kappa_v * l).sin();

    // Dense grid to locate candidate basins, then Newton on ε' to polish.
    let k_max = kappa_h.max(kappa_v);
    let step = std::f64::consts::PI / (64.0 * k_max);
    let n_steps = (max_length_mm / step).ceil() as usize;
    let mut best_l = max_length_mm;
    let mut best = leakage(best_l);
    for i in 1..=n_steps {
        let l = (i as f64 * step).min(max_length_mm);
        let e = leakage(l);
        if e < best {
            best = e;
            best_l = l;
        }
    }
    // Newton refinement (quadratic minimum: converges fast); keep inside
    // (0, max_length].
    let mut l = best_l;
    for _ in 0..60 {
        let d1 = derivative(l);
        let h = 1e-7 / k_max;
        let d2 = (derivative(l + h) - derivative(l - h)) / (2.0 * h);
        if d2.abs() < 1e-30 {
            break;
        }
        let next = l - d1 / d2;
        if !next.is_finite() || next <= 0.0 || next > max_length_mm {
            break;
        }
        if (next - l).abs() < 1e-16 {
            l = next;
            break;
        }
        l = next;
    }
    if leakage(l) < best {
        best_l = l;
    }
    let spec = CouplerSpec {
        kappa_h,
        kappa_v,
        length_mm: best_l,
        dkappa_h: 0.0,
        dkappa_v: 0.0,
        design_wavelength_nm: 789.0,
    };
    Ok(PbsDesign {
        spec,
        leakage_h: (kappa_h * best_l).sin().powi(2),
        leakage_v: (kappa_v * best_l).cos().powi(2),
    })
}

/// Extinction ratios are reported capped at this value (a perfect splitter
/// at zero bandwidth has no finite ratio).
pub const EXTINCTION_CAP: f64 = 1e6;

/// Right-port to wrong-port power ratio averaged over a top-hat spectrum of
/// the given bandwidth centred on the design wavelength.
///
/// The wrong-port power is `sin²(κ_H(λ)L)` for H and `1−sin²(κ_V(λ)L)` for
/// V, averaged over wavelength and polarization; dispersion makes it grow
/// with bandwidth, so the ratio is non-increasing in bandwidth.
pub fn extinction_over_bandwidth(spec: &CouplerSpec, bandwidth_nm: f64) -> Result<f64> {
    spec.validate()?;
    if bandwidth_nm < 0.0 {
        return Err(Error::InvalidParameter("bandwidth must be non-negative".into()));
    }
    let wrong_at = |wavelength: f64| -> f64 {
        let h = cross_coupling(spec, CouplerPol::H, wavelength);
        let v = 1.0 - cross_coupling(spec, CouplerPol::V, wavelength);
        0.5 * (h + v)
    };
    let wrong = if bandwidth_nm == 0.0 {
        wrong_at(spec.design_wavelength_nm)
    } else {
        // Simpson's rule over the top-hat band.
        let n = 400; // even
        let a = spec.design_wavelength_nm - bandwidth_nm / 2.0;
        let h = bandwidth_nm / n as f64;
        let mut sum = wrong_at(a) + wrong_at(a + bandwidth_nm);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * wrong_at(a + i as f64 * h);
        }
        (sum * h / 3.0) / bandwidth_nm
    };
    if wrong <= 0.0 {
        return Ok(EXTINCTION_CAP);
    }
    Ok(((1.0 - wrong) / wrong).min(EXTINCTION_CAP))
}

/// Find the κ dispersion magnitude (applied to both polarizations) at which
/// a splitter shows the given extinction ratio over the given bandwidth.
/// Bisection on a bracketing interval; used to calibrate demo couplers
/// against a measured extinction.
pub fn calibrate_dispersion(
    spec: &CouplerSpec,
    bandwidth_nm: f64,
    target_ratio: f64,
) -> Result<f64> {
    if target_ratio <= 0.0 || target_ratio >= EXTINCTION_CAP {
        return Err(Error::InvalidParameter(
            "target extinction must be positive and below the cap".into(),
        ));
    }
    let ratio_at = |d: f64| -> Result<f64> {
        let candidate = CouplerSpec {
            dkappa_h: d,
            dkappa_v: d,
            ..*spec
        };
        extinction_over_bandwidth(&candidate, bandwidth_nm)
    };
    let mut lo = 0.0f64;
    let mut hi = 1e-4;
    while ratio_at(hi)? > target_ratio {
        hi *= 2.0;
        if hi > 1e3 {
            return Err(Error::InvalidParameter(
                "no dispersion reaches the target extinction".into(),
            ));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ratio_at(mid)? > target_ratio {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Demo coupler used by the command-line tools when no rates are supplied:
/// κ_H/κ_V = 2 admits an exact splitter at `L = π/κ_H`. The rates themselves
/// are illustrative, not measured values.
pub fn demo_coupler() -> PbsDesign {
    design_pbs(2.0, 1.0, 10.0).expect("demo parameters are valid")
}
