//! Pointwise material laws and the parameter sets of both models.

use thiserror::Error;

use crate::{Tensor2, Vec2};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstitutiveError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Symmetric part of a displacement gradient, `(G + G^T) / 2`.
pub fn strain(grad_u: &Tensor2) -> Tensor2 {
    (grad_u + grad_u.transpose()) * 0.5
}

/// Linear isotropic elastic stress `2 mu E + lambda tr(E) I`.
pub fn elastic_stress(e: &Tensor2, lambda: f64, mu: f64) -> Tensor2 {
    e * (2.0 * mu) + Tensor2::identity() * (lambda * e.trace())
}

/// Skeleton/fiber strain-coupling coefficient. The bond holds (`chi_0`)
/// while the Frobenius norm of the relative strain stays strictly below
/// `eps_strain`; at or beyond it the phases are debonded (0).
pub fn chi_coefficient(e_s: &Tensor2, e_f: &Tensor2, chi_0: f64, eps_strain: f64) -> f64 {
    if (e_s - e_f).norm() < eps_strain {
        chi_0
    } else {
        0.0
    }
}

/// Darcy flux `G = -k grad(p)`.
pub fn darcy_flux(grad_p: Vec2, k: f64) -> Vec2 {
    -grad_p * k
}

/// Gas conductivity reduced by the Knudsen effect,
/// `kappa_bg / (beta * l_g / omega + 1)`.
pub fn knudsen_conductivity(omega: f64, l_g: f64, beta: f64, kappa_bg: f64) -> Result<f64, ConstitutiveError> {
    if !(omega > 0.0) {
        return Err(ConstitutiveError::InvalidArgument(format!(
            "pore size must be positive, got {omega}"
        )));
    }
    Ok(kappa_bg / (beta * (l_g / omega) + 1.0))
}

/// Heat gained by phase `a` from phase `b` through the cubic contact law,
/// `h_ab (theta_b - theta_a)^3`. Antisymmetric under swapping `a` and `b`.
pub fn exchange_source(theta_a: f64, theta_b: f64, h_ab: f64) -> f64 {
    let d = theta_b - theta_a;
    h_ab * d * d * d
}

/// Partial derivatives of [`exchange_source`] with respect to `theta_a` and `theta_b`.
pub fn exchange_source_derivatives(theta_a: f64, theta_b: f64, h_ab: f64) -> (f64, f64) {
    let d = theta_b - theta_a;
    let s = 3.0 * h_ab * d * d;
    (-s, s)
}

/// Rate of gas density change under the storage relation,
/// `C0 (rho_g / phi_g) dp/dt`.
pub fn storage_rate(dp_dt: f64, c0: f64, rho_g: f64, phi_g: f64) -> Result<f64, ConstitutiveError> {
    if !(phi_g > 0.0) {
        return Err(ConstitutiveError::InvalidArgument(format!(
            "gas volume fraction must be positive, got {phi_g}"
        )));
    }
    Ok(c0 * (rho_g / phi_g) * dp_dt)
}

/// The three phases of the composite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    Solid,
    Gas,
    Fiber,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::Solid, Phase::Gas, Phase::Fiber];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn suffix(self) -> &'static str {
        match self {
            Phase::Solid => "s",
            Phase::Gas => "g",
            Phase::Fiber => "f",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeFractions {
    pub solid: f64,
    pub gas: f64,
    pub fiber: f64,
}

impl VolumeFractions {
    pub fn new(solid: f64, gas: f64, fiber: f64) -> Self {
        VolumeFractions { solid, gas, fiber }
    }

    pub fn get(&self, phase: Phase) -> f64 {
        match phase {
            Phase::Solid => self.solid,
            Phase::Gas => self.gas,
            Phase::Fiber => self.fiber,
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, v) in [("phi_s", self.solid), ("phi_g", self.gas), ("phi_f", self.fiber)] {
            if !(0.0..=1.0).contains(&v) {
                out.push(format!("{name} = {v} is not in [0, 1]"));
            }
        }
        let sum = self.solid + self.gas + self.fiber;
        if !((sum - 1.0).abs() <= 1e-12) {
            out.push(format!("volume fractions sum to {sum}, not 1"));
        }
        out
    }
}

impl Default for VolumeFractions {
    /// Assumed values for a highly porous aerogel composite.
    fn default() -> Self {
        VolumeFractions::new(0.1, 0.8, 0.1)
    }
}

/// Material and interaction coefficients of the mechanical model (SI units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MechParams {
    pub fractions: VolumeFractions,
    pub lambda_s: f64,
    pub mu_s: f64,
    pub lambda_f: f64,
    pub mu_f: f64,
    /// Drag coefficients (Pa s / m^2); only used by the diagnostics.
    pub gamma_s: f64,
    pub gamma_f: f64,
    pub chi_0: f64,
    pub eps_strain: f64,
    /// Storage coefficient (1/Pa).
    pub c0: f64,
    /// Permeability (m^2).
    pub k: f64,
}

impl MechParams {
    /// Moduli, storage, permeability and coupling of the reference composite;
    /// volume fractions, drag and the debonding threshold are assumed values.
    pub fn reference() -> Self {
        MechParams {
            fractions: VolumeFractions::default(),
            lambda_s: 0.7e6,
            mu_s: 0.27e6,
            lambda_f: 5.77e6,
            mu_f: 3.84e6,
            gamma_s: 0.0,
            gamma_f: 0.0,
            chi_0: 0.1e6,
            eps_strain: 0.05,
            c0: 8.5e-9,
            k: 1e-13,
        }
    }

    pub fn lame(&self, phase: Phase) -> (f64, f64) {
        match phase {
            Phase::Solid => (self.lambda_s, self.mu_s),
            Phase::Fiber => (self.lambda_f, self.mu_f),
            Phase::Gas => (0.0, 0.0),
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = self.fractions.violations();
        for (name, v) in [
            ("lambda_s", self.lambda_s),
            ("lambda_f", self.lambda_f),
            ("gamma_s", self.gamma_s),
            ("gamma_f", self.gamma_f),
            ("chi_0", self.chi_0),
            ("eps_strain", self.eps_strain),
            ("c0", self.c0),
            ("k", self.k),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                out.push(format!("{name} = {v} must be finite and non-negative"));
            }
        }
        for (name, v) in [("mu_s", self.mu_s), ("mu_f", self.mu_f)] {
            if !(v > 0.0 && v.is_finite()) {
                out.push(format!("{name} = {v} must be finite and positive"));
            }
        }
        out
    }
}

/// Interphase exchange coefficients of the cubic contact law (W / m^3 K^3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExchangeCoefficients {
    pub h_sg: f64,
    pub h_sf: f64,
    pub h_gf: f64,
}

impl ExchangeCoefficients {
    pub fn pair(&self, a: Phase, b: Phase) -> f64 {
        match (a.min(b), a.max(b)) {
            (Phase::Solid, Phase::Gas) => self.h_sg,
            (Phase::Solid, Phase::Fiber) => self.h_sf,
            (Phase::Gas, Phase::Fiber) => self.h_gf,
            _ => 0.0,
        }
    }
}

/// Affine pore-size field `omega(x, y) = base + slope_x x + slope_y y` (m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoreSize {
    pub base: f64,
    pub slope_x: f64,
    pub slope_y: f64,
}

impl PoreSize {
    /// Pore size shrinking linearly from `at_bottom` at y = 0 by `drop`
    /// over the thickness `th`.
    pub fn linear_in_thickness(at_bottom: f64, drop: f64, th: f64) -> Self {
        PoreSize {
            base: at_bottom,
            slope_x: 0.0,
            slope_y: -drop / th,
        }
    }

    pub fn at(&self, p: Vec2) -> f64 {
        self.base + self.slope_x * p.x + self.slope_y * p.y
    }

    /// Smallest value over `[0, lx] x [0, ly]` (attained at a corner).
    pub fn min_over(&self, lx: f64, ly: f64) -> f64 {
        [(0.0, 0.0), (lx, 0.0), (0.0, ly), (lx, ly)]
            .into_iter()
            .map(|(x, y)| self.at(Vec2::new(x, y)))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Coefficients of the three-temperature model (SI units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalParams {
    pub fractions: VolumeFractions,
    pub rho_s: f64,
    pub rho_g: f64,
    pub rho_f: f64,
    pub c_s: f64,
    pub c_g: f64,
    pub c_f: f64,
    pub kappa_s: f64,
    pub kappa_f: f64,
    pub kappa_bg: f64,
    pub l_g: f64,
    pub beta: f64,
    pub exchange: ExchangeCoefficients,
    pub h_air: f64,
    pub theta_hot: f64,
    pub theta_cold: f64,
    pub pore_size: PoreSize,
}

impl ThermalParams {
    /// Reference composite on a domain of thickness `th`: conductivities,
    /// densities, `l_g` and the pore-size profile of the reference setup.
    /// Specific heats, `beta` and the boundary temperatures are assumed
    /// defaults; the exchange coefficients have no defaults.
    pub fn reference(exchange: ExchangeCoefficients, h_air: f64, th: f64) -> Self {
        ThermalParams {
            fractions: VolumeFractions::default(),
            rho_s: 2650.0,
            rho_g: 1.836,
            rho_f: 1000.0,
            c_s: 750.0,
            c_g: 1005.0,
            c_f: 1200.0,
            kappa_s: 0.5,
            kappa_f: 0.066,
            kappa_bg: 0.08,
            l_g: 1e-3,
            beta: 1.0,
            exchange,
            h_air,
            theta_hot: 400.0,
            theta_cold: 300.0,
            pore_size: PoreSize::linear_in_thickness(2e-3, 1.95e-3, th),
        }
    }

    pub fn density(&self, phase: Phase) -> f64 {
        match phase {
            Phase::Solid => self.rho_s,
            Phase::Gas => self.rho_g,
            Phase::Fiber => self.rho_f,
        }
    }

    pub fn specific_heat(&self, phase: Phase) -> f64 {
        match phase {
            Phase::Solid => self.c_s,
            Phase::Gas => self.c_g,
            Phase::Fiber => self.c_f,
        }
    }

    /// Volumetric heat capacity `rho phi c` of a phase.
    pub fn capacity(&self, phase: Phase) -> f64 {
        self.density(phase) * self.fractions.get(phase) * self.specific_heat(phase)
    }

    /// Intrinsic conductivity of a phase at a point (Knudsen law for the gas).
    pub fn conductivity(&self, phase: Phase, p: Vec2) -> Result<f64, ConstitutiveError> {
        match phase {
            Phase::Solid => Ok(self.kappa_s),
            Phase::Fiber => Ok(self.kappa_f),
            Phase::Gas => knudsen_conductivity(self.pore_size.at(p), self.l_g, self.beta, self.kappa_bg),
        }
    }

    /// Effective conductivity `phi kappa` entering the diffusion term.
    pub fn effective_conductivity(&self, phase: Phase, p: Vec2) -> Result<f64, ConstitutiveError> {
        Ok(self.fractions.get(phase) * self.conductivity(phase, p)?)
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = self.fractions.violations();
        for (name, v) in [
            ("rho_s", self.rho_s),
            ("rho_g", self.rho_g),
            ("rho_f", self.rho_f),
            ("c_s", self.c_s),
            ("c_g", self.c_g),
            ("c_f", self.c_f),
            ("kappa_s", self.kappa_s),
            ("kappa_f", self.kappa_f),
            ("kappa_bg", self.kappa_bg),
            ("l_g", self.l_g),
            ("beta", self.beta),
            ("h_sg", self.exchange.h_sg),
            ("h_sf", self.exchange.h_sf),
            ("h_gf", self.exchange.h_gf),
            ("h_air", self.h_air),
            ("theta_hot", self.theta_hot),
            ("theta_cold", self.theta_cold),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                out.push(format!("{name} = {v} must be finite and non-negative"));
            }
        }
        if self.theta_hot < self.theta_cold {
            out.push(format!(
                "theta_hot = {} is below theta_cold = {}",
                self.theta_hot, self.theta_cold
            ));
        }
        out
    }

    /// Violations that depend on the domain `[0, lx] x [0, ly]`.
    pub fn violations_on(&self, lx: f64, ly: f64) -> Vec<String> {
        let mut out = self.violations();
        let w = self.pore_size.min_over(lx, ly);
        if !(w > 0.0) {
            out.push(format!("pore size reaches {w} m on the domain; it must stay positive"));
        }
        out
    }
}
