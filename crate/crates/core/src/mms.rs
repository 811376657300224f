//! Manufactured solutions for convergence studies of both solvers.
//!
//! Every manufactured field has the form `(1 + t) F(x, y)`, so backward Euler
//! reproduces its time derivative exactly and the observed error is purely
//! spatial.

use crate::constitutive::{ExchangeCoefficients, MechParams, Phase, PoreSize, ThermalParams, VolumeFractions};
use crate::fem::{DofMap, P1Element, QuadratureRule};
use crate::mechanics::{
    ChiMode, MechError, MechLoading, MechOptions, MechSolver, MechState, FIELD_P, FIELD_UF, FIELD_US,
};
use crate::mesh::{BoundaryTag, DiagonalPattern, Mesh};
use crate::thermal::{
    MassMatrix, NewtonSettings, ThermalBCs, ThermalError, ThermalForcing, ThermalSolver, ThermalState,
};
use crate::Vec2;

/// `amp sin(kx x + px) sin(ky y + py)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SepTrig {
    pub amp: f64,
    pub kx: f64,
    pub px: f64,
    pub ky: f64,
    pub py: f64,
}

impl SepTrig {
    pub const fn new(amp: f64, kx: f64, px: f64, ky: f64, py: f64) -> Self {
        SepTrig { amp, kx, px, ky, py }
    }

    pub fn value(&self, x: Vec2) -> f64 {
        self.amp * (self.kx * x.x + self.px).sin() * (self.ky * x.y + self.py).sin()
    }

    pub fn gradient(&self, x: Vec2) -> Vec2 {
        let (sx, cx) = (self.kx * x.x + self.px).sin_cos();
        let (sy, cy) = (self.ky * x.y + self.py).sin_cos();
        Vec2::new(self.amp * self.kx * cx * sy, self.amp * self.ky * sx * cy)
    }

    /// `(f_xx, f_xy, f_yy)`.
    pub fn hessian(&self, x: Vec2) -> (f64, f64, f64) {
        let (sx, cx) = (self.kx * x.x + self.px).sin_cos();
        let (sy, cy) = (self.ky * x.y + self.py).sin_cos();
        let a = self.amp;
        (
            -a * self.kx * self.kx * sx * sy,
            a * self.kx * self.ky * cx * cy,
            -a * self.ky * self.ky * sx * sy,
        )
    }

    pub fn laplacian(&self, x: Vec2) -> f64 {
        let (xx, _, yy) = self.hessian(x);
        xx + yy
    }
}

/// Vector field built from two [`SepTrig`] components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigVector(pub SepTrig, pub SepTrig);

impl TrigVector {
    pub fn value(&self, x: Vec2) -> Vec2 {
        Vec2::new(self.0.value(x), self.1.value(x))
    }

    pub fn divergence(&self, x: Vec2) -> f64 {
        self.0.gradient(x).x + self.1.gradient(x).y
    }

    pub fn laplacian(&self, x: Vec2) -> Vec2 {
        Vec2::new(self.0.laplacian(x), self.1.laplacian(x))
    }

    pub fn grad_div(&self, x: Vec2) -> Vec2 {
        let (axx, axy, _) = self.0.hessian(x);
        let (_, bxy, byy) = self.1.hessian(x);
        Vec2::new(axx + bxy, axy + byy)
    }
}

/// L2 norm of `u_h - u` over the mesh with degree-4 quadrature.
pub fn l2_error(mesh: &Mesh, nodal: &[f64], exact: impl Fn(Vec2) -> f64) -> f64 {
    let rule = QuadratureRule::degree4();
    let mut sum = 0.0;
    for e in 0..mesh.n_elements() {
        let el = P1Element::new(mesh.element_coords(e)).expect("mesh elements are non-degenerate");
        let tri = mesh.elements[e];
        for (bary, w) in rule.iter() {
            let uh: f64 = (0..3).map(|k| bary[k] * nodal[tri[k]]).sum();
            let d = uh - exact(el.point(bary));
            sum += 2.0 * el.area * w * d * d;
        }
    }
    sum.sqrt()
}

/// Vector version of [`l2_error`].
pub fn l2_error_vec(mesh: &Mesh, nodal: &[Vec2], exact: impl Fn(Vec2) -> Vec2) -> f64 {
    let x: Vec<f64> = nodal.iter().map(|v| v.x).collect();
    let y: Vec<f64> = nodal.iter().map(|v| v.y).collect();
    let ex = l2_error(mesh, &x, |p| exact(p).x);
    let ey = l2_error(mesh, &y, |p| exact(p).y);
    (ex * ex + ey * ey).sqrt()
}

/// Rates `log(e_i / e_{i+1}) / log(h_i / h_{i+1})` between successive levels.
pub fn observed_rates(h: &[f64], errors: &[f64]) -> Vec<f64> {
    h.windows(2)
        .zip(errors.windows(2))
        .map(|(h, e)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect()
}

/// Errors of one refinement level.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    /// `(field name, L2 error)` pairs.
    pub errors: Vec<(&'static str, f64)>,
    /// Largest Newton iteration count of any step (thermal only).
    pub max_newton: usize,
}

fn unit_square(n: usize) -> Mesh {
    Mesh::rectangle(1.0, 1.0, n, n, DiagonalPattern::Uniform).expect("valid mesh size")
}

/// Manufactured poro-mechanical problem on the unit square with Dirichlet
/// data for all fields on the whole boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct MechMms {
    pub params: MechParams,
    pub pressure_coupling: bool,
    pub p: SepTrig,
    pub u_s: TrigVector,
    pub u_f: TrigVector,
}

impl MechMms {
    /// O(1) coefficients so that every term of the system is exercised at a
    /// comparable scale. The debonding threshold is never reached.
    pub fn standard() -> Self {
        use std::f64::consts::PI;
        MechMms {
            params: MechParams {
                fractions: VolumeFractions::new(0.3, 0.4, 0.3),
                lambda_s: 2.0,
                mu_s: 1.0,
                lambda_f: 3.0,
                mu_f: 1.5,
                gamma_s: 0.0,
                gamma_f: 0.0,
                chi_0: 0.5,
                eps_strain: 1e6,
                c0: 1.0,
                k: 1.0,
            },
            pressure_coupling: true,
            p: SepTrig::new(1.0, PI, 0.5, PI, 0.25),
            u_s: TrigVector(SepTrig::new(0.5, PI, 0.3, 2.0, 0.6), SepTrig::new(0.4, 2.0, 0.2, PI, 0.9)),
            u_f: TrigVector(SepTrig::new(0.3, 2.5, 0.7, PI, 0.1), SepTrig::new(0.6, PI, 1.1, 1.5, 0.4)),
        }
    }

    pub fn options(&self) -> MechOptions {
        MechOptions {
            pressure_coupling: self.pressure_coupling,
            chi_mode: ChiMode::Lagged,
        }
    }

    pub fn pressure(&self, x: Vec2, t: f64) -> f64 {
        (1.0 + t) * self.p.value(x)
    }

    pub fn skeleton_displacement(&self, x: Vec2, t: f64) -> Vec2 {
        self.u_s.value(x) * (1.0 + t)
    }

    pub fn fiber_displacement(&self, x: Vec2, t: f64) -> Vec2 {
        self.u_f.value(x) * (1.0 + t)
    }

    pub fn exact_state(&self, mesh: &Mesh, t: f64) -> MechState {
        let mut s = MechState::zeros(mesh);
        s.time = t;
        for (i, &x) in mesh.nodes.iter().enumerate() {
            s.p[i] = self.pressure(x, t);
            s.u_s[i] = self.skeleton_displacement(x, t);
            s.u_f[i] = self.fiber_displacement(x, t);
        }
        s
    }

    /// `div(chi (E_s - E_f))` of the spatial profiles.
    fn coupling_div(&self, x: Vec2) -> Vec2 {
        let lap = self.u_s.laplacian(x) - self.u_f.laplacian(x);
        let gd = self.u_s.grad_div(x) - self.u_f.grad_div(x);
        (lap + gd) * (0.5 * self.params.chi_0)
    }

    fn pressure_term(&self, phi: f64, x: Vec2) -> Vec2 {
        if self.pressure_coupling {
            self.p.gradient(x) * phi
        } else {
            Vec2::zeros()
        }
    }

    /// Errors `(p, u_s, u_f)` after `steps` steps of size `dt` from the exact
    /// initial state.
    pub fn errors(&self, n: usize, dt: f64, steps: usize) -> Result<ConvergenceRow, MechError> {
        let mesh = unit_square(n);
        let mut solver = MechSolver::new(&mesh, self.params, self.options())?;
        let mut state = self.exact_state(&mesh, 0.0);
        for _ in 0..steps {
            state = solver.step(&state, self, dt)?.state;
        }
        let t = state.time;
        Ok(ConvergenceRow {
            n,
            h: 1.0 / n as f64,
            errors: vec![
                ("p", l2_error(&mesh, &state.p, |x| self.pressure(x, t))),
                ("u_s", l2_error_vec(&mesh, &state.u_s, |x| self.skeleton_displacement(x, t))),
                ("u_f", l2_error_vec(&mesh, &state.u_f, |x| self.fiber_displacement(x, t))),
            ],
            max_newton: 0,
        })
    }
}

impl MechLoading for MechMms {
    fn constraints(&self, mesh: &Mesh, dofs: &DofMap, t: f64) -> Vec<(usize, f64)> {
        let mut nodes: Vec<usize> = BoundaryTag::ALL.iter().flat_map(|&tag| mesh.nodes_with_tag(tag)).collect();
        nodes.sort_unstable();
        nodes.dedup();
        let mut out = Vec::with_capacity(5 * nodes.len());
        for n in nodes {
            let x = mesh.nodes[n];
            let (us, uf) = (self.skeleton_displacement(x, t), self.fiber_displacement(x, t));
            for c in 0..2 {
                out.push((dofs.global(FIELD_US, n, c), us[c]));
                out.push((dofs.global(FIELD_UF, n, c), uf[c]));
            }
            out.push((dofs.global(FIELD_P, n, 0), self.pressure(x, t)));
        }
        out
    }

    fn skeleton_force(&self, x: Vec2, t: f64) -> Vec2 {
        let p = &self.params;
        let elastic = self.u_s.laplacian(x) * p.mu_s + self.u_s.grad_div(x) * (p.lambda_s + p.mu_s);
        (-elastic - self.coupling_div(x) + self.pressure_term(p.fractions.solid, x)) * (1.0 + t)
    }

    fn fiber_force(&self, x: Vec2, t: f64) -> Vec2 {
        let p = &self.params;
        let elastic = self.u_f.laplacian(x) * p.mu_f + self.u_f.grad_div(x) * (p.lambda_f + p.mu_f);
        (-elastic + self.coupling_div(x) + self.pressure_term(p.fractions.fiber, x)) * (1.0 + t)
    }

    fn mass_source(&self, x: Vec2, t: f64) -> f64 {
        let p = &self.params;
        p.c0 * self.p.value(x)
            + p.fractions.solid * self.u_s.divergence(x)
            + p.fractions.fiber * self.u_f.divergence(x)
            - (1.0 + t) * p.k * self.p.laplacian(x)
    }

    fn has_sources(&self) -> bool {
        true
    }
}

/// Manufactured three-temperature problem on the unit square with the
/// default convective faces (hot top, cold bottom, insulated sides).
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalMms {
    pub params: ThermalParams,
    pub bcs: ThermalBCs,
    pub mass: MassMatrix,
    /// Constant offsets of the three profiles.
    pub base: [f64; 3],
    pub fields: [SepTrig; 3],
}

impl ThermalMms {
    /// O(1) coefficients with strong, unequal exchange and a pore size that
    /// varies over the domain.
    pub fn standard() -> Self {
        use std::f64::consts::PI;
        ThermalMms {
            params: ThermalParams {
                fractions: VolumeFractions::new(0.3, 0.5, 0.2),
                rho_s: 2.0,
                rho_g: 1.0,
                rho_f: 1.5,
                c_s: 1.0,
                c_g: 2.0,
                c_f: 1.0,
                kappa_s: 1.0,
                kappa_f: 0.5,
                kappa_bg: 2.0,
                l_g: 0.5,
                beta: 1.0,
                exchange: ExchangeCoefficients {
                    h_sg: 4.0,
                    h_sf: 2.0,
                    h_gf: 3.0,
                },
                h_air: 1.5,
                theta_hot: 2.0,
                theta_cold: 1.0,
                pore_size: PoreSize {
                    base: 1.0,
                    slope_x: 0.2,
                    slope_y: -0.5,
                },
            },
            bcs: ThermalBCs::default(),
            mass: MassMatrix::Lumped,
            base: [1.5, 1.0, 1.2],
            fields: [
                SepTrig::new(0.5, PI, 0.4, PI, 0.2),
                SepTrig::new(0.4, 2.0, 0.1, 2.5, 0.8),
                SepTrig::new(0.6, 1.5, 0.9, PI, 0.5),
            ],
        }
    }

    /// Spatial profile of a phase (the field at `t = 0`).
    fn profile(&self, phase: Phase, x: Vec2) -> f64 {
        self.base[phase.index()] + self.fields[phase.index()].value(x)
    }

    pub fn temperature(&self, phase: Phase, x: Vec2, t: f64) -> f64 {
        (1.0 + t) * self.profile(phase, x)
    }

    pub fn exact_state(&self, mesh: &Mesh, t: f64) -> ThermalState {
        let mut s = ThermalState::uniform(mesh, 0.0);
        s.time = t;
        for phase in Phase::ALL {
            for (i, &x) in mesh.nodes.iter().enumerate() {
                s.theta[phase.index()][i] = self.temperature(phase, x, t);
            }
        }
        s
    }

    /// `(phi kappa, grad(phi kappa))` of a phase.
    fn conductivity(&self, phase: Phase, x: Vec2) -> (f64, Vec2) {
        let p = &self.params;
        let phi = p.fractions.get(phase);
        match phase {
            Phase::Solid => (phi * p.kappa_s, Vec2::zeros()),
            Phase::Fiber => (phi * p.kappa_f, Vec2::zeros()),
            Phase::Gas => {
                let w = p.pore_size.at(x);
                let bl = p.beta * p.l_g;
                let kappa = p.kappa_bg * w / (bl + w);
                let dk = p.kappa_bg * bl / ((bl + w) * (bl + w));
                let grad_w = Vec2::new(p.pore_size.slope_x, p.pore_size.slope_y);
                (phi * kappa, grad_w * (phi * dk))
            }
        }
    }

    fn ambient(&self, tag: BoundaryTag) -> Option<f64> {
        if self.bcs.hot.contains(&tag) {
            Some(self.params.theta_hot)
        } else if self.bcs.cold.contains(&tag) {
            Some(self.params.theta_cold)
        } else {
            None
        }
    }

    /// Errors per phase after `steps` steps of size `dt` from the exact
    /// initial state.
    pub fn errors(
        &self,
        n: usize,
        dt: f64,
        steps: usize,
        settings: &NewtonSettings,
    ) -> Result<ConvergenceRow, ThermalError> {
        let mesh = unit_square(n);
        let mut solver = ThermalSolver::new(&mesh, self.params, self.bcs.clone(), self.mass)?;
        let mut state = self.exact_state(&mesh, 0.0);
        let mut max_newton = 0;
        for _ in 0..steps {
            let step = solver.step(&state, self, dt, settings)?;
            max_newton = max_newton.max(step.iterations);
            state = step.state;
        }
        let t = state.time;
        let err = |phase: Phase| l2_error(&mesh, state.phase(phase), |x| self.temperature(phase, x, t));
        Ok(ConvergenceRow {
            n,
            h: 1.0 / n as f64,
            errors: vec![
                ("theta_s", err(Phase::Solid)),
                ("theta_g", err(Phase::Gas)),
                ("theta_f", err(Phase::Fiber)),
            ],
            max_newton,
        })
    }
}

impl ThermalForcing for ThermalMms {
    fn volume(&self, phase: Phase, x: Vec2, t: f64) -> f64 {
        let f = &self.fields[phase.index()];
        let (k, grad_k) = self.conductivity(phase, x);
        let s = 1.0 + t;
        let diffusion = s * (k * f.laplacian(x) + grad_k.dot(&f.gradient(x)));
        let theta = self.temperature(phase, x, t);
        let mut exchange = 0.0;
        for other in Phase::ALL {
            if other != phase {
                let d = self.temperature(other, x, t) - theta;
                exchange += self.params.exchange.pair(phase, other) * d * d * d;
            }
        }
        self.params.capacity(phase) * self.profile(phase, x) - diffusion - exchange
    }

    fn boundary(&self, phase: Phase, tag: BoundaryTag, x: Vec2, t: f64) -> f64 {
        let (k, _) = self.conductivity(phase, x);
        let flux = (1.0 + t) * k * self.fields[phase.index()].gradient(x).dot(&tag.normal());
        let robin = match self.ambient(tag) {
            Some(amb) => {
                self.params.fractions.get(phase) * self.params.h_air * (self.temperature(phase, x, t) - amb)
            }
            None => 0.0,
        };
        flux + robin
    }

    fn is_active(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sep_trig_derivatives_match_central_differences() {
        let f = SepTrig::new(0.7, 2.0, 0.3, 3.0, 0.1);
        let x = Vec2::new(0.31, 0.77);
        let h = 1e-5;
        let ex = Vec2::new(h, 0.0);
        let ey = Vec2::new(0.0, h);
        let g = f.gradient(x);
        assert!((g.x - (f.value(x + ex) - f.value(x - ex)) / (2.0 * h)).abs() < 1e-8);
        assert!((g.y - (f.value(x + ey) - f.value(x - ey)) / (2.0 * h)).abs() < 1e-8);
        let (xx, xy, yy) = f.hessian(x);
        assert!((xx - (f.gradient(x + ex).x - f.gradient(x - ex).x) / (2.0 * h)).abs() < 1e-7);
        assert!((xy - (f.gradient(x + ey).x - f.gradient(x - ey).x) / (2.0 * h)).abs() < 1e-7);
        assert!((yy - (f.gradient(x + ey).y - f.gradient(x - ey).y) / (2.0 * h)).abs() < 1e-7);
    }

    #[test]
    fn l2_error_of_interpolated_affine_field_is_zero() {
        let mesh = unit_square(3);
        let v: Vec<f64> = mesh.nodes.iter().map(|x| 2.0 * x.x - x.y + 0.5).collect();
        assert!(l2_error(&mesh, &v, |x| 2.0 * x.x - x.y + 0.5) < 1e-15);
        // constant offset c gives c * sqrt(area)
        assert!((l2_error(&mesh, &v, |x| 2.0 * x.x - x.y) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn rates_of_exact_second_order_sequence() {
        let r = observed_rates(&[0.1, 0.05, 0.025], &[4.0, 1.0, 0.25]);
        assert!(r.iter().all(|&v| (v - 2.0).abs() < 1e-14));
    }
}
