//! Mixture aggregates and phase mass-balance residuals, evaluated from
//! solver output for verification.

use thiserror::Error;

use crate::constitutive::{elastic_stress, strain, MechParams, Phase, ThermalParams};
use crate::fem::{P1Element, QuadratureRule};
use crate::mechanics::{divergence, MechState};
use crate::mesh::Mesh;
use crate::thermal::ThermalState;
use crate::{Tensor2, Vec2};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Pointwise data of one phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    /// Intrinsic density (kg/m^3).
    pub density: f64,
    pub fraction: f64,
    pub velocity: Vec2,
    /// Partial stress (Pa).
    pub stress: Tensor2,
    /// Partial heat flux (W/m^2).
    pub heat_flux: Vec2,
    /// Internal energy per unit mass (J/kg).
    pub internal_energy: f64,
}

/// Mixture quantities at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSummary {
    pub density: f64,
    /// Mass-averaged velocity.
    pub velocity: Vec2,
    /// Diffusion velocity of each input phase, in input order.
    pub diffusion: Vec<Vec2>,
    pub stress: Tensor2,
    pub heat_flux: Vec2,
    /// Carried for completeness; no body force acts in the solved models.
    pub body_force: Vec2,
    /// Carried for completeness; no heat supply acts in the solved models.
    pub heat_supply: f64,
}

impl MixtureSummary {
    /// `sum rho_a phi_a p_a`, which vanishes by construction.
    pub fn diffusion_momentum(&self, phases: &[PhasePoint]) -> Vec2 {
        phases
            .iter()
            .zip(&self.diffusion)
            .map(|(ph, p)| p * (ph.density * ph.fraction))
            .sum()
    }
}

/// Mixture density, velocity, stress and heat flux from phase data.
pub fn mixture_point(phases: &[PhasePoint]) -> Result<MixtureSummary, DiagnosticsError> {
    let density: f64 = phases.iter().map(|p| p.density * p.fraction).sum();
    if !(density > 0.0 && density.is_finite()) {
        return Err(DiagnosticsError::InvalidInput(format!(
            "mixture density {density} must be positive and finite"
        )));
    }
    let velocity: Vec2 = phases.iter().map(|p| p.velocity * (p.density * p.fraction)).sum::<Vec2>() / density;
    let diffusion: Vec<Vec2> = phases.iter().map(|p| p.velocity - velocity).collect();
    let mut stress = Tensor2::zeros();
    let mut heat_flux = Vec2::zeros();
    for (ph, pa) in phases.iter().zip(&diffusion) {
        let m = ph.density * ph.fraction;
        stress += ph.stress - pa * pa.transpose() * m;
        heat_flux += ph.heat_flux - ph.stress.transpose() * pa
            + pa * (m * ph.internal_energy)
            + pa * (0.5 * m * pa.dot(pa));
    }
    Ok(MixtureSummary {
        density,
        velocity,
        diffusion,
        stress,
        heat_flux,
        body_force: Vec2::zeros(),
        heat_supply: 0.0,
    })
}

/// Mixture summaries at the degree-2 quadrature points of every element.
///
/// Solid velocities are backward differences between `prev` and `next`, the
/// gas velocity is `G / phi_g`. Intrinsic densities come from `thermal`;
/// heat fluxes and internal energies `c theta` are included when
/// `temperatures` is given, and are zero otherwise.
pub fn mixture_aggregates(
    mesh: &Mesh,
    prev: &MechState,
    next: &MechState,
    mech: &MechParams,
    thermal: &ThermalParams,
    temperatures: Option<&ThermalState>,
) -> Result<Vec<(Vec2, MixtureSummary)>, DiagnosticsError> {
    let n = mesh.n_nodes();
    for (name, len) in [
        ("previous pressure", prev.p.len()),
        ("pressure", next.p.len()),
        ("skeleton displacement", next.u_s.len()),
        ("fiber displacement", next.u_f.len()),
        ("previous skeleton displacement", prev.u_s.len()),
        ("previous fiber displacement", prev.u_f.len()),
    ] {
        if len != n {
            return Err(DiagnosticsError::InvalidInput(format!(
                "{name} has {len} values for a mesh of {n} nodes"
            )));
        }
    }
    if next.flux.len() != mesh.n_elements() {
        return Err(DiagnosticsError::InvalidInput("flux does not match the mesh".into()));
    }
    if let Some(t) = temperatures {
        if t.theta.iter().any(|f| f.len() != n) {
            return Err(DiagnosticsError::InvalidInput("temperatures do not match the mesh".into()));
        }
    }
    let dt = next.time - prev.time;
    if !(dt > 0.0) {
        return Err(DiagnosticsError::InvalidInput(format!("states must advance in time (dt = {dt})")));
    }
    let phi = mech.fractions;
    let rule = QuadratureRule::degree2();
    let mut out = Vec::with_capacity(mesh.n_elements() * rule.len());
    for e in 0..mesh.n_elements() {
        let el = P1Element::new(mesh.element_coords(e)).map_err(|err| DiagnosticsError::InvalidInput(err.to_string()))?;
        let tri = mesh.elements[e];
        let pick = |f: &[Vec2]| [f[tri[0]], f[tri[1]], f[tri[2]]];
        let e_s = strain(&el.vector_gradient(pick(&next.u_s)));
        let e_f = strain(&el.vector_gradient(pick(&next.u_f)));
        let grads = temperatures.map(|t| {
            Phase::ALL.map(|ph| {
                let th = t.phase(ph);
                el.gradient([th[tri[0]], th[tri[1]], th[tri[2]]])
            })
        });
        for (bary, _) in rule.iter() {
            let x = el.point(bary);
            let interp = |f: &[Vec2]| -> Vec2 { (0..3).map(|k| f[tri[k]] * bary[k]).sum() };
            let p: f64 = (0..3).map(|k| bary[k] * next.p[tri[k]]).sum();
            let v_s = (interp(&next.u_s) - interp(&prev.u_s)) / dt;
            let v_f = (interp(&next.u_f) - interp(&prev.u_f)) / dt;
            let v_g = if phi.gas > 0.0 { next.flux[e] / phi.gas } else { Vec2::zeros() };
            let eye = Tensor2::identity();
            let stresses = [
                elastic_stress(&e_s, mech.lambda_s, mech.mu_s) - eye * (phi.solid * p),
                -eye * (phi.gas * p),
                elastic_stress(&e_f, mech.lambda_f, mech.mu_f) - eye * (phi.fiber * p),
            ];
            let velocities = [v_s, v_g, v_f];
            let mut phases = [PhasePoint {
                density: 0.0,
                fraction: 0.0,
                velocity: Vec2::zeros(),
                stress: Tensor2::zeros(),
                heat_flux: Vec2::zeros(),
                internal_energy: 0.0,
            }; 3];
            for ph in Phase::ALL {
                let i = ph.index();
                let (q, energy) = match (temperatures, &grads) {
                    (Some(t), Some(g)) => {
                        let th = t.phase(ph);
                        let theta: f64 = (0..3).map(|k| bary[k] * th[tri[k]]).sum();
                        let kappa = thermal
                            .effective_conductivity(ph, x)
                            .map_err(|err| DiagnosticsError::InvalidInput(err.to_string()))?;
                        (-g[i] * kappa, thermal.specific_heat(ph) * theta)
                    }
                    _ => (Vec2::zeros(), 0.0),
                };
                phases[i] = PhasePoint {
                    density: thermal.density(ph),
                    fraction: phi.get(ph),
                    velocity: velocities[i],
                    stress: stresses[i],
                    heat_flux: q,
                    internal_energy: energy,
                };
            }
            out.push((x, mixture_point(&phases)?));
        }
    }
    Ok(out)
}

/// Per-element volume fractions, indexed by [`Phase::index`].
pub type FractionField = Vec<[f64; 3]>;

/// Implicit update of the solid and fiber fractions over one step,
/// `phi_n+1 (1 + div du) = phi_n`, with the gas filling the remainder.
pub fn advance_fractions(
    mesh: &Mesh,
    fractions: &FractionField,
    prev: &MechState,
    next: &MechState,
) -> FractionField {
    let du_s: Vec<Vec2> = next.u_s.iter().zip(&prev.u_s).map(|(a, b)| a - b).collect();
    let du_f: Vec<Vec2> = next.u_f.iter().zip(&prev.u_f).map(|(a, b)| a - b).collect();
    let ds = divergence(mesh, &du_s);
    let df = divergence(mesh, &du_f);
    fractions
        .iter()
        .enumerate()
        .map(|(e, f)| {
            let s = f[0] / (1.0 + ds[e]);
            let fi = f[2] / (1.0 + df[e]);
            [s, 1.0 - s - fi, fi]
        })
        .collect()
}

/// Per-element residuals of the phase mass balances between two snapshots,
/// indexed by [`Phase::index`]:
///
/// * solid and fiber: `(phi_n+1 - phi_n) / dt + phi_n+1 div v`
/// * gas: `(phi_g_n+1 - phi_g_n) / dt - phi_s div v_s - phi_f div v_f`
///
/// with `v = (u_n+1 - u_n) / dt`.
pub fn mass_balance_residual(
    mesh: &Mesh,
    prev: (&MechState, &FractionField),
    next: (&MechState, &FractionField),
) -> Result<Vec<[f64; 3]>, DiagnosticsError> {
    let (s0, f0) = prev;
    let (s1, f1) = next;
    let dt = s1.time - s0.time;
    if !(dt > 0.0) {
        return Err(DiagnosticsError::InvalidInput(format!("snapshots must advance in time (dt = {dt})")));
    }
    if f0.len() != mesh.n_elements() || f1.len() != mesh.n_elements() {
        return Err(DiagnosticsError::InvalidInput("fraction fields do not match the mesh".into()));
    }
    if [&s0.u_s, &s0.u_f, &s1.u_s, &s1.u_f].iter().any(|u| u.len() != mesh.n_nodes()) {
        return Err(DiagnosticsError::InvalidInput("displacements do not match the mesh".into()));
    }
    let v_s: Vec<Vec2> = s1.u_s.iter().zip(&s0.u_s).map(|(a, b)| (a - b) / dt).collect();
    let v_f: Vec<Vec2> = s1.u_f.iter().zip(&s0.u_f).map(|(a, b)| (a - b) / dt).collect();
    let div_s = divergence(mesh, &v_s);
    let div_f = divergence(mesh, &v_f);
    Ok((0..mesh.n_elements())
        .map(|e| {
            let (a, b) = (f0[e], f1[e]);
            [
                (b[0] - a[0]) / dt + b[0] * div_s[e],
                (b[1] - a[1]) / dt - b[0] * div_s[e] - b[2] * div_f[e],
                (b[2] - a[2]) / dt + b[2] * div_f[e],
            ]
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::ExchangeCoefficients;
    use crate::mesh::generate_rect_mesh;

    fn phase(density: f64, fraction: f64, v: Vec2) -> PhasePoint {
        PhasePoint {
            density,
            fraction,
            velocity: v,
            stress: Tensor2::new(1.0, 2.0, 2.0, -1.0) * density,
            heat_flux: Vec2::new(0.5, -0.25) * fraction,
            internal_energy: 10.0 * density,
        }
    }

    #[test]
    fn equal_velocities_give_zero_diffusion_and_summed_stress() {
        let v = Vec2::new(0.3, -0.1);
        let phases = [phase(2.0, 0.2, v), phase(1.0, 0.5, v), phase(3.0, 0.3, v)];
        let m = mixture_point(&phases).unwrap();
        assert!(m.diffusion.iter().all(|p| p.norm() < 1e-16));
        let sum: Tensor2 = phases.iter().map(|p| p.stress).sum();
        assert_eq!(m.stress, sum);
        assert!((m.velocity - v).norm() < 1e-16);
    }

    #[test]
    fn single_phase_limit_returns_the_phase() {
        let ph = phase(2.5, 1.0, Vec2::new(1.0, 2.0));
        let m = mixture_point(&[ph]).unwrap();
        assert_eq!(m.density, 2.5);
        assert_eq!(m.velocity, ph.velocity);
        assert_eq!(m.stress, ph.stress);
        assert_eq!(m.heat_flux, ph.heat_flux);
    }

    #[test]
    fn two_phase_hand_example() {
        // rho phi = 1 and 3, velocities (4, 0) and (0, 0):
        // v = (1, 0), p_1 = (3, 0), p_2 = (-1, 0)
        let a = PhasePoint {
            density: 2.0,
            fraction: 0.5,
            velocity: Vec2::new(4.0, 0.0),
            stress: Tensor2::zeros(),
            heat_flux: Vec2::zeros(),
            internal_energy: 1.0,
        };
        let b = PhasePoint {
            density: 6.0,
            fraction: 0.5,
            velocity: Vec2::zeros(),
            ..a
        };
        let m = mixture_point(&[a, b]).unwrap();
        assert_eq!(m.density, 4.0);
        assert_eq!(m.velocity, Vec2::new(1.0, 0.0));
        assert_eq!(m.diffusion, vec![Vec2::new(3.0, 0.0), Vec2::new(-1.0, 0.0)]);
        // T = -(1 * 9 + 3 * 1) e1 e1
        assert_eq!(m.stress, Tensor2::new(-12.0, 0.0, 0.0, 0.0));
        // q = sum m e p + 1/2 m p |p|^2 = (3 - 3) + (13.5 - 1.5) = 12
        assert_eq!(m.heat_flux, Vec2::new(12.0, 0.0));
    }

    #[test]
    fn zero_density_is_rejected() {
        assert!(mixture_point(&[phase(0.0, 1.0, Vec2::zeros())]).is_err());
    }

    #[test]
    fn static_state_has_zero_mass_residual() {
        let mesh = generate_rect_mesh(1.0, 1.0, 2, 2).unwrap();
        let s0 = MechState::zeros(&mesh);
        let mut s1 = s0.clone();
        s1.time = 1.0;
        let f = vec![[0.1, 0.8, 0.1]; mesh.n_elements()];
        let r = mass_balance_residual(&mesh, (&s0, &f), (&s1, &f)).unwrap();
        assert!(r.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn advanced_fractions_satisfy_the_discrete_balances() {
        let mesh = generate_rect_mesh(1.0, 1.0, 3, 3).unwrap();
        let s0 = MechState::zeros(&mesh);
        let mut s1 = s0.clone();
        s1.time = 0.5;
        for (i, x) in mesh.nodes.iter().enumerate() {
            s1.u_s[i] = Vec2::new(0.01 * x.x * x.y, -0.02 * x.y);
            s1.u_f[i] = Vec2::new(0.005 * x.x, 0.01 * x.x * x.x);
        }
        let f0 = vec![[0.1, 0.8, 0.1]; mesh.n_elements()];
        let f1 = advance_fractions(&mesh, &f0, &s0, &s1);
        let r = mass_balance_residual(&mesh, (&s0, &f0), (&s1, &f1)).unwrap();
        assert!(r.iter().flatten().all(|v| v.abs() < 1e-14), "{r:?}");
        // keeping the old fractions under a compressive step is flagged
        let bad = mass_balance_residual(&mesh, (&s0, &f0), (&s1, &f0)).unwrap();
        assert!(bad.iter().any(|v| v[0].abs() > 1e-3));
    }

    #[test]
    fn aggregates_conserve_diffusion_momentum() {
        let mesh = generate_rect_mesh(1e-3, 1e-3, 2, 2).unwrap();
        let mech = MechParams::reference();
        let thermal = ThermalParams::reference(
            ExchangeCoefficients {
                h_sg: 1.0,
                h_sf: 1.0,
                h_gf: 1.0,
            },
            10.0,
            1e-3,
        );
        let s0 = MechState::zeros(&mesh);
        let mut s1 = s0.clone();
        s1.time = 0.1;
        for (i, x) in mesh.nodes.iter().enumerate() {
            s1.u_s[i] = Vec2::new(1e-6 * x.y, -2e-6 * x.x);
            s1.p[i] = 100.0 * x.x;
        }
        s1.flux = crate::mechanics::postprocess_darcy(&mesh, &s1.p, &mech);
        let mut temps = ThermalState::uniform(&mesh, 300.0);
        temps.theta[0][4] = 310.0;
        let out = mixture_aggregates(&mesh, &s0, &s1, &mech, &thermal, Some(&temps)).unwrap();
        assert_eq!(out.len(), 3 * mesh.n_elements());
        for (_, m) in &out {
            let rho_v = m.velocity * m.density;
            let scale = rho_v.norm().max(1e-300);
            let phases: Vec<PhasePoint> = Phase::ALL
                .iter()
                .zip(&m.diffusion)
                .map(|(&ph, p)| PhasePoint {
                    density: thermal.density(ph),
                    fraction: mech.fractions.get(ph),
                    velocity: p + m.velocity,
                    stress: Tensor2::zeros(),
                    heat_flux: Vec2::zeros(),
                    internal_energy: 0.0,
                })
                .collect();
            assert!(m.diffusion_momentum(&phases).norm() <= 1e-10 * scale.max(1.0));
        }
        let short = MechState::zeros(&generate_rect_mesh(1e-3, 1e-3, 1, 1).unwrap());
        assert!(mixture_aggregates(&mesh, &short, &s1, &mech, &thermal, None).is_err());
    }
}
