//! Three-temperature heat transport with cubic interphase exchange.
//!
//! Each phase `a` carries its own temperature and satisfies, weakly,
//!
//! ```text
//! C_a (theta_a - theta_a_n) / dt z + phi_a kappa_a grad theta_a . grad z
//!     - sum_b h_ab (theta_b - theta_a)^3 z
//!     + [Robin faces] phi_a h_air (theta_a - theta_amb) z = f_a z + [boundary] g_a z
//! ```
//!
//! with `C_a = rho_a phi_a c_a` and a pore-size dependent gas conductivity.
//! Backward Euler in time, Newton with an exact Jacobian for the cubic terms.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::constitutive::{exchange_source, exchange_source_derivatives, ConstitutiveError, Phase, ThermalParams};
use crate::fem::{
    DofLayout, DofMap, EdgeRule, FemError, FieldSpec, LinearSolver, P1Element, QuadratureRule, SparseSystem,
    SystemBuilder,
};
use crate::fem::CsrMatrix;
use crate::mesh::{BoundaryTag, Mesh};
use crate::Vec2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThermalError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("Newton iteration did not converge in {iterations} iterations (residual {residual:.3e})")]
    NewtonFailure { iterations: usize, residual: f64 },
    #[error(transparent)]
    Fem(#[from] FemError),
}

impl From<ConstitutiveError> for ThermalError {
    fn from(e: ConstitutiveError) -> Self {
        ThermalError::InvalidArgument(e.to_string())
    }
}

/// Nodal temperatures (K) of the three phases, indexed by [`Phase::index`].
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalState {
    pub time: f64,
    pub theta: [Vec<f64>; 3],
}

impl ThermalState {
    pub fn uniform(mesh: &Mesh, value: f64) -> Self {
        let v = vec![value; mesh.n_nodes()];
        ThermalState {
            time: 0.0,
            theta: [v.clone(), v.clone(), v],
        }
    }

    pub fn phase(&self, phase: Phase) -> &[f64] {
        &self.theta[phase.index()]
    }

    pub fn is_finite(&self) -> bool {
        self.time.is_finite() && self.theta.iter().flatten().all(|v| v.is_finite())
    }

    /// Smallest and largest temperature over all phases.
    pub fn range(&self) -> (f64, f64) {
        self.theta
            .iter()
            .flatten()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Interpolated `(theta_s, theta_g, theta_f)` at a point.
    pub fn probe(&self, mesh: &Mesh, x: Vec2) -> Option<[f64; 3]> {
        Some([
            mesh.interpolate(&self.theta[0], x)?,
            mesh.interpolate(&self.theta[1], x)?,
            mesh.interpolate(&self.theta[2], x)?,
        ])
    }

    fn to_vector(&self) -> Vec<f64> {
        let n = self.theta[0].len();
        let mut x = vec![0.0; 3 * n];
        for (a, field) in self.theta.iter().enumerate() {
            for (i, v) in field.iter().enumerate() {
                x[3 * i + a] = *v;
            }
        }
        x
    }

    fn from_vector(time: f64, x: &[f64]) -> Self {
        let n = x.len() / 3;
        let field = |a: usize| (0..n).map(|i| x[3 * i + a]).collect::<Vec<_>>();
        ThermalState {
            time,
            theta: [field(0), field(1), field(2)],
        }
    }

    fn check(&self, mesh: &Mesh) -> Result<(), ThermalError> {
        if self.theta.iter().any(|f| f.len() != mesh.n_nodes()) {
            return Err(ThermalError::InvalidState(format!(
                "state does not have {} values per phase",
                mesh.n_nodes()
            )));
        }
        if !self.is_finite() {
            return Err(ThermalError::InvalidState("state contains non-finite values".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonSettings {
    /// Absolute bound on the Euclidean residual norm (W/m).
    pub abs_tol: f64,
    /// Bound on the residual norm relative to the initial one.
    pub rel_tol: f64,
    pub max_iter: usize,
    /// Initial step length; halved (at most five times) while the residual grows.
    pub damping: f64,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        NewtonSettings {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_iter: 20,
            damping: 1.0,
        }
    }
}

impl NewtonSettings {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.abs_tol > 0.0) {
            out.push(format!("abs_tol = {} must be positive", self.abs_tol));
        }
        if !(self.rel_tol > 0.0) {
            out.push(format!("rel_tol = {} must be positive", self.rel_tol));
        }
        if self.max_iter < 1 {
            out.push("max_iter must be at least 1".into());
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            out.push(format!("damping = {} must lie in (0, 1]", self.damping));
        }
        out
    }
}

/// Faces with convective exchange; all others are insulated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThermalBCs {
    pub hot: BTreeSet<BoundaryTag>,
    pub cold: BTreeSet<BoundaryTag>,
}

impl Default for ThermalBCs {
    fn default() -> Self {
        ThermalBCs {
            hot: [BoundaryTag::Top].into_iter().collect(),
            cold: [BoundaryTag::Bottom].into_iter().collect(),
        }
    }
}

impl ThermalBCs {
    pub fn violations(&self) -> Vec<String> {
        self.hot
            .intersection(&self.cold)
            .map(|t| format!("boundary '{}' is listed as both hot and cold", t.as_str()))
            .collect()
    }

    fn ambient(&self, tag: BoundaryTag, params: &ThermalParams) -> Option<f64> {
        if self.hot.contains(&tag) {
            Some(params.theta_hot)
        } else if self.cold.contains(&tag) {
            Some(params.theta_cold)
        } else {
            None
        }
    }
}

/// Treatment of the zeroth-order terms (capacity, exchange, Robin).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MassMatrix {
    /// Vertex quadrature: diagonal capacity and nodal exchange, which keeps
    /// the Jacobian an M-matrix and the discrete solution within its data.
    #[default]
    Lumped,
    /// Exact P1 mass matrices and degree-4 quadrature for the exchange.
    Consistent,
}

impl MassMatrix {
    pub fn as_str(&self) -> &'static str {
        match self {
            MassMatrix::Lumped => "lumped",
            MassMatrix::Consistent => "consistent",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "lumped" => Some(MassMatrix::Lumped),
            "consistent" => Some(MassMatrix::Consistent),
            _ => None,
        }
    }
}

/// Prescribed heat sources (W/m^3 in the volume, W/m^2 on the boundary).
pub trait ThermalForcing {
    fn volume(&self, _phase: Phase, _x: Vec2, _t: f64) -> f64 {
        0.0
    }

    fn boundary(&self, _phase: Phase, _tag: BoundaryTag, _x: Vec2, _t: f64) -> f64 {
        0.0
    }

    fn is_active(&self) -> bool {
        false
    }
}

pub struct NoForcing;

impl ThermalForcing for NoForcing {}

/// Outcome of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalStep {
    pub state: ThermalState,
    pub iterations: usize,
    /// Final residual norm.
    pub residual: f64,
}

fn dof(node: usize, phase: usize) -> usize {
    3 * node + phase
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn thermal_dofmap(mesh: &Mesh) -> DofMap {
    DofMap::new(
        mesh.n_nodes(),
        vec![
            FieldSpec::scalar("theta_s"),
            FieldSpec::scalar("theta_g"),
            FieldSpec::scalar("theta_f"),
        ],
        DofLayout::NodeMajor,
    )
}

/// Element mean of the gas conductivity.
pub fn element_gas_conductivity(mesh: &Mesh, params: &ThermalParams) -> Result<Vec<f64>, ThermalError> {
    let rule = QuadratureRule::degree4();
    (0..mesh.n_elements())
        .map(|e| {
            let el = P1Element::new(mesh.element_coords(e))?;
            let mut sum = 0.0;
            for (bary, w) in rule.iter() {
                sum += 2.0 * w * params.conductivity(Phase::Gas, el.point(bary))?;
            }
            Ok(sum)
        })
        .collect()
}

struct LinearPart {
    dt: f64,
    matrix: CsrMatrix,
}

/// Stateful stepper holding the dt-dependent linear operator.
pub struct ThermalSolver<'m> {
    mesh: &'m Mesh,
    params: ThermalParams,
    bcs: ThermalBCs,
    mass: MassMatrix,
    elements: Vec<P1Element>,
    /// Lumped nodal area.
    nodal_area: Vec<f64>,
    linear: Option<LinearPart>,
    lu: LinearSolver,
}

impl<'m> ThermalSolver<'m> {
    pub fn new(mesh: &'m Mesh, params: ThermalParams, bcs: ThermalBCs, mass: MassMatrix) -> Result<Self, ThermalError> {
        let mut v = params.violations_on(mesh.lx, mesh.ly);
        v.extend(bcs.violations());
        if !v.is_empty() {
            return Err(ThermalError::InvalidArgument(v.join("; ")));
        }
        let elements = (0..mesh.n_elements())
            .map(|e| P1Element::new(mesh.element_coords(e)))
            .collect::<Result<Vec<_>, _>>()?;
        let mut nodal_area = vec![0.0; mesh.n_nodes()];
        for (e, el) in elements.iter().enumerate() {
            for &n in &mesh.elements[e] {
                nodal_area[n] += el.area / 3.0;
            }
        }
        Ok(ThermalSolver {
            mesh,
            params,
            bcs,
            mass,
            elements,
            nodal_area,
            linear: None,
            lu: LinearSolver::new(),
        })
    }

    pub fn params(&self) -> &ThermalParams {
        &self.params
    }

    pub fn bcs(&self) -> &ThermalBCs {
        &self.bcs
    }

    fn n_dofs(&self) -> usize {
        3 * self.mesh.n_nodes()
    }

    /// `int N_a N_b` on an element under the chosen mass treatment.
    fn mass_entry(&self, area: f64, a: usize, b: usize) -> f64 {
        match self.mass {
            MassMatrix::Lumped => {
                if a == b {
                    area / 3.0
                } else {
                    0.0
                }
            }
            MassMatrix::Consistent => area / 12.0 * if a == b { 2.0 } else { 1.0 },
        }
    }

    /// `int_facet N_a N_b ds`.
    fn edge_mass_entry(&self, len: f64, a: usize, b: usize) -> f64 {
        match self.mass {
            MassMatrix::Lumped => {
                if a == b {
                    len / 2.0
                } else {
                    0.0
                }
            }
            MassMatrix::Consistent => len / 6.0 * if a == b { 2.0 } else { 1.0 },
        }
    }

    /// Capacity / dt + diffusion + Robin: the part of the Jacobian that does
    /// not depend on the iterate.
    fn build_linear(&self, dt: f64) -> Result<CsrMatrix, ThermalError> {
        let p = &self.params;
        let rule = QuadratureRule::degree4();
        let mut builder = SystemBuilder::with_capacity(self.n_dofs(), self.mesh.n_elements() * 27);
        for (e, el) in self.elements.iter().enumerate() {
            let tri = self.mesh.elements[e];
            for phase in Phase::ALL {
                let ai = phase.index();
                let cap = p.capacity(phase) / dt;
                // int phi kappa over the element (kappa varies for the gas)
                let mut k_int = 0.0;
                for (bary, w) in rule.iter() {
                    k_int += 2.0 * el.area * w * p.effective_conductivity(phase, el.point(bary))?;
                }
                for a in 0..3 {
                    for b in 0..3 {
                        let v = cap * self.mass_entry(el.area, a, b)
                            + k_int * el.gradients[a].dot(&el.gradients[b]);
                        builder.add_entry(dof(tri[a], ai), dof(tri[b], ai), v)?;
                    }
                }
            }
        }
        for facet in &self.mesh.facets {
            if self.bcs.ambient(facet.tag, p).is_none() {
                continue;
            }
            let len = self.mesh.facet_length(facet);
            for phase in Phase::ALL {
                let coef = p.fractions.get(phase) * p.h_air;
                for a in 0..2 {
                    for b in 0..2 {
                        builder.add_entry(
                            dof(facet.nodes[a], phase.index()),
                            dof(facet.nodes[b], phase.index()),
                            coef * self.edge_mass_entry(len, a, b),
                        )?;
                    }
                }
            }
        }
        Ok(builder.finish()?.matrix)
    }

    fn linear_matrix(&mut self, dt: f64) -> Result<&CsrMatrix, ThermalError> {
        if self.linear.as_ref().map(|l| l.dt) != Some(dt) {
            let matrix = self.build_linear(dt)?;
            self.linear = Some(LinearPart { dt, matrix });
        }
        Ok(&self.linear.as_ref().unwrap().matrix)
    }

    /// Terms of the residual independent of the iterate: capacity times the
    /// previous state, Robin ambient data and prescribed sources at `t`.
    fn load_vector(&self, state_n: &ThermalState, forcing: &dyn ThermalForcing, t: f64, dt: f64) -> Vec<f64> {
        let p = &self.params;
        let mut b = vec![0.0; self.n_dofs()];
        for (e, el) in self.elements.iter().enumerate() {
            let tri = self.mesh.elements[e];
            for phase in Phase::ALL {
                let ai = phase.index();
                let cap = p.capacity(phase) / dt;
                let old = state_n.phase(phase);
                for a in 0..3 {
                    for bb in 0..3 {
                        b[dof(tri[a], ai)] += cap * self.mass_entry(el.area, a, bb) * old[tri[bb]];
                    }
                }
            }
        }
        let gauss = EdgeRule::gauss3();
        for facet in &self.mesh.facets {
            let len = self.mesh.facet_length(facet);
            let (xa, xb) = (self.mesh.nodes[facet.nodes[0]], self.mesh.nodes[facet.nodes[1]]);
            if let Some(amb) = self.bcs.ambient(facet.tag, p) {
                for phase in Phase::ALL {
                    let coef = p.fractions.get(phase) * p.h_air * amb * len / 2.0;
                    for &n in &facet.nodes {
                        b[dof(n, phase.index())] += coef;
                    }
                }
            }
            if forcing.is_active() {
                for (s, w) in gauss.iter() {
                    let x = xa * (1.0 - s) + xb * s;
                    for phase in Phase::ALL {
                        let g = forcing.boundary(phase, facet.tag, x, t) * len * w;
                        b[dof(facet.nodes[0], phase.index())] += g * (1.0 - s);
                        b[dof(facet.nodes[1], phase.index())] += g * s;
                    }
                }
            }
        }
        if forcing.is_active() {
            let rule = QuadratureRule::degree4();
            for (e, el) in self.elements.iter().enumerate() {
                let tri = self.mesh.elements[e];
                for (bary, w) in rule.iter() {
                    let x = el.point(bary);
                    let jw = 2.0 * el.area * w;
                    for phase in Phase::ALL {
                        let f = forcing.volume(phase, x, t) * jw;
                        for a in 0..3 {
                            b[dof(tri[a], phase.index())] += f * bary[a];
                        }
                    }
                }
            }
        }
        b
    }

    /// Integrated exchange gain `int sum_b h_ab (theta_b - theta_a)^3 z` for
    /// every dof, and optionally its Jacobian as triplets.
    fn exchange(&self, x: &[f64], jac: Option<&mut Vec<(usize, usize, f64)>>) -> Vec<f64> {
        let h = &self.params.exchange;
        let mut out = vec![0.0; self.n_dofs()];
        let mut trip = jac;
        let point = |theta: [f64; 3]| {
            let mut gain = [0.0; 3];
            let mut d = [[0.0; 3]; 3];
            for a in Phase::ALL {
                for b in Phase::ALL {
                    if a == b {
                        continue;
                    }
                    let hab = h.pair(a, b);
                    let (ta, tb) = (theta[a.index()], theta[b.index()]);
                    gain[a.index()] += exchange_source(ta, tb, hab);
                    let (da, db) = exchange_source_derivatives(ta, tb, hab);
                    d[a.index()][a.index()] += da;
                    d[a.index()][b.index()] += db;
                }
            }
            (gain, d)
        };
        match self.mass {
            MassMatrix::Lumped => {
                for n in 0..self.mesh.n_nodes() {
                    let m = self.nodal_area[n];
                    let (gain, d) = point([x[dof(n, 0)], x[dof(n, 1)], x[dof(n, 2)]]);
                    for a in 0..3 {
                        out[dof(n, a)] += m * gain[a];
                        if let Some(t) = trip.as_deref_mut() {
                            for b in 0..3 {
                                t.push((dof(n, a), dof(n, b), -m * d[a][b]));
                            }
                        }
                    }
                }
            }
            MassMatrix::Consistent => {
                let rule = QuadratureRule::degree4();
                for (e, el) in self.elements.iter().enumerate() {
                    let tri = self.mesh.elements[e];
                    let mut local_d = [[[[0.0; 3]; 3]; 3]; 3];
                    for (bary, w) in rule.iter() {
                        let jw = 2.0 * el.area * w;
                        let mut theta = [0.0; 3];
                        for (ph, th) in theta.iter_mut().enumerate() {
                            *th = (0..3).map(|k| bary[k] * x[dof(tri[k], ph)]).sum();
                        }
                        let (gain, d) = point(theta);
                        for i in 0..3 {
                            for a in 0..3 {
                                out[dof(tri[i], a)] += jw * gain[a] * bary[i];
                                for j in 0..3 {
                                    for b in 0..3 {
                                        local_d[i][j][a][b] += jw * d[a][b] * bary[i] * bary[j];
                                    }
                                }
                            }
                        }
                    }
                    if let Some(t) = trip.as_deref_mut() {
                        for i in 0..3 {
                            for j in 0..3 {
                                for a in 0..3 {
                                    for b in 0..3 {
                                        t.push((dof(tri[i], a), dof(tri[j], b), -local_d[i][j][a][b]));
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Integrated exchange gains of a state, one entry per dof (node-major,
    /// phases in [`Phase::ALL`] order).
    pub fn exchange_vector(&self, state: &ThermalState) -> Vec<f64> {
        self.exchange(&state.to_vector(), None)
    }

    fn residual_vec(&mut self, x: &[f64], load: &[f64], dt: f64) -> Result<Vec<f64>, ThermalError> {
        let ex = self.exchange(x, None);
        let a = self.linear_matrix(dt)?;
        let mut r = a.mul_vec(x);
        for i in 0..r.len() {
            r[i] -= load[i] + ex[i];
        }
        Ok(r)
    }

    fn jacobian_matrix(&mut self, x: &[f64], dt: f64) -> Result<CsrMatrix, ThermalError> {
        let n = self.n_dofs();
        let mut trip = Vec::new();
        self.exchange(x, Some(&mut trip));
        let ex = CsrMatrix::from_triplets(n, n, &trip)?;
        Ok(self.linear_matrix(dt)?.add_scaled(&ex, 1.0))
    }

    /// Weak-form residual of the step `state_n -> guess` (node-major dofs).
    pub fn residual(
        &mut self,
        guess: &ThermalState,
        state_n: &ThermalState,
        forcing: &dyn ThermalForcing,
        dt: f64,
    ) -> Result<Vec<f64>, ThermalError> {
        check_dt(dt)?;
        let load = self.load_vector(state_n, forcing, state_n.time + dt, dt);
        self.residual_vec(&guess.to_vector(), &load, dt)
    }

    /// Derivative of [`ThermalSolver::residual`] with respect to the guess.
    pub fn jacobian(&mut self, guess: &ThermalState, dt: f64) -> Result<SparseSystem, ThermalError> {
        check_dt(dt)?;
        let m = self.jacobian_matrix(&guess.to_vector(), dt)?;
        let n = m.n_rows();
        Ok(SparseSystem::new(m, vec![0.0; n])?)
    }

    /// One backward-Euler step solved by damped Newton.
    pub fn step(
        &mut self,
        state_n: &ThermalState,
        forcing: &dyn ThermalForcing,
        dt: f64,
        settings: &NewtonSettings,
    ) -> Result<ThermalStep, ThermalError> {
        check_dt(dt)?;
        state_n.check(self.mesh)?;
        let v = settings.violations();
        if !v.is_empty() {
            return Err(ThermalError::InvalidArgument(v.join("; ")));
        }
        let t = state_n.time + dt;
        let load = self.load_vector(state_n, forcing, t, dt);
        let mut x = state_n.to_vector();
        let mut r = self.residual_vec(&x, &load, dt)?;
        let r0 = norm2(&r);
        let mut rn = r0;
        for iter in 1..=settings.max_iter {
            let j = self.jacobian_matrix(&x, dt)?;
            let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
            let dx = self.lu.solve(&SparseSystem::new(j, rhs)?)?;
            let mut alpha = settings.damping;
            let mut halvings = 0;
            loop {
                let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + alpha * d).collect();
                let rt = self.residual_vec(&trial, &load, dt)?;
                let nt = norm2(&rt);
                if nt <= rn || halvings == 5 {
                    x = trial;
                    r = rt;
                    rn = nt;
                    break;
                }
                alpha *= 0.5;
                halvings += 1;
            }
            if !rn.is_finite() {
                break;
            }
            if rn <= settings.abs_tol || rn <= settings.rel_tol * r0 {
                return Ok(ThermalStep {
                    state: ThermalState::from_vector(t, &x),
                    iterations: iter,
                    residual: rn,
                });
            }
        }
        Err(ThermalError::NewtonFailure {
            iterations: settings.max_iter,
            residual: rn,
        })
    }

    /// Stored energy `sum_a C_a int theta_a` (J/m).
    pub fn stored_energy(&self, state: &ThermalState) -> f64 {
        stored_energy(self.mesh, &self.params, state)
    }

    /// Net convective inflow `sum_a int phi_a h_air (theta_amb - theta_a) ds` (W/m).
    pub fn robin_inflow(&self, state: &ThermalState) -> f64 {
        let p = &self.params;
        let mut total = 0.0;
        for facet in &self.mesh.facets {
            if let Some(amb) = self.bcs.ambient(facet.tag, p) {
                let len = self.mesh.facet_length(facet);
                for phase in Phase::ALL {
                    let th = state.phase(phase);
                    let mean = 0.5 * (th[facet.nodes[0]] + th[facet.nodes[1]]);
                    total += p.fractions.get(phase) * p.h_air * (amb - mean) * len;
                }
            }
        }
        total
    }
}

fn check_dt(dt: f64) -> Result<(), ThermalError> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(ThermalError::InvalidArgument(format!("time step must be positive, got {dt}")))
    }
}

/// Stored energy `sum_a C_a int theta_a` (J/m); exact for P1 fields.
pub fn stored_energy(mesh: &Mesh, params: &ThermalParams, state: &ThermalState) -> f64 {
    let mut total = 0.0;
    for e in 0..mesh.n_elements() {
        let area = mesh.signed_area(e);
        for phase in Phase::ALL {
            let th = state.phase(phase);
            let mean: f64 = mesh.elements[e].iter().map(|&n| th[n]).sum::<f64>() / 3.0;
            total += params.capacity(phase) * area * mean;
        }
    }
    total
}

/// One step with default boundary faces, lumped mass and no sources.
pub fn thermal_step(
    state_n: &ThermalState,
    mesh: &Mesh,
    params: &ThermalParams,
    settings: &NewtonSettings,
    dt: f64,
) -> Result<ThermalStep, ThermalError> {
    ThermalSolver::new(mesh, *params, ThermalBCs::default(), MassMatrix::default())?.step(
        state_n,
        &NoForcing,
        dt,
        settings,
    )
}

/// One row of a vertical temperature profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileRow {
    pub y: f64,
    pub theta: [f64; 3],
}

/// Temperatures along `x = x_frac * Lx`, one row per node row of the mesh.
pub fn centerline_profile(state: &ThermalState, mesh: &Mesh, x_frac: f64) -> Result<Vec<ProfileRow>, ThermalError> {
    if !(0.0..=1.0).contains(&x_frac) {
        return Err(ThermalError::InvalidArgument(format!("x_frac = {x_frac} must lie in [0, 1]")));
    }
    let x = x_frac * mesh.lx;
    (0..=mesh.ny)
        .map(|j| {
            let y = mesh.ly * j as f64 / mesh.ny as f64;
            let theta = state
                .probe(mesh, Vec2::new(x, y))
                .ok_or_else(|| ThermalError::InvalidArgument(format!("({x}, {y}) is outside the mesh")))?;
            Ok(ProfileRow { y, theta })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::ExchangeCoefficients;
    use crate::mesh::generate_rect_mesh;

    fn params(th: f64) -> ThermalParams {
        ThermalParams::reference(
            ExchangeCoefficients {
                h_sg: 1.0,
                h_sf: 0.5,
                h_gf: 0.2,
            },
            50.0,
            th,
        )
    }

    #[test]
    fn equilibrium_state_has_zero_residual_and_one_iteration() {
        let mesh = generate_rect_mesh(12e-3, 6e-3, 6, 3).unwrap();
        let mut p = params(6e-3);
        p.theta_hot = 350.0;
        p.theta_cold = 350.0;
        let s0 = ThermalState::uniform(&mesh, 350.0);
        let mut solver = ThermalSolver::new(&mesh, p, ThermalBCs::default(), MassMatrix::Lumped).unwrap();
        let r = solver.residual(&s0, &s0, &NoForcing, 0.1).unwrap();
        // capacity terms cancel only to rounding of C theta / dt
        assert!(norm2(&r) < 1e-9, "{}", norm2(&r));
        let step = solver.step(&s0, &NoForcing, 0.1, &NewtonSettings::default()).unwrap();
        assert_eq!(step.iterations, 1);
        for (a, b) in step.state.theta.iter().flatten().zip(s0.theta.iter().flatten()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn equal_temperatures_give_zero_exchange_jacobian() {
        let mesh = generate_rect_mesh(1.0, 1.0, 2, 2).unwrap();
        for mass in [MassMatrix::Lumped, MassMatrix::Consistent] {
            let solver = ThermalSolver::new(&mesh, params(1.0), ThermalBCs::default(), mass).unwrap();
            let mut trip = Vec::new();
            let x = ThermalState::uniform(&mesh, 321.0).to_vector();
            let ex = solver.exchange(&x, Some(&mut trip));
            assert!(ex.iter().all(|&v| v == 0.0));
            assert!(trip.iter().all(|t| t.2 == 0.0));
        }
    }

    #[test]
    fn single_node_exchange_jacobian_matches_hand_linearization() {
        // lumped mode couples the three phases of one node only
        let mesh = generate_rect_mesh(1.0, 1.0, 1, 1).unwrap();
        let solver = ThermalSolver::new(&mesh, params(1.0), ThermalBCs::default(), MassMatrix::Lumped).unwrap();
        let mut s = ThermalState::uniform(&mesh, 300.0);
        s.theta[1][0] = 302.0;
        s.theta[2][0] = 299.0;
        let mut trip = Vec::new();
        solver.exchange(&s.to_vector(), Some(&mut trip));
        let m = CsrMatrix::from_triplets(12, 12, &trip).unwrap();
        let area = solver.nodal_area[0];
        // -d/d theta_s of [h_sg (tg - ts)^3 + h_sf (tf - ts)^3]
        let dss = 3.0 * (1.0 * 4.0 + 0.5 * 1.0) * area;
        assert!((m.get(0, 0) - dss).abs() < 1e-12);
        assert!((m.get(0, 1) + 3.0 * 1.0 * 4.0 * area).abs() < 1e-12);
        assert!((m.get(0, 2) + 3.0 * 0.5 * 1.0 * area).abs() < 1e-12);
        assert!((m.get(1, 2) + 3.0 * 0.2 * 9.0 * area).abs() < 1e-12);
    }

    #[test]
    fn exchange_gains_cancel_over_phases() {
        let mesh = generate_rect_mesh(1.0, 1.0, 3, 3).unwrap();
        for mass in [MassMatrix::Lumped, MassMatrix::Consistent] {
            let solver = ThermalSolver::new(&mesh, params(1.0), ThermalBCs::default(), mass).unwrap();
            let mut s = ThermalState::uniform(&mesh, 300.0);
            for (i, v) in s.theta.iter_mut().flatten().enumerate() {
                *v += ((i * 7919) % 23) as f64;
            }
            let ex = solver.exchange_vector(&s);
            for n in 0..mesh.n_nodes() {
                let sum = ex[3 * n] + ex[3 * n + 1] + ex[3 * n + 2];
                let scale = ex[3 * n].abs() + ex[3 * n + 1].abs() + ex[3 * n + 2].abs();
                assert!(sum.abs() <= 1e-13 * scale.max(1e-300));
            }
        }
    }

    #[test]
    fn gas_conductivity_increases_towards_large_pores() {
        let mesh = generate_rect_mesh(12e-3, 6e-3, 4, 12).unwrap();
        let k = element_gas_conductivity(&mesh, &params(6e-3)).unwrap();
        let by_row = |j: usize| k[2 * 4 * j];
        for j in 1..12 {
            assert!(by_row(j) < by_row(j - 1));
        }
    }

    #[test]
    fn profile_of_uniform_state_is_constant() {
        let mesh = generate_rect_mesh(12e-3, 6e-3, 8, 4).unwrap();
        let s = ThermalState::uniform(&mesh, 310.0);
        let prof = centerline_profile(&s, &mesh, 0.5).unwrap();
        assert_eq!(prof.len(), 5);
        assert!(prof.iter().all(|r| r.theta == [310.0; 3]));
        assert_eq!(prof[4].y, 6e-3);
        assert!(centerline_profile(&s, &mesh, 1.5).is_err());
    }

    #[test]
    fn non_positive_pore_size_is_rejected() {
        let mesh = generate_rect_mesh(1.0, 1.0, 1, 1).unwrap();
        let mut p = params(1.0);
        p.pore_size.base = -1.0;
        let err = ThermalSolver::new(&mesh, p, ThermalBCs::default(), MassMatrix::Lumped);
        assert!(matches!(err, Err(ThermalError::InvalidArgument(_))));
    }
}
