//! Quasi-static poro-mechanics of the skeleton/gas/fiber composite.
//!
//! Unknowns per node are the skeleton displacement `u_s`, the fiber
//! displacement `u_f` and the gas pressure `p`, all P1. Darcy's law is
//! substituted into the gas mass balance, so the flux `G = -k grad p` is
//! recovered per element after each step. One backward-Euler step solves the
//! monolithic linear system
//!
//! ```text
//! (T_s(u_s) + chi (E_s - E_f)) : grad w_s - phi_s p div w_s = f_s . w_s
//! (T_f(u_f) + chi (E_f - E_s)) : grad w_f - phi_f p div w_f = f_f . w_f
//! C (p - p_n) q + phi_s div(u_s - u_s_n) q + phi_f div(u_f - u_f_n) q
//!     + dt k grad p . grad q = dt g q
//! ```
//!
//! with `chi` evaluated per element from the strains of the previous step.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use thiserror::Error;

use crate::constitutive::{chi_coefficient, darcy_flux, strain, MechParams};
use crate::fem::{
    apply_dirichlet, DofLayout, DofMap, EdgeRule, FemError, FieldSpec, LinearSolver, P1Element,
    QuadratureRule, SparseSystem, SystemBuilder,
};
use crate::mesh::{BoundaryTag, Mesh};
use crate::{Tensor2, Vec2};

pub const FIELD_US: usize = 0;
pub const FIELD_UF: usize = 1;
pub const FIELD_P: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MechError {
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Fem(#[from] FemError),
}

/// Nodal fields of the mechanical model at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct MechState {
    pub time: f64,
    /// Pressure (Pa) per node.
    pub p: Vec<f64>,
    /// Skeleton displacement (m) per node.
    pub u_s: Vec<Vec2>,
    /// Fiber displacement (m) per node.
    pub u_f: Vec<Vec2>,
    /// Darcy flux `-k grad p` per element.
    pub flux: Vec<Vec2>,
}

impl MechState {
    pub fn zeros(mesh: &Mesh) -> Self {
        MechState {
            time: 0.0,
            p: vec![0.0; mesh.n_nodes()],
            u_s: vec![Vec2::zeros(); mesh.n_nodes()],
            u_f: vec![Vec2::zeros(); mesh.n_nodes()],
            flux: vec![Vec2::zeros(); mesh.n_elements()],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.time.is_finite()
            && self.p.iter().all(|v| v.is_finite())
            && self.u_s.iter().chain(&self.u_f).chain(&self.flux).all(|v| v.x.is_finite() && v.y.is_finite())
    }

    fn check(&self, mesh: &Mesh) -> Result<(), MechError> {
        if self.p.len() != mesh.n_nodes() || self.u_s.len() != mesh.n_nodes() || self.u_f.len() != mesh.n_nodes() {
            return Err(MechError::InvalidState(format!(
                "state has {} / {} / {} nodal values for a mesh of {} nodes",
                self.p.len(),
                self.u_s.len(),
                self.u_f.len(),
                mesh.n_nodes()
            )));
        }
        if !self.is_finite() {
            return Err(MechError::InvalidState("state contains non-finite values".into()));
        }
        Ok(())
    }

    fn element_vectors(field: &[Vec2], tri: [usize; 3]) -> [Vec2; 3] {
        [field[tri[0]], field[tri[1]], field[tri[2]]]
    }

    /// Per-element skeleton strain.
    pub fn skeleton_strains(&self, mesh: &Mesh) -> Vec<Tensor2> {
        strains_of(mesh, &self.u_s)
    }

    /// Per-element fiber strain.
    pub fn fiber_strains(&self, mesh: &Mesh) -> Vec<Tensor2> {
        strains_of(mesh, &self.u_f)
    }

    /// Interpolates `(p, u_s, u_f)` at a point.
    pub fn probe(&self, mesh: &Mesh, x: Vec2) -> Option<(f64, Vec2, Vec2)> {
        let (e, bary) = mesh.locate(x)?;
        let tri = mesh.elements[e];
        let mut out = (0.0, Vec2::zeros(), Vec2::zeros());
        for k in 0..3 {
            out.0 += bary[k] * self.p[tri[k]];
            out.1 += self.u_s[tri[k]] * bary[k];
            out.2 += self.u_f[tri[k]] * bary[k];
        }
        Some(out)
    }
}

fn strains_of(mesh: &Mesh, u: &[Vec2]) -> Vec<Tensor2> {
    (0..mesh.n_elements())
        .map(|e| {
            let el = P1Element::new(mesh.element_coords(e)).expect("mesh elements are non-degenerate");
            strain(&el.vector_gradient(MechState::element_vectors(u, mesh.elements[e])))
        })
        .collect()
}

/// Per-element divergence of a P1 vector field.
pub fn divergence(mesh: &Mesh, u: &[Vec2]) -> Vec<f64> {
    strains_of(mesh, u).iter().map(|e| e.trace()).collect()
}

/// Darcy flux `-k grad p` on every element (constant per element for P1).
pub fn postprocess_darcy(mesh: &Mesh, p: &[f64], params: &MechParams) -> Vec<Vec2> {
    (0..mesh.n_elements())
        .map(|e| {
            let el = P1Element::new(mesh.element_coords(e)).expect("mesh elements are non-degenerate");
            let [a, b, c] = mesh.elements[e];
            darcy_flux(el.gradient([p[a], p[b], p[c]]), params.k)
        })
        .collect()
}

/// Per-element coupling coefficient from the strains of a state.
pub fn chi_field(mesh: &Mesh, state: &MechState, params: &MechParams) -> Vec<f64> {
    let es = state.skeleton_strains(mesh);
    let ef = state.fiber_strains(mesh);
    es.iter()
        .zip(&ef)
        .map(|(s, f)| chi_coefficient(s, f, params.chi_0, params.eps_strain))
        .collect()
}

/// Loading applied on the top side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TopLoad {
    /// Prescribed skeleton displacement (m).
    Displacement(Vec2),
    /// Traction on the skeleton (Pa), applied as a natural condition.
    Traction(Vec2),
}

/// Fiber boundary conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FiberBc {
    /// Fixed on the bottom side, traction-free elsewhere.
    #[default]
    FixedBottom,
    /// Same Dirichlet data as the skeleton.
    MirrorSkeleton,
}

impl FiberBc {
    pub fn as_str(&self) -> &'static str {
        match self {
            FiberBc::FixedBottom => "fixed-bottom",
            FiberBc::MirrorSkeleton => "mirror-skeleton",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "fixed-bottom" => Some(FiberBc::FixedBottom),
            "mirror-skeleton" => Some(FiberBc::MirrorSkeleton),
            _ => None,
        }
    }
}

/// Boundary data of the mechanical problem. Sides not listed in `drained`
/// are impermeable (zero Darcy flux).
#[derive(Debug, Clone, PartialEq)]
pub struct MechBCs {
    pub top: TopLoad,
    /// Linear ramp time of the top load (s); 0 applies it at once.
    pub ramp_time: f64,
    pub fix_bottom: bool,
    /// Zero normal displacement of both solids on the left and right sides.
    pub lateral_rollers: bool,
    pub drained: BTreeSet<BoundaryTag>,
    pub fiber: FiberBc,
}

impl MechBCs {
    /// Compression of the top side by 10 um, fixed bottom, drained everywhere.
    pub fn reference() -> Self {
        MechBCs {
            top: TopLoad::Displacement(Vec2::new(0.0, -1e-5)),
            ramp_time: 0.0,
            fix_bottom: true,
            lateral_rollers: false,
            drained: BoundaryTag::ALL.into_iter().collect(),
            fiber: FiberBc::FixedBottom,
        }
    }

    pub fn load_factor(&self, t: f64) -> f64 {
        if self.ramp_time > 0.0 {
            (t / self.ramp_time).clamp(0.0, 1.0)
        } else if t > 0.0 {
            1.0
        } else {
            0.0
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.ramp_time >= 0.0 && self.ramp_time.is_finite()) {
            out.push(format!("ramp time {} must be finite and non-negative", self.ramp_time));
        }
        let v = match self.top {
            TopLoad::Displacement(v) | TopLoad::Traction(v) => v,
        };
        if !(v.x.is_finite() && v.y.is_finite()) {
            out.push("top load must be finite".into());
        }
        out
    }
}

/// Source of boundary constraints and loads for a mechanical step.
pub trait MechLoading {
    /// Dirichlet constraints `(dof, value)` at time `t`.
    fn constraints(&self, mesh: &Mesh, dofs: &DofMap, t: f64) -> Vec<(usize, f64)>;

    /// Skeleton traction on a boundary side.
    fn skeleton_traction(&self, _tag: BoundaryTag, _x: Vec2, _t: f64) -> Option<Vec2> {
        None
    }

    fn skeleton_force(&self, _x: Vec2, _t: f64) -> Vec2 {
        Vec2::zeros()
    }

    fn fiber_force(&self, _x: Vec2, _t: f64) -> Vec2 {
        Vec2::zeros()
    }

    /// Volumetric gas source added to the mass balance (1/s).
    fn mass_source(&self, _x: Vec2, _t: f64) -> f64 {
        0.0
    }

    /// Whether any of the body sources is non-zero.
    fn has_sources(&self) -> bool {
        false
    }
}

fn put(map: &mut BTreeMap<usize, f64>, dof: usize, v: f64) {
    map.entry(dof).or_insert(v);
}

impl MechLoading for MechBCs {
    fn constraints(&self, mesh: &Mesh, dofs: &DofMap, t: f64) -> Vec<(usize, f64)> {
        let lf = self.load_factor(t);
        let mut map = BTreeMap::new();
        if let TopLoad::Displacement(u) = self.top {
            let u = u * lf;
            for n in mesh.nodes_with_tag(BoundaryTag::Top) {
                for c in 0..2 {
                    put(&mut map, dofs.global(FIELD_US, n, c), u[c]);
                    if self.fiber == FiberBc::MirrorSkeleton {
                        put(&mut map, dofs.global(FIELD_UF, n, c), u[c]);
                    }
                }
            }
        }
        for n in mesh.nodes_with_tag(BoundaryTag::Bottom) {
            for c in 0..2 {
                if self.fix_bottom {
                    put(&mut map, dofs.global(FIELD_US, n, c), 0.0);
                }
                put(&mut map, dofs.global(FIELD_UF, n, c), 0.0);
            }
        }
        if self.lateral_rollers {
            for tag in [BoundaryTag::Left, BoundaryTag::Right] {
                for n in mesh.nodes_with_tag(tag) {
                    put(&mut map, dofs.global(FIELD_US, n, 0), 0.0);
                    put(&mut map, dofs.global(FIELD_UF, n, 0), 0.0);
                }
            }
        }
        for &tag in &self.drained {
            for n in mesh.nodes_with_tag(tag) {
                put(&mut map, dofs.global(FIELD_P, n, 0), 0.0);
            }
        }
        map.into_iter().collect()
    }

    fn skeleton_traction(&self, tag: BoundaryTag, _x: Vec2, t: f64) -> Option<Vec2> {
        match (tag, self.top) {
            (BoundaryTag::Top, TopLoad::Traction(tr)) => Some(tr * self.load_factor(t)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChiMode {
    /// Coupling evaluated from the previous step's strains.
    #[default]
    Lagged,
    /// Re-solve until the per-element coupling pattern stops changing.
    FixedPoint { max_sweeps: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MechOptions {
    /// Include `-phi grad p` in the solid momentum balances.
    pub pressure_coupling: bool,
    pub chi_mode: ChiMode,
}

impl Default for MechOptions {
    fn default() -> Self {
        MechOptions {
            pressure_coupling: true,
            chi_mode: ChiMode::Lagged,
        }
    }
}

/// Outcome of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct MechStep {
    pub state: MechState,
    /// Coupling coefficient used on each element.
    pub chi: Vec<f64>,
    /// Number of linear solves (1 unless the fixed-point mode re-solved).
    pub sweeps: usize,
}

struct CachedOperator {
    dt: f64,
    chi: Vec<f64>,
    matrix: crate::fem::CsrMatrix,
}

/// Stateful stepper: keeps the assembled operator and its factorization
/// while the time step and coupling pattern stay unchanged.
pub struct MechSolver<'m> {
    mesh: &'m Mesh,
    params: MechParams,
    options: MechOptions,
    dofmap: DofMap,
    elements: Vec<P1Element>,
    cache: Option<CachedOperator>,
    linear: LinearSolver,
}

impl<'m> MechSolver<'m> {
    pub fn new(mesh: &'m Mesh, params: MechParams, options: MechOptions) -> Result<Self, MechError> {
        let v = params.violations();
        if !v.is_empty() {
            return Err(MechError::InvalidArgument(v.join("; ")));
        }
        let elements = (0..mesh.n_elements())
            .map(|e| P1Element::new(mesh.element_coords(e)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(MechSolver {
            mesh,
            params,
            options,
            dofmap: mech_dofmap(mesh),
            elements,
            cache: None,
            linear: LinearSolver::new(),
        })
    }

    pub fn dofmap(&self) -> &DofMap {
        &self.dofmap
    }

    pub fn params(&self) -> &MechParams {
        &self.params
    }

    pub fn factorizations(&self) -> usize {
        self.linear.factorizations()
    }

    /// Element operator for coupling `chi` and step `dt`.
    fn local_matrix(&self, e: usize, chi: f64, dt: f64) -> DMatrix<f64> {
        let el = &self.elements[e];
        let p = &self.params;
        let (phi_s, phi_f) = (p.fractions.solid, p.fractions.fiber);
        let m = &self.dofmap;
        let g = &el.gradients;
        let area = el.area;
        let mut k = DMatrix::zeros(15, 15);
        for a in 0..3 {
            for b in 0..3 {
                let gab = g[a].dot(&g[b]);
                for c in 0..2 {
                    for d in 0..2 {
                        let delta = if c == d { 1.0 } else { 0.0 };
                        let sym = delta * gab + g[a][d] * g[b][c];
                        let vol = g[a][c] * g[b][d];
                        let ks = area * (p.mu_s * sym + p.lambda_s * vol);
                        let kf = area * (p.mu_f * sym + p.lambda_f * vol);
                        let coupling = chi * area * 0.5 * sym;
                        let (sa, sb) = (m.local_index(a, FIELD_US, c), m.local_index(b, FIELD_US, d));
                        let (fa, fb) = (m.local_index(a, FIELD_UF, c), m.local_index(b, FIELD_UF, d));
                        k[(sa, sb)] += ks + coupling;
                        k[(sa, fb)] -= coupling;
                        k[(fa, fb)] += kf + coupling;
                        k[(fa, sb)] -= coupling;
                    }
                }
                let pa = m.local_index(a, FIELD_P, 0);
                let pb = m.local_index(b, FIELD_P, 0);
                let mass = area / 12.0 * if a == b { 2.0 } else { 1.0 };
                k[(pa, pb)] -= p.c0 * mass + dt * p.k * area * gab;
                for c in 0..2 {
                    // mass balance rows
                    k[(pa, m.local_index(b, FIELD_US, c))] -= phi_s * g[b][c] * area / 3.0;
                    k[(pa, m.local_index(b, FIELD_UF, c))] -= phi_f * g[b][c] * area / 3.0;
                    if self.options.pressure_coupling {
                        k[(m.local_index(a, FIELD_US, c), pb)] -= phi_s * g[a][c] * area / 3.0;
                        k[(m.local_index(a, FIELD_UF, c), pb)] -= phi_f * g[a][c] * area / 3.0;
                    }
                }
            }
        }
        k
    }

    fn assemble_matrix(&self, chi: &[f64], dt: f64) -> Result<crate::fem::CsrMatrix, MechError> {
        let mut builder = SystemBuilder::with_capacity(self.dofmap.n_dofs(), self.mesh.n_elements() * 225);
        for e in 0..self.mesh.n_elements() {
            let dofs = self.dofmap.element_dofs(self.mesh.elements[e]);
            builder.add_matrix(&dofs, &self.local_matrix(e, chi[e], dt))?;
        }
        Ok(builder.finish()?.matrix)
    }

    fn assemble_rhs(&self, state_n: &MechState, loading: &dyn MechLoading, t: f64, dt: f64) -> Vec<f64> {
        let p = &self.params;
        let m = &self.dofmap;
        let mut rhs = vec![0.0; m.n_dofs()];
        let rule = QuadratureRule::degree4();
        let sources = loading.has_sources();
        for (e, el) in self.elements.iter().enumerate() {
            let tri = self.mesh.elements[e];
            let us = MechState::element_vectors(&state_n.u_s, tri);
            let uf = MechState::element_vectors(&state_n.u_f, tri);
            let div_s = el.vector_gradient(us).trace();
            let div_f = el.vector_gradient(uf).trace();
            for a in 0..3 {
                let pa = m.global(FIELD_P, tri[a], 0);
                let mut v = -(p.fractions.solid * div_s + p.fractions.fiber * div_f) * el.area / 3.0;
                for b in 0..3 {
                    let mass = el.area / 12.0 * if a == b { 2.0 } else { 1.0 };
                    v -= p.c0 * mass * state_n.p[tri[b]];
                }
                rhs[pa] += v;
            }
            if sources {
                for (bary, w) in rule.iter() {
                    let x = el.point(bary);
                    let jw = 2.0 * el.area * w;
                    let fs = loading.skeleton_force(x, t);
                    let ff = loading.fiber_force(x, t);
                    let g = loading.mass_source(x, t);
                    for a in 0..3 {
                        for c in 0..2 {
                            rhs[m.global(FIELD_US, tri[a], c)] += jw * fs[c] * bary[a];
                            rhs[m.global(FIELD_UF, tri[a], c)] += jw * ff[c] * bary[a];
                        }
                        rhs[m.global(FIELD_P, tri[a], 0)] -= dt * jw * g * bary[a];
                    }
                }
            }
        }
        let edge = EdgeRule::gauss2();
        for facet in &self.mesh.facets {
            let (na, nb) = (facet.nodes[0], facet.nodes[1]);
            let (xa, xb) = (self.mesh.nodes[na], self.mesh.nodes[nb]);
            let len = (xb - xa).norm();
            for (s, w) in edge.iter() {
                let x = xa * (1.0 - s) + xb * s;
                if let Some(tr) = loading.skeleton_traction(facet.tag, x, t) {
                    for c in 0..2 {
                        rhs[m.global(FIELD_US, na, c)] += len * w * tr[c] * (1.0 - s);
                        rhs[m.global(FIELD_US, nb, c)] += len * w * tr[c] * s;
                    }
                }
            }
        }
        rhs
    }

    fn solve_with_chi(
        &mut self,
        state_n: &MechState,
        loading: &dyn MechLoading,
        chi: &[f64],
        dt: f64,
    ) -> Result<MechState, MechError> {
        let t = state_n.time + dt;
        let stale = match &self.cache {
            Some(c) => c.dt != dt || c.chi != chi,
            None => true,
        };
        if stale {
            let matrix = self.assemble_matrix(chi, dt)?;
            self.cache = Some(CachedOperator {
                dt,
                chi: chi.to_vec(),
                matrix,
            });
        }
        let matrix = self.cache.as_ref().unwrap().matrix.clone();
        let rhs = self.assemble_rhs(state_n, loading, t, dt);
        let constraints = loading.constraints(self.mesh, &self.dofmap, t);
        let system = apply_dirichlet(SparseSystem::new(matrix, rhs)?, &constraints)?;
        let x = self.linear.solve(&system)?;

        let n = self.mesh.n_nodes();
        let m = &self.dofmap;
        let mut next = MechState {
            time: t,
            p: (0..n).map(|i| x[m.global(FIELD_P, i, 0)]).collect(),
            u_s: (0..n)
                .map(|i| Vec2::new(x[m.global(FIELD_US, i, 0)], x[m.global(FIELD_US, i, 1)]))
                .collect(),
            u_f: (0..n)
                .map(|i| Vec2::new(x[m.global(FIELD_UF, i, 0)], x[m.global(FIELD_UF, i, 1)]))
                .collect(),
            flux: Vec::new(),
        };
        next.flux = postprocess_darcy(self.mesh, &next.p, &self.params);
        if !next.is_finite() {
            return Err(MechError::InvalidState(format!("non-finite solution at t = {t}")));
        }
        Ok(next)
    }

    /// Advances `state_n` by one backward-Euler step of size `dt`.
    pub fn step(&mut self, state_n: &MechState, loading: &dyn MechLoading, dt: f64) -> Result<MechStep, MechError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(MechError::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        state_n.check(self.mesh)?;
        let mut chi = chi_field(self.mesh, state_n, &self.params);
        let mut state = self.solve_with_chi(state_n, loading, &chi, dt)?;
        let mut sweeps = 1;
        if let ChiMode::FixedPoint { max_sweeps } = self.options.chi_mode {
            while sweeps < max_sweeps.max(1) {
                let updated = chi_field(self.mesh, &state, &self.params);
                if updated == chi {
                    break;
                }
                chi = updated;
                state = self.solve_with_chi(state_n, loading, &chi, dt)?;
                sweeps += 1;
            }
        }
        Ok(MechStep { state, chi, sweeps })
    }
}

pub fn mech_dofmap(mesh: &Mesh) -> DofMap {
    DofMap::new(
        mesh.n_nodes(),
        vec![FieldSpec::vector("u_s"), FieldSpec::vector("u_f"), FieldSpec::scalar("p")],
        DofLayout::NodeMajor,
    )
}

/// One step from `state_n` with a fresh solver.
pub fn mech_step(
    state_n: &MechState,
    mesh: &Mesh,
    params: &MechParams,
    loading: &dyn MechLoading,
    options: MechOptions,
    dt: f64,
) -> Result<MechState, MechError> {
    Ok(MechSolver::new(mesh, *params, options)?.step(state_n, loading, dt)?.state)
}

/// Local element operator, exposed for tests of the coupling structure.
pub fn element_operator(
    mesh: &Mesh,
    params: &MechParams,
    options: MechOptions,
    e: usize,
    chi: f64,
    dt: f64,
) -> Result<DMatrix<f64>, MechError> {
    let solver = MechSolver::new(mesh, *params, options)?;
    Ok(solver.local_matrix(e, chi, dt))
}

/// Boundary outflow `int G . n ds` of the per-element Darcy flux.
pub fn boundary_outflow(mesh: &Mesh, flux: &[Vec2]) -> f64 {
    mesh.facets
        .iter()
        .map(|f| flux[f.element].dot(&f.tag.normal()) * mesh.facet_length(f))
        .sum()
}

/// Volume storage rate `int C dp/dt + phi_s d(div u_s)/dt + phi_f d(div u_f)/dt`
/// between two states.
pub fn storage_rate_integral(mesh: &Mesh, params: &MechParams, prev: &MechState, next: &MechState) -> f64 {
    let dt = next.time - prev.time;
    let ds0 = divergence(mesh, &prev.u_s);
    let ds1 = divergence(mesh, &next.u_s);
    let df0 = divergence(mesh, &prev.u_f);
    let df1 = divergence(mesh, &next.u_f);
    let mut total = 0.0;
    for e in 0..mesh.n_elements() {
        let area = mesh.signed_area(e);
        let tri = mesh.elements[e];
        let dp: f64 = tri.iter().map(|&n| next.p[n] - prev.p[n]).sum::<f64>() / 3.0;
        total += area
            * (params.c0 * dp
                + params.fractions.solid * (ds1[e] - ds0[e])
                + params.fractions.fiber * (df1[e] - df0[e]))
            / dt;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_rect_mesh, DiagonalPattern};

    fn square(n: usize) -> Mesh {
        generate_rect_mesh(1e-3, 1e-3, n, n).unwrap()
    }

    #[test]
    fn zero_load_is_a_fixed_point() {
        let mesh = square(4);
        let mut bcs = MechBCs::reference();
        bcs.top = TopLoad::Displacement(Vec2::zeros());
        let s0 = MechState::zeros(&mesh);
        let s1 = mech_step(&s0, &mesh, &MechParams::reference(), &bcs, MechOptions::default(), 1.0).unwrap();
        assert!(s1.p.iter().all(|&v| v == 0.0));
        assert!(s1.u_s.iter().chain(&s1.u_f).all(|v| v.norm() == 0.0));
        assert_eq!(s1.time, 1.0);
    }

    #[test]
    fn uniform_pressure_has_no_flux() {
        let mesh = square(3);
        let p = vec![5.0; mesh.n_nodes()];
        assert!(postprocess_darcy(&mesh, &p, &MechParams::reference()).iter().all(|g| g.norm() == 0.0));
    }

    #[test]
    fn linear_pressure_gives_exact_flux() {
        let mesh = generate_rect_mesh(1.0, 1.0, 3, 2).unwrap();
        let p: Vec<f64> = mesh.nodes.iter().map(|x| x.x).collect();
        let mut params = MechParams::reference();
        params.k = 1.0;
        for g in postprocess_darcy(&mesh, &p, &params) {
            assert!((g - Vec2::new(-1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn coupling_blocks_are_equal_and_opposite() {
        let mesh = square(2);
        let params = MechParams::reference();
        let opts = MechOptions::default();
        let with = element_operator(&mesh, &params, opts, 3, params.chi_0, 0.1).unwrap();
        let without = element_operator(&mesh, &params, opts, 3, 0.0, 0.1).unwrap();
        let d = with - without;
        let map = mech_dofmap(&mesh);
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..2 {
                    for dd in 0..2 {
                        let ss = d[(map.local_index(a, FIELD_US, c), map.local_index(b, FIELD_US, dd))];
                        let sf = d[(map.local_index(a, FIELD_US, c), map.local_index(b, FIELD_UF, dd))];
                        let ff = d[(map.local_index(a, FIELD_UF, c), map.local_index(b, FIELD_UF, dd))];
                        let fs = d[(map.local_index(a, FIELD_UF, c), map.local_index(b, FIELD_US, dd))];
                        assert!((ss + sf).abs() <= 1e-9 * ss.abs().max(1.0));
                        assert!((ff + fs).abs() <= 1e-9 * ff.abs().max(1.0));
                        assert_eq!(ss, ff);
                    }
                }
            }
        }
    }

    #[test]
    fn nan_state_is_rejected() {
        let mesh = square(2);
        let mut s0 = MechState::zeros(&mesh);
        s0.p[0] = f64::NAN;
        let err = mech_step(&s0, &mesh, &MechParams::reference(), &MechBCs::reference(), MechOptions::default(), 1.0);
        assert!(matches!(err, Err(MechError::InvalidState(_))));
    }

    #[test]
    fn unconstrained_problem_is_a_solver_failure() {
        struct Free;
        impl MechLoading for Free {
            fn constraints(&self, _: &Mesh, _: &DofMap, _: f64) -> Vec<(usize, f64)> {
                Vec::new()
            }
            // net body force on a free body has no equilibrium
            fn skeleton_force(&self, _: Vec2, _: f64) -> Vec2 {
                Vec2::new(0.0, -1e3)
            }
            fn has_sources(&self) -> bool {
                true
            }
        }
        let mesh = square(2);
        let err = mech_step(
            &MechState::zeros(&mesh),
            &mesh,
            &MechParams::reference(),
            &Free,
            MechOptions::default(),
            1.0,
        );
        assert!(matches!(err, Err(MechError::Fem(FemError::SolverFailure { .. }))), "{err:?}");
    }

    #[test]
    fn operator_is_reused_between_steps() {
        let mesh = square(4);
        let params = MechParams::reference();
        let bcs = MechBCs::reference();
        let mut solver = MechSolver::new(&mesh, params, MechOptions::default()).unwrap();
        let mut s = MechState::zeros(&mesh);
        for _ in 0..4 {
            s = solver.step(&s, &bcs, 0.5).unwrap().state;
        }
        assert_eq!(solver.factorizations(), 1);
    }

    #[test]
    fn mirror_symmetric_setup_gives_mirror_symmetric_fields() {
        let mesh = Mesh::rectangle(1e-3, 1e-3, 8, 8, DiagonalPattern::Alternating).unwrap();
        let params = MechParams::reference();
        let bcs = MechBCs::reference();
        let mut solver = MechSolver::new(&mesh, params, MechOptions::default()).unwrap();
        let mut s = MechState::zeros(&mesh);
        for _ in 0..3 {
            s = solver.step(&s, &bcs, 0.05).unwrap().state;
        }
        let pmax = s.p.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let umax = s.u_s.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        for j in 0..=8 {
            for i in 0..=8 {
                let a = mesh.node_index(i, j);
                let b = mesh.node_index(8 - i, j);
                assert!((s.p[a] - s.p[b]).abs() <= 1e-10 * pmax);
                assert!((s.u_s[a].x + s.u_s[b].x).abs() <= 1e-10 * umax);
                assert!((s.u_s[a].y - s.u_s[b].y).abs() <= 1e-10 * umax);
                assert!((s.u_f[a].x + s.u_f[b].x).abs() <= 1e-10 * umax);
            }
        }
    }
}
