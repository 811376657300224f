//! P1 finite-element kernel: basis, quadrature, dof numbering, sparse
//! assembly, Dirichlet elimination and the direct linear solve.

pub mod basis;
pub mod dofmap;
pub mod quadrature;
pub mod solve;
pub mod sparse;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

pub use basis::{p1_basis, BasisEval, P1Element};
pub use dofmap::{DofLayout, DofMap, FieldSpec};
pub use quadrature::{EdgeRule, QuadratureRule};
pub use solve::{solve_linear, LinearSolver};
pub use sparse::{apply_dirichlet, CsrMatrix, SparseSystem, SystemBuilder};

use crate::mesh::Mesh;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FemError {
    #[error("degenerate element with signed area {area:e}")]
    SingularElement { area: f64 },
    #[error("assembly error: {0}")]
    Assembly(String),
    #[error("conflicting constraints on dof {dof}: {first} vs {second}")]
    ConstraintConflict { dof: usize, first: f64, second: f64 },
    #[error("linear solver failure: {reason}")]
    SolverFailure { reason: String, residual: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Element contribution returned by an assembly kernel, in the element-local
/// dof order of the [`DofMap`].
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSystem {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
}

impl LocalSystem {
    pub fn zeros(n: usize) -> Self {
        LocalSystem {
            matrix: DMatrix::zeros(n, n),
            rhs: DVector::zeros(n),
        }
    }
}

/// Sums element contributions over all elements of the mesh.
pub fn assemble<K>(mesh: &Mesh, dofmap: &DofMap, kernel: K) -> Result<SparseSystem, FemError>
where
    K: FnMut(usize, &P1Element) -> Result<LocalSystem, FemError>,
{
    assemble_elements(mesh, dofmap, 0..mesh.n_elements(), kernel)
}

/// Like [`assemble`], visiting elements in the given order.
pub fn assemble_elements<I, K>(
    mesh: &Mesh,
    dofmap: &DofMap,
    elements: I,
    mut kernel: K,
) -> Result<SparseSystem, FemError>
where
    I: IntoIterator<Item = usize>,
    K: FnMut(usize, &P1Element) -> Result<LocalSystem, FemError>,
{
    if dofmap.n_nodes() != mesh.n_nodes() {
        return Err(FemError::Assembly(format!(
            "dof map covers {} nodes but the mesh has {}",
            dofmap.n_nodes(),
            mesh.n_nodes()
        )));
    }
    let n_local = 3 * dofmap.dofs_per_node();
    let mut builder = SystemBuilder::with_capacity(dofmap.n_dofs(), mesh.n_elements() * n_local * n_local);
    for e in elements {
        if e >= mesh.n_elements() {
            return Err(FemError::Assembly(format!("element {e} does not exist")));
        }
        let el = P1Element::new(mesh.element_coords(e))?;
        let local = kernel(e, &el)?;
        let dofs = dofmap.element_dofs(mesh.elements[e]);
        builder.add_matrix(&dofs, &local.matrix)?;
        builder.add_vector(&dofs, &local.rhs)?;
    }
    builder.finish()
}

/// Local P1 mass matrix `area / 12 * [[2,1,1],[1,2,1],[1,1,2]]`.
pub fn p1_mass(el: &P1Element) -> DMatrix<f64> {
    DMatrix::from_fn(3, 3, |a, b| el.area / 12.0 * if a == b { 2.0 } else { 1.0 })
}

/// Local P1 stiffness matrix `area * grad(phi_a) . grad(phi_b)`.
pub fn p1_stiffness(el: &P1Element) -> DMatrix<f64> {
    DMatrix::from_fn(3, 3, |a, b| el.area * el.gradients[a].dot(&el.gradients[b]))
}
