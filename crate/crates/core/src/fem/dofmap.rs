use crate::fem::FemError;

/// A nodal field with a fixed number of components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldSpec {
    pub name: String,
    pub components: usize,
}

impl FieldSpec {
    pub fn scalar(name: &str) -> Self {
        FieldSpec {
            name: name.to_string(),
            components: 1,
        }
    }

    pub fn vector(name: &str) -> Self {
        FieldSpec {
            name: name.to_string(),
            components: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DofLayout {
    /// All dofs of a node are contiguous: `node * dofs_per_node + offset`.
    #[default]
    NodeMajor,
    /// Each field occupies one contiguous block.
    FieldMajor,
}

/// Bijection between `(field, node, component)` and global dof indices.
///
/// Element-local dofs are always ordered node-major: for each of the three
/// element nodes, every field and component in declaration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofMap {
    n_nodes: usize,
    fields: Vec<FieldSpec>,
    /// Component offset of each field within one node.
    offsets: Vec<usize>,
    dofs_per_node: usize,
    layout: DofLayout,
}

impl DofMap {
    pub fn new(n_nodes: usize, fields: Vec<FieldSpec>, layout: DofLayout) -> Self {
        let mut offsets = Vec::with_capacity(fields.len());
        let mut acc = 0;
        for f in &fields {
            offsets.push(acc);
            acc += f.components;
        }
        DofMap {
            n_nodes,
            fields,
            offsets,
            dofs_per_node: acc,
            layout,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_dofs(&self) -> usize {
        self.n_nodes * self.dofs_per_node
    }

    pub fn dofs_per_node(&self) -> usize {
        self.dofs_per_node
    }

    pub fn fields(&self) -> &[FieldSpec] {
        &self.fields
    }

    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.name == name)
    }

    pub fn global(&self, field: usize, node: usize, comp: usize) -> usize {
        debug_assert!(field < self.fields.len() && comp < self.fields[field].components);
        match self.layout {
            DofLayout::NodeMajor => node * self.dofs_per_node + self.offsets[field] + comp,
            DofLayout::FieldMajor => {
                self.n_nodes * self.offsets[field] + node * self.fields[field].components + comp
            }
        }
    }

    /// Checked variant of [`DofMap::global`].
    pub fn try_global(&self, field: usize, node: usize, comp: usize) -> Result<usize, FemError> {
        if field >= self.fields.len() || node >= self.n_nodes || comp >= self.fields[field].components {
            return Err(FemError::Assembly(format!(
                "no dof for field {field}, node {node}, component {comp}"
            )));
        }
        Ok(self.global(field, node, comp))
    }

    /// Inverse of [`DofMap::global`].
    pub fn decompose(&self, dof: usize) -> Option<(usize, usize, usize)> {
        if dof >= self.n_dofs() {
            return None;
        }
        match self.layout {
            DofLayout::NodeMajor => {
                let node = dof / self.dofs_per_node;
                let within = dof % self.dofs_per_node;
                let field = self.offsets.iter().rposition(|&o| o <= within)?;
                Some((field, node, within - self.offsets[field]))
            }
            DofLayout::FieldMajor => {
                let block = dof / self.n_nodes;
                let field = self.offsets.iter().rposition(|&o| o <= block)?;
                let start = self.n_nodes * self.offsets[field];
                let rel = dof - start;
                let nc = self.fields[field].components;
                Some((field, rel / nc, rel % nc))
            }
        }
    }

    pub fn local_index(&self, local_node: usize, field: usize, comp: usize) -> usize {
        local_node * self.dofs_per_node + self.offsets[field] + comp
    }

    /// Global dofs of a triangle, in element-local order.
    pub fn element_dofs(&self, nodes: [usize; 3]) -> Vec<usize> {
        let mut out = Vec::with_capacity(3 * self.dofs_per_node);
        for node in nodes {
            for (f, spec) in self.fields.iter().enumerate() {
                for c in 0..spec.components {
                    out.push(self.global(f, node, c));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(layout: DofLayout) -> DofMap {
        DofMap::new(
            7,
            vec![FieldSpec::vector("u"), FieldSpec::scalar("p"), FieldSpec::vector("w")],
            layout,
        )
    }

    #[test]
    fn bijection_both_layouts() {
        for layout in [DofLayout::NodeMajor, DofLayout::FieldMajor] {
            let m = map(layout);
            assert_eq!(m.n_dofs(), 35);
            let mut seen = vec![false; m.n_dofs()];
            for f in 0..3 {
                for n in 0..7 {
                    for c in 0..m.fields()[f].components {
                        let g = m.global(f, n, c);
                        assert!(!seen[g]);
                        seen[g] = true;
                        assert_eq!(m.decompose(g), Some((f, n, c)));
                    }
                }
            }
            assert!(seen.iter().all(|&s| s));
            assert_eq!(m.decompose(35), None);
        }
    }

    #[test]
    fn element_dofs_follow_local_order() {
        let m = map(DofLayout::NodeMajor);
        let dofs = m.element_dofs([2, 0, 5]);
        assert_eq!(dofs.len(), 15);
        assert_eq!(dofs[m.local_index(1, 1, 0)], m.global(1, 0, 0));
        assert_eq!(dofs[m.local_index(2, 2, 1)], m.global(2, 5, 1));
        assert!(m.try_global(1, 0, 1).is_err());
    }
}
