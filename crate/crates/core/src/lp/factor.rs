//! Basis factorization interface shared by the dense and sparse backends.

/// Pivot magnitude below which a basis column is treated as dependent.
pub(crate) const SINGULAR_TOL: f64 = 1e-11;

/// Basis positions that could not be pivoted, paired with rows left without a
/// pivot. Both lists have the same length.
#[derive(Debug, Clone)]
pub(crate) struct Singular {
    pub positions: Vec<usize>,
    pub rows: Vec<usize>,
}

pub(crate) trait BasisFactor: Sized {
    /// Factorizes the basis whose column at position `p` is `cols[p]`.
    fn factor(m: usize, cols: &[Vec<(usize, f64)>]) -> Result<Self, Singular>;

    /// Solves `B w = a`; input indexed by row, output by basis position.
    fn ftran(&self, rhs: &mut Vec<f64>);

    /// Solves `Bᵀ π = c`; input indexed by basis position, output by row.
    fn btran(&self, rhs: &mut Vec<f64>);

    /// Replaces the column at position `p`; `w` is the ftran of the new column.
    fn update(&mut self, p: usize, w: &[f64]);

    fn updates_since_factor(&self) -> usize;

    fn wants_refactor(&self) -> bool;
}
