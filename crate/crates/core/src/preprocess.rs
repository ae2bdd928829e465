//! Similarity transformation of an LTI system into block-diagonal real Schur
//! form, one diagonal block per future network layer.

use crate::linalg::{
    block_diagonal_part, block_diagonalize, condition_number_2norm, inverse, quasi_triangular_layout, real_schur,
    reorder_schur, BlockLayout, Matrix,
};
use crate::spectra::{extract_eigenvalues, plan_clusters, sequence_blocks};
use crate::{Error, StateSpace};
use serde::{Deserialize, Serialize};

/// Which sparse class a diagonal block belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockClass {
    /// Real eigenvalues only.
    Real,
    /// Complex pairs only.
    Complex,
    /// Reals followed by complex pairs.
    Mixed,
}

/// One diagonal block of the transformed state matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerBlock {
    pub offset: usize,
    pub n_real: usize,
    pub n_pair: usize,
    pub class: BlockClass,
}

impl LayerBlock {
    pub fn dim(&self) -> usize {
        self.n_real + 2 * self.n_pair
    }

    pub fn neurons(&self) -> usize {
        self.n_real + self.n_pair
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.dim()
    }
}

#[derive(Debug, Clone)]
pub struct PreprocessOptions {
    pub layers: usize,
    pub seed: u64,
    /// Condition numbers above this value produce a warning.
    pub max_cond: f64,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        Self {
            layers: 1,
            seed: 0,
            max_cond: f64::INFINITY,
        }
    }
}

/// System after the similarity transformation `x = T x̃`.
#[derive(Debug, Clone)]
pub struct TransformedLti {
    pub ss: StateSpace,
    pub t: Matrix,
    pub t_inv: Matrix,
    pub cond_t: f64,
    pub blocks: Vec<LayerBlock>,
    /// True when the real Schur form was already diagonal and `T` is orthogonal.
    pub diagonalizable_path: bool,
    pub warnings: Vec<String>,
}

impl TransformedLti {
    pub fn layout(&self) -> BlockLayout {
        BlockLayout::new(self.blocks.iter().map(LayerBlock::dim).collect())
    }
}

/// Transforms `ss` so that its state matrix is block diagonal with every
/// block in the convertible class.
///
/// When the real Schur form is diagonal the orthogonal Schur basis is used
/// directly and every state becomes its own layer; `opts.layers` is then
/// ignored.
pub fn preprocess_lti(ss: &StateSpace, opts: &PreprocessOptions) -> Result<TransformedLti, Error> {
    let n = ss.states();
    if opts.layers == 0 || opts.layers > n {
        return Err(Error::InvalidArgument(format!(
            "layer count {} outside 1..={n}",
            opts.layers
        )));
    }
    let schur = real_schur(&ss.a)?;
    let scale = schur.r.amax();
    let off_diag = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .fold(0.0_f64, |m, (i, j)| m.max(schur.r[(i, j)].abs()));
    let diagonal = schur.block_sizes.iter().all(|&s| s == 1) && off_diag <= 1e-10 * scale;

    let (t, a, layout, t_inv) = if diagonal {
        // sort the diagonal by ascending magnitude, stable in the Schur order
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| schur.r[(i, i)].abs().total_cmp(&schur.r[(j, j)].abs()));
        let t = Matrix::from_fn(n, n, |i, j| schur.q[(i, order[j])]);
        let a = Matrix::from_fn(n, n, |i, j| if i == j { schur.r[(order[i], order[i])] } else { 0.0 });
        let t_inv = t.transpose();
        (t, a, BlockLayout::new(vec![1; n]), t_inv)
    } else {
        let units = extract_eigenvalues(&schur.r, &schur.block_sizes);
        let plan = plan_clusters(&units, opts.layers, opts.seed)?;
        let (target, layout) = sequence_blocks(&units, &plan);
        let ordered = reorder_schur(&schur, &target)?;
        let (t3, a) = block_diagonalize(&ordered.r, &layout)?;
        let t = &ordered.q * t3;
        let t_inv = inverse(&t)?;
        (t, a, layout, t_inv)
    };

    let blocks = classify_diagonal_blocks(&a, &layout)?;
    let cond_t = condition_number_2norm(&t)?;
    let mut warnings = Vec::new();
    if cond_t > opts.max_cond {
        warnings.push(format!(
            "condition number of the transformation {cond_t:.3e} exceeds {:.3e}",
            opts.max_cond
        ));
    }
    let transformed = StateSpace {
        a,
        b: &t_inv * &ss.b,
        c: &ss.c * &t,
        d: ss.d.clone(),
    };
    Ok(TransformedLti {
        ss: transformed,
        t,
        t_inv,
        cond_t,
        blocks,
        diagonalizable_path: diagonal,
        warnings,
    })
}

/// Checks that every diagonal block of `a` lists its real eigenvalues first,
/// followed by 2×2 blocks with a nonzero upper-right entry.
pub fn classify_diagonal_blocks(a: &Matrix, layout: &BlockLayout) -> Result<Vec<LayerBlock>, Error> {
    let diag = block_diagonal_part(a, layout);
    let leak = (a - &diag).amax();
    if leak > 1e-9 * a.amax().max(f64::MIN_POSITIVE) {
        return Err(Error::NotConvertible(format!(
            "off-diagonal blocks not negligible ({leak:e})"
        )));
    }
    let mut blocks = Vec::with_capacity(layout.len());
    for k in 0..layout.len() {
        let rg = layout.range(k);
        let sub = a.view((rg.start, rg.start), (rg.len(), rg.len())).into_owned();
        let fine = quasi_triangular_layout(&sub)?;
        let sizes = fine.sizes();
        let n_real = sizes.iter().take_while(|&&s| s == 1).count();
        let n_pair = sizes.len() - n_real;
        if sizes[n_real..].iter().any(|&s| s != 2) {
            return Err(Error::NotConvertible(format!(
                "block {k} has a real eigenvalue after a complex pair"
            )));
        }
        for p in 0..n_pair {
            let o = n_real + 2 * p;
            let (h11, h12, h21, h22) = (sub[(o, o)], sub[(o, o + 1)], sub[(o + 1, o)], sub[(o + 1, o + 1)]);
            if h12 == 0.0 {
                return Err(Error::NotConvertible(format!(
                    "block {k}: 2x2 block {p} has a zero upper-right entry"
                )));
            }
            let disc = 0.25 * (h11 - h22).powi(2) + h12 * h21;
            if disc >= 0.0 {
                return Err(Error::NotConvertible(format!(
                    "block {k}: 2x2 block {p} has real eigenvalues"
                )));
            }
        }
        let class = match (n_real, n_pair) {
            (_, 0) => BlockClass::Real,
            (0, _) => BlockClass::Complex,
            _ => BlockClass::Mixed,
        };
        blocks.push(LayerBlock {
            offset: rg.start,
            n_real,
            n_pair,
            class,
        });
    }
    Ok(blocks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_system_takes_orthogonal_path() {
        let a = Matrix::from_row_slice(2, 2, &[-2.0, 1.0, 1.0, -2.0]);
        let ss = StateSpace::new(a, Matrix::identity(2, 2), Matrix::identity(2, 2), Matrix::zeros(2, 2)).unwrap();
        let tr = preprocess_lti(&ss, &PreprocessOptions::default()).unwrap();
        assert!(tr.diagonalizable_path);
        assert_eq!(tr.blocks.len(), 2);
        assert!((tr.cond_t - 1.0).abs() < 1e-12);
        assert!((tr.ss.a[(0, 0)] + 1.0).abs() < 1e-12);
        assert!((tr.ss.a[(1, 1)] + 3.0).abs() < 1e-12);
    }

    #[test]
    fn mixed_block_is_classified() {
        let a = Matrix::from_row_slice(3, 3, &[-1.0, 0.3, 0.2, 0.0, -2.0, 4.0, 0.0, -1.0, -2.0]);
        let blocks = classify_diagonal_blocks(&a, &BlockLayout::new(vec![3])).unwrap();
        assert_eq!(blocks[0].class, BlockClass::Mixed);
        assert_eq!((blocks[0].n_real, blocks[0].n_pair), (1, 1));
    }

    #[test]
    fn pair_before_real_is_rejected() {
        let a = Matrix::from_row_slice(3, 3, &[-2.0, 4.0, 0.2, -1.0, -2.0, 0.3, 0.0, 0.0, -1.0]);
        assert!(classify_diagonal_blocks(&a, &BlockLayout::new(vec![3])).is_err());
    }
}
