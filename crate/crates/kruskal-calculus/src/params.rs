use nalgebra::{DMatrix, DVector};
use tensor_core::KruskalModel;

/// Concatenated factor parameterization `[vec(U^(1)); ...; vec(U^(N))]`
/// together with the shape metadata needed to slice it back apart.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    data: DVector<f64>,
    dims: Vec<usize>,
    rank: usize,
}

/// Packs factor matrices into a parameter vector.
pub fn pack_factors(factors: &[DMatrix<f64>]) -> ParamVector {
    let rank = factors[0].ncols();
    let dims: Vec<usize> = factors.iter().map(|f| f.nrows()).collect();
    let len: usize = dims.iter().map(|d| d * rank).sum();
    let mut data = DVector::zeros(len);
    let mut offset = 0;
    for f in factors {
        let block = f.nrows() * rank;
        data.rows_mut(offset, block)
            .copy_from_slice(f.as_slice());
        offset += block;
    }
    ParamVector { data, dims, rank }
}

impl ParamVector {
    /// Builds the parameter vector of a model after balancing, so the
    /// weights are folded evenly into the factors.
    pub fn from_model(m: &KruskalModel) -> Self {
        pack_factors(m.balance().factors())
    }

    pub fn from_vector(data: DVector<f64>, dims: &[usize], rank: usize) -> Self {
        debug_assert_eq!(data.len(), dims.iter().map(|d| d * rank).sum::<usize>());
        ParamVector {
            data,
            dims: dims.to_vec(),
            rank,
        }
    }

    pub fn data(&self) -> &DVector<f64> {
        &self.data
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.data
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.len() == 0
    }

    /// Slices the vector back into factor matrices.
    pub fn factors(&self) -> Vec<DMatrix<f64>> {
        let mut out = Vec::with_capacity(self.dims.len());
        let mut offset = 0;
        for &d in &self.dims {
            let block = d * self.rank;
            out.push(DMatrix::from_column_slice(
                d,
                self.rank,
                self.data.rows(offset, block).as_slice(),
            ));
            offset += block;
        }
        out
    }

    /// Model with unit weights over the packed factors.
    pub fn to_model(&self) -> KruskalModel {
        KruskalModel::from_factors(self.factors()).expect("parameter vector is well formed")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_identity() {
        let factors = vec![
            DMatrix::from_column_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]),
            DMatrix::from_column_slice(3, 2, &[5.0, 6.0, 7.0, 8.0, 9.0, 10.0]),
        ];
        let p = pack_factors(&factors);
        assert_eq!(p.len(), 10);
        assert_eq!(p.factors(), factors);
    }
}
