use crate::error::{Error, Result};

/// Dense `(maps, C, F, T)` array of f64, row-major with maps slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    shape: [usize; 4],
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(shape: [usize; 4]) -> Self {
        Self { shape, data: vec![0.0; shape.iter().product()] }
    }

    pub fn from_vec(shape: [usize; 4], data: Vec<f64>) -> Result<Self> {
        if shape.contains(&0) {
            return Err(Error::ShapeMismatch(format!("tensor shape {shape:?} has an empty axis")));
        }
        if data.len() != shape.iter().product::<usize>() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for shape {shape:?}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn shape(&self) -> [usize; 4] {
        self.shape
    }

    pub fn maps(&self) -> usize {
        self.shape[0]
    }

    /// `(C, F, T)`
    pub fn spatial(&self) -> [usize; 3] {
        [self.shape[1], self.shape[2], self.shape[3]]
    }

    /// Elements per map.
    pub fn map_len(&self) -> usize {
        self.shape[1] * self.shape[2] * self.shape[3]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn map(&self, m: usize) -> &[f64] {
        let n = self.map_len();
        &self.data[m * n..(m + 1) * n]
    }

    pub fn index(&self, m: usize, c: usize, f: usize, t: usize) -> usize {
        let [_, nc, nf, nt] = self.shape;
        debug_assert!(c < nc && f < nf && t < nt);
        ((m * nc + c) * nf + f) * nt + t
    }

    pub fn get(&self, m: usize, c: usize, f: usize, t: usize) -> f64 {
        self.data[self.index(m, c, f, t)]
    }
}
