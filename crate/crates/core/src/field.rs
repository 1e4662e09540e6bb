use crate::space::{FiniteSpace, Members};

/// A nonnegative function on the points of a space.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub values: Vec<f64>,
}

impl Field {
    pub fn new(values: Vec<f64>) -> Self {
        Field { values }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Field { values: vec![c; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// ∫_E f dμ over a member set.
    pub fn integral(&self, space: &FiniteSpace, members: &Members) -> f64 {
        let m = space.masses();
        members
            .runs()
            .iter()
            .map(|&(s, e)| (s as usize..e as usize).map(|i| self.values[i] * m[i]).sum::<f64>())
            .sum()
    }

    /// ∫_E f^p dμ over a member set.
    pub fn power_integral(&self, space: &FiniteSpace, members: &Members, p: f64) -> f64 {
        let m = space.masses();
        members
            .runs()
            .iter()
            .map(|&(s, e)| (s as usize..e as usize).map(|i| self.values[i].powf(p) * m[i]).sum::<f64>())
            .sum()
    }

    pub fn scaled(&self, c: f64) -> Field {
        Field { values: self.values.iter().map(|v| v * c).collect() }
    }

    pub fn powf(&self, p: f64) -> Field {
        Field { values: self.values.iter().map(|v| v.powf(p)).collect() }
    }
}
