use super::{coords, Manifold, ManifoldDescriptor, ManifoldKind};
use crate::error::{Error, Result};

/// Flat R^n.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Euclidean {
    dim: usize,
}

impl Euclidean {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "euclidean dimension must be positive");
        Euclidean { dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

impl Manifold for Euclidean {
    type Point = Vec<f64>;

    fn descriptor(&self) -> ManifoldDescriptor {
        ManifoldDescriptor {
            kind: ManifoldKind::Euclidean(self.dim),
            dim: self.dim,
            curvature_lower: 0.0,
            curvature_upper: 0.0,
            injectivity_radius: f64::INFINITY,
        }
    }

    fn point(&self, c: &[f64]) -> Result<Vec<f64>> {
        if c.len() != self.dim {
            return Err(Error::Representation(format!(
                "expected {} coordinates, got {}",
                self.dim,
                c.len()
            )));
        }
        if c.iter().any(|x| !x.is_finite()) {
            return Err(Error::Representation("non-finite coordinate".into()));
        }
        Ok(c.to_vec())
    }

    fn origin(&self) -> Vec<f64> {
        vec![0.0; self.dim]
    }

    fn distance(&self, a: &Vec<f64>, b: &Vec<f64>) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }

    fn exp(&self, base: &Vec<f64>, v: &Vec<f64>) -> Vec<f64> {
        base.iter().zip(v).map(|(x, y)| x + y).collect()
    }

    fn log(&self, base: &Vec<f64>, target: &Vec<f64>) -> Result<Vec<f64>> {
        Ok(coords::sub(target, base))
    }

    fn inner(&self, _base: &Vec<f64>, u: &Vec<f64>, v: &Vec<f64>) -> f64 {
        coords::dot(u, v)
    }

    fn tangency_defect(&self, _base: &Vec<f64>, _v: &Vec<f64>) -> f64 {
        0.0
    }

    fn tangent_basis(&self, _base: &Vec<f64>) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|k| {
                let mut e = vec![0.0; self.dim];
                e[k] = 1.0;
                e
            })
            .collect()
    }

    fn log_differential(&self, _base: &Vec<f64>, _at: &Vec<f64>, w: &Vec<f64>) -> Vec<f64> {
        w.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_is_addition_and_log_is_subtraction() {
        let m = Euclidean::new(2);
        let x = vec![1.0, 2.0];
        let v = vec![0.5, -1.0];
        assert_eq!(m.exp(&x, &v), vec![1.5, 1.0]);
        assert_eq!(m.log(&x, &vec![1.5, 1.0]).unwrap(), v);
        assert_eq!(m.distance(&x, &x), 0.0);
    }

    #[test]
    fn dimension_is_checked() {
        assert!(Euclidean::new(3).point(&[1.0, 2.0]).is_err());
        assert!(Euclidean::new(1).point(&[f64::NAN]).is_err());
    }
}
