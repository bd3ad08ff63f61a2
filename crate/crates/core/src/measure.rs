//! Finite atomic measure spaces and simple functions over them.
//!
//! A space is an ordered list of atoms with strictly positive weights. The
//! atom order is the canonical iteration order for every operation and for
//! all serialized output.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use crate::error::{domain, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasureSpace {
    ids: Arc<[String]>,
    weights: Vec<f64>,
}

/// A real value on every atom of some space.
#[derive(Debug, Clone, PartialEq)]
pub struct SimpleFunction {
    atoms: Arc<[String]>,
    values: Vec<f64>,
}

impl AtomicMeasureSpace {
    /// Builds a space from `(id, weight)` pairs in canonical order.
    ///
    /// Weights must be finite and strictly positive, ids unique.
    pub fn new<I, S>(atoms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut ids = Vec::new();
        let mut weights = Vec::new();
        let mut seen = HashSet::new();
        for (id, w) in atoms {
            let id = id.into();
            if !w.is_finite() || w <= 0.0 {
                return domain(format!(
                    "atom {id:?} has weight {w}; weights must be finite and > 0"
                ));
            }
            if !seen.insert(id.clone()) {
                return domain(format!("duplicate atom id {id:?}"));
            }
            ids.push(id);
            weights.push(w);
        }
        Ok(Self {
            ids: ids.into(),
            weights,
        })
    }

    /// Space with generated ids `a0, a1, ...`.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        Self::new(
            weights
                .iter()
                .enumerate()
                .map(|(i, &w)| (format!("a{i}"), w)),
        )
    }

    /// Same atoms, new weights.
    pub fn reweighted(&self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.len() {
            return domain(format!(
                "expected {} weights, got {}",
                self.len(),
                weights.len()
            ));
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !w.is_finite() || **w <= 0.0)
        {
            return domain(format!("atom {:?} has weight {w}", self.ids[i]));
        }
        Ok(Self {
            ids: Arc::clone(&self.ids),
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|a| a == id)
    }

    /// Wraps `values` (in canonical atom order) as a function on this space.
    pub fn function(&self, values: Vec<f64>) -> Result<SimpleFunction> {
        if values.len() != self.len() {
            return domain(format!(
                "function has {} values but the space has {} atoms",
                values.len(),
                self.len()
            ));
        }
        Ok(SimpleFunction {
            atoms: Arc::clone(&self.ids),
            values,
        })
    }

    /// Builds a function from an `id -> value` map that must cover exactly the atoms.
    pub fn function_from_map(&self, map: &HashMap<String, f64>) -> Result<SimpleFunction> {
        if map.len() != self.len() {
            return domain(format!(
                "function defines {} atoms but the space has {}",
                map.len(),
                self.len()
            ));
        }
        let values = self
            .ids
            .iter()
            .map(|id| {
                map.get(id).copied().ok_or_else(|| {
                    crate::Error::Domain(format!("function has no value for atom {id:?}"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        self.function(values)
    }

    pub fn constant(&self, c: f64) -> SimpleFunction {
        SimpleFunction {
            atoms: Arc::clone(&self.ids),
            values: vec![c; self.len()],
        }
    }

    pub fn zero(&self) -> SimpleFunction {
        self.constant(0.0)
    }

    /// Indicator of the atoms at the given indices.
    pub fn indicator(&self, indices: &[usize]) -> SimpleFunction {
        let mut f = self.zero();
        for &i in indices {
            f.values[i] = 1.0;
        }
        f
    }

    pub fn owns(&self, f: &SimpleFunction) -> bool {
        Arc::ptr_eq(&self.ids, &f.atoms) || *self.ids == *f.atoms
    }

    pub(crate) fn check(&self, f: &SimpleFunction) -> Result<()> {
        if self.owns(f) {
            Ok(())
        } else {
            domain(format!(
                "function atoms {:?} do not match space atoms {:?}",
                f.atoms, self.ids
            ))
        }
    }

    pub(crate) fn check_same_atoms(&self, other: &AtomicMeasureSpace) -> Result<()> {
        if Arc::ptr_eq(&self.ids, &other.ids) || *self.ids == *other.ids {
            Ok(())
        } else {
            domain(format!(
                "measure spaces have different atom sets: {:?} vs {:?}",
                self.ids, other.ids
            ))
        }
    }
}

impl SimpleFunction {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.atoms
            .iter()
            .position(|a| a == id)
            .map(|i| self.values[i])
    }

    /// True when every value is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn same_atoms(&self, other: &SimpleFunction) -> bool {
        Arc::ptr_eq(&self.atoms, &other.atoms) || *self.atoms == *other.atoms
    }

    /// Applies `op` to every value.
    pub fn map(&self, op: impl Fn(f64) -> f64) -> SimpleFunction {
        SimpleFunction {
            atoms: Arc::clone(&self.atoms),
            values: self.values.iter().map(|&v| op(v)).collect(),
        }
    }

    /// Applies `op` atomwise to `self` and `other`.
    pub fn zip_with(
        &self,
        other: &SimpleFunction,
        op: impl Fn(f64, f64) -> f64,
    ) -> Result<SimpleFunction> {
        if !self.same_atoms(other) {
            return domain(format!(
                "functions live on different atoms: {:?} vs {:?}",
                self.atoms, other.atoms
            ));
        }
        Ok(SimpleFunction {
            atoms: Arc::clone(&self.atoms),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        })
    }

    pub fn scale(&self, c: f64) -> SimpleFunction {
        self.map(|v| c * v)
    }

    pub fn add(&self, other: &SimpleFunction) -> Result<SimpleFunction> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SimpleFunction) -> Result<SimpleFunction> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &SimpleFunction) -> Result<SimpleFunction> {
        self.zip_with(other, |a, b| a * b)
    }

    /// `(self + other) / 2`.
    pub fn midpoint(&self, other: &SimpleFunction) -> Result<SimpleFunction> {
        self.zip_with(other, |a, b| 0.5 * (a + b))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `Σ_i weight_i · f_i`.
pub fn integrate(space: &AtomicMeasureSpace, f: &SimpleFunction) -> Result<f64> {
    space.check(f)?;
    Ok(space
        .weights
        .iter()
        .zip(&f.values)
        .map(|(w, v)| w * v)
        .sum())
}

/// Density `dν/dμ` of `nu` with respect to `mu`; atomwise the weight ratio.
pub fn radon_nikodym(mu: &AtomicMeasureSpace, nu: &AtomicMeasureSpace) -> Result<SimpleFunction> {
    mu.check_same_atoms(nu)?;
    mu.function(
        nu.weights
            .iter()
            .zip(&mu.weights)
            .map(|(n, m)| n / m)
            .collect(),
    )
}

/// Restriction of `space` and `f` to `atoms`, kept in canonical order.
pub fn restrict(
    space: &AtomicMeasureSpace,
    f: &SimpleFunction,
    atoms: &[&str],
) -> Result<(AtomicMeasureSpace, SimpleFunction)> {
    space.check(f)?;
    let wanted: HashSet<&str> = atoms.iter().copied().collect();
    for id in &wanted {
        if space.index_of(id).is_none() {
            return domain(format!("unknown atom {id:?}"));
        }
    }
    let keep: Vec<usize> = (0..space.len())
        .filter(|&i| wanted.contains(space.ids[i].as_str()))
        .collect();
    restrict_indices(space, f, &keep)
}

/// Restriction to the atoms at `indices` (which must be increasing).
pub(crate) fn restrict_indices(
    space: &AtomicMeasureSpace,
    f: &SimpleFunction,
    indices: &[usize],
) -> Result<(AtomicMeasureSpace, SimpleFunction)> {
    let sub = AtomicMeasureSpace::new(
        indices
            .iter()
            .map(|&i| (space.ids[i].clone(), space.weights[i])),
    )?;
    let values = indices.iter().map(|&i| f.values[i]).collect();
    let g = sub.function(values)?;
    Ok((sub, g))
}
