//! Hierarchical laminates: finitely supported probability measures on
//! matrices built from binary splits whose two barycenters differ by a
//! rank-one matrix.

use serde::{Deserialize, Serialize};

use crate::error::{arg, Result};
use crate::integrands::{in_coincidence_set, CoincidenceQuery, Integrand};
use crate::matcore::{rank_one_defect, Mat};
use crate::scalar::Real;

/// Default scaled rank-one defect accepted at a split.
pub const DEFAULT_SPLIT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum Laminate<T> {
    Leaf(Mat<T>),
    Split { weight: T, left: Box<Laminate<T>>, right: Box<Laminate<T>> },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LaminateReport<T> {
    /// `max|barycenter - target| / (1 + max|target|)`.
    pub barycenter_residual: T,
    pub max_split_defect: T,
    pub weight_sum_residual: T,
    pub support_violations: usize,
    /// Leaves whose shape differs from the target, plus splits with weight outside `[0,1]`.
    pub structural_errors: usize,
}

impl<T: Real> LaminateReport<T> {
    pub fn passes(&self, barycenter_tol: T, split_tol: T) -> bool {
        self.barycenter_residual <= barycenter_tol
            && self.max_split_defect <= split_tol
            && self.weight_sum_residual <= T::lit(1e-12)
            && self.support_violations == 0
            && self.structural_errors == 0
    }
}

impl<T: Real> Laminate<T> {
    pub fn dirac(f: Mat<T>) -> Self {
        Laminate::Leaf(f)
    }

    /// `weight * left + (1 - weight) * right`. Rank-one compatibility is not
    /// enforced here; [`Laminate::validate`] measures it.
    pub fn split(weight: T, left: Laminate<T>, right: Laminate<T>) -> Result<Self> {
        if !(weight >= T::zero() && weight <= T::one()) {
            return arg(format!("split weight {weight} outside [0,1]"));
        }
        if left.shape() != right.shape() {
            return arg("split children have different shapes");
        }
        Ok(Laminate::Split { weight, left: Box::new(left), right: Box::new(right) })
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            Laminate::Leaf(f) => f.shape(),
            Laminate::Split { left, .. } => left.shape(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Laminate::Leaf(_) => 0,
            Laminate::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            Laminate::Leaf(_) => 1,
            Laminate::Split { left, right, .. } => left.leaf_count() + right.leaf_count(),
        }
    }

    /// Flat list of `(weight, matrix)`; zero-weight atoms are dropped.
    pub fn atoms(&self) -> Vec<(T, Mat<T>)> {
        let mut out = Vec::new();
        self.collect_atoms(T::one(), &mut out);
        out
    }

    fn collect_atoms(&self, w: T, out: &mut Vec<(T, Mat<T>)>) {
        if w <= T::zero() {
            return;
        }
        match self {
            Laminate::Leaf(f) => out.push((w, f.clone())),
            Laminate::Split { weight, left, right } => {
                left.collect_atoms(w * *weight, out);
                right.collect_atoms(w * (T::one() - *weight), out);
            }
        }
    }

    pub fn leaves(&self) -> Vec<&Mat<T>> {
        match self {
            Laminate::Leaf(f) => vec![f],
            Laminate::Split { left, right, .. } => {
                let mut v = left.leaves();
                v.extend(right.leaves());
                v
            }
        }
    }

    pub fn barycenter(&self) -> Mat<T> {
        match self {
            Laminate::Leaf(f) => f.clone(),
            Laminate::Split { weight, left, right } => {
                left.barycenter().scale(*weight).axpy(T::one() - *weight, &right.barycenter())
            }
        }
    }

    /// `<g, nu>`, evaluated along the tree.
    pub fn act(&self, g: &Integrand) -> Result<T> {
        if self.shape() != g.shape() {
            let (r, c) = g.shape();
            return arg(format!("{g} expects {r}x{c}, laminate is {:?}", self.shape()));
        }
        Ok(self.act_unchecked(g))
    }

    fn act_unchecked(&self, g: &Integrand) -> T {
        match self {
            Laminate::Leaf(f) => g.eval_unchecked(f),
            Laminate::Split { weight, left, right } => {
                *weight * left.act_unchecked(g) + (T::one() - *weight) * right.act_unchecked(g)
            }
        }
    }

    /// Applies `f` to every leaf, keeping the tree.
    pub fn map_leaves(&self, f: &impl Fn(&Mat<T>) -> Mat<T>) -> Laminate<T> {
        match self {
            Laminate::Leaf(m) => Laminate::Leaf(f(m)),
            Laminate::Split { weight, left, right } => Laminate::Split {
                weight: *weight,
                left: Box::new(left.map_leaves(f)),
                right: Box::new(right.map_leaves(f)),
            },
        }
    }

    /// Replaces every leaf by the laminate `f` builds from it.
    pub fn graft(&self, f: &mut impl FnMut(&Mat<T>) -> Laminate<T>) -> Laminate<T> {
        match self {
            Laminate::Leaf(m) => f(m),
            Laminate::Split { weight, left, right } => {
                let l = left.graft(f);
                let r = right.graft(f);
                Laminate::Split { weight: *weight, left: Box::new(l), right: Box::new(r) }
            }
        }
    }

    /// Largest scaled rank-one defect of `barycenter(left) - barycenter(right)` over all splits.
    pub fn max_split_defect(&self) -> T {
        match self {
            Laminate::Leaf(_) => T::zero(),
            Laminate::Split { left, right, .. } => {
                let d = rank_one_defect(&(&left.barycenter() - &right.barycenter()), T::zero()).defect;
                d.max(left.max_split_defect()).max(right.max_split_defect())
            }
        }
    }

    fn structural_errors(&self, shape: (usize, usize)) -> usize {
        match self {
            Laminate::Leaf(f) => usize::from(f.shape() != shape),
            Laminate::Split { weight, left, right } => {
                usize::from(!(*weight >= T::zero() && *weight <= T::one()))
                    + left.structural_errors(shape)
                    + right.structural_errors(shape)
            }
        }
    }

    /// Measures how far `self` is from a valid laminate with barycenter
    /// `target`, optionally supported in a coincidence set.
    pub fn validate(&self, target: &Mat<T>, support: Option<&CoincidenceQuery<T>>) -> LaminateReport<T> {
        let structural_errors = self.structural_errors(target.shape());
        if structural_errors > 0 {
            let inf = T::infinity();
            return LaminateReport {
                barycenter_residual: inf,
                max_split_defect: inf,
                weight_sum_residual: inf,
                support_violations: self.leaf_count(),
                structural_errors,
            };
        }
        let atoms = self.atoms();
        let weight_sum = atoms.iter().fold(T::zero(), |s, (w, _)| s + *w);
        let bary = self.barycenter();
        let barycenter_residual = (&bary - target).max_abs() / (T::one() + target.max_abs());
        let support_violations = match support {
            None => 0,
            Some(q) => atoms.iter().filter(|(_, f)| !in_coincidence_set(q, f).unwrap_or(false)).count(),
        };
        LaminateReport {
            barycenter_residual,
            max_split_defect: self.max_split_defect(),
            weight_sum_residual: (weight_sum - T::one()).abs(),
            support_violations,
            structural_errors,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Repr<T> {
    Split { split: T, left: Box<Repr<T>>, right: Box<Repr<T>> },
    Leaf { leaf: Vec<Vec<T>> },
}

impl<T: Real> Laminate<T> {
    fn to_repr(&self) -> Repr<T> {
        match self {
            Laminate::Leaf(f) => Repr::Leaf { leaf: f.to_rows() },
            Laminate::Split { weight, left, right } => {
                Repr::Split { split: *weight, left: Box::new(left.to_repr()), right: Box::new(right.to_repr()) }
            }
        }
    }

    fn from_repr(r: Repr<T>) -> Result<Self> {
        match r {
            Repr::Leaf { leaf } => Ok(Laminate::Leaf(Mat::from_rows(&leaf)?)),
            Repr::Split { split, left, right } => {
                Laminate::split(split, Self::from_repr(*left)?, Self::from_repr(*right)?)
            }
        }
    }
}

impl<T: Real + Serialize> Serialize for Laminate<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_repr().serialize(s)
    }
}

impl<'de, T: Real + Deserialize<'de>> Deserialize<'de> for Laminate<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Laminate::from_repr(Repr::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}
