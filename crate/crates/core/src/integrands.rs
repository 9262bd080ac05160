//! Catalog of matrix integrands: products of row norms, their polyconvex
//! lower envelopes, and a few quasiaffine helpers used for cross-checks.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::matcore::{adjugate_vector, block_det_sum, cross3, det, norm, Axis, Mat};
use crate::scalar::Real;

/// Default relative tolerance for coincidence-set membership.
pub const DEFAULT_COINCIDENCE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Integrand {
    /// `|F1| |F2|` on `2 x cols`.
    ProdRows { cols: usize },
    /// `|adj_j F| |F_j|` on `n x n`, `j` zero-based.
    AdjRowProduct { n: usize, j: usize, axis: Axis },
    /// `|F1| |F2| |F3|` on `3 x 3`.
    TripleProduct3x3,
    /// `sum_i |F_i1| |F_i2|` over the 2x2 blocks of `2 x 2N`.
    BlockSum { blocks: usize },
    /// `|det F|` on `n x n`.
    AbsDet { n: usize },
    /// `|F1 x F2|` on `2 x 3`.
    CrossNorm2x3,
    /// `|sum_i det F_i|` on `2 x 2N`.
    AbsBlockDetSum { blocks: usize },
    /// `sum_i |det F_i|` on `2 x 2N`.
    SumAbsBlockDet { blocks: usize },
    /// Signed determinant (quasiaffine).
    Det { n: usize },
    /// Signed `sum_i det F_i` (quasiaffine).
    BlockDetSum { blocks: usize },
    /// The constant 1.
    One { rows: usize, cols: usize },
}

impl Integrand {
    pub fn shape(&self) -> (usize, usize) {
        match *self {
            Integrand::ProdRows { cols } => (2, cols),
            Integrand::AdjRowProduct { n, .. } | Integrand::AbsDet { n } | Integrand::Det { n } => (n, n),
            Integrand::TripleProduct3x3 => (3, 3),
            Integrand::CrossNorm2x3 => (2, 3),
            Integrand::BlockSum { blocks }
            | Integrand::AbsBlockDetSum { blocks }
            | Integrand::SumAbsBlockDet { blocks }
            | Integrand::BlockDetSum { blocks } => (2, 2 * blocks),
            Integrand::One { rows, cols } => (rows, cols),
        }
    }

    fn check_params(&self) -> Result<()> {
        let ok = match *self {
            Integrand::ProdRows { cols } => cols >= 2,
            Integrand::AdjRowProduct { n, j, .. } => n >= 2 && j < n,
            Integrand::AbsDet { n } | Integrand::Det { n } => n >= 1,
            Integrand::BlockSum { blocks }
            | Integrand::AbsBlockDetSum { blocks }
            | Integrand::SumAbsBlockDet { blocks }
            | Integrand::BlockDetSum { blocks } => blocks >= 1,
            Integrand::One { rows, cols } => rows >= 1 && cols >= 1,
            Integrand::TripleProduct3x3 | Integrand::CrossNorm2x3 => true,
        };
        if ok {
            Ok(())
        } else {
            arg(format!("invalid integrand parameters: {self:?}"))
        }
    }

    pub fn eval<T: Real>(&self, f: &Mat<T>) -> Result<T> {
        if f.shape() != self.shape() {
            let (r, c) = self.shape();
            return arg(format!("{self} expects {r}x{c}, got {}x{}", f.rows(), f.cols()));
        }
        Ok(self.eval_unchecked(f))
    }

    /// Evaluation without the shape check; callers must guarantee the shape.
    pub(crate) fn eval_unchecked<T: Real>(&self, f: &Mat<T>) -> T {
        match *self {
            Integrand::ProdRows { .. } => norm(f.row(0)) * norm(f.row(1)),
            Integrand::AdjRowProduct { j, axis, .. } => {
                let adj = adjugate_vector(f, j, axis).expect("square");
                norm(&adj) * norm(&f.line(j, axis))
            }
            Integrand::TripleProduct3x3 => norm(f.row(0)) * norm(f.row(1)) * norm(f.row(2)),
            Integrand::BlockSum { blocks } => (0..blocks)
                .map(|i| {
                    let (a, b) = (&f.row(0)[2 * i..2 * i + 2], &f.row(1)[2 * i..2 * i + 2]);
                    norm(a) * norm(b)
                })
                .fold(T::zero(), |s, x| s + x),
            Integrand::AbsDet { .. } => det(f).expect("square").abs(),
            Integrand::Det { .. } => det(f).expect("square"),
            Integrand::CrossNorm2x3 => norm(&cross3(f.row(0), f.row(1)).expect("3-vectors")),
            Integrand::AbsBlockDetSum { .. } => block_det_sum(f).expect("2x2N").abs(),
            Integrand::BlockDetSum { .. } => block_det_sum(f).expect("2x2N"),
            Integrand::SumAbsBlockDet { blocks } => (0..blocks)
                .map(|i| det(&f.block2(i).expect("block")).expect("2x2").abs())
                .fold(T::zero(), |s, x| s + x),
            Integrand::One { .. } => T::one(),
        }
    }

    /// The polyconvex envelope this integrand is paired with in the catalog.
    pub fn matched_envelope(&self) -> Option<Integrand> {
        match *self {
            Integrand::ProdRows { cols: 2 } => Some(Integrand::AbsDet { n: 2 }),
            Integrand::ProdRows { cols: 3 } => Some(Integrand::CrossNorm2x3),
            Integrand::ProdRows { cols } if cols % 2 == 0 => Some(Integrand::AbsBlockDetSum { blocks: cols / 2 }),
            Integrand::AdjRowProduct { n, .. } => Some(Integrand::AbsDet { n }),
            Integrand::TripleProduct3x3 => Some(Integrand::AbsDet { n: 3 }),
            Integrand::BlockSum { blocks } => Some(Integrand::SumAbsBlockDet { blocks }),
            _ => None,
        }
    }

    pub fn is_matched_pair(phi: &Integrand, phi0: &Integrand) -> bool {
        match (phi, phi0) {
            (Integrand::ProdRows { cols: 2 }, Integrand::AbsBlockDetSum { blocks: 1 }) => true,
            (Integrand::BlockSum { blocks: 1 }, Integrand::AbsDet { n: 2 }) => true,
            _ => phi.matched_envelope().as_ref() == Some(phi0),
        }
    }
}

impl fmt::Display for Integrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Integrand::ProdRows { cols } => write!(f, "prod2x{cols}"),
            Integrand::AdjRowProduct { n, j, axis: Axis::Row } => write!(f, "adjrow:{n}:{}", j + 1),
            Integrand::AdjRowProduct { n, j, axis: Axis::Column } => write!(f, "adjcol:{n}:{}", j + 1),
            Integrand::TripleProduct3x3 => f.write_str("triple3x3"),
            Integrand::BlockSum { blocks } => write!(f, "blocksum:{blocks}"),
            Integrand::AbsDet { n: 2 } => f.write_str("absdet"),
            Integrand::AbsDet { n } => write!(f, "absdet:{n}"),
            Integrand::CrossNorm2x3 => f.write_str("cross2x3"),
            Integrand::AbsBlockDetSum { blocks } => write!(f, "absblockdet:{blocks}"),
            Integrand::SumAbsBlockDet { blocks } => write!(f, "sumabsblockdet:{blocks}"),
            Integrand::Det { n } => write!(f, "det:{n}"),
            Integrand::BlockDetSum { blocks } => write!(f, "blockdet:{blocks}"),
            Integrand::One { rows, cols } => write!(f, "one:{rows}x{cols}"),
        }
    }
}

impl FromStr for Integrand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("unknown integrand `{s}`"));
        let num = |x: &str| x.parse::<usize>().map_err(|_| bad());
        let parts: Vec<&str> = s.trim().split(':').collect();
        let g = match parts.as_slice() {
            ["triple3x3"] => Integrand::TripleProduct3x3,
            ["cross2x3"] => Integrand::CrossNorm2x3,
            ["absdet"] => Integrand::AbsDet { n: 2 },
            ["absdet", n] => Integrand::AbsDet { n: num(n)? },
            ["det", n] => Integrand::Det { n: num(n)? },
            ["blocksum", b] => Integrand::BlockSum { blocks: num(b)? },
            ["absblockdet", b] => Integrand::AbsBlockDetSum { blocks: num(b)? },
            ["sumabsblockdet", b] => Integrand::SumAbsBlockDet { blocks: num(b)? },
            ["blockdet", b] => Integrand::BlockDetSum { blocks: num(b)? },
            [kind @ ("adjrow" | "adjcol"), n, j] => {
                let j = num(j)?;
                if j == 0 {
                    return Err(bad());
                }
                let axis = if *kind == "adjrow" { Axis::Row } else { Axis::Column };
                Integrand::AdjRowProduct { n: num(n)?, j: j - 1, axis }
            }
            ["one", dims] => {
                let (r, c) = dims.split_once('x').ok_or_else(bad)?;
                Integrand::One { rows: num(r)?, cols: num(c)? }
            }
            [p] if p.starts_with("prod2x") => Integrand::ProdRows { cols: num(&p["prod2x".len()..])? },
            _ => return Err(bad()),
        };
        g.check_params().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(g)
    }
}

impl From<Integrand> for String {
    fn from(g: Integrand) -> String {
        g.to_string()
    }
}

impl TryFrom<String> for Integrand {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Membership query for the coincidence set `{phi = phi0}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoincidenceQuery<T> {
    pub phi: Integrand,
    pub phi0: Integrand,
    pub tol: T,
}

impl<T: Real> CoincidenceQuery<T> {
    pub fn new(phi: Integrand, phi0: Integrand, tol: T) -> Result<Self> {
        if phi.shape() != phi0.shape() {
            return arg(format!("shapes of {phi} and {phi0} differ"));
        }
        if !(tol >= T::zero()) {
            return arg("tolerance must be nonnegative");
        }
        Ok(Self { phi, phi0, tol })
    }

    /// Query for the catalog partner of `phi` at the default tolerance.
    pub fn matched(phi: Integrand) -> Result<Self> {
        let phi0 = phi.matched_envelope().ok_or_else(|| Error::Argument(format!("{phi} has no catalog envelope")))?;
        Self::new(phi, phi0, T::lit(DEFAULT_COINCIDENCE_TOL))
    }

    pub fn contains(&self, f: &Mat<T>) -> Result<bool> {
        in_coincidence_set(self, f)
    }
}

/// `|phi(F) - phi0(F)| <= tol (1 + |phi0(F)|)`.
pub fn in_coincidence_set<T: Real>(q: &CoincidenceQuery<T>, f: &Mat<T>) -> Result<bool> {
    let a = q.phi.eval(f)?;
    let b = q.phi0.eval(f)?;
    Ok((a - b).abs() <= q.tol * (T::one() + b.abs()))
}

/// `phi(F) - phi0(F)` for a catalog-matched pair; nonnegative up to roundoff.
pub fn hadamard_gap<T: Real>(phi: &Integrand, phi0: &Integrand, f: &Mat<T>) -> Result<T> {
    if !Integrand::is_matched_pair(phi, phi0) {
        return arg(format!("{phi} and {phi0} are not a matched pair"));
    }
    Ok(phi.eval(f)? - phi0.eval(f)?)
}
