//! Closed-form laminate builders.
//!
//! * `2 x 2N`: a single split `F = t F1 + (1 - t) F0` with leaves of the form
//!   `(x; alpha R x)`, `t` a root of a quadratic.
//! * `2 x 3`: the planar circle-intersection split at weight 1/2.
//! * `3 x 3` triple product: a `2 x 3` split of the first two rows, then a
//!   segment certificate per leaf for the adjugate polynomial.
//! * block sums: blockwise two-point splits, nested.

use crate::error::{arg, Error, Result};
use crate::integrands::{hadamard_gap, CoincidenceQuery, Integrand, DEFAULT_COINCIDENCE_TOL};
use crate::laminate::Laminate;
use crate::levelset::{
    choose_alphas_adj, find_growth_direction, rank_one_cone, segment_on_level_set, GradedPolynomial, SearchConfig,
    SegmentCertificate,
};
use crate::matcore::{block_det_sum, cross3, det, dot, norm, norm_sq, rank_one_defect, rot2, rot_block, unit_normal3, Axis, Mat};
use crate::scalar::Real;

/// Relative margin by which the equality-case `alpha1 + alpha0` is raised.
pub const ALPHA_NUDGE: f64 = 1e-6;

fn check_2x2n<T: Real>(f: &Mat<T>) -> Result<()> {
    if f.rows() != 2 || f.cols() < 2 || f.cols() % 2 != 0 {
        return arg(format!("expected a 2 x 2N matrix, got {:?}", f.shape()));
    }
    Ok(())
}

/// `a t^2 + b t + c` together with its real roots and endpoint values.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticInT<T> {
    pub coeffs: [T; 3],
    pub discriminant: T,
    /// Real roots in ascending order; a double root is reported once.
    pub roots: Vec<T>,
    pub value_at_zero: T,
    pub value_at_one: T,
}

impl<T: Real> QuadraticInT<T> {
    pub fn eval(&self, t: T) -> T {
        let [a, b, c] = self.coeffs;
        (a * t + b) * t + c
    }

    /// Root in the open unit interval farthest from its endpoints.
    pub fn interior_root(&self) -> Option<T> {
        let half = T::lit(0.5);
        self.roots
            .iter()
            .copied()
            .filter(|&t| t > T::zero() && t < T::one())
            .min_by(|x, y| (*x - half).abs().partial_cmp(&(*y - half).abs()).unwrap())
    }
}

/// Rank-one condition on the two leaves as a quadratic in the weight `t`;
/// for `2 x 2N` the determinant is the block sum.
pub fn solve_quadratic_t<T: Real>(f: &Mat<T>, alpha1: T, alpha0: T) -> Result<QuadraticInT<T>> {
    check_2x2n(f)?;
    if alpha1 == alpha0 {
        return arg("alpha1 = alpha0 makes the quadratic singular");
    }
    let d = block_det_sum(f)?;
    let (n1, n2) = (norm_sq(f.row(0)), norm_sq(f.row(1)));
    let k = T::one() / (alpha0 - alpha1);
    let two = T::lit(2.0);
    let a = d;
    let b = -k * (alpha1 * alpha0 * n1 - n2 + (alpha0 - alpha1) * d);
    let c = k * k * (alpha0 * alpha0 * alpha1 * n1 + alpha1 * n2 - two * alpha0 * alpha1 * d);
    let disc = b * b - T::lit(4.0) * a * c;
    let eps = T::lit(1e-12) * (b * b + (T::lit(4.0) * a * c).abs());
    let mut roots = Vec::new();
    if a == T::zero() {
        if b != T::zero() {
            roots.push(-c / b);
        }
    } else if disc <= T::zero() {
        if disc >= -eps {
            roots.push(-b / (two * a));
        }
    } else {
        let q = -(b + b.signum() * disc.sqrt()) / two;
        let (r1, r2) = (q / a, c / q);
        roots.push(r1.min(r2));
        roots.push(r1.max(r2));
    }
    Ok(QuadraticInT { coeffs: [a, b, c], discriminant: disc, roots, value_at_zero: c, value_at_one: a + b + c })
}

/// Parameters on the hyperbola `alpha1 alpha0 = 1` (negated for `sign = -1`)
/// for which the quadratic has a root in `(0, 1)`.
pub fn feasible_alphas<T: Real>(f: &Mat<T>, sign: i8) -> Result<(T, T)> {
    check_2x2n(f)?;
    let sg = match sign {
        1 => T::one(),
        -1 => -T::one(),
        _ => return arg(format!("sign must be +1 or -1, got {sign}")),
    };
    let d = sg * block_det_sum(f)?;
    let (n1, n2) = (norm_sq(f.row(0)), norm_sq(f.row(1)));
    if !(d > T::lit(1e-12) * (n1 * n2).sqrt()) {
        return Err(Error::Degenerate(format!("signed block determinant sum {d} too small")));
    }
    let s_eq = (n1 + n2 + T::lit(2.0) * (n1 * n2 - d * d).max(T::zero()).sqrt()) / d;
    let s = s_eq * (T::one() + T::lit(ALPHA_NUDGE));
    let alpha1 = (s + (s * s - T::lit(4.0)).max(T::zero()).sqrt()) / T::lit(2.0);
    let alpha0 = T::one() / alpha1;
    Ok((sg * alpha1, sg * alpha0))
}

/// The two-point laminate `F = t F1 + (1 - t) F0`, `Fi = (xi; alphai R xi)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoPointSolution<T> {
    pub t: T,
    pub alpha1: T,
    pub alpha0: T,
    pub x1: Vec<T>,
    pub x0: Vec<T>,
    pub f1: Mat<T>,
    pub f0: Mat<T>,
    pub quadratic: QuadraticInT<T>,
    /// Scaled rank-one defect of `F1 - F0`. Zero up to roundoff for `2 x 2`;
    /// for more blocks the difference is null for the block determinant sum
    /// but not rank-one in general.
    pub rank_one_defect: T,
}

impl<T: Real> TwoPointSolution<T> {
    pub fn laminate(&self) -> Laminate<T> {
        Laminate::Split {
            weight: self.t,
            left: Box::new(Laminate::Leaf(self.f1.clone())),
            right: Box::new(Laminate::Leaf(self.f0.clone())),
        }
    }
}

fn leaf<T: Real>(x: &[T], alpha: T) -> Result<Mat<T>> {
    let y: Vec<T> = rot_block(x)?.into_iter().map(|v| alpha * v).collect();
    Mat::from_rows(&[x.to_vec(), y])
}

/// The two-point construction for `F` off the coincidence set.
pub fn two_point_solution<T: Real>(f: &Mat<T>) -> Result<TwoPointSolution<T>> {
    check_2x2n(f)?;
    let sign = if block_det_sum(f)? >= T::zero() { 1 } else { -1 };
    let (alpha1, alpha0) = feasible_alphas(f, sign)?;
    let quadratic = solve_quadratic_t(f, alpha1, alpha0)?;
    let t = quadratic
        .interior_root()
        .ok_or_else(|| Error::Invariant(format!("no root in (0,1): {:?}", quadratic.roots)))?;
    let r2 = rot_block(f.row(1))?;
    let k = T::one() / (alpha0 - alpha1);
    let leaves = |t: T| -> Result<(Vec<T>, Vec<T>, Mat<T>, Mat<T>)> {
        let x1: Vec<T> = f.row(0).iter().zip(&r2).map(|(&a, &b)| (alpha0 * a + b) * k / t).collect();
        let x0: Vec<T> = f.row(0).iter().zip(&r2).map(|(&a, &b)| -(alpha1 * a + b) * k / (T::one() - t)).collect();
        let (f1, f0) = (leaf(&x1, alpha1)?, leaf(&x0, alpha0)?);
        Ok((x1, x0, f1, f0))
    };
    // Near a double root the quadratic's coefficients fix t only to about
    // eps / (r2 - r1); secant steps on the directly evaluated residual recover it.
    let residual = |t: T| -> Result<T> {
        let (_, _, f1, f0) = leaves(t)?;
        block_det_sum(&(&f1 - &f0))
    };
    let mut t = t;
    let mut g = residual(t)?;
    let mut h = T::lit(1e-7) * t.min(T::one() - t);
    for _ in 0..8 {
        if g == T::zero() {
            break;
        }
        let gh = residual(t + h)?;
        if gh == g {
            break;
        }
        let step = -g * h / (gh - g);
        let tn = t + step;
        if !(tn > T::zero() && tn < T::one()) {
            break;
        }
        let gn = residual(tn)?;
        if !(gn.abs() < g.abs()) {
            break;
        }
        h = step.abs().max(T::epsilon() * tn);
        t = tn;
        g = gn;
    }
    let (x1, x0, f1, f0) = leaves(t)?;
    let rank_one_defect = rank_one_defect(&(&f1 - &f0), T::zero()).defect;
    Ok(TwoPointSolution { t, alpha1, alpha0, x1, x0, f1, f0, quadratic, rank_one_defect })
}

/// Dirac at `F` on the coincidence set, otherwise the two-point laminate.
pub fn decompose_2x2n<T: Real>(f: &Mat<T>) -> Result<Laminate<T>> {
    check_2x2n(f)?;
    let blocks = f.cols() / 2;
    let q = CoincidenceQuery::new(
        Integrand::ProdRows { cols: f.cols() },
        Integrand::AbsBlockDetSum { blocks },
        T::lit(DEFAULT_COINCIDENCE_TOL),
    )?;
    if q.contains(f)? {
        return Ok(Laminate::dirac(f.clone()));
    }
    Ok(two_point_solution(f)?.laminate())
}

/// `x +- z`, `y +- lambda z` with both pairs orthogonal.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanarSplit<T> {
    pub z: [T; 2],
    pub lambda: T,
    pub xplus: [T; 2],
    pub xminus: [T; 2],
    pub yplus: [T; 2],
    pub yminus: [T; 2],
}

fn plus<T: Real>(a: [T; 2], c: T, z: [T; 2]) -> [T; 2] {
    [a[0] + c * z[0], a[1] + c * z[1]]
}

/// Intersection of the circles with diameters `[x, lambda y]` and
/// `[-x, -lambda y]`, `lambda = -sign(x . y)`.
pub fn orthogonal_split<T: Real>(x: [T; 2], y: [T; 2]) -> Result<PlanarSplit<T>> {
    let xy = dot(&x, &y);
    let scale = norm(&x) * norm(&y);
    let eps = T::epsilon() * T::lit(16.0) * scale;
    if xy.abs() <= eps {
        return Err(Error::AlreadyOrthogonal);
    }
    if (x[0] * y[1] - x[1] * y[0]).abs() <= eps {
        return Err(Error::DependentRows);
    }
    let lambda = if xy > T::zero() { -T::one() } else { T::one() };
    // Subtracting the circle equations gives z . (x + lambda y) = 0 and |z|^2 = |x . y|.
    let w = plus(x, lambda, y);
    let rw = rot2(w);
    let c = xy.abs().sqrt() / norm(&w);
    let candidates = [[c * rw[0], c * rw[1]], [-c * rw[0], -c * rw[1]]];
    let split = |z: [T; 2]| PlanarSplit {
        z,
        lambda,
        xplus: plus(x, T::one(), z),
        xminus: plus(x, -T::one(), z),
        yplus: plus(y, lambda, z),
        yminus: plus(y, -lambda, z),
    };
    let shortest = |s: &PlanarSplit<T>| {
        [s.xplus, s.xminus, s.yplus, s.yminus].iter().map(|v| norm(v)).fold(T::infinity(), |m, v| m.min(v))
    };
    let (a, b) = (split(candidates[0]), split(candidates[1]));
    let (ma, mb) = (shortest(&a), shortest(&b));
    let lex_less = |p: [T; 2], q: [T; 2]| p[0] < q[0] || (p[0] == q[0] && p[1] < q[1]);
    Ok(if ma > mb || (ma == mb && lex_less(a.z, b.z)) { a } else { b })
}

/// Laminate for a `2 x 3` matrix plus the size of the row perturbation
/// applied when the rows were dependent (zero otherwise).
#[derive(Clone, Debug, PartialEq)]
pub struct PlanarDecomposition<T> {
    pub laminate: Laminate<T>,
    /// Split of the rescaled rows `(mu x, y / mu)`, mapped back to `(x, y)`.
    pub split: Option<PlanarSplit<T>>,
    /// `mu`; 1 when the unscaled split already has leaf determinants of one sign.
    pub row_scale: T,
    pub perturbation: T,
}

pub fn decompose_2x3<T: Real>(f: &Mat<T>) -> Result<PlanarDecomposition<T>> {
    if f.shape() != (2, 3) {
        return arg(format!("expected a 2 x 3 matrix, got {:?}", f.shape()));
    }
    let q = CoincidenceQuery::new(Integrand::ProdRows { cols: 3 }, Integrand::CrossNorm2x3, T::lit(DEFAULT_COINCIDENCE_TOL))?;
    if q.contains(f)? {
        return Ok(PlanarDecomposition {
            laminate: Laminate::dirac(f.clone()),
            split: None,
            row_scale: T::one(),
            perturbation: T::zero(),
        });
    }
    let (r1, mut r2) = (f.row(0).to_vec(), f.row(1).to_vec());
    let (n1, n2) = (norm(&r1), norm(&r2));
    let mut perturbation = T::zero();
    if norm(&cross3(&r1, &r2)?) <= T::lit(1e-12) * n1 * n2 {
        let delta = T::lit(1e-8) * f.frobenius();
        let nrm = unit_normal3(&r1)?;
        for k in 0..3 {
            r2[k] = r2[k] + delta * nrm[k];
        }
        perturbation = delta;
    }
    let e1: Vec<T> = r1.iter().map(|&v| v / n1).collect();
    let p = dot(&r2, &e1);
    let perp: Vec<T> = r2.iter().zip(&e1).map(|(&v, &e)| v - p * e).collect();
    let np = norm(&perp);
    let e2: Vec<T> = perp.iter().map(|&v| v / np).collect();
    let (x, y) = ([n1, T::zero()], [p, np]);
    let mut split = orthogonal_split(x, y)?;
    let mut row_scale = T::one();
    let leaf_det = |a: [T; 2], b: [T; 2]| a[0] * b[1] - a[1] * b[0];
    if leaf_det(split.xplus, split.yplus) * leaf_det(split.xminus, split.yminus) < T::zero() {
        // Leaf determinants of opposite sign make the mixture exceed |x ^ y|.
        // Splitting (mu x, y / mu) with |mu x| = |y / mu| gives both leaves
        // the determinant of F, and rescaling the rows back keeps them
        // orthogonal and their difference rank-one.
        row_scale = (norm(&y) / n1).sqrt();
        split = orthogonal_split([n1 * row_scale, T::zero()], [p / row_scale, np / row_scale])?;
        let (a, b) = (T::one() / row_scale, row_scale);
        for v in [&mut split.xplus, &mut split.xminus] {
            *v = [v[0] * a, v[1] * a];
        }
        for v in [&mut split.yplus, &mut split.yminus] {
            *v = [v[0] * b, v[1] * b];
        }
    }
    let lift = |v: [T; 2]| -> Vec<T> { (0..3).map(|k| v[0] * e1[k] + v[1] * e2[k]).collect() };
    let f1 = Mat::from_rows(&[lift(split.xplus), lift(split.yplus)])?;
    let f0 = Mat::from_rows(&[lift(split.xminus), lift(split.yminus)])?;
    let half = T::lit(0.5);
    Ok(PlanarDecomposition {
        laminate: Laminate::split(half, Laminate::dirac(f1), Laminate::dirac(f0))?,
        split: Some(split),
        row_scale,
        perturbation,
    })
}

/// Stage-2 evidence for one stage-1 leaf.
#[derive(Clone, Debug, PartialEq)]
pub enum LeafCertificate<T> {
    /// The leaf has mutually orthogonal rows or a zero row.
    Trivial { leaf: Mat<T>, gap: T },
    /// The leaf (third row negated when `flipped`) lies strictly below level
    /// zero of the adjugate polynomial with parameters `alpha1`, `alpha0`.
    Segment { leaf: Mat<T>, flipped: bool, alpha1: T, alpha0: T, value: T, certificate: SegmentCertificate<T> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TripleDecomposition<T> {
    pub laminate: Laminate<T>,
    pub certificates: Vec<LeafCertificate<T>>,
}

impl<T: Real> TripleDecomposition<T> {
    /// `act(nu, |adj_3 F| |F_3|) - |det F|`; nonnegative when the construction is sound.
    pub fn adjugate_excess(&self, f: &Mat<T>) -> Result<T> {
        let phi = Integrand::AdjRowProduct { n: 3, j: 2, axis: Axis::Row };
        Ok(self.laminate.act(&phi)? - det(f)?.abs())
    }
}

pub fn decompose_triple_3x3<T: Real>(f: &Mat<T>, tol: T) -> Result<TripleDecomposition<T>> {
    if f.shape() != (3, 3) {
        return arg(format!("expected a 3 x 3 matrix, got {:?}", f.shape()));
    }
    let d = det(f)?;
    if !(d.abs() > tol) {
        return Err(Error::Degenerate(format!("|det F| = {} not above {tol}", d.abs())));
    }
    let top = Mat::from_rows(&[f.row(0), f.row(1)])?;
    let row3 = f.row(2).to_vec();
    let stage1 = decompose_2x3(&top)?;
    let laminate = stage1.laminate.map_leaves(&|l: &Mat<T>| {
        Mat::from_rows(&[l.row(0), l.row(1), &row3]).expect("3 x 3 leaf")
    });
    let cfg = SearchConfig::default();
    let cone = rank_one_cone(T::lit(1e-12));
    let mut certificates = Vec::new();
    for leaf in laminate.leaves() {
        let gap = hadamard_gap(&Integrand::TripleProduct3x3, &Integrand::AbsDet { n: 3 }, leaf)?;
        let ld = det(leaf)?;
        if gap.abs() <= T::lit(DEFAULT_COINCIDENCE_TOL) * (T::one() + ld.abs()) || ld.abs() <= tol {
            certificates.push(LeafCertificate::Trivial { leaf: leaf.clone(), gap });
            continue;
        }
        let flipped = ld < T::zero();
        let mut g = leaf.clone();
        if flipped {
            let neg: Vec<T> = g.row(2).iter().map(|&v| -v).collect();
            g.set_row(2, &neg);
        }
        let (alpha1, alpha0) = choose_alphas_adj(&g, 2, Axis::Row, tol)?;
        let p = GradedPolynomial::p_adj(3, 2, Axis::Row, T::lit(0.5), alpha1, alpha0)?;
        let value = p.eval(&g);
        let dir = find_growth_direction(&p, &g, &cone, T::zero(), &cfg)?;
        let certificate = segment_on_level_set(&p, &g, &dir.e, T::zero(), &cfg)?;
        certificates.push(LeafCertificate::Segment { leaf: leaf.clone(), flipped, alpha1, alpha0, value, certificate });
    }
    Ok(TripleDecomposition { laminate, certificates })
}

/// Nested blockwise two-point laminate and the Hadamard gap left in each
/// block that could not be split (zero for split or coincident blocks).
#[derive(Clone, Debug, PartialEq)]
pub struct BlockSumDecomposition<T> {
    pub laminate: Laminate<T>,
    pub block_gaps: Vec<T>,
}

pub fn decompose_block_sum<T: Real>(f: &Mat<T>, tol: T) -> Result<BlockSumDecomposition<T>> {
    check_2x2n(f)?;
    let q = CoincidenceQuery::new(Integrand::ProdRows { cols: 2 }, Integrand::AbsDet { n: 2 }, T::lit(DEFAULT_COINCIDENCE_TOL))?;
    let mut laminate = Laminate::dirac(f.clone());
    let mut block_gaps = Vec::new();
    for i in 0..f.cols() / 2 {
        let b = f.block2(i)?;
        if q.contains(&b)? {
            block_gaps.push(T::zero());
            continue;
        }
        if det(&b)?.abs() <= tol {
            block_gaps.push(Integrand::ProdRows { cols: 2 }.eval(&b)? - det(&b)?.abs());
            continue;
        }
        let sol = two_point_solution(&b)?;
        block_gaps.push(T::zero());
        laminate = laminate.graft(&mut |l: &Mat<T>| Laminate::Split {
            weight: sol.t,
            left: Box::new(Laminate::Leaf(l.with_block2(i, &sol.f1))),
            right: Box::new(Laminate::Leaf(l.with_block2(i, &sol.f0))),
        });
    }
    Ok(BlockSumDecomposition { laminate, block_gaps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laminate::DEFAULT_SPLIT_TOL;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn m(rows: &[&[f64]]) -> Mat<f64> {
        Mat::from_rows(rows).unwrap()
    }

    fn random(rng: &mut impl Rng, r: usize, c: usize) -> Mat<f64> {
        Mat::new(r, c, (0..r * c).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / (1.0 + b.abs())
    }

    #[test]
    fn quadratic_double_root_at_equality_case() {
        let f = m(&[&[1.0, 1.0], &[0.0, 1.0]]);
        let r = 21f64.sqrt();
        let q = solve_quadratic_t(&f, (5.0 + r) / 2.0, (5.0 - r) / 2.0).unwrap();
        assert!(q.discriminant.abs() < 1e-12);
        assert_eq!(q.roots.len(), 1);
        // independent: vertex of D t^2 + b t + c with b = (1 - sqrt 21) / sqrt 21
        let vertex = -(1.0 - r) / r / 2.0;
        assert!((q.roots[0] - vertex).abs() < 1e-9);
        assert!((q.roots[0] - 0.39089).abs() < 1e-5);
    }

    #[test]
    fn quadratic_endpoint_example() {
        let f = m(&[&[1.0, 1.0], &[0.0, 1.0]]);
        let q = solve_quadratic_t(&f, 1.0, 2.0).unwrap();
        assert!((q.value_at_zero - 5.0).abs() < 1e-14);
        assert!(solve_quadratic_t(&f, 1.0, 1.0).is_err());
        assert!((q.eval(1.0) - q.value_at_one).abs() < 1e-14);
    }

    #[test]
    fn feasible_alphas_examples() {
        let f = m(&[&[1.0, 1.0], &[0.0, 1.0]]);
        let (a1, a0) = feasible_alphas(&f, 1).unwrap();
        assert!((a1 * a0 - 1.0).abs() < 1e-14);
        assert!(((a1 + a0) - 5.0 * (1.0 + 1e-6)).abs() < 1e-12);
        let g = m(&[&[1.0, 0.0, 1.0, 0.0], &[0.0, 1.0, 0.0, -1.0]]);
        assert!(matches!(feasible_alphas(&g, 1), Err(Error::Degenerate(_))));
        assert!(feasible_alphas(&f, -1).is_err());
        assert!(feasible_alphas(&f, 0).is_err());
    }

    #[test]
    fn feasible_alphas_make_the_inequality_strict() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for k in 0..2000 {
            let f = random(&mut rng, 2, 2 + 2 * (k % 3));
            let d = block_det_sum(&f).unwrap();
            if d.abs() < 1e-6 {
                continue;
            }
            let sign = if d > 0.0 { 1 } else { -1 };
            let (a1, a0) = feasible_alphas(&f, sign).unwrap();
            let (d, n1, n2) = (d * sign as f64, norm_sq(f.row(0)), norm_sq(f.row(1)));
            let (a1s, a0s) = (a1 * sign as f64, a0 * sign as f64);
            let lhs = 2.0 * (a1s * a0s).sqrt() * (n1 * n2 - d * d).max(0.0).sqrt();
            let rhs = (a1s + a0s) * d - a1s * a0s * n1 - n2;
            assert!(lhs < rhs, "{lhs} !< {rhs}");
            let q = solve_quadratic_t(&f, a1, a0).unwrap();
            assert!(q.value_at_zero * sign as f64 >= 0.0 && q.value_at_one * sign as f64 >= 0.0);
            assert!(q.interior_root().is_some());
        }
    }

    #[test]
    fn decompose_2x2_examples() {
        assert_eq!(decompose_2x2n(&Mat::<f64>::identity(2)).unwrap(), Laminate::dirac(Mat::identity(2)));
        let f = m(&[&[1.0, 1.0], &[0.0, 1.0]]);
        let lam = decompose_2x2n(&f).unwrap();
        assert_eq!(lam.leaf_count(), 2);
        let q = CoincidenceQuery::matched(Integrand::ProdRows { cols: 2 }).unwrap();
        let rep = lam.validate(&f, Some(&q));
        assert!(rep.passes(1e-10, DEFAULT_SPLIT_TOL), "{rep:?}");
        assert!((lam.act(&Integrand::ProdRows { cols: 2 }).unwrap() - 1.0).abs() < 1e-9);
        for l in lam.leaves() {
            assert!(dot(l.row(0), l.row(1)).abs() < 1e-12);
        }
    }

    #[test]
    fn decompose_2x2_random_with_both_signs() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let phi = Integrand::ProdRows { cols: 2 };
        let q = CoincidenceQuery::matched(phi).unwrap();
        for _ in 0..2000 {
            let f = random(&mut rng, 2, 2);
            let d = det(&f).unwrap();
            if d.abs() < 1e-6 {
                continue;
            }
            let sol = two_point_solution(&f).unwrap();
            assert!(sol.rank_one_defect <= 1e-9);
            assert!(sol.alpha1.signum() == d.signum() && sol.alpha0.signum() == d.signum());
            for l in [&sol.f1, &sol.f0] {
                assert!(det(l).unwrap() * d >= 0.0);
            }
            let lam = sol.laminate();
            assert!(lam.validate(&f, Some(&q)).passes(1e-10, DEFAULT_SPLIT_TOL));
            assert!(rel(lam.act(&phi).unwrap(), d.abs()) < 1e-9);
        }
    }

    #[test]
    fn decompose_2x4_example_and_block_null_difference() {
        let f = m(&[&[1.0, 1.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 1.0]]);
        let sol = two_point_solution(&f).unwrap();
        let lam = sol.laminate();
        assert!((lam.act(&Integrand::ProdRows { cols: 4 }).unwrap() - 1.0).abs() < 1e-9);
        assert!(lam.validate(&f, None).barycenter_residual < 1e-10);
        let diff = &sol.f1 - &sol.f0;
        assert!(block_det_sum(&diff).unwrap().abs() < 1e-9 * (1.0 + diff.frobenius_sq()));
        for l in lam.leaves() {
            let r2 = rot_block(l.row(0)).unwrap();
            let a = if l.row(1) == [0.0; 4] { 0.0 } else { dot(l.row(1), &r2) / norm_sq(&r2) };
            let resid: f64 = l.row(1).iter().zip(&r2).map(|(y, r)| (y - a * r).abs()).fold(0.0, f64::max);
            assert!(resid < 1e-10);
        }
    }

    #[test]
    fn orthogonal_split_example() {
        let s = orthogonal_split([1.0, 0.0], [1.0, 1.0]).unwrap();
        assert_eq!(s.lambda, -1.0);
        assert_eq!(s.z, [-1.0, 0.0]);
        assert_eq!(s.xplus, [0.0, 0.0]);
        assert_eq!(s.yplus, [2.0, 1.0]);
        assert_eq!(s.xminus, [2.0, 0.0]);
        assert_eq!(s.yminus, [0.0, 1.0]);
        assert_eq!(orthogonal_split([1.0, 0.0], [0.0, 1.0]), Err(Error::AlreadyOrthogonal));
        assert_eq!(orthogonal_split([1.0, 1.0], [2.0, 2.0]), Err(Error::DependentRows));
    }

    #[test]
    fn orthogonal_split_fuzz() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let mut done = 0;
        while done < 10_000 {
            let x: [f64; 2] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let y: [f64; 2] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let Ok(s) = orthogonal_split(x, y) else { continue };
            done += 1;
            assert!(dot(&s.xplus, &s.yplus).abs() < 1e-10);
            assert!(dot(&s.xminus, &s.yminus).abs() < 1e-10);
            for k in 0..2 {
                assert!((s.xplus[k] + s.xminus[k] - 2.0 * x[k]).abs() < 1e-12);
                assert!((s.yplus[k] + s.yminus[k] - 2.0 * y[k]).abs() < 1e-12);
            }
            let dx = [s.xplus[0] - s.xminus[0], s.xplus[1] - s.xminus[1]];
            let dy = [s.yplus[0] - s.yminus[0], s.yplus[1] - s.yminus[1]];
            assert!((dx[0] * s.z[1] - dx[1] * s.z[0]).abs() < 1e-10);
            assert!((dy[0] * s.z[1] - dy[1] * s.z[0]).abs() < 1e-10);
        }
    }

    #[test]
    fn decompose_2x3_examples() {
        let d = decompose_2x3(&m(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]])).unwrap();
        assert_eq!(d.laminate.leaf_count(), 1);
        let f = m(&[&[1.0, 0.0, 0.0], &[1.0, 1.0, 0.0]]);
        let d = decompose_2x3(&f).unwrap();
        assert!((d.laminate.act(&Integrand::ProdRows { cols: 3 }).unwrap() - 1.0).abs() < 1e-12);
        let dets: Vec<f64> = d.laminate.leaves().iter().map(|l| l.get(0, 0) * l.get(1, 1) - l.get(0, 1) * l.get(1, 0)).collect();
        assert_eq!(dets, vec![0.0, 2.0]);
        let f = m(&[&[1.0, 1.0, 0.0], &[0.0, 1.0, 1.0]]);
        let d = decompose_2x3(&f).unwrap();
        assert!((d.laminate.act(&Integrand::ProdRows { cols: 3 }).unwrap() - 3f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn decompose_2x3_dependent_rows_are_perturbed() {
        let f = m(&[&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]]);
        let d = decompose_2x3(&f).unwrap();
        assert!(d.perturbation > 0.0 && d.perturbation < 1e-6);
        let rep = d.laminate.validate(&f, None);
        assert!(rep.barycenter_residual <= 1e-7);
        assert!(rep.max_split_defect <= 1e-9);
    }

    #[test]
    fn decompose_2x3_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let phi = Integrand::ProdRows { cols: 3 };
        let q = CoincidenceQuery::matched(phi).unwrap();
        for _ in 0..1000 {
            let f = random(&mut rng, 2, 3);
            let d = decompose_2x3(&f).unwrap();
            assert_eq!(d.perturbation, 0.0);
            assert!(d.laminate.validate(&f, Some(&q)).passes(1e-10, DEFAULT_SPLIT_TOL));
            let c = cross3(f.row(0), f.row(1)).unwrap();
            assert!(rel(d.laminate.act(&phi).unwrap(), norm(&c)) < 1e-9);
        }
    }

    #[test]
    fn decompose_triple_examples() {
        let f = Mat::diag(&[1.0, 2.0, 3.0]);
        let d = decompose_triple_3x3(&f, 1e-9).unwrap();
        assert_eq!(d.laminate, Laminate::dirac(f.clone()));
        assert!(matches!(d.certificates[..], [LeafCertificate::Trivial { .. }]));

        let f = m(&[&[1.0, 1.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let d = decompose_triple_3x3(&f, 1e-9).unwrap();
        assert_eq!(d.laminate.leaf_count(), 2);
        assert!(d.adjugate_excess(&f).unwrap() >= -1e-12);
        assert!(d.laminate.validate(&f, None).passes(1e-10, DEFAULT_SPLIT_TOL));
        for c in &d.certificates {
            if let LeafCertificate::Segment { value, .. } = c {
                assert!(*value <= 0.0);
            }
        }
        assert!(matches!(decompose_triple_3x3(&Mat::<f64>::zeros(3, 3), 1e-9), Err(Error::Degenerate(_))));
    }

    #[test]
    fn decompose_triple_random_certificates_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let mut done = 0;
        let mut segments = 0;
        while done < 100 {
            let f = random(&mut rng, 3, 3);
            if det(&f).unwrap().abs() < 1e-2 {
                continue;
            }
            done += 1;
            let d = decompose_triple_3x3(&f, 1e-9).unwrap();
            assert!(d.laminate.validate(&f, None).passes(1e-10, DEFAULT_SPLIT_TOL));
            assert!(d.adjugate_excess(&f).unwrap() >= -1e-9);
            for c in &d.certificates {
                if let LeafCertificate::Segment { alpha1, alpha0, certificate, value, .. } = c {
                    segments += 1;
                    assert!(*value < 0.0);
                    let p = GradedPolynomial::p_adj(3, 2, Axis::Row, 0.5, *alpha1, *alpha0).unwrap();
                    assert!(certificate.check(&p).is_valid(1e-12, 1e-8, 1e-9));
                }
            }
        }
        assert!(segments > 0);
    }

    #[test]
    fn decompose_block_sum_examples() {
        let f = m(&[&[1.0, 0.0, 2.0, 0.0], &[0.0, 1.0, 0.0, 3.0]]);
        let d = decompose_block_sum(&f, 1e-12).unwrap();
        assert_eq!(d.laminate, Laminate::dirac(f));

        let f = m(&[&[1.0, 1.0, 1.0, 0.0], &[0.0, 1.0, 0.0, 1.0]]);
        let d = decompose_block_sum(&f, 1e-12).unwrap();
        assert_eq!(d.laminate.leaf_count(), 2);
        assert!((d.laminate.act(&Integrand::BlockSum { blocks: 2 }).unwrap() - 2.0).abs() < 1e-9);

        let f = m(&[&[1.0, 1.0, 1.0, 2.0], &[0.0, 1.0, 1.0, 2.0]]);
        let d = decompose_block_sum(&f, 1e-12).unwrap();
        assert!(d.block_gaps[1] > 0.0);
    }

    #[test]
    fn decompose_block_sum_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        let phi = Integrand::BlockSum { blocks: 3 };
        let q = CoincidenceQuery::matched(phi).unwrap();
        for _ in 0..300 {
            let f = random(&mut rng, 2, 6);
            let d = decompose_block_sum(&f, 1e-12).unwrap();
            assert!(d.laminate.validate(&f, Some(&q)).passes(1e-10, DEFAULT_SPLIT_TOL));
            let target = Integrand::SumAbsBlockDet { blocks: 3 }.eval(&f).unwrap();
            assert!(rel(d.laminate.act(&phi).unwrap(), target) < 1e-9);
        }
    }
}
