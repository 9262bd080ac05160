//! Polynomial level sets: the adjugate-case polynomial and its polyconvex
//! normal form, the choice of parameters that puts a matrix strictly below
//! level zero, and the constructive segment lemma.
//!
//! Given `P = sum_i P_i` with `P_i` homogeneous of increasing degree, a point
//! `F` with `P(F) <= alpha` and a cone direction `E` along which `P` grows in
//! both senses, [`segment_on_level_set`] returns `B = F + t0 E`,
//! `C = F - tau0 E` with `P(B) = P(C) = alpha` and `F = s B + (1 - s) C`.

use std::fmt;
use std::sync::Arc;

use serde_json::{json, Value};

use crate::error::{arg, Error, Result};
use crate::hexfloat::{parse_hex, to_hex};
use crate::matcore::{adjugate_vector, block_det_sum, det, dot, norm_sq, rank_one_defect, Axis, Mat};
use crate::sampling::{halton, rng, uniform_matrix};
use crate::scalar::Real;

type PartFn<T> = Arc<dyn Fn(&Mat<T>) -> T + Send + Sync>;

#[derive(Clone)]
pub struct HomogeneousPart<T> {
    pub degree: f64,
    pub label: String,
    eval: PartFn<T>,
}

impl<T> HomogeneousPart<T> {
    pub fn new(degree: f64, label: impl Into<String>, eval: impl Fn(&Mat<T>) -> T + Send + Sync + 'static) -> Self {
        Self { degree, label: label.into(), eval: Arc::new(eval) }
    }
}

impl<T> fmt::Debug for HomogeneousPart<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HomogeneousPart").field("degree", &self.degree).field("label", &self.label).finish()
    }
}

/// Sum of homogeneous parts with strictly increasing degrees. Construction
/// runs a randomized homogeneity self-test on every part.
#[derive(Clone, Debug)]
pub struct GradedPolynomial<T> {
    shape: (usize, usize),
    parts: Vec<HomogeneousPart<T>>,
    homogeneity_tested: bool,
}

impl<T: Real> GradedPolynomial<T> {
    pub fn new(shape: (usize, usize), parts: Vec<HomogeneousPart<T>>) -> Result<Self> {
        if parts.is_empty() {
            return arg("graded polynomial needs at least one part");
        }
        if parts.iter().any(|p| !(p.degree > 0.0)) {
            return arg("part degrees must be positive");
        }
        if parts.windows(2).any(|w| w[0].degree >= w[1].degree) {
            return arg("part degrees must be strictly increasing");
        }
        let mut p = Self { shape, parts, homogeneity_tested: false };
        p.self_test(8, 0x5eed)?;
        Ok(p)
    }

    /// Checks `P_i(cF) = c^d P_i(F)` on random `F` and a few `c > 0`.
    pub fn self_test(&mut self, trials: usize, seed: u64) -> Result<()> {
        let tol = T::lit(1e-10).max(T::epsilon() * T::lit(1e5));
        let mut r = rng(seed);
        for _ in 0..trials {
            let f: Mat<T> = uniform_matrix(&mut r, self.shape.0, self.shape.1);
            for c in [0.5, 2.0, 3.7] {
                let cf = f.scale(T::lit(c));
                for part in &self.parts {
                    let k = T::lit(c.powf(part.degree));
                    let lhs = (part.eval)(&cf);
                    let rhs = k * (part.eval)(&f);
                    if !((lhs - rhs).abs() <= tol * (k + rhs.abs())) {
                        return Err(Error::Invariant(format!(
                            "part `{}` is not homogeneous of degree {}: {lhs} vs {rhs}",
                            part.label, part.degree
                        )));
                    }
                }
            }
        }
        self.homogeneity_tested = true;
        Ok(())
    }

    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    pub fn parts(&self) -> &[HomogeneousPart<T>] {
        &self.parts
    }

    pub fn homogeneity_tested(&self) -> bool {
        self.homogeneity_tested
    }

    pub fn eval(&self, f: &Mat<T>) -> T {
        debug_assert_eq!(f.shape(), self.shape);
        self.parts.iter().fold(T::zero(), |s, p| s + (p.eval)(f))
    }

    pub fn eval_top(&self, f: &Mat<T>) -> T {
        (self.parts.last().unwrap().eval)(f)
    }

    fn check_shape(&self, f: &Mat<T>) -> Result<()> {
        if f.shape() != self.shape {
            return arg(format!("polynomial on {:?} evaluated at {:?}", self.shape, f.shape()));
        }
        Ok(())
    }

    /// `|F|^2`.
    pub fn frobenius_sq(shape: (usize, usize)) -> Result<Self> {
        Self::new(shape, vec![HomogeneousPart::new(2.0, "|F|^2", |f: &Mat<T>| f.frobenius_sq())])
    }

    pub fn determinant(n: usize) -> Result<Self> {
        Self::new((n, n), vec![HomogeneousPart::new(n as f64, "det", |f: &Mat<T>| det(f).expect("square"))])
    }

    /// The adjugate-case polynomial in its polyconvex normal form
    /// `a c |X|^2 - (c + a b) det F + b |adj F|^2`, with
    /// `a = t a1 + (1-t) a0`, `b = t a0 + (1-t) a1`, `c = a1 a0`.
    pub fn p_adj(n: usize, j: usize, axis: Axis, t: T, alpha1: T, alpha0: T) -> Result<Self> {
        if n < 3 {
            return arg(format!("adjugate polynomial needs N >= 3, got {n}"));
        }
        if j >= n {
            return arg(format!("index {j} out of range for N = {n}"));
        }
        let (a, b, c) = adj_coefficients(t, alpha1, alpha0);
        let deg_top = (2 * n - 2) as f64;
        let mut parts = vec![
            HomogeneousPart::new(2.0, "a c |F_j|^2", move |f: &Mat<T>| a * c * norm_sq(&f.line(j, axis))),
            HomogeneousPart::new(n as f64, "-(c + a b) det", move |f: &Mat<T>| -(c + a * b) * det(f).expect("square")),
            HomogeneousPart::new(deg_top, "b |adj_j F|^2", move |f: &Mat<T>| {
                b * norm_sq(&adjugate_vector(f, j, axis).expect("square"))
            }),
        ];
        if n == 3 {
            // degrees 2, 3, 4 already increasing
        } else {
            parts.sort_by(|x, y| x.degree.partial_cmp(&y.degree).unwrap());
        }
        Self::new((n, n), parts)
    }

    /// Second-degree polynomial of the `2 x 2N` case:
    /// `a1 a0 ((1-t) a0 + t a1) |F1|^2 + ((1-t) a1 + t a0) |F2|^2
    ///  + ((a0 - a1)^2 t (t - 1) - 2 a0 a1) sum_i det F_i`.
    pub fn block_p2(blocks: usize, t: T, alpha1: T, alpha0: T) -> Result<Self> {
        if blocks == 0 {
            return arg("need at least one block");
        }
        let one = T::one();
        let k1 = alpha1 * alpha0 * ((one - t) * alpha0 + t * alpha1);
        let k2 = (one - t) * alpha1 + t * alpha0;
        let d = alpha0 - alpha1;
        let k3 = d * d * t * (t - one) - T::lit(2.0) * alpha0 * alpha1;
        Self::new(
            (2, 2 * blocks),
            vec![HomogeneousPart::new(2.0, "P2", move |f: &Mat<T>| {
                k1 * norm_sq(f.row(0)) + k2 * norm_sq(f.row(1)) + k3 * block_det_sum(f).expect("2x2N")
            })],
        )
    }
}

fn adj_coefficients<T: Real>(t: T, alpha1: T, alpha0: T) -> (T, T, T) {
    let one = T::one();
    (t * alpha1 + (one - t) * alpha0, t * alpha0 + (one - t) * alpha1, alpha1 * alpha0)
}

/// `(adj_j F - a F_j) . (b adj_j F - c F_j)`, evaluated as written.
pub fn p_adj<T: Real>(f: &Mat<T>, t: T, alpha1: T, alpha0: T, j: usize, axis: Axis) -> Result<T> {
    if !f.is_square() || f.rows() < 3 {
        return arg(format!("adjugate polynomial needs a square N >= 3 matrix, got {:?}", f.shape()));
    }
    let (a, b, c) = adj_coefficients(t, alpha1, alpha0);
    let adj = adjugate_vector(f, j, axis)?;
    let x = f.line(j, axis);
    let u: Vec<T> = adj.iter().zip(&x).map(|(&p, &q)| p - a * q).collect();
    let v: Vec<T> = adj.iter().zip(&x).map(|(&p, &q)| b * p - c * q).collect();
    Ok(dot(&u, &v))
}

/// `P0 - (c + a b) det F + a c |F_j|^2` with `P0 = b |adj_j F|^2`.
pub fn p_adj_normal_form<T: Real>(f: &Mat<T>, t: T, alpha1: T, alpha0: T, j: usize, axis: Axis) -> Result<T> {
    if !f.is_square() || f.rows() < 3 {
        return arg(format!("adjugate polynomial needs a square N >= 3 matrix, got {:?}", f.shape()));
    }
    let (a, b, c) = adj_coefficients(t, alpha1, alpha0);
    let adj = adjugate_vector(f, j, axis)?;
    let p0 = b * norm_sq(&adj);
    Ok(p0 - (c + a * b) * det(f)? + a * c * norm_sq(&f.line(j, axis)))
}

/// Roots `alpha1 >= alpha0 > 0` of
/// `alpha^2 - 4 (|adj_j F|^2 / det F) alpha + |adj_j F|^2 / |F_j|^2 = 0`.
/// At `t = 1/2` they make `P(F) = -(|adj_j F|^2 / |F_j|^2) det F`.
pub fn choose_alphas_adj<T: Real>(f: &Mat<T>, j: usize, axis: Axis, tol: T) -> Result<(T, T)> {
    if !f.is_square() || f.rows() < 3 {
        return arg(format!("need a square N >= 3 matrix, got {:?}", f.shape()));
    }
    let d = det(f)?;
    if !(d > tol) {
        return Err(Error::Degenerate(format!("det F = {d} not above {tol}")));
    }
    let adj_sq = norm_sq(&adjugate_vector(f, j, axis)?);
    let x_sq = norm_sq(&f.line(j, axis));
    if !(x_sq > T::zero()) {
        return Err(Error::Invariant("vanishing line with positive determinant".into()));
    }
    let sum = T::lit(4.0) * adj_sq / d;
    let prod = adj_sq / x_sq;
    let disc = sum * sum - T::lit(4.0) * prod;
    if disc < T::zero() {
        return Err(Error::Invariant(format!("negative discriminant {disc}")));
    }
    let alpha1 = (sum + disc.sqrt()) / T::lit(2.0);
    let alpha0 = prod / alpha1;
    if !(alpha0 > T::zero()) {
        return Err(Error::Invariant(format!("root {alpha0} not positive")));
    }
    Ok((alpha1, alpha0))
}

/// Rank-one test on candidate directions, at a scaled-defect tolerance.
pub fn rank_one_cone<T: Real>(tol: T) -> impl Fn(&Mat<T>) -> bool {
    move |e: &Mat<T>| rank_one_defect(e, tol).is_rank_le_one
}

pub fn full_cone<T: Real>(_: &Mat<T>) -> bool {
    true
}

#[derive(Clone, Copy, Debug)]
pub struct SearchConfig<T> {
    /// Largest step scanned along `+E` and `-E`.
    pub t_max: T,
    /// First step of the geometric scan.
    pub t_min: T,
    pub max_samples: usize,
    /// Growth directions compared before picking the one whose crossings lie
    /// nearest to `F`; far crossings cost accuracy in `P`.
    pub candidates: usize,
    pub bisection_iters: usize,
    /// Largest accepted `|P(B) - alpha|` relative to `1 + |alpha|`; the
    /// certificate records the residuals actually reached.
    pub residual_tol: T,
}

impl<T: Real> Default for SearchConfig<T> {
    fn default() -> Self {
        Self {
            t_max: T::lit(1e6),
            t_min: T::lit(1.0 / 1024.0),
            max_samples: 4096,
            candidates: 32,
            bisection_iters: 64,
            residual_tol: T::lit(1e-8),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthDirection<T> {
    pub e: Mat<T>,
    /// First scanned step with `P(F + t E) > alpha`.
    pub t_up: T,
    /// First scanned step with `P(F - t E) > alpha`.
    pub tau_up: T,
    /// Halton index of the accepted direction.
    pub samples: usize,
}

fn scan_up<T: Real>(p: &GradedPolynomial<T>, f: &Mat<T>, e: &Mat<T>, sign: T, alpha: T, cfg: &SearchConfig<T>) -> (Option<T>, T) {
    let mut t = cfg.t_min;
    let mut best = T::neg_infinity();
    while t <= cfg.t_max {
        let v = p.eval(&f.axpy(sign * t, e));
        if !v.is_finite() {
            break;
        }
        best = best.max(v - alpha);
        if v > alpha {
            return (Some(t), best);
        }
        t = t * T::lit(2.0);
    }
    (None, best)
}

/// Deterministic search for a rank-one `E = a (x) b` in `cone` along which `P`
/// exceeds `alpha` in both senses. Candidates come from a Halton sequence on
/// the coordinates of `a` and `b`.
pub fn find_growth_direction<T: Real>(
    p: &GradedPolynomial<T>,
    f: &Mat<T>,
    cone: &dyn Fn(&Mat<T>) -> bool,
    alpha: T,
    cfg: &SearchConfig<T>,
) -> Result<GrowthDirection<T>> {
    p.check_shape(f)?;
    let (m, n) = f.shape();
    let mut best_excess = f64::NEG_INFINITY;
    let mut best = None;
    let mut found = 0;
    for k in 1..=cfg.max_samples as u64 {
        let h = halton(k, m + n);
        let a: Vec<f64> = h[..m].iter().map(|x| 2.0 * x - 1.0).collect();
        let b: Vec<f64> = h[m..].iter().map(|x| 2.0 * x - 1.0).collect();
        let (na, nb) = (a.iter().map(|x| x * x).sum::<f64>().sqrt(), b.iter().map(|x| x * x).sum::<f64>().sqrt());
        if na < 1e-6 || nb < 1e-6 {
            continue;
        }
        let a: Vec<T> = a.iter().map(|x| T::lit(x / na)).collect();
        let b: Vec<T> = b.iter().map(|x| T::lit(x / nb)).collect();
        let e = Mat::outer(&a, &b);
        if !cone(&e) {
            continue;
        }
        let (up, ex_up) = scan_up(p, f, &e, T::one(), alpha, cfg);
        let (down, ex_down) = scan_up(p, f, &e, -T::one(), alpha, cfg);
        best_excess = best_excess.max(ex_up.min(ex_down).to_f64_lossy());
        if let (Some(t_up), Some(tau_up)) = (up, down) {
            let reach = t_up.max(tau_up);
            if best.as_ref().map_or(true, |b: &GrowthDirection<T>| reach < b.t_up.max(b.tau_up)) {
                best = Some(GrowthDirection { e, t_up, tau_up, samples: k as usize });
            }
            found += 1;
            if found >= cfg.candidates.max(1) || reach <= T::one() {
                break;
            }
        }
    }
    best.ok_or(Error::NoGrowthDirection { samples: cfg.max_samples, best_excess })
}

/// Root of `g` on `[0, hi]` with `g(0) <= 0 < g(hi)`, by bisection; returns the
/// endpoint with the smaller residual.
fn bisect_root<T: Real>(g: impl Fn(T) -> T, hi: T, iters: usize) -> (T, T) {
    let (mut lo, mut hi) = (T::zero(), hi);
    let (mut g_lo, mut g_hi) = (g(lo), g(hi));
    for _ in 0..iters {
        let mid = lo + (hi - lo) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if gm > T::zero() {
            hi = mid;
            g_hi = gm;
        } else {
            lo = mid;
            g_lo = gm;
        }
    }
    if g_lo.abs() <= g_hi.abs() {
        (lo, g_lo)
    } else {
        (hi, g_hi)
    }
}

/// Witness `F = s B + (1 - s) C`, `P(B) = P(C) = alpha`, `B - C = (t0 + tau0) E`.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentCertificate<T> {
    pub f: Mat<T>,
    pub b: Mat<T>,
    pub c: Mat<T>,
    pub s: T,
    pub alpha: T,
    pub e: Mat<T>,
    pub t0: T,
    pub tau0: T,
    pub residual_b: T,
    pub residual_c: T,
    pub defect: T,
}

/// Independent recomputation of a certificate's claims.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertificateCheck<T> {
    pub representation_residual: T,
    pub residual_b: T,
    pub residual_c: T,
    pub direction_residual: T,
    pub defect: T,
    pub s_in_unit_interval: bool,
}

impl<T: Real> CertificateCheck<T> {
    pub fn level_residual(&self) -> T {
        self.residual_b.max(self.residual_c)
    }

    pub fn is_valid(&self, representation_tol: T, level_tol: T, defect_tol: T) -> bool {
        self.s_in_unit_interval
            && self.representation_residual <= representation_tol
            && self.level_residual() <= level_tol
            && self.direction_residual <= representation_tol
            && self.defect <= defect_tol
    }
}

impl<T: Real> SegmentCertificate<T> {
    pub fn check(&self, p: &GradedPolynomial<T>) -> CertificateCheck<T> {
        let one = T::one();
        let scale = one + self.f.max_abs();
        let recon = self.b.scale(self.s).axpy(one - self.s, &self.c);
        let diff = &self.b - &self.c;
        let along = self.e.scale(self.t0 + self.tau0);
        CertificateCheck {
            representation_residual: (&recon - &self.f).max_abs() / scale,
            residual_b: (p.eval(&self.b) - self.alpha).abs(),
            residual_c: (p.eval(&self.c) - self.alpha).abs(),
            direction_residual: (&diff - &along).max_abs() / (one + diff.max_abs()),
            defect: rank_one_defect(&diff, T::zero()).defect,
            s_in_unit_interval: self.s > T::zero() && self.s < one,
        }
    }
}

impl SegmentCertificate<f64> {
    /// JSON with every float as a hex literal, for bit-exact replay.
    pub fn to_json(&self) -> Value {
        let mat = |m: &Mat<f64>| -> Value {
            Value::Array(
                (0..m.rows()).map(|i| Value::Array(m.row(i).iter().map(|x| Value::String(to_hex(*x))).collect())).collect(),
            )
        };
        json!({
            "F": mat(&self.f),
            "B": mat(&self.b),
            "C": mat(&self.c),
            "E": mat(&self.e),
            "s": to_hex(self.s),
            "alpha": to_hex(self.alpha),
            "t0": to_hex(self.t0),
            "tau0": to_hex(self.tau0),
            "residual_b": to_hex(self.residual_b),
            "residual_c": to_hex(self.residual_c),
            "defect": to_hex(self.defect),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = |k: &str| Error::Parse(format!("certificate field `{k}` missing or malformed"));
        let num = |k: &str| -> Result<f64> { parse_hex(v.get(k).and_then(Value::as_str).ok_or_else(|| bad(k))?) };
        let mat = |k: &str| -> Result<Mat<f64>> {
            let rows = v.get(k).and_then(Value::as_array).ok_or_else(|| bad(k))?;
            let rows: Result<Vec<Vec<f64>>> = rows
                .iter()
                .map(|r| {
                    r.as_array()
                        .ok_or_else(|| bad(k))?
                        .iter()
                        .map(|x| parse_hex(x.as_str().ok_or_else(|| bad(k))?))
                        .collect()
                })
                .collect();
            Mat::from_rows(&rows?)
        };
        Ok(Self {
            f: mat("F")?,
            b: mat("B")?,
            c: mat("C")?,
            e: mat("E")?,
            s: num("s")?,
            alpha: num("alpha")?,
            t0: num("t0")?,
            tau0: num("tau0")?,
            residual_b: num("residual_b")?,
            residual_c: num("residual_c")?,
            defect: num("defect")?,
        })
    }
}

fn bracket<T: Real>(g: &impl Fn(T) -> T, cfg: &SearchConfig<T>) -> Option<T> {
    let mut t = cfg.t_min;
    while t <= cfg.t_max {
        let v = g(t);
        if !v.is_finite() {
            return None;
        }
        if v > T::zero() {
            return Some(t);
        }
        t = t * T::lit(2.0);
    }
    None
}

/// Constructs the two level-set points on the line `F + R E` that bracket `F`.
pub fn segment_on_level_set<T: Real>(
    p: &GradedPolynomial<T>,
    f: &Mat<T>,
    e: &Mat<T>,
    alpha: T,
    cfg: &SearchConfig<T>,
) -> Result<SegmentCertificate<T>> {
    p.check_shape(f)?;
    if e.shape() != f.shape() {
        return arg("direction shape differs from F");
    }
    let pf = p.eval(f);
    if pf > alpha {
        return Err(Error::AboveLevel((pf - alpha).to_f64_lossy()));
    }
    let defect_of = |b: &Mat<T>, c: &Mat<T>| rank_one_defect(&(b - c), T::zero()).defect;
    if pf == alpha {
        let half = T::lit(0.5);
        return Ok(SegmentCertificate {
            f: f.clone(),
            b: f.clone(),
            c: f.clone(),
            s: half,
            alpha,
            e: e.clone(),
            t0: T::zero(),
            tau0: T::zero(),
            residual_b: T::zero(),
            residual_c: T::zero(),
            defect: T::zero(),
        });
    }
    let g_up = |t: T| p.eval(&f.axpy(t, e)) - alpha;
    let g_down = |t: T| p.eval(&f.axpy(-t, e)) - alpha;
    let hi = bracket(&g_up, cfg).ok_or_else(|| Error::Bracket("no sign change along +E".into()))?;
    let (t0, r_b) = bisect_root(g_up, hi, cfg.bisection_iters);
    let hi = bracket(&g_down, cfg).ok_or_else(|| Error::Bracket("no sign change along -E".into()))?;
    let (tau0, r_c) = bisect_root(g_down, hi, cfg.bisection_iters);
    let tol = cfg.residual_tol * (T::one() + alpha.abs());
    if r_b.abs() > tol || r_c.abs() > tol {
        return Err(Error::Bracket(format!("level residuals {r_b} / {r_c} above {tol}")));
    }
    let b = f.axpy(t0, e);
    let c = f.axpy(-tau0, e);
    let s = tau0 / (t0 + tau0);
    Ok(SegmentCertificate {
        defect: defect_of(&b, &c),
        f: f.clone(),
        b,
        c,
        s,
        alpha,
        e: e.clone(),
        t0,
        tau0,
        residual_b: r_b.abs(),
        residual_c: r_c.abs(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum Membership<T> {
    OnLevelSet,
    StrictSublevel { direction: GrowthDirection<T>, certificate: SegmentCertificate<T> },
    AboveLevel,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SublevelReport<T> {
    pub value: T,
    pub alpha: T,
    pub membership: Membership<T>,
}

/// Classifies `F` against the level `alpha` and, strictly below it, attaches
/// a segment certificate.
pub fn sublevel_membership_report<T: Real>(
    p: &GradedPolynomial<T>,
    f: &Mat<T>,
    cone: &dyn Fn(&Mat<T>) -> bool,
    alpha: T,
    cfg: &SearchConfig<T>,
) -> Result<SublevelReport<T>> {
    p.check_shape(f)?;
    let value = p.eval(f);
    let membership = if value == alpha {
        Membership::OnLevelSet
    } else if value > alpha {
        Membership::AboveLevel
    } else {
        let direction = find_growth_direction(p, f, cone, alpha, cfg)?;
        let certificate = segment_on_level_set(p, f, &direction.e, alpha, cfg)?;
        Membership::StrictSublevel { direction, certificate }
    };
    Ok(SublevelReport { value, alpha, membership })
}
