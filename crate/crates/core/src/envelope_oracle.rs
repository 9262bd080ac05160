//! Sampled rank-one lamination: an upper estimate of the rank-one convex
//! envelope at a point, with the laminate that realizes it.
//!
//! At each level the integrand is sampled on lines `F + s D`, `s in [-L, L]`,
//! for seeded unit rank-one directions `D` (plus caller-supplied ones). The
//! lower convex hull at `s = 0` ranks the lines; the best `refine_top`
//! supports are polished and then split recursively. The estimate at depth
//! `d` is the minimum over the greedy runs at depths `0..=d`, so it is
//! nonincreasing in depth for a fixed seed.

use crate::error::{arg, Result};
use crate::integrands::Integrand;
use crate::laminate::Laminate;
use crate::matcore::{rank_one_defect, Mat};
use crate::sampling::{rank_one_direction, rng, SeededRng};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleConfig<T> {
    pub depth: usize,
    pub directions_per_level: usize,
    pub line_halfwidth: T,
    /// Odd, so that `s = 0` is a sample.
    pub line_samples: usize,
    pub seed: u64,
    /// Extra directions tried at every node, used unnormalized.
    pub informed_directions: Vec<Mat<T>>,
    /// Lines whose hull supports are refined and recursed into, per node.
    pub refine_top: usize,
    /// Refinement of each kept line: golden-section on the two supports, then
    /// a simplex search over the rank-one direction and the split weight.
    pub polish: bool,
    /// Evaluation budget of the simplex search per kept line.
    pub polish_evaluations: usize,
    /// Integrand evaluations before the search stops and flags the result partial.
    pub max_evaluations: u64,
}

impl<T: Real> Default for OracleConfig<T> {
    fn default() -> Self {
        Self {
            depth: 3,
            directions_per_level: 64,
            line_halfwidth: T::lit(4.0),
            line_samples: 129,
            seed: 0,
            informed_directions: Vec::new(),
            refine_top: 4,
            polish: true,
            polish_evaluations: 4000,
            max_evaluations: 50_000_000,
        }
    }
}

impl<T: Real> OracleConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.line_samples < 3 || self.line_samples % 2 == 0 {
            return arg(format!("line_samples must be odd and >= 3, got {}", self.line_samples));
        }
        if !(self.line_halfwidth > T::zero()) || !self.line_halfwidth.is_finite() {
            return arg("line half-width must be positive");
        }
        if self.refine_top == 0 {
            return arg("refine_top must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeEstimate<T> {
    pub value: T,
    pub laminate: Laminate<T>,
    pub depth_used: usize,
    pub evaluations: u64,
    /// The evaluation budget ran out before the search finished.
    pub partial: bool,
}

/// Lower convex hull of sorted samples evaluated at `query`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HullValue<T> {
    pub value: T,
    pub left: usize,
    pub right: usize,
    /// Weight on the right support: `value = (1 - w) v[left] + w v[right]`.
    pub weight: T,
}

pub fn convex_envelope_1d<T: Real>(samples: &[(T, T)], query: T) -> Result<HullValue<T>> {
    if samples.is_empty() {
        return arg("no samples");
    }
    if samples.windows(2).any(|w| !(w[0].0 < w[1].0)) {
        return arg("sample abscissae must be strictly increasing");
    }
    let (lo, hi) = (samples[0].0, samples[samples.len() - 1].0);
    if !(query >= lo && query <= hi) {
        return arg(format!("query {query} outside [{lo}, {hi}]"));
    }
    let mut hull: Vec<usize> = Vec::with_capacity(samples.len());
    for i in 0..samples.len() {
        while hull.len() >= 2 {
            let (a, b) = (samples[hull[hull.len() - 2]], samples[hull[hull.len() - 1]]);
            let c = samples[i];
            // drop b when it lies on or above the chord from a to c
            if (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0) <= T::zero() {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    for w in hull.windows(2) {
        let (l, r) = (w[0], w[1]);
        let (sl, sr) = (samples[l].0, samples[r].0);
        if query == sl {
            return Ok(HullValue { value: samples[l].1, left: l, right: l, weight: T::zero() });
        }
        if query == sr {
            return Ok(HullValue { value: samples[r].1, left: r, right: r, weight: T::zero() });
        }
        if query > sl && query < sr {
            let weight = (query - sl) / (sr - sl);
            let value = (T::one() - weight) * samples[l].1 + weight * samples[r].1;
            return Ok(HullValue { value, left: l, right: r, weight });
        }
    }
    let i = hull[0];
    Ok(HullValue { value: samples[i].1, left: i, right: i, weight: T::zero() })
}

struct Search<'a, T> {
    phi: Integrand,
    cfg: &'a OracleConfig<T>,
    rng: SeededRng,
    evaluations: u64,
    partial: bool,
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

impl<T: Real> Search<'_, T> {
    fn eval(&mut self, f: &Mat<T>) -> T {
        self.evaluations += 1;
        self.phi.eval_unchecked(f)
    }

    fn exhausted(&mut self) -> bool {
        if self.evaluations >= self.cfg.max_evaluations {
            self.partial = true;
        }
        self.partial
    }

    /// Chord value at 0 between `(sm, v(sm))` and `(sp, v(sp))`.
    fn chord(&mut self, f: &Mat<T>, d: &Mat<T>, sm: T, sp: T) -> T {
        let vm = self.eval(&f.axpy(sm, d));
        let vp = self.eval(&f.axpy(sp, d));
        (sp * vm - sm * vp) / (sp - sm)
    }

    fn golden(&mut self, mut lo: T, mut hi: T, mut g: impl FnMut(&mut Self, T) -> T) -> T {
        let r = T::lit(GOLDEN);
        let mut a = hi - r * (hi - lo);
        let mut b = lo + r * (hi - lo);
        let (mut ga, mut gb) = (g(self, a), g(self, b));
        for _ in 0..60 {
            if ga <= gb {
                hi = b;
                b = a;
                gb = ga;
                a = hi - r * (hi - lo);
                ga = g(self, a);
            } else {
                lo = a;
                a = b;
                ga = gb;
                b = lo + r * (hi - lo);
                gb = g(self, b);
            }
        }
        if ga <= gb {
            a
        } else {
            b
        }
    }

    /// Alternating one-dimensional refinement of the supports `sm < 0 < sp`.
    fn polish(&mut self, f: &Mat<T>, d: &Mat<T>, mut sm: T, mut sp: T, step: T) -> (T, T) {
        let two = T::lit(2.0);
        let l = self.cfg.line_halfwidth;
        let floor = step * T::lit(1e-9);
        let mut best = self.chord(f, d, sm, sp);
        for _ in 0..8 {
            let (lo, hi) = ((sm - two * step).max(-l), (sm + two * step).min(-floor));
            let cand = self.golden(lo, hi, |s, x| s.chord(f, d, x, sp));
            let v = self.chord(f, d, cand, sp);
            if v < best {
                best = v;
                sm = cand;
            }
            let (lo, hi) = ((sp - two * step).max(floor), (sp + two * step).min(l));
            let cand = self.golden(lo, hi, |s, x| s.chord(f, d, sm, x));
            let v = self.chord(f, d, sm, cand);
            if v < best {
                best = v;
                sp = cand;
            }
        }
        (sm, sp)
    }

    /// Two-point value `w phi(F + (1 - w) a b^T) + (1 - w) phi(F - w a b^T)`,
    /// `w = 1 / (1 + e^-u)`, over `x = (a, b, u)`.
    fn two_point(&mut self, f: &Mat<T>, x: &[T]) -> T {
        let (m, n) = f.shape();
        let e = Mat::outer(&x[..m], &x[m..m + n]);
        let w = T::one() / (T::one() + (-x[m + n]).exp());
        if !(w > T::zero() && w < T::one()) {
            return T::infinity();
        }
        w * self.eval(&f.axpy(T::one() - w, &e)) + (T::one() - w) * self.eval(&f.axpy(-w, &e))
    }

    /// Simplex search started from the line `F + s D`, `s in {sm, sp}`, when
    /// `D` is rank-one; returns the direction and supports to split along.
    fn refine_direction(&mut self, f: &Mat<T>, d: &Mat<T>, sm: T, sp: T) -> (Mat<T>, T, T) {
        let Some((a, b)) = rank_one_factors(d) else { return (d.clone(), sm, sp) };
        let (m, n) = f.shape();
        let width = sp - sm;
        let w = -sm / width;
        let mut x: Vec<T> = a.iter().map(|&v| v * width).collect();
        x.extend_from_slice(&b);
        x.push((w / (T::one() - w)).ln());
        let start = self.two_point(f, &x);
        let (na, nb) = (norm_of(&x[..m]), norm_of(&x[m..m + n]));
        let mut steps: Vec<T> = Vec::with_capacity(x.len());
        steps.extend((0..m).map(|_| T::lit(0.2) * na));
        steps.extend((0..n).map(|_| T::lit(0.2) * nb));
        steps.push(T::lit(0.5));
        let budget = self.cfg.polish_evaluations / 2;
        let (x, v) = nelder_mead(x, &steps, budget, |x| self.two_point(f, x));
        if !(v < start) {
            return (d.clone(), sm, sp);
        }
        let w = T::one() / (T::one() + (-x[m + n]).exp());
        (Mat::outer(&x[..m], &x[m..m + n]), -w, T::one() - w)
    }

    fn run(&mut self, f: &Mat<T>, depth: usize) -> (T, Laminate<T>) {
        let v0 = self.eval(f);
        if depth == 0 || self.exhausted() {
            return (v0, Laminate::dirac(f.clone()));
        }
        let (rows, cols) = f.shape();
        let mut dirs = self.cfg.informed_directions.clone();
        for _ in 0..self.cfg.directions_per_level {
            dirs.push(rank_one_direction(&mut self.rng, rows, cols));
        }
        let m = self.cfg.line_samples;
        let l = self.cfg.line_halfwidth;
        let step = T::lit(2.0) * l / T::lit((m - 1) as f64);
        let grid: Vec<T> = (0..m).map(|i| -l + step * T::lit(i as f64)).collect();
        let slack = T::lit(1e-14) * (T::one() + v0.abs());
        let mut cands: Vec<(T, usize, T, T)> = Vec::new();
        // Informed splits can be very uneven, so their lines also get points
        // accumulating geometrically at 0.
        let mut fine = grid.clone();
        for j in 1..=24 {
            let h = step * T::lit(0.5f64.powi(j));
            fine.push(h);
            fine.push(-h);
        }
        fine.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let informed = self.cfg.informed_directions.len();
        for (k, d) in dirs.iter().enumerate() {
            let line = if k < informed { &fine } else { &grid };
            let samples: Vec<(T, T)> = line
                .iter()
                .map(|&s| (s, if s == T::zero() { v0 } else { self.eval(&f.axpy(s, d)) }))
                .collect();
            let hv = convex_envelope_1d(&samples, T::zero()).expect("line contains 0");
            if hv.left != hv.right && hv.value < v0 - slack {
                cands.push((hv.value, k, line[hv.left], line[hv.right]));
            }
        }
        cands.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        // Informed directions are always explored, on top of the best random ones.
        let mut kept = 0;
        cands.retain(|c| {
            let keep = c.1 < informed || kept < self.cfg.refine_top;
            if c.1 >= informed && keep {
                kept += 1;
            }
            keep
        });
        let mut best = (v0, Laminate::dirac(f.clone()));
        for (_, k, sm, sp) in cands {
            if self.exhausted() {
                break;
            }
            let (d, sm, sp) = if self.cfg.polish {
                let (sm, sp) = self.polish(f, &dirs[k], sm, sp, step);
                if k < informed {
                    (dirs[k].clone(), sm, sp)
                } else {
                    self.refine_direction(f, &dirs[k], sm, sp)
                }
            } else {
                (dirs[k].clone(), sm, sp)
            };
            let w = -sm / (sp - sm);
            let (vp, lp) = self.run(&f.axpy(sp, &d), depth - 1);
            let (vm, lm) = self.run(&f.axpy(sm, &d), depth - 1);
            let total = w * vp + (T::one() - w) * vm;
            if total < best.0 {
                best = (total, Laminate::Split { weight: w, left: Box::new(lp), right: Box::new(lm) });
            }
        }
        best
    }
}

fn norm_of<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |s, &x| s + x * x).sqrt()
}

/// `(a, b)` with `D = a b^T` when `D` is rank-one to roundoff.
fn rank_one_factors<T: Real>(d: &Mat<T>) -> Option<(Vec<T>, Vec<T>)> {
    let (mut bi, mut bj) = (0, 0);
    for i in 0..d.rows() {
        for j in 0..d.cols() {
            if d.get(i, j).abs() > d.get(bi, bj).abs() {
                (bi, bj) = (i, j);
            }
        }
    }
    let p = d.get(bi, bj);
    if p == T::zero() {
        return None;
    }
    let a = d.col(bj);
    let b: Vec<T> = d.row(bi).iter().map(|&v| v / p).collect();
    let resid = (&Mat::outer(&a, &b) - d).max_abs();
    (resid <= T::lit(1e-12) * p.abs()).then_some((a, b))
}

/// Nelder-Mead with standard coefficients; returns the best vertex and value.
fn nelder_mead<T: Real>(x0: Vec<T>, steps: &[T], max_evals: usize, mut g: impl FnMut(&[T]) -> T) -> (Vec<T>, T) {
    let n = x0.len();
    let mut simplex: Vec<(Vec<T>, T)> = Vec::with_capacity(n + 1);
    let v0 = g(&x0);
    simplex.push((x0.clone(), v0));
    for i in 0..n {
        let mut x = x0.clone();
        x[i] = x[i] + steps[i];
        let v = g(&x);
        simplex.push((x, v));
    }
    let mut evals = n + 1;
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let combine = |a: &[T], b: &[T], c: T| -> Vec<T> { a.iter().zip(b).map(|(&p, &q)| p + c * (q - p)).collect() };
    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let (best, worst) = (simplex[0].1, simplex[n].1);
        if (worst - best).abs() <= T::epsilon() * (T::one() + best.abs()) {
            break;
        }
        let mut centroid = vec![T::zero(); n];
        for (x, _) in &simplex[..n] {
            for k in 0..n {
                centroid[k] = centroid[k] + x[k] / T::lit(n as f64);
            }
        }
        let reflected = combine(&centroid, &simplex[n].0, -T::one());
        let vr = g(&reflected);
        evals += 1;
        if vr < simplex[0].1 {
            let expanded = combine(&centroid, &simplex[n].0, -two);
            let ve = g(&expanded);
            evals += 1;
            simplex[n] = if ve < vr { (expanded, ve) } else { (reflected, vr) };
        } else if vr < simplex[n - 1].1 {
            simplex[n] = (reflected, vr);
        } else {
            let contracted = combine(&centroid, &simplex[n].0, half);
            let vc = g(&contracted);
            evals += 1;
            if vc < simplex[n].1 {
                simplex[n] = (contracted, vc);
            } else {
                let x_best = simplex[0].0.clone();
                for (x, v) in simplex.iter_mut().skip(1) {
                    *x = combine(&x_best, x, half);
                    *v = g(x);
                }
                evals += n;
            }
        }
    }
    simplex.into_iter().min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal)).unwrap()
}

pub fn estimate<T: Real>(phi: &Integrand, f: &Mat<T>, cfg: &OracleConfig<T>) -> Result<EnvelopeEstimate<T>> {
    cfg.validate()?;
    if f.shape() != phi.shape() {
        return arg(format!("{phi} expects {:?}, got {:?}", phi.shape(), f.shape()));
    }
    if cfg.informed_directions.iter().any(|d| d.shape() != f.shape()) {
        return arg("informed direction shape differs from F");
    }
    for d in &cfg.informed_directions {
        let n = d.frobenius();
        if !(n > T::zero()) || !rank_one_defect(&d.scale(T::one() / n), T::lit(1e-9)).is_rank_le_one {
            return arg("informed directions must be nonzero and rank-one");
        }
    }
    let mut evaluations = 0;
    let mut partial = false;
    let mut best: Option<(T, Laminate<T>, usize)> = None;
    for d in 0..=cfg.depth {
        let mut s = Search { phi: *phi, cfg, rng: rng(cfg.seed), evaluations, partial: false };
        let (v, lam) = s.run(f, d);
        evaluations = s.evaluations;
        partial |= s.partial;
        if best.as_ref().map_or(true, |b| v < b.0) {
            best = Some((v, lam, d));
        }
        if partial {
            break;
        }
    }
    let (_, laminate, depth_used) = best.expect("depth 0 always runs");
    Ok(EnvelopeEstimate { value: laminate.act(phi)?, laminate, depth_used, evaluations, partial })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepCase<T> {
    pub f: Mat<T>,
    pub estimate: EnvelopeEstimate<T>,
    pub phi0_value: T,
    /// `|estimate - phi0| / (1 + |phi0|)`.
    pub gap: T,
    /// `estimate - phi0`, negative when the lower bound is violated.
    pub excess: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport<T> {
    pub cases: Vec<SweepCase<T>>,
    pub max_gap: T,
    pub worst_case: Option<usize>,
}

/// Runs [`estimate`] on every matrix. `informed` adds per-matrix directions to
/// the configured ones; matrix `i` uses seed `cfg.seed + i`.
pub fn sweep<T: Real>(
    phi: &Integrand,
    phi0: &Integrand,
    matrices: &[Mat<T>],
    cfg: &OracleConfig<T>,
    informed: Option<&dyn Fn(&Mat<T>) -> Vec<Mat<T>>>,
) -> Result<SweepReport<T>> {
    if !Integrand::is_matched_pair(phi, phi0) {
        return arg(format!("{phi} and {phi0} are not a matched pair"));
    }
    let mut cases = Vec::with_capacity(matrices.len());
    let mut max_gap = T::zero();
    let mut worst_case = None;
    for (i, f) in matrices.iter().enumerate() {
        let mut c = cfg.clone();
        c.seed = cfg.seed.wrapping_add(i as u64);
        if let Some(g) = informed {
            c.informed_directions.extend(g(f));
        }
        let est = estimate(phi, f, &c)?;
        let p0 = phi0.eval(f)?;
        let excess = est.value - p0;
        let gap = excess.abs() / (T::one() + p0.abs());
        if worst_case.is_none() || gap > max_gap {
            max_gap = gap;
            worst_case = Some(i);
        }
        cases.push(SweepCase { f: f.clone(), estimate: est, phi0_value: p0, gap, excess });
    }
    Ok(SweepReport { cases, max_gap, worst_case })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructor::two_point_solution;
    use crate::matcore::det;

    #[test]
    fn hull_examples() {
        let xs: Vec<f64> = (0..21).map(|i| -1.0 + 0.1 * i as f64).collect();
        let sq: Vec<(f64, f64)> = xs.iter().map(|&s| (s, s * s)).collect();
        assert!(convex_envelope_1d(&sq, 0.0).unwrap().value.abs() < 1e-15);
        let abs: Vec<(f64, f64)> = xs.iter().map(|&s| (s, s.abs())).collect();
        let h = convex_envelope_1d(&abs, xs[10]).unwrap();
        assert_eq!((h.left, h.right), (10, 10));
        let cap: Vec<(f64, f64)> = xs.iter().map(|&s| (s, 1.0 - s * s)).collect();
        let h = convex_envelope_1d(&cap, 0.0).unwrap();
        assert!(h.value.abs() < 1e-15);
        assert_eq!((h.left, h.right), (0, 20));
        assert!((h.weight - 0.5).abs() < 1e-15);
        assert!(convex_envelope_1d(&cap, 2.0).is_err());
        assert!(convex_envelope_1d(&[(1.0, 0.0), (0.0, 0.0)], 0.5).is_err());
    }

    #[test]
    fn hull_lies_below_samples_and_is_convex() {
        use rand::{Rng, SeedableRng};
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let pts: Vec<(f64, f64)> = (0..17).map(|i| (i as f64, r.gen_range(-1.0..1.0))).collect();
            let vals: Vec<f64> = (0..161).map(|k| convex_envelope_1d(&pts, k as f64 * 0.1).unwrap().value).collect();
            for (k, v) in vals.iter().enumerate() {
                if k % 10 == 0 {
                    assert!(*v <= pts[k / 10].1 + 1e-15);
                }
            }
            for w in vals.windows(3) {
                assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-12);
            }
        }
    }

    #[test]
    fn informed_depth_one_is_exact_on_2x2() {
        let f: Mat<f64> = Mat::from_rows(&[[1.0, 1.0], [0.0, 1.0]]).unwrap();
        let sol = two_point_solution(&f).unwrap();
        let cfg = OracleConfig {
            depth: 1,
            directions_per_level: 0,
            informed_directions: vec![&sol.f1 - &sol.f0],
            ..OracleConfig::default()
        };
        let est = estimate(&Integrand::ProdRows { cols: 2 }, &f, &cfg).unwrap();
        assert!((est.value - 1.0).abs() < 1e-6, "{}", est.value);
        assert!(est.laminate.validate(&f, None).passes(1e-10, 1e-9));
    }

    #[test]
    fn abs_det_is_not_lowered() {
        let f: Mat<f64> = Mat::from_rows(&[[2.0, 0.3], [0.1, 1.0]]).unwrap();
        let cfg = OracleConfig { depth: 1, directions_per_level: 16, ..OracleConfig::default() };
        let phi = Integrand::AbsDet { n: 2 };
        let est = estimate(&phi, &f, &cfg).unwrap();
        let d = det(&f).unwrap().abs();
        assert!(est.value >= d - 1e-9 && est.value <= d + 1e-12);
    }

    #[test]
    fn monotone_in_depth_and_budget_flag() {
        let f: Mat<f64> = Mat::from_rows(&[[0.3, 0.8], [-0.5, 0.4]]).unwrap();
        let phi = Integrand::ProdRows { cols: 2 };
        let mut last = f64::INFINITY;
        for depth in 0..3 {
            let cfg = OracleConfig { depth, directions_per_level: 16, seed: 9, ..OracleConfig::default() };
            let est = estimate(&phi, &f, &cfg).unwrap();
            assert!(est.value <= last + 1e-12);
            assert!((est.laminate.act(&phi).unwrap() - est.value).abs() < 1e-10);
            assert!(est.laminate.validate(&f, None).barycenter_residual < 1e-10);
            last = est.value;
        }
        let cfg = OracleConfig { max_evaluations: 100, ..OracleConfig::default() };
        assert!(estimate(&phi, &f, &cfg).unwrap().partial);
        let bad = OracleConfig { line_samples: 4, ..OracleConfig::<f64>::default() };
        assert!(estimate(&phi, &f, &bad).is_err());
    }

    #[test]
    fn sweep_empty_and_unmatched() {
        let cfg = OracleConfig::<f64>::default();
        let r = sweep(&Integrand::ProdRows { cols: 2 }, &Integrand::AbsDet { n: 2 }, &[], &cfg, None).unwrap();
        assert!(r.cases.is_empty() && r.worst_case.is_none());
        assert!(sweep(&Integrand::ProdRows { cols: 2 }, &Integrand::AbsDet { n: 3 }, &[], &cfg, None).is_err());
    }

    #[test]
    fn informed_directions_must_be_rank_one() {
        let f: Mat<f64> = Mat::from_rows(&[[0.3, 0.8, 0.1, -0.2], [-0.5, 0.4, 0.7, 0.2]]).unwrap();
        let phi = Integrand::ProdRows { cols: 4 };
        let mut cfg = OracleConfig { depth: 1, directions_per_level: 4, ..OracleConfig::default() };
        cfg.informed_directions = vec![Mat::from_rows(&[[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]]).unwrap()];
        assert!(estimate(&phi, &f, &cfg).is_err());
        cfg.informed_directions = vec![Mat::zeros(2, 4)];
        assert!(estimate(&phi, &f, &cfg).is_err());
    }

    #[test]
    fn uneven_informed_split_is_found() {
        // X1 = I and X0 = I - E both have orthogonal rows and positive
        // determinant; F sits at 0.01 from X1, well inside one grid step.
        let b1 = 0.5 - 0.5f64.sqrt();
        let e: Mat<f64> = Mat::outer(&[1.0, 1.0], &[b1, 0.5]);
        let f = Mat::<f64>::identity(2).axpy(-0.01, &e);
        let x0 = Mat::<f64>::identity(2).axpy(-1.0, &e);
        assert!(Integrand::BlockSum { blocks: 1 }.eval(&x0).unwrap() - det(&x0).unwrap() < 1e-15);
        let cfg = OracleConfig { depth: 1, directions_per_level: 0, informed_directions: vec![e], ..OracleConfig::default() };
        let phi = Integrand::BlockSum { blocks: 1 };
        let est = estimate(&phi, &f, &cfg).unwrap();
        let target = Integrand::AbsDet { n: 2 }.eval(&f).unwrap();
        assert!(Integrand::BlockSum { blocks: 1 }.eval(&f).unwrap() > target + 1e-6);
        assert!((est.value - target).abs() <= 1e-12, "{} vs {target}", est.value);
    }
}
