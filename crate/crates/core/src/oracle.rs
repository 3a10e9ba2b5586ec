//! Brute-force certification at desk scale.
//!
//! Every `gamma_d` on the simplex lattice of spacing `1/resolution` that
//! respects the lower bounds is visited, and `T` is optimized over the fiber
//! at each lattice point. Cell boxes are recomputed here from the moments so
//! the check does not share code with the solver's fiber routines.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assumptions::{AssumptionSpec, Direction, FIBER_TOL};
use crate::error::{Error, Result};
use crate::identified::gamma_lower_bounds;
use crate::moments::{Arm, Interval, PerArm, ProblemMoments, ShortTermLaw};
use crate::solver::{solve_bounds, BoundsResult, SolverConfig};

/// Per-coordinate Lipschitz bound of `T` on `[0, 1]` outcomes.
pub const LIPSCHITZ: f64 = 2.0;
pub const MAX_K: usize = 4;
pub const MIN_RESOLUTION: usize = 10;
/// Upper limit on lattice pairs visited when the arms cannot be separated.
const PRODUCT_LIMIT: u128 = 12_000_000_000;
/// Upper limit on linear solves for vertex enumeration.
const VERTEX_WORK_LIMIT: u128 = 60_000_000;
const VERTEX_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    /// Bracket on the `[0, 1]` outcome scale.
    pub interval: Interval,
    /// Merged runs of attained values, at bin width `1/resolution`.
    pub attained: Vec<Interval>,
    /// Largest hole between consecutive attained runs.
    pub max_gap: f64,
    pub lattice_points: u128,
    pub resolution: usize,
    pub argmin: Option<ShortTermLaw>,
    pub argmax: Option<ShortTermLaw>,
}

/// Lattice of one arm: fixed floor units plus every composition of the free units.
struct ArmLattice {
    floor: Vec<usize>,
    free: usize,
    k: usize,
    comps: Vec<u16>,
}

impl ArmLattice {
    fn count(&self) -> usize {
        self.comps.len() / self.k
    }

    fn units(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.comps[i * self.k..(i + 1) * self.k]
            .iter()
            .zip(&self.floor)
            .map(|(c, f)| *c as usize + f)
    }

    fn gamma(&self, i: usize, resolution: usize) -> Vec<f64> {
        self.units(i).map(|u| u as f64 / resolution as f64).collect()
    }
}

fn binomial(n: u128, r: u128) -> u128 {
    let r = r.min(n - r);
    (0..r).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

fn composition_count(total: usize, k: usize) -> u128 {
    binomial((total + k - 1) as u128, (k - 1) as u128)
}

fn compositions(total: usize, k: usize) -> Vec<u16> {
    fn fill(rest: usize, slot: usize, cur: &mut Vec<u16>, out: &mut Vec<u16>) {
        if slot + 1 == cur.len() {
            cur[slot] = rest as u16;
            out.extend_from_slice(cur);
            return;
        }
        for v in 0..=rest {
            cur[slot] = v as u16;
            fill(rest - v, slot + 1, cur, out);
        }
    }
    let mut out = Vec::with_capacity(composition_count(total, k) as usize * k);
    fill(total, 0, &mut vec![0; k], &mut out);
    out
}

fn arm_lattices(pm: &ProblemMoments, resolution: usize) -> Result<PerArm<(Vec<usize>, usize)>> {
    let lower = gamma_lower_bounds(pm);
    let r = resolution as f64;
    let mut out = PerArm::new((Vec::new(), 0), (Vec::new(), 0));
    for d in Arm::BOTH {
        let floor: Vec<usize> = lower[d].iter().map(|l| (l * r - 1e-9).ceil().max(0.0) as usize).collect();
        let used: usize = floor.iter().sum();
        if used > resolution {
            return Err(Error::Resolution { resolution });
        }
        out[d] = (floor, resolution - used);
    }
    Ok(out)
}

/// Data box on `m_d(s)` at mass `g`, recomputed from first principles.
fn cell_box(pm: &ProblemMoments, d: Arm, s: usize, g: f64) -> (f64, f64) {
    let p = pm.p_obs(d, s).max(0.0);
    let pi = if g <= 0.0 { 0.0 } else { (p / g).min(1.0) };
    let lo = pm.mean(d, s) * pi;
    let hi = lo + 1.0 - pi;
    let w = pm.slack.fiber;
    ((lo - w).max(0.0), (hi + w).min(1.0))
}

/// Coverage of attained values on a uniform bin grid.
struct Coverage {
    origin: f64,
    width: f64,
    diff: Vec<i64>,
}

impl Coverage {
    fn new(origin: f64, end: f64, width: f64) -> Self {
        let bins = ((end - origin) / width).ceil() as usize + 2;
        Coverage { origin, width, diff: vec![0; bins + 1] }
    }

    fn bin(&self, x: f64) -> usize {
        (((x - self.origin) / self.width).floor().max(0.0) as usize).min(self.diff.len() - 2)
    }

    fn add(&mut self, lo: f64, hi: f64) {
        let (a, b) = (self.bin(lo), self.bin(hi));
        self.diff[a] += 1;
        self.diff[b + 1] -= 1;
    }

    fn merge(&mut self, other: &Coverage) {
        for (a, b) in self.diff.iter_mut().zip(&other.diff) {
            *a += b;
        }
    }

    fn covered(&self) -> Vec<bool> {
        let mut run = 0;
        self.diff[..self.diff.len() - 1]
            .iter()
            .map(|d| {
                run += d;
                run > 0
            })
            .collect()
    }

    fn runs_of(covered: &[bool], origin: f64, width: f64) -> Vec<Interval> {
        let mut runs = Vec::new();
        let mut start: Option<usize> = None;
        for (i, &c) in covered.iter().chain(std::iter::once(&false)).enumerate() {
            match (c, start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    runs.push(Interval::new(origin + s as f64 * width, origin + i as f64 * width));
                    start = None;
                }
                _ => {}
            }
        }
        runs
    }
}

fn max_gap(runs: &[Interval]) -> f64 {
    runs.windows(2).map(|w| w[1].lo - w[0].hi).fold(0.0, f64::max)
}

/// Per-arm extremes of `sum_s m_d(s) gamma_d(s)` for arm-separable assumptions.
fn arm_extremes(pm: &ProblemMoments, a: &AssumptionSpec, d: Arm, gamma: &[f64]) -> Option<(f64, f64)> {
    let k = gamma.len();
    let mut lo = vec![0.0; k];
    let mut hi = vec![0.0; k];
    for s in 0..k {
        let (l, h) = cell_box(pm, d, s, gamma[s]);
        lo[s] = l;
        hi[s] = h;
        if matches!(a, AssumptionSpec::Luc) && pm.p_obs(d, s) > 0.0 {
            let mu = pm.mean(d, s);
            lo[s] = lo[s].max(mu - pm.slack.fiber);
            hi[s] = hi[s].min(mu + pm.slack.fiber);
        }
    }
    if let AssumptionSpec::Liv { direction } = a {
        let order: Vec<usize> = match direction {
            Direction::Increasing => (0..k).collect(),
            Direction::Decreasing => (0..k).rev().collect(),
        };
        let mut running = f64::NEG_INFINITY;
        for &s in &order {
            running = running.max(lo[s]);
            lo[s] = running;
        }
        let mut running = f64::INFINITY;
        for &s in order.iter().rev() {
            running = running.min(hi[s]);
            hi[s] = running;
        }
    }
    let violation: f64 = lo.iter().zip(&hi).map(|(l, h)| (l - h).max(0.0)).sum();
    if violation > FIBER_TOL {
        return None;
    }
    let dot = |v: &[f64]| v.iter().zip(gamma).map(|(m, g)| m.min(1.0) * g).sum::<f64>();
    let clamped_lo: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| l.min(*h)).collect();
    let clamped_hi: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| h.max(*l)).collect();
    Some((dot(&clamped_lo), dot(&clamped_hi)))
}

struct ArmScan {
    min: Option<(f64, usize)>,
    max: Option<(f64, usize)>,
    coverage: Coverage,
    feasible: usize,
}

fn scan_arm(pm: &ProblemMoments, a: &AssumptionSpec, d: Arm, lat: &ArmLattice, resolution: usize) -> ArmScan {
    let width = 1.0 / resolution as f64;
    let mut scan = ArmScan { min: None, max: None, coverage: Coverage::new(0.0, 1.0, width), feasible: 0 };
    for i in 0..lat.count() {
        let g = lat.gamma(i, resolution);
        let Some((lo, hi)) = arm_extremes(pm, a, d, &g) else {
            continue;
        };
        scan.feasible += 1;
        scan.coverage.add(lo, hi);
        if scan.min.is_none_or(|(v, _)| lo < v) {
            scan.min = Some((lo, i));
        }
        if scan.max.is_none_or(|(v, _)| hi > v) {
            scan.max = Some((hi, i));
        }
    }
    scan
}

fn separable(pm: &ProblemMoments, a: &AssumptionSpec, lats: &PerArm<ArmLattice>, resolution: usize) -> OracleResult {
    let scans = PerArm::from_fn(|d| scan_arm(pm, a, d, &lats[d], resolution));
    let points = lats.control.count() as u128 * lats.treated.count() as u128;
    let (c, t) = (&scans.control, &scans.treated);
    let (Some(cmin), Some(cmax), Some(tmin), Some(tmax)) = (c.min, c.max, t.min, t.max) else {
        return empty_result(points, resolution);
    };
    let interval = Interval::new(tmin.0 - cmax.0, tmax.0 - cmin.0);
    let gamma_at = |ic: usize, it: usize| {
        ShortTermLaw::new(lats.control.gamma(ic, resolution), lats.treated.gamma(it, resolution))
    };

    // Attained set is the difference of the per-arm attained sets.
    let width = 1.0 / resolution as f64;
    let (cc, ct) = (c.coverage.covered(), t.coverage.covered());
    let n = cc.len();
    let mut diff_cov = vec![false; 2 * n + 1];
    for (i, _) in ct.iter().enumerate().filter(|(_, v)| **v) {
        for (j, _) in cc.iter().enumerate().filter(|(_, v)| **v) {
            // [i, i+1) - [j, j+1) lies in (i-j-1, i-j+1).
            diff_cov[i + n - j - 1] = true;
            diff_cov[i + n - j] = true;
        }
    }
    let attained = Coverage::runs_of(&diff_cov, -(n as f64) * width, width);
    OracleResult {
        interval,
        max_gap: max_gap(&attained),
        attained,
        lattice_points: points,
        resolution,
        argmin: Some(gamma_at(cmax.1, tmin.1)),
        argmax: Some(gamma_at(cmin.1, tmax.1)),
    }
}

fn empty_result(points: u128, resolution: usize) -> OracleResult {
    OracleResult {
        interval: Interval::empty(),
        attained: Vec::new(),
        max_gap: 0.0,
        lattice_points: points,
        resolution,
        argmin: None,
        argmax: None,
    }
}

#[derive(Clone, Copy)]
struct Extremes {
    min: (f64, usize, usize),
    max: (f64, usize, usize),
}

impl Extremes {
    fn none() -> Self {
        Extremes { min: (f64::INFINITY, usize::MAX, usize::MAX), max: (f64::NEG_INFINITY, usize::MAX, usize::MAX) }
    }

    fn offer(&mut self, lo: f64, hi: f64, i: usize, j: usize) {
        if (lo, i, j) < self.min {
            self.min = (lo, i, j);
        }
        if hi > self.max.0 || (hi == self.max.0 && (i, j) < (self.max.1, self.max.2)) {
            self.max = (hi, i, j);
        }
    }

    fn join(mut self, other: Extremes) -> Self {
        self.offer(other.min.0, f64::NEG_INFINITY, other.min.1, other.min.2);
        if other.max.0 > self.max.0 || (other.max.0 == self.max.0 && (other.max.1, other.max.2) < (self.max.1, self.max.2))
        {
            self.max = other.max;
        }
        self
    }
}

/// Visits every pair of lattice points; `eval` returns the fiber extremes
/// of `T` or `None` for an empty fiber.
fn product_scan<F>(lats: &PerArm<ArmLattice>, resolution: usize, eval: F) -> OracleResult
where
    F: Fn(usize, usize) -> Option<(f64, f64)> + Sync,
{
    let width = 1.0 / resolution as f64;
    let n0 = lats.control.count();
    let n1 = lats.treated.count();
    let (ext, cov) = (0..n0)
        .into_par_iter()
        .fold(
            || (Extremes::none(), Coverage::new(-1.0, 1.0, width)),
            |(mut ext, mut cov), i| {
                for j in 0..n1 {
                    if let Some((lo, hi)) = eval(i, j) {
                        ext.offer(lo, hi, i, j);
                        cov.add(lo, hi);
                    }
                }
                (ext, cov)
            },
        )
        .reduce(
            || (Extremes::none(), Coverage::new(-1.0, 1.0, width)),
            |(a, mut ca), (b, cb)| {
                ca.merge(&cb);
                (a.join(b), ca)
            },
        );
    let points = n0 as u128 * n1 as u128;
    if ext.min.1 == usize::MAX {
        return empty_result(points, resolution);
    }
    let attained = Coverage::runs_of(&cov.covered(), -1.0, width);
    let gamma_at = |i: usize, j: usize| {
        ShortTermLaw::new(lats.control.gamma(i, resolution), lats.treated.gamma(j, resolution))
    };
    OracleResult {
        interval: Interval::new(ext.min.0, ext.max.0),
        max_gap: max_gap(&attained),
        attained,
        lattice_points: points,
        resolution,
        argmin: Some(gamma_at(ext.min.1, ext.min.2)),
        argmax: Some(gamma_at(ext.max.1, ext.max.2)),
    }
}

/// Under treatment invariance the inner value is a sum of per-cell terms
/// depending only on `(gamma_0(s), gamma_1(s))`, so each cell is tabulated once.
fn treatment_invariance(pm: &ProblemMoments, lats: &PerArm<ArmLattice>, resolution: usize) -> OracleResult {
    let k = pm.k();
    let (f0, f1) = (lats.control.free, lats.treated.free);
    let r = resolution as f64;
    let cols = f1 + 1;
    let mut tables = Vec::with_capacity(k);
    for s in 0..k {
        let mut table = vec![(f64::INFINITY, f64::NEG_INFINITY); (f0 + 1) * cols];
        for u0 in 0..=f0 {
            let g0 = (lats.control.floor[s] + u0) as f64 / r;
            let (l0, h0) = cell_box(pm, Arm::Control, s, g0);
            for u1 in 0..=f1 {
                let g1 = (lats.treated.floor[s] + u1) as f64 / r;
                let (l1, h1) = cell_box(pm, Arm::Treated, s, g1);
                let (lo, hi) = (l0.max(l1), h0.min(h1));
                if lo > hi + FIBER_TOL {
                    continue;
                }
                let hi = hi.max(lo);
                let delta = g1 - g0;
                let (a, b) = (lo * delta, hi * delta);
                table[u0 * cols + u1] = (a.min(b), a.max(b));
            }
        }
        tables.push(table);
    }
    let (c0, c1) = (&lats.control.comps, &lats.treated.comps);
    product_scan(lats, resolution, |i, j| {
        let (mut lo, mut hi) = (0.0, 0.0);
        for (s, table) in tables.iter().enumerate() {
            let (a, b) = table[c0[i * k + s] as usize * cols + c1[j * k + s] as usize];
            lo += a;
            hi += b;
        }
        (lo.is_finite() && hi.is_finite()).then_some((lo, hi))
    })
}

/// Solves the square system `a x = b`; `None` when singular.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[p][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, p);
        b.swap(col, p);
        for i in (col + 1)..n {
            let f = a[i][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[i][c] -= f * a[col][c];
                }
                b[i] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let tail: f64 = ((i + 1)..n).map(|c| a[i][c] * x[c]).sum();
        x[i] = (b[i] - tail) / a[i][i];
    }
    Some(x)
}

fn subsets(m: usize, r: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, m: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            if m - i < r - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, m, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, m, r, &mut Vec::new(), &mut out);
    out
}

/// Fiber extremes of `T` by enumerating the vertices of the box-plus-linear
/// polytope in `(m_0, m_1)`.
fn vertex_extremes(
    pm: &ProblemMoments,
    rows: &[(Vec<f64>, f64)],
    eqs: &[(Vec<f64>, f64)],
    tight_sets: &[Vec<usize>],
    gamma: &ShortTermLaw,
) -> Option<(f64, f64)> {
    let k = pm.k();
    let n = 2 * k;
    let mut ineq: Vec<(Vec<f64>, f64)> = Vec::with_capacity(2 * n + rows.len());
    for d in Arm::BOTH {
        for s in 0..k {
            let (lo, hi) = cell_box(pm, d, s, gamma.gamma[d][s]);
            let mut e = vec![0.0; n];
            e[d.index() * k + s] = 1.0;
            ineq.push((e.clone(), lo));
            ineq.push((e.iter().map(|v| -v).collect(), -hi));
        }
    }
    ineq.extend_from_slice(rows);
    let objective: Vec<f64> = Arm::BOTH
        .iter()
        .flat_map(|&d| gamma.gamma[d].iter().map(move |g| d.sign() * g))
        .collect();
    let dot = |a: &[f64], x: &[f64]| a.iter().zip(x).map(|(u, v)| u * v).sum::<f64>();
    let mut best: Option<(f64, f64)> = None;
    for tight in tight_sets {
        let mut a: Vec<Vec<f64>> = eqs.iter().map(|(r, _)| r.clone()).collect();
        let mut b: Vec<f64> = eqs.iter().map(|(_, v)| *v).collect();
        for &t in tight {
            a.push(ineq[t].0.clone());
            b.push(ineq[t].1);
        }
        let Some(x) = solve_square(a, b) else {
            continue;
        };
        let feasible = ineq.iter().all(|(r, v)| dot(r, &x) >= v - VERTEX_TOL)
            && eqs.iter().all(|(r, v)| (dot(r, &x) - v).abs() <= VERTEX_TOL);
        if feasible {
            let t = dot(&objective, &x);
            best = Some(best.map_or((t, t), |(lo, hi)| (lo.min(t), hi.max(t))));
        }
    }
    best
}

fn vertex_enumeration(
    pm: &ProblemMoments,
    a: &AssumptionSpec,
    lats: &PerArm<ArmLattice>,
    resolution: usize,
) -> Result<OracleResult> {
    let k = pm.k();
    let n = 2 * k;
    let system = a.linear_system(pm);
    let n_eq = system.eq.len();
    if n_eq > n {
        return Err(Error::Invalid("more equalities than link coordinates".into()));
    }
    let m = 2 * n + system.ineq.len();
    let r = n - n_eq;
    let per_point = binomial(m as u128, r as u128);
    let points = lats.control.count() as u128 * lats.treated.count() as u128;
    if per_point.saturating_mul(points) > VERTEX_WORK_LIMIT {
        return Err(Error::OracleLimit(format!(
            "{points} lattice points x {per_point} vertex candidates exceeds the work limit; lower the resolution"
        )));
    }
    let tight_sets = subsets(m, r);
    Ok(product_scan(lats, resolution, |i, j| {
        let g = ShortTermLaw::new(lats.control.gamma(i, resolution), lats.treated.gamma(j, resolution));
        vertex_extremes(pm, &system.ineq, &system.eq, &tight_sets, &g)
    }))
}

/// Brackets the identified set of `T` by exhaustive search over the lattice.
pub fn grid_identified_set(pm: &ProblemMoments, a: &AssumptionSpec, resolution: usize) -> Result<OracleResult> {
    let k = pm.k();
    if k > MAX_K {
        return Err(Error::OracleLimit(format!("support has k={k} points; the oracle handles k <= {MAX_K}")));
    }
    if resolution < MIN_RESOLUTION {
        return Err(Error::Invalid(format!("resolution must be at least {MIN_RESOLUTION}")));
    }
    if resolution > u16::MAX as usize {
        return Err(Error::Invalid("resolution too large".into()));
    }
    let parts = arm_lattices(pm, resolution)?;
    let arm_separable = a.is_arm_separable();
    if !arm_separable {
        let pairs = composition_count(parts.control.1, k) * composition_count(parts.treated.1, k);
        if pairs > PRODUCT_LIMIT {
            return Err(Error::OracleLimit(format!("{pairs} lattice pairs exceed the limit; lower the resolution")));
        }
    }
    let lats = PerArm::from_fn(|d| {
        let (floor, free) = parts[d].clone();
        ArmLattice { comps: compositions(free, k), floor, free, k }
    });
    match a {
        AssumptionSpec::WorstCase | AssumptionSpec::Luc | AssumptionSpec::Liv { .. } => {
            Ok(separable(pm, a, &lats, resolution))
        }
        AssumptionSpec::Ti => Ok(treatment_invariance(pm, &lats, resolution)),
        AssumptionSpec::LivAndTi { .. } | AssumptionSpec::CustomLinear { .. } => {
            vertex_enumeration(pm, a, &lats, resolution)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub assumption: String,
    pub resolution: usize,
    pub solver: BoundsResult,
    pub oracle: OracleResult,
    /// Solver minus oracle, per endpoint, on the `[0, 1]` scale.
    pub gap_lo: f64,
    pub gap_hi: f64,
    pub tolerance: f64,
    pub density_ok: bool,
    pub pass: bool,
}

impl CertificationReport {
    pub fn verdict(&self) -> &'static str {
        if self.pass {
            "PASS"
        } else {
            "FAIL"
        }
    }
}

/// Runs solver and oracle on the same problem and compares endpoints.
pub fn oracle_compare(
    pm: &ProblemMoments,
    a: &AssumptionSpec,
    cfg: &SolverConfig,
    resolution: usize,
) -> Result<CertificationReport> {
    let scoped = cfg.scope.apply(pm);
    let solver = solve_bounds(pm, a, cfg)?;
    let oracle = grid_identified_set(&scoped, a, resolution)?;
    let tolerance = 2.0 * LIPSCHITZ / resolution as f64 + cfg.tol_obj;
    let density_ok = oracle.max_gap <= 4.0 * LIPSCHITZ / resolution as f64;
    let (gap_lo, gap_hi, agree) = match (solver.normalized.is_empty(), oracle.interval.is_empty()) {
        (false, false) => {
            let gl = solver.normalized.lo - oracle.interval.lo;
            let gh = solver.normalized.hi - oracle.interval.hi;
            (gl, gh, gl.abs() <= tolerance && gh.abs() <= tolerance)
        }
        (true, true) => (0.0, 0.0, true),
        _ => (f64::INFINITY, f64::INFINITY, false),
    };
    Ok(CertificationReport {
        assumption: a.name(),
        resolution,
        solver,
        oracle,
        gap_lo,
        gap_hi,
        tolerance,
        density_ok,
        pass: agree && density_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::example3;
    use crate::solver::Scope;
    use approx::assert_abs_diff_eq;

    #[test]
    fn compositions_are_complete() {
        let c = compositions(4, 3);
        assert_eq!(c.len() / 3, composition_count(4, 3) as usize);
        assert_eq!(composition_count(4, 3), 15);
        assert!(c.chunks(3).all(|w| w.iter().map(|v| *v as usize).sum::<usize>() == 4));
    }

    #[test]
    fn ex3_luc_is_exact_on_the_lattice() {
        let r = grid_identified_set(&example3(), &AssumptionSpec::Luc, 100).unwrap();
        assert_eq!(r.lattice_points, 1);
        assert_abs_diff_eq!(r.interval.lo, 0.35, epsilon = 1e-12);
        assert_abs_diff_eq!(r.interval.hi, 0.35, epsilon = 1e-12);
    }

    #[test]
    fn ex3_worst_case_within_lattice_tolerance() {
        let pm = example3().observational_only();
        let r = grid_identified_set(&pm, &AssumptionSpec::WorstCase, 400).unwrap();
        assert!((r.interval.lo + 0.35).abs() <= LIPSCHITZ / 400.0);
        assert!((r.interval.hi - 0.65).abs() <= LIPSCHITZ / 400.0);
        assert!(r.max_gap <= 4.0 * LIPSCHITZ / 400.0);
    }

    #[test]
    fn ex3_ti_certifies() {
        let rep = oracle_compare(&example3(), &AssumptionSpec::Ti, &SolverConfig::default(), 400).unwrap();
        assert!(rep.pass, "{rep:?}");
        let cfg = SolverConfig::default().with_scope(Scope::ObservationalOnly);
        let rep = oracle_compare(&example3(), &AssumptionSpec::Ti, &cfg, 200).unwrap();
        assert!(rep.pass, "{:?} {:?}", rep.solver.normalized, rep.oracle.interval);
    }

    #[test]
    fn composite_assumption_uses_vertices() {
        let pm = example3().observational_only();
        let ti = grid_identified_set(&pm, &AssumptionSpec::Ti, 40).unwrap();
        let both = grid_identified_set(&pm, &AssumptionSpec::liv_and_ti(), 40).unwrap();
        assert!(both.interval.is_subset_of(&ti.interval, 1e-9));
    }

    #[test]
    fn unrepresentable_lower_bounds_need_more_resolution() {
        let mut pm = example3();
        pm.obs.mass = PerArm::new(vec![1.0 / 3.0, 1.0 / 6.0], vec![0.2, 0.3]);
        if let Some(exp) = pm.exp.as_mut() {
            exp.mass[0].control = vec![1.0 / 3.0, 2.0 / 3.0];
        }
        assert_eq!(
            grid_identified_set(&pm, &AssumptionSpec::WorstCase, 10).unwrap_err(),
            Error::Resolution { resolution: 10 }
        );
    }

    #[test]
    fn refuses_large_supports() {
        let pm = crate::dgp::DgpSpec::uniform_example(5).population_moments();
        assert!(matches!(grid_identified_set(&pm, &AssumptionSpec::Ti, 20), Err(Error::OracleLimit(_))));
    }
}
