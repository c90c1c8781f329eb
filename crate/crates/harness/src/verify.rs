//! Identity and regularity suites, on random batteries or on a configured
//! instance.

use std::fmt;
use std::str::FromStr;

use feaslift::algorithms::{gdr_two_sets, parallel_gdr_reduced, GdrParams, History, StopRule};
use feaslift::diagnostics::{embed_basis, lemma_ncps_subspace_check, lifted_strong_regularity_check};
use feaslift::lifting::{distance_identities, project_intersection_on_diagonal, DykstraIntersection, FiniteIntersection, SubspaceIntersection};
use feaslift::linalg::{column_space, orthogonal_complement};
use feaslift::rng::{normal_vector, stream, SeededRng};
use feaslift::spaces::embed_diagonal;
use feaslift::{BlockPoint, IntersectionOracle, Point, ReducedLift, SetDescriptor, Vector};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::error::{HResult, HarnessError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    DistanceIdentities,
    LiftedEquivalence,
    ProjectorFactorization,
    StrongRegularity,
    NormalCones,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::DistanceIdentities,
        Suite::LiftedEquivalence,
        Suite::ProjectorFactorization,
        Suite::StrongRegularity,
        Suite::NormalCones,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Suite::DistanceIdentities => "distance-identities",
            Suite::LiftedEquivalence => "lifted-equivalence",
            Suite::ProjectorFactorization => "projector-factorization",
            Suite::StrongRegularity => "strong-regularity",
            Suite::NormalCones => "normal-cones",
        }
    }

    pub fn tolerance(self) -> f64 {
        match self {
            Suite::DistanceIdentities => 1e-9,
            Suite::LiftedEquivalence => 1e-11,
            Suite::ProjectorFactorization => 1e-10,
            Suite::StrongRegularity => 0.0,
            Suite::NormalCones => 1e-10,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Suite {
    type Err = HarnessError;

    fn from_str(s: &str) -> HResult<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.id() == s)
            .ok_or_else(|| HarnessError::Validation(format!("unknown suite `{s}`")))
    }
}

/// Parses a comma-separated suite list; `all` selects every suite and an
/// empty string or `none` selects nothing.
pub fn parse_suites(list: &str) -> HResult<Vec<Suite>> {
    match list.trim() {
        "all" => Ok(Suite::ALL.to_vec()),
        "" | "none" => Ok(Vec::new()),
        s => s.split(',').map(|x| x.trim().parse()).collect(),
    }
}

/// Deliberate corruption used to check that failures are detected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Shift the lifted `P_K` by `1e-6` in its first coordinate.
    CorruptProjector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub suites: Vec<Suite>,
    pub seed: u64,
    pub fault: Option<Fault>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { suites: Suite::ALL.to_vec(), seed: 0, fault: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub suite: Suite,
    pub checks: usize,
    pub failures: usize,
    pub skipped: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub notes: Vec<String>,
}

impl SuiteResult {
    fn new(suite: Suite) -> Self {
        SuiteResult { suite, checks: 0, failures: 0, skipped: 0, max_residual: 0.0, tolerance: suite.tolerance(), notes: vec![] }
    }

    fn record(&mut self, residual: f64) {
        self.checks += 1;
        if !(residual <= self.tolerance) {
            self.failures += 1;
        }
        self.max_residual = if residual.is_nan() { f64::NAN } else { self.max_residual.max(residual) };
    }

    fn record_pass(&mut self, ok: bool) {
        self.checks += 1;
        if !ok {
            self.failures += 1;
        }
    }

    fn error(&mut self, e: impl fmt::Display) {
        self.checks += 1;
        self.failures += 1;
        self.notes.push(format!("error: {e}"));
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub results: Vec<SuiteResult>,
}

impl VerifyReport {
    pub fn total_checks(&self) -> usize {
        self.results.iter().map(|r| r.checks).sum()
    }

    pub fn passed(&self) -> bool {
        self.results.iter().all(SuiteResult::passed)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        if self.total_checks() == 0 {
            s.push_str("0 checks\n");
        }
        for r in &self.results {
            s.push_str(&format!(
                "{} {}: {} checks, {} failures, {} skipped, max residual {:e} (tol {:e})\n",
                if r.passed() { "PASS" } else { "FAIL" },
                r.suite,
                r.checks,
                r.failures,
                r.skipped,
                r.max_residual,
                r.tolerance
            ));
            for n in &r.notes {
                s.push_str(&format!("  note: {n}\n"));
            }
        }
        s
    }
}

fn unit(rng: &mut SeededRng) -> f64 {
    rng.random::<f64>()
}

fn point(rng: &mut SeededRng, n: usize, scale: f64) -> Point {
    Point::from_vector(normal_vector(rng, n) * scale).expect("finite normals")
}

fn random_subspace(rng: &mut SeededRng, n: usize, k: usize) -> SetDescriptor {
    let vs: Vec<Point> = (0..k).map(|_| point(rng, n, 1.0)).collect();
    SetDescriptor::span(n, &vs).expect("valid span")
}

/// Random closed convex set containing `c` in its relative interior.
fn convex_through(rng: &mut SeededRng, c: &Point) -> SetDescriptor {
    let n = c.dim();
    match rng.random_range(0..4) {
        0 => {
            let alpha = c.as_slice().iter().fold(0.1f64, |m, x| m.max(x.abs())) * (1.1 + unit(rng));
            SetDescriptor::inf_box(alpha, n).expect("valid box")
        }
        1 => {
            let shift = point(rng, n, 1.0);
            let center = Point::combine(1.0, c, 1.0, &shift);
            SetDescriptor::ball(center, shift.norm() * (1.1 + unit(rng)) + 0.1).expect("valid ball")
        }
        2 => {
            let a = point(rng, n, 1.0);
            let b = a.dot(c).expect("same dim") + 0.1 + unit(rng);
            SetDescriptor::half_space(a, b).expect("valid halfspace")
        }
        _ => {
            let k = rng.random_range(1..=n);
            let dir = random_subspace(rng, n, k);
            SetDescriptor::affine_subspace(dir.subspace_basis().expect("subspace").clone(), c.clone()).expect("valid")
        }
    }
}

/// Finite sets sharing `common` points, each with a few extra random points.
fn finite_family(rng: &mut SeededRng, n: usize, r: usize, common: usize) -> Vec<SetDescriptor> {
    let shared: Vec<Point> = (0..common).map(|_| point(rng, n, 1.0)).collect();
    (0..r)
        .map(|_| {
            let mut pts = shared.clone();
            for _ in 0..rng.random_range(0..3) {
                pts.push(point(rng, n, 1.5));
            }
            // Shuffle so shared points are not always first.
            for i in (1..pts.len()).rev() {
                let j = rng.random_range(0..=i);
                pts.swap(i, j);
            }
            SetDescriptor::finite_points(pts).expect("nonempty")
        })
        .collect()
}

/// Runs the selected suites on built-in random instances.
pub fn verify_battery(opts: &VerifyOptions) -> VerifyReport {
    let results = opts
        .suites
        .iter()
        .map(|&suite| {
            let seed = opts.seed;
            match suite {
                Suite::DistanceIdentities => battery_distance_identities(seed),
                Suite::LiftedEquivalence => battery_lifted_equivalence(seed, opts.fault),
                Suite::ProjectorFactorization => battery_projector_factorization(seed),
                Suite::StrongRegularity => battery_strong_regularity(seed),
                Suite::NormalCones => battery_normal_cones(seed),
            }
        })
        .collect();
    VerifyReport { results }
}

fn battery_distance_identities(seed: u64) -> SuiteResult {
    let mut res = SuiteResult::new(Suite::DistanceIdentities);
    for inst in 0..200u64 {
        let mut rng = stream(seed, 1_000 + inst);
        let n = rng.random_range(1..=6);
        let r = rng.random_range(2..=5);
        let kind = inst % 3;
        let sets: Vec<SetDescriptor> = match kind {
            0 => {
                let c = point(&mut rng, n, 1.0);
                (0..r).map(|_| convex_through(&mut rng, &c)).collect()
            }
            1 => {
                let dims: Vec<usize> = (0..r).map(|_| rng.random_range(0..=n)).collect();
                dims.iter().map(|&k| random_subspace(&mut rng, n, k)).collect()
            }
            _ => {
                let common = rng.random_range(1..=2);
                finite_family(&mut rng, n, r, common)
            }
        };
        let oracle: Box<dyn IntersectionOracle> = match kind {
            0 => Box::new(DykstraIntersection::new(sets.clone()).expect("convex").with_tolerance(1e-14, 100_000)),
            1 => Box::new(SubspaceIntersection::new(&sets).expect("subspaces")),
            _ => Box::new(FiniteIntersection::new(&sets, 1e-12).expect("common points")),
        };
        let coord = rng.random_range(0..r);
        let lift = ReducedLift::with_coordinator(sets, coord).expect("valid lift");
        for _ in 0..5 {
            let q = point(&mut rng, n, 2.0);
            match distance_identities(&lift, &q, oracle.as_ref()) {
                Ok(rep) => res.record(rep.max_residual()),
                Err(e) => res.error(e),
            }
        }
    }
    res
}

fn random_params(rng: &mut SeededRng) -> GdrParams {
    let lambda = 2.0 * (1.0 - unit(rng));
    let mu = 2.0 * (1.0 - unit(rng));
    let alpha = 0.01 + 0.98 * unit(rng);
    GdrParams::new(lambda, mu, alpha).expect("parameters in range")
}

/// Largest coordinate gap between the componentwise and the product-space
/// runs over `iters` steps.
pub fn lifted_equivalence_deviation(
    lift: &ReducedLift,
    params: GdrParams,
    x0: &BlockPoint,
    iters: usize,
    fault: Option<Fault>,
) -> feaslift::Result<f64> {
    let stop = StopRule::new(f64::MIN_POSITIVE, iters)?.with_history(History::Full);
    let componentwise = parallel_gdr_reduced(lift, params, x0, &stop)?;
    let k_proj = |x: &BlockPoint| -> feaslift::Result<BlockPoint> {
        let p = lift.project_k(x)?;
        if fault == Some(Fault::CorruptProjector) {
            let mut flat = p.flatten();
            flat[0] += 1e-6;
            return BlockPoint::from_flat(&flat, p.block_count());
        }
        Ok(p)
    };
    let product = gdr_two_sets(&k_proj, &lift.b_projector(), params, x0, &stop)?;
    let a = componentwise.trace.snapshots();
    let b = product.trace.snapshots();
    if a.len() != b.len() {
        return Ok(f64::INFINITY);
    }
    Ok(a.iter().zip(b).map(|((_, u), (_, v))| (u - v).amax()).fold(0.0, f64::max))
}

fn battery_lifted_equivalence(seed: u64, fault: Option<Fault>) -> SuiteResult {
    let mut res = SuiteResult::new(Suite::LiftedEquivalence);
    for inst in 0..100u64 {
        let mut rng = stream(seed, 2_000 + inst);
        let r = rng.random_range(3..=5);
        let n = rng.random_range(1..=8);
        let c = point(&mut rng, n, 1.0);
        let sets: Vec<SetDescriptor> = (0..r)
            .map(|_| match rng.random_range(0..3) {
                0 => finite_family(&mut rng, n, 1, 1).remove(0),
                _ => convex_through(&mut rng, &c),
            })
            .collect();
        let lift = ReducedLift::with_coordinator(sets, rng.random_range(0..r)).expect("valid lift");
        let x0 = BlockPoint::new((0..r - 1).map(|_| point(&mut rng, n, 3.0)).collect()).expect("blocks");
        let params = random_params(&mut rng);
        match lifted_equivalence_deviation(&lift, params, &x0, 50, fault) {
            Ok(d) => res.record(d),
            Err(e) => res.error(e),
        }
    }
    res
}

/// Projection onto `B ∩ K` computed in the lifted space, for subspace lifts:
/// `B ∩ K = (B^⊥ + K^⊥)^⊥` with `B` block diagonal and `K = j(C_r)`.
pub fn lifted_subspace_intersection_projection(lift: &ReducedLift, z: &BlockPoint) -> Option<DVector<f64>> {
    let k = lift.block_count();
    let n = lift.dim();
    let mut comps = Vec::new();
    for (i, c) in lift.components().iter().enumerate() {
        if !c.is_linear_subspace() {
            return None;
        }
        let perp = orthogonal_complement(c.subspace_basis()?, n);
        let mut padded = DMatrix::zeros(k * n, perp.ncols());
        padded.view_mut((i * n, 0), perp.shape()).copy_from(&perp);
        comps.push(padded);
    }
    if !lift.coordinator().is_linear_subspace() {
        return None;
    }
    let k_basis = embed_basis(lift.coordinator().subspace_basis()?, k);
    comps.push(orthogonal_complement(&k_basis, k * n));
    let cols: usize = comps.iter().map(|c| c.ncols()).sum();
    let mut stacked = DMatrix::zeros(k * n, cols);
    let mut at = 0;
    for c in &comps {
        stacked.columns_mut(at, c.ncols()).copy_from(c);
        at += c.ncols();
    }
    let q = orthogonal_complement(&column_space(&stacked), k * n);
    let flat = z.flatten();
    Some(&q * (q.transpose() * flat))
}

/// Nearest diagonal tuple `(p, ..., p)` with `p` in every finite set, found by
/// scanning the product of the component sets.
pub fn lifted_finite_intersection_projection(lift: &ReducedLift, z: &BlockPoint) -> Option<DVector<f64>> {
    let comps: Vec<&[Point]> = lift.components().iter().map(|c| c.points()).collect::<Option<_>>()?;
    let coord = lift.coordinator().points()?;
    let mut idx = vec![0usize; comps.len()];
    let flat = z.flatten();
    let mut best: Option<(f64, DVector<f64>)> = None;
    loop {
        let tuple: Vec<&Point> = idx.iter().zip(&comps).map(|(&i, c)| &c[i]).collect();
        let diagonal = tuple.windows(2).all(|w| w[0].distance(w[1]) <= 1e-12);
        if diagonal && coord.iter().any(|p| p.distance(tuple[0]) <= 1e-12) {
            let cand = BlockPoint::new(tuple.iter().map(|p| (*p).clone()).collect()).ok()?.flatten();
            let d = (&cand - &flat).norm();
            if best.as_ref().is_none_or(|(b, _)| d < *b) {
                best = Some((d, cand));
            }
        }
        let mut pos = 0;
        loop {
            if pos == idx.len() {
                return best.map(|(_, v)| v);
            }
            idx[pos] += 1;
            if idx[pos] < comps[pos].len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

fn battery_projector_factorization(seed: u64) -> SuiteResult {
    let mut res = SuiteResult::new(Suite::ProjectorFactorization);
    for inst in 0..40u64 {
        let mut rng = stream(seed, 3_000 + inst);
        let r = rng.random_range(2..=4);
        let n = rng.random_range(1..=5);
        let sets = if inst % 2 == 0 {
            (0..r).map(|_| { let k = rng.random_range(0..=n); random_subspace(&mut rng, n, k) }).collect::<Vec<_>>()
        } else {
            let common = rng.random_range(1..=2);
            finite_family(&mut rng, n, r, common)
        };
        let oracle: Box<dyn IntersectionOracle> = if inst % 2 == 0 {
            Box::new(SubspaceIntersection::new(&sets).expect("subspaces"))
        } else {
            Box::new(FiniteIntersection::new(&sets, 1e-12).expect("common points"))
        };
        let lift = ReducedLift::with_coordinator(sets, rng.random_range(0..r)).expect("valid lift");
        for _ in 0..5 {
            let x = point(&mut rng, n, 2.0);
            let jx = embed_diagonal(&x, lift.block_count()).expect("positive count");
            let expected = if inst % 2 == 0 {
                lifted_subspace_intersection_projection(&lift, &jx)
            } else {
                lifted_finite_intersection_projection(&lift, &jx)
            };
            match (project_intersection_on_diagonal(&lift, &x, oracle.as_ref()), expected) {
                (Ok(got), Some(exp)) => res.record((got.flatten() - exp).amax()),
                (Err(e), _) => res.error(e),
                (_, None) => res.error("lifted oracle unavailable"),
            }
        }
    }
    res
}

fn battery_strong_regularity(seed: u64) -> SuiteResult {
    let mut res = SuiteResult::new(Suite::StrongRegularity);
    let mut regular = 0;
    for inst in 0..100u64 {
        let mut rng = stream(seed, 4_000 + inst);
        let n: usize = rng.random_range(1..=8);
        let r = rng.random_range(2..=5);
        // Large subspaces make strong regularity likely; small ones make it fail.
        let sets: Vec<SetDescriptor> = (0..r)
            .map(|_| {
                let k = rng.random_range(n.saturating_sub(2)..=n);
                random_subspace(&mut rng, n, k)
            })
            .collect();
        let lift = ReducedLift::with_coordinator(sets, rng.random_range(0..r)).expect("valid lift");
        match lifted_strong_regularity_check(&lift, &Point::zeros(n)) {
            Ok(rep) => {
                if rep.original.is_strongly_regular {
                    regular += 1;
                    res.record_pass(rep.lifted.null_space_dimension == 0);
                } else {
                    res.skipped += 1;
                }
            }
            Err(e) => res.error(e),
        }
    }
    res.notes.push(format!("{regular} of 100 collections strongly regular"));
    res
}

fn battery_normal_cones(seed: u64) -> SuiteResult {
    let mut res = SuiteResult::new(Suite::NormalCones);
    for r in 2..=5usize {
        for n in 1..=6usize {
            let mut rng = stream(seed, 5_000 + (r * 10 + n) as u64);
            for k in 0..=n {
                let coord = random_subspace(&mut rng, n, k);
                match lemma_ncps_subspace_check(&coord, r - 1) {
                    Ok(rep) => {
                        res.record(rep.max_residual());
                        if rep.direct_dimension != rep.structured_dimension || rep.direct_dimension != (r - 1) * n - k {
                            res.failures += 1;
                            res.notes.push(format!("dimension mismatch at r={r} n={n} k={k}"));
                        }
                    }
                    Err(e) => res.error(e),
                }
            }
        }
    }
    res
}

/// Runs the selected suites on one configured collection of sets.
/// Suites that do not apply to the set variants are skipped with a notice.
pub fn verify_instance(sets: &[SetDescriptor], x0: &Point, opts: &VerifyOptions) -> VerifyReport {
    let n = x0.dim();
    let r = sets.len();
    let all_linear = sets.iter().all(SetDescriptor::is_linear_subspace);
    let all_finite = sets.iter().all(|s| s.points().is_some());
    let all_convex = sets.iter().all(SetDescriptor::is_convex);
    let lift = (r >= 2).then(|| ReducedLift::with_coordinator(sets.to_vec(), r - 1).expect("validated sets"));

    let oracle: Option<Box<dyn IntersectionOracle>> = if all_linear {
        SubspaceIntersection::new(sets).ok().map(|o| Box::new(o) as Box<dyn IntersectionOracle>)
    } else if all_finite {
        FiniteIntersection::new(sets, 1e-12).ok().map(|o| Box::new(o) as Box<dyn IntersectionOracle>)
    } else if all_convex {
        DykstraIntersection::new(sets.to_vec()).ok().map(|o| Box::new(o) as Box<dyn IntersectionOracle>)
    } else {
        None
    };

    let skip = |suite: Suite, why: &str| {
        let mut s = SuiteResult::new(suite);
        s.skipped = 1;
        s.notes.push(format!("skipped: {why}"));
        s
    };

    let results = opts
        .suites
        .iter()
        .map(|&suite| {
            let Some(lift) = &lift else {
                return skip(suite, "needs at least two sets");
            };
            let mut rng = stream(opts.seed, 6_000);
            match suite {
                Suite::DistanceIdentities => {
                    let Some(oracle) = &oracle else {
                        return skip(suite, "no intersection oracle for these set variants");
                    };
                    let mut res = SuiteResult::new(suite);
                    for _ in 0..200 {
                        let q = Point::combine(1.0, x0, 1.0, &point(&mut rng, n, 1.0));
                        match distance_identities(lift, &q, oracle.as_ref()) {
                            Ok(rep) => res.record(rep.max_residual()),
                            Err(e) => res.error(e),
                        }
                    }
                    res
                }
                Suite::LiftedEquivalence => {
                    let mut res = SuiteResult::new(suite);
                    let x0b = embed_diagonal(x0, lift.block_count()).expect("positive count");
                    for _ in 0..5 {
                        match lifted_equivalence_deviation(lift, random_params(&mut rng), &x0b, 50, opts.fault) {
                            Ok(d) => res.record(d),
                            Err(e) => res.error(e),
                        }
                    }
                    res
                }
                Suite::ProjectorFactorization => {
                    let (Some(oracle), true) = (&oracle, all_linear || all_finite) else {
                        return skip(suite, "needs subspaces or finite sets");
                    };
                    let mut res = SuiteResult::new(suite);
                    for _ in 0..200 {
                        let x = Point::combine(1.0, x0, 1.0, &point(&mut rng, n, 1.0));
                        let jx = embed_diagonal(&x, lift.block_count()).expect("positive count");
                        let exp = if all_linear {
                            lifted_subspace_intersection_projection(lift, &jx)
                        } else {
                            lifted_finite_intersection_projection(lift, &jx)
                        };
                        match (project_intersection_on_diagonal(lift, &x, oracle.as_ref()), exp) {
                            (Ok(got), Some(exp)) => res.record((got.flatten() - exp).amax()),
                            (Err(e), _) => res.error(e),
                            (_, None) => res.error("lifted oracle unavailable"),
                        }
                    }
                    res
                }
                Suite::StrongRegularity => {
                    if !all_linear {
                        return skip(suite, "strong regularity is checked for linear subspaces only");
                    }
                    let mut res = SuiteResult::new(suite);
                    match lifted_strong_regularity_check(lift, &Point::zeros(n)) {
                        Ok(rep) => {
                            res.notes.push(format!(
                                "original null dimension {}, lifted {}",
                                rep.original.null_space_dimension, rep.lifted.null_space_dimension
                            ));
                            if rep.original.is_strongly_regular {
                                res.record_pass(rep.lifted.null_space_dimension == 0);
                            } else {
                                res.skipped += 1;
                            }
                        }
                        Err(e) => res.error(e),
                    }
                    res
                }
                Suite::NormalCones => {
                    if !lift.coordinator().is_linear_subspace() {
                        return skip(suite, "coordinator is not a linear subspace");
                    }
                    let mut res = SuiteResult::new(suite);
                    match lemma_ncps_subspace_check(lift.coordinator(), lift.block_count()) {
                        Ok(rep) => {
                            res.record(rep.max_residual());
                            if rep.direct_dimension != rep.structured_dimension {
                                res.failures += 1;
                            }
                        }
                        Err(e) => res.error(e),
                    }
                    res
                }
            }
        })
        .collect();
    VerifyReport { results }
}
