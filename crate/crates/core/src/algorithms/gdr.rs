use crate::error::{check_dim, Error, Result};
use crate::exec::Exec;
use crate::lifting::ReducedLift;
use crate::sets::{Projector, SetDescriptor};
use crate::spaces::{BlockPoint, Point, Vector};

use super::trace::{drive, Run, Step, StopRule};
use super::GdrParams;

/// Two-set generalized Douglas-Rachford with `A` as the inner operator:
///
/// ```text
/// y      = (1-λ) x + λ P_A(x)
/// z      = P_B(y)                      (shadow)
/// x_next = (1-α) x + α ((1-μ) y + μ z)
/// ```
///
/// Shadow distances, when requested, are `[d_A(z), d_B(z)]`.
pub fn gdr_two_sets<S, A, B>(a: &A, b: &B, params: GdrParams, x0: &S, stop: &StopRule) -> Result<Run<S>>
where
    S: Vector,
    A: Projector<S> + ?Sized,
    B: Projector<S> + ?Sized,
{
    let (lambda, mu, alpha) = (params.lambda(), params.mu(), params.alpha());
    drive(x0, stop, |x| {
        let pa = a.project_onto(x)?;
        let y = S::combine(1.0 - lambda, x, lambda, &pa);
        let z = b.project_onto(&y)?;
        let t = S::combine(1.0 - mu, &y, mu, &z);
        let next = S::combine(1.0 - alpha, x, alpha, &t);
        let shadow_distances = if stop.shadow_distances {
            let za = a.project_onto(&z)?;
            let zb = b.project_onto(&z)?;
            vec![z.distance_to(&za), z.distance_to(&zb)]
        } else {
            Vec::new()
        };
        Ok(Step { next, shadow_distances, shadow: Some(z.flat()) })
    })
}

/// Parallel gDR on the reduced lift, componentwise:
///
/// ```text
/// p       = P_{C_r}(mean_i x_i)
/// u_i     = (1-λ) x_i + λ p
/// z_i     = P_{C_i}(u_i)
/// x_i'    = (1-α) x_i + α ((1-μ) u_i + μ z_i)
/// ```
///
/// The block updates are independent given `p` and run under the lift's
/// [`Exec`] policy. The recorded shadow is `p_k`; shadow distances are
/// `d_{C_j}(p_k)` for `j = 1..r` (coordinator last).
pub fn parallel_gdr_reduced(
    lift: &ReducedLift,
    params: GdrParams,
    x0: &BlockPoint,
    stop: &StopRule,
) -> Result<Run<BlockPoint>> {
    check_dim(lift.block_count(), x0.block_count())?;
    check_dim(lift.dim(), x0.block_dim())?;
    let (lambda, mu, alpha) = (params.lambda(), params.mu(), params.alpha());
    let components = lift.components();
    drive(x0, stop, |x| {
        let p = lift.coordinator().project(&x.mean())?.point;
        let blocks = lift.exec().try_map_range(components.len(), |i| {
            let xi = x.block(i);
            let u = Point::combine(1.0 - lambda, xi, lambda, &p);
            let z = components[i].project(&u)?.point;
            let t = Point::combine(1.0 - mu, &u, mu, &z);
            Ok::<_, Error>(Point::combine(1.0 - alpha, xi, alpha, &t))
        })?;
        let next = BlockPoint::new(blocks)?;
        let shadow_distances = if stop.shadow_distances {
            distances_to_all(lift.exec(), &lift.all_sets(), &p)?
        } else {
            Vec::new()
        };
        Ok(Step { next, shadow_distances, shadow: Some(p.flat()) })
    })
}

/// Reduced averaged projections: `x+ = P_{C_r}(mean_{i<r} P_{C_i}(x))`.
///
/// Every iterate after `x_0` lies in the coordinator `C_r`. Shadow distances
/// are `d_{C_j}(x_{k+1})` for `j = 1..r`.
pub fn reduced_averaged_projections(lift: &ReducedLift, x0: &Point, stop: &StopRule) -> Result<Run<Point>> {
    check_dim(lift.dim(), x0.dim())?;
    let components = lift.components();
    drive(x0, stop, |x| {
        let projected =
            lift.exec().try_map_range(components.len(), |i| components[i].project(x).map(|r| r.point))?;
        let avg = BlockPoint::new(projected)?.mean();
        let next = lift.coordinator().project(&avg)?.point;
        let shadow_distances = if stop.shadow_distances {
            distances_to_all(lift.exec(), &lift.all_sets(), &next)?
        } else {
            Vec::new()
        };
        Ok(Step { next, shadow_distances, shadow: None })
    })
}

/// Classical averaged projections: `x+ = (1/r) sum_i P_{C_i}(x)`.
pub fn averaged_projections_classical(sets: &[SetDescriptor], x0: &Point, stop: &StopRule) -> Result<Run<Point>> {
    averaged_projections_classical_with(Exec::default(), sets, x0, stop)
}

pub fn averaged_projections_classical_with(
    exec: Exec,
    sets: &[SetDescriptor],
    x0: &Point,
    stop: &StopRule,
) -> Result<Run<Point>> {
    if sets.is_empty() {
        return Err(Error::InvalidParameter("averaged projections need at least one set".into()));
    }
    for s in sets {
        check_dim(s.ambient_dim(), x0.dim())?;
    }
    let refs: Vec<&SetDescriptor> = sets.iter().collect();
    drive(x0, stop, |x| {
        let projected = exec.try_map_range(sets.len(), |i| sets[i].project(x).map(|r| r.point))?;
        let next = BlockPoint::new(projected)?.mean();
        let shadow_distances =
            if stop.shadow_distances { distances_to_all(exec, &refs, &next)? } else { Vec::new() };
        Ok(Step { next, shadow_distances, shadow: None })
    })
}

fn distances_to_all(exec: Exec, sets: &[&SetDescriptor], x: &Point) -> Result<Vec<f64>> {
    exec.try_map_range(sets.len(), |i| sets[i].distance(x))
}

#[cfg(test)]
mod tests {
    use super::super::{History, Status};
    use super::*;
    use crate::spaces::embed_diagonal;
    use nalgebra::{DMatrix, DVector};
    use std::f64::consts::FRAC_PI_4;

    fn p(c: &[f64]) -> Point {
        Point::from_slice(c).unwrap()
    }

    fn line(theta: f64) -> SetDescriptor {
        SetDescriptor::span(2, &[p(&[theta.cos(), theta.sin()])]).unwrap()
    }

    #[test]
    fn feasible_start_is_a_fixed_point() {
        let a = line(0.3);
        let x0 = p(&[0.3f64.cos() * 2.0, 0.3f64.sin() * 2.0]);
        let run = gdr_two_sets(&a, &a, GdrParams::new(1.5, 0.7, 0.5).unwrap(), &x0, &StopRule::default()).unwrap();
        assert_eq!(run.trace.status, Status::Converged);
        assert_eq!(run.trace.iterations(), 1);
        assert!(run.trace.records[0].residual < 1e-15);
    }

    #[test]
    fn unit_parameters_collapse_to_alternating_projections() {
        let a = SetDescriptor::ball(p(&[0., 0.]), 1.0).unwrap();
        let b = SetDescriptor::half_space(p(&[1., 1.]), -0.5).unwrap();
        let stop = StopRule::new(1e-300, 10).unwrap();
        let x0 = p(&[3., 1.]);
        let run = gdr_two_sets(&a, &b, GdrParams::alternating_projections(), &x0, &stop).unwrap();
        let mut x = x0.clone();
        for (k, (_, snap)) in run.trace.snapshots().iter().enumerate().skip(1) {
            x = b.project(&a.project(&x).unwrap().point).unwrap().point;
            assert!((snap - x.vector()).norm() <= 1e-15, "step {k}");
        }
    }

    #[test]
    fn map_on_lines_at_pi_over_4_has_rate_cos_squared() {
        // Oracle: iterate the explicit 2x2 projector matrices.
        let u = DVector::from_vec(vec![1.0, 0.0]);
        let v = DVector::from_vec(vec![FRAC_PI_4.cos(), FRAC_PI_4.sin()]);
        let pa: DMatrix<f64> = &u * u.transpose();
        let pb: DMatrix<f64> = &v * v.transpose();
        let mut xm = DVector::from_vec(vec![0.3, 2.0]);
        let mut norms = vec![xm.norm()];
        for _ in 0..30 {
            xm = &pb * (&pa * &xm);
            norms.push(xm.norm());
        }
        let oracle_ratio = norms[30] / norms[29];
        assert!((oracle_ratio - 0.5).abs() < 0.05);

        let stop = StopRule::new(1e-300, 30).unwrap();
        let run = gdr_two_sets(&line(0.0), &line(FRAC_PI_4), GdrParams::alternating_projections(), &p(&[0.3, 2.0]), &stop)
            .unwrap();
        let snaps = run.trace.snapshots();
        // The intersection is {0}, so ||x_k - x*|| = ||x_k||.
        let ratio = snaps[30].1.norm() / snaps[29].1.norm();
        assert!((ratio - 0.5).abs() < 0.05);
        assert!((ratio - oracle_ratio).abs() < 1e-12);
    }

    #[test]
    fn douglas_rachford_is_reflect_reflect_average() {
        let a = SetDescriptor::ball(p(&[0.5, 0.]), 1.0).unwrap();
        let b = SetDescriptor::half_space(p(&[0., 1.]), 0.2).unwrap();
        let alpha = 0.5;
        let x0 = p(&[2., 3.]);
        let stop = StopRule::new(1e-300, 1).unwrap();
        let run = gdr_two_sets(&a, &b, GdrParams::douglas_rachford(alpha).unwrap(), &x0, &stop).unwrap();
        let reflect = |s: &SetDescriptor, x: &Point| Point::combine(2.0, &s.project(x).unwrap().point, -1.0, x);
        let expected = Point::combine(1.0 - alpha, &x0, alpha, &reflect(&b, &reflect(&a, &x0)));
        assert!(run.limit.distance(&expected) <= 1e-12);
    }

    fn subspace_lift() -> ReducedLift {
        let sets = vec![
            SetDescriptor::span(3, &[p(&[1., 0., 0.]), p(&[0., 1., 1.])]).unwrap(),
            SetDescriptor::span(3, &[p(&[1., 1., 0.]), p(&[0., 0., 1.])]).unwrap(),
            SetDescriptor::span(3, &[p(&[1., 2., 1.]), p(&[0., 1., -1.])]).unwrap(),
        ];
        ReducedLift::with_coordinator(sets, 2).unwrap()
    }

    #[test]
    fn reduced_parallel_matches_lifted_two_set_run() {
        let lift = subspace_lift();
        let params = GdrParams::new(1.3, 0.6, 0.7).unwrap();
        let x0 = BlockPoint::new(vec![p(&[1., -2., 0.5]), p(&[0.3, 4., -1.])]).unwrap();
        let stop = StopRule::new(1e-300, 50).unwrap();
        let par = parallel_gdr_reduced(&lift, params, &x0, &stop).unwrap();
        let two = gdr_two_sets(&lift.k_projector(), &lift.b_projector(), params, &x0, &stop).unwrap();
        let dev = par
            .trace
            .snapshots()
            .iter()
            .zip(two.trace.snapshots())
            .map(|((_, a), (_, b))| (a - b).amax())
            .fold(0.0, f64::max);
        assert!(dev <= 1e-12, "deviation {dev}");
    }

    #[test]
    fn unit_parameters_reproduce_reduced_averaged_projections() {
        let lift = ReducedLift::new(
            vec![
                SetDescriptor::half_space(p(&[1., 0.5]), 0.3).unwrap(),
                SetDescriptor::half_space(p(&[-0.2, 1.]), -0.1).unwrap(),
            ],
            SetDescriptor::inf_box(0.8, 2).unwrap(),
        )
        .unwrap();
        let x0 = p(&[2.5, -3.0]);
        let stop = StopRule::new(1e-300, 25).unwrap();
        let rap = reduced_averaged_projections(&lift, &x0, &stop).unwrap();
        // Warm-up relation: start the lifted scheme at (P_{C_1}(x0), P_{C_2}(x0));
        // then p_k equals the RAP iterate x_{k+1}.
        let start = lift.project_b(&embed_diagonal(&x0, 2).unwrap()).unwrap();
        let par = parallel_gdr_reduced(&lift, GdrParams::alternating_projections(), &start, &stop).unwrap();
        let n = rap.trace.snapshots().len() - 1;
        assert!(n >= 3);
        for (k, p_k) in par.trace.shadows().iter().take(n) {
            let rap_next = &rap.trace.snapshots()[k + 1].1;
            assert!((p_k - rap_next).amax() <= 1e-12, "k = {k}");
        }
        for (_, x) in rap.trace.snapshots().iter().skip(1) {
            let pt = Point::from_vector(x.clone()).unwrap();
            assert!(lift.coordinator().contains(&pt, 1e-9).unwrap());
        }
    }

    #[test]
    fn reduced_averaged_projections_with_two_sets_is_map() {
        let c1 = SetDescriptor::ball(p(&[0., 0.]), 1.0).unwrap();
        let c2 = SetDescriptor::half_space(p(&[1., 0.]), -0.5).unwrap();
        let lift = ReducedLift::new(vec![c1.clone()], c2.clone()).unwrap();
        let stop = StopRule::new(1e-300, 8).unwrap();
        let x0 = p(&[4., 1.]);
        let rap = reduced_averaged_projections(&lift, &x0, &stop).unwrap();
        let mut x = x0;
        for (_, snap) in rap.trace.snapshots().iter().skip(1) {
            x = c2.project(&c1.project(&x).unwrap().point).unwrap().point;
            assert!((snap - x.vector()).amax() <= 1e-15);
        }
    }

    #[test]
    fn averaged_projections_examples() {
        let sets = vec![SetDescriptor::inf_box(1.0, 2).unwrap(), SetDescriptor::ball(Point::zeros(2), 2.0).unwrap()];
        let inside = p(&[0.5, -0.5]);
        let run = averaged_projections_classical(&sets, &inside, &StopRule::default()).unwrap();
        assert_eq!(run.trace.iterations(), 1);
        assert_eq!(run.limit, inside);

        let single = vec![SetDescriptor::ball(Point::zeros(2), 1.0).unwrap()];
        let run = averaged_projections_classical(&single, &p(&[3., 4.]), &StopRule::default()).unwrap();
        assert_eq!(run.trace.status, Status::Converged);
        assert_eq!(run.trace.iterations(), 2);
        assert!(single[0].contains(&run.limit, 1e-12).unwrap());

        // Nonconvex stall: P_{-1}(0) + P_{+1}(0) averages to 0.
        let pts = vec![
            SetDescriptor::finite_points(vec![p(&[-1.])]).unwrap(),
            SetDescriptor::finite_points(vec![p(&[1.])]).unwrap(),
        ];
        let stop = StopRule::new(1e-12, 5).unwrap();
        let run = averaged_projections_classical(&pts, &p(&[0.]), &stop).unwrap();
        assert_eq!(run.limit, p(&[0.]));
        assert_eq!(run.trace.records[0].residual, 0.0);
    }

    #[test]
    fn max_iter_zero_gives_empty_trace() {
        let sets = vec![SetDescriptor::inf_box(1.0, 1).unwrap()];
        let stop = StopRule::new(1e-12, 0).unwrap();
        let run = averaged_projections_classical(&sets, &p(&[5.]), &stop).unwrap();
        assert_eq!(run.trace.iterations(), 0);
        assert_eq!(run.trace.status, Status::MaxIter);
    }

    #[test]
    fn divergence_is_reported() {
        let blow_up = |x: &Point| Ok(Point::combine(1e308, x, 1e308, x));
        let id = |x: &Point| Ok(x.clone());
        let stop = StopRule::new(1e-12, 10).unwrap();
        let err = gdr_two_sets(&blow_up, &id, GdrParams::alternating_projections(), &p(&[1.]), &stop).unwrap_err();
        assert_eq!(err, Error::NumericalDivergence { iter: 0 });
        let stop = stop.with_on_divergence(super::super::OnDivergence::Stop);
        let run = gdr_two_sets(&blow_up, &id, GdrParams::alternating_projections(), &p(&[1.]), &stop).unwrap();
        assert_eq!(run.trace.status, Status::Diverged { iter: 0 });
    }

    #[test]
    fn strided_history_keeps_final_iterate() {
        let lift = subspace_lift();
        let stop = StopRule::new(1e-300, 23).unwrap().with_history(History::Every(5));
        let x0 = BlockPoint::new(vec![p(&[1., 2., 3.]), p(&[3., 2., 1.])]).unwrap();
        let run = parallel_gdr_reduced(&lift, GdrParams::default(), &x0, &stop).unwrap();
        let ks: Vec<usize> = run.trace.snapshots().iter().map(|(k, _)| *k).collect();
        assert_eq!(ks, vec![0, 5, 10, 15, 20, 23]);
        assert_eq!(run.trace.distances_to_limit().len(), 5);
    }

    #[test]
    fn sequential_and_parallel_runs_are_bit_identical() {
        let lift = subspace_lift();
        let x0 = BlockPoint::new(vec![p(&[1., -2., 0.5]), p(&[0.3, 4., -1.])]).unwrap();
        let stop = StopRule::new(1e-12, 200).unwrap().with_shadow_distances(true);
        let params = GdrParams::new(1.0, 1.5, 0.5).unwrap();
        let a = parallel_gdr_reduced(&lift.clone().with_exec(Exec::Sequential), params, &x0, &stop).unwrap();
        let b = parallel_gdr_reduced(&lift.with_exec(Exec::Parallel), params, &x0, &stop).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.limit, b.limit);
    }
}
