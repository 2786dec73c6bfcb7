//! Penalty-based constrained optimization for the seating motion: goal
//! configuration and direct-transcription trajectory.
//!
//! Equality constraints (bear pose) and inequality constraints (joint
//! limits, COM-in-support, collision clearance, per-step velocity) enter as
//! quadratic penalties with a ramped weight; the smooth inner problems are
//! solved with a small L-BFGS. All gradients are analytic.

use alloc::vec;
use alloc::vec::Vec;

use super::{segment_rect_distance, PlanarChain, SagittalRect, SeatingProblem, WholebodyError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyWeights {
    pub equality: f64,
    pub inequality: f64,
}

/// Witness of the segment-rect distance: (distance, parameter on segment,
/// closest point on the rect). Used for the analytic collision gradient.
fn segment_rect_witness(
    a: (f64, f64),
    b: (f64, f64),
    rect: &SagittalRect,
) -> (f64, f64, (f64, f64)) {
    let samples_hint = segment_rect_distance(a, b, rect);
    if samples_hint == 0.0 {
        // Intersecting: no proper witness; report the segment midpoint.
        return (0.0, 0.5, ((rect.x_min + rect.x_max) / 2.0, (rect.z_min + rect.z_max) / 2.0));
    }
    // The distance is attained at an endpoint or against a corner/edge;
    // golden-section over the segment parameter is robust enough here
    // because point-to-rect distance is convex along the segment.
    let point_dist = |t: f64| -> (f64, (f64, f64)) {
        let p = (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1));
        let cx = p.0.clamp(rect.x_min, rect.x_max);
        let cz = p.1.clamp(rect.z_min, rect.z_max);
        (((p.0 - cx).powi(2) + (p.1 - cz).powi(2)).sqrt(), (cx, cz))
    };
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let phi = 0.618_033_988_749_894_9_f64;
    for _ in 0..60 {
        let m1 = hi - phi * (hi - lo);
        let m2 = lo + phi * (hi - lo);
        if point_dist(m1).0 <= point_dist(m2).0 {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let t = (lo + hi) / 2.0;
    let (d, r) = point_dist(t);
    (d, t, r)
}

/// Jacobian of joint position `i` (0 = base) w.r.t. each joint angle.
fn joint_position_jacobian(chain: &PlanarChain, pitches: &[f64], i: usize) -> Vec<(f64, f64)> {
    let n = chain.links.len();
    let mut jac = vec![(0.0, 0.0); n];
    for (j, item) in jac.iter_mut().enumerate().take(i.min(n)) {
        let mut dx = 0.0;
        let mut dz = 0.0;
        for k in j..i {
            dx += chain.links[k].length * pitches[k].cos();
            dz -= chain.links[k].length * pitches[k].sin();
        }
        *item = (dx, dz);
    }
    jac
}

/// Penalty value and gradient around one configuration. `tracking` replaces
/// the seating objective with 1/2 ||q - target||^2_Q when given (used by the
/// trajectory pass); otherwise the goal objective w1 d_COM + w2 |torso|
/// applies.
pub fn penalty_and_gradient(
    problem: &SeatingProblem,
    q: &[f64],
    weights: &PenaltyWeights,
    tracking: Option<&[f64]>,
    include_equality: bool,
) -> (f64, Vec<f64>) {
    let chain = &problem.chain;
    let n = chain.links.len();
    let fk = chain.forward_kinematics(q);
    let mut value = 0.0;
    let mut grad = vec![0.0; n];

    match tracking {
        Some(target) => {
            for j in 0..n {
                let d = q[j] - target[j];
                value += 0.5 * problem.q_weights[j] * d * d;
                grad[j] += problem.q_weights[j] * d;
            }
        }
        None => {
            // Absolute-value terms are smoothed (sqrt(x^2 + eps^2)) so the
            // quasi-Newton inner solver sees a C^2 objective.
            let eps2 = 1e-8;
            let s_center = (chain.support.0 + chain.support.1) / 2.0;
            let d_com = fk.com_x - s_center;
            let smooth_com = (d_com * d_com + eps2).sqrt();
            value += problem.w1 * smooth_com;
            let com_grad = chain.com_x_gradient(&fk);
            for j in 0..n {
                grad[j] += problem.w1 * (d_com / smooth_com) * com_grad[j];
            }
            let torso_pitch = fk.pitches[chain.torso_link];
            let smooth_torso = (torso_pitch * torso_pitch + eps2).sqrt();
            value += problem.w2 * smooth_torso;
            for g in grad.iter_mut().take(chain.torso_link + 1) {
                *g += problem.w2 * (torso_pitch / smooth_torso);
            }
        }
    }

    if include_equality {
        let mu = weights.equality;
        let (ex, ez) = (fk.ee.0 - problem.bear_target.0, fk.ee.1 - problem.bear_target.1);
        let ep = fk.ee_pitch - problem.bear_pitch_target;
        value += mu * (ex * ex + ez * ez + ep * ep);
        let jac = chain.ee_jacobian(&fk);
        for j in 0..n {
            grad[j] += mu * (2.0 * ex * jac[j].0 + 2.0 * ez * jac[j].1 + 2.0 * ep);
        }
    }

    let mu_i = weights.inequality;
    // Joint limits, hinged a shade inside so converged points clear the
    // exact bounds.
    let limit_pad = 2e-4;
    for j in 0..n {
        let (lo, hi) = chain.joint_limits[j];
        let (lo, hi) = (lo + limit_pad, hi - limit_pad);
        if q[j] < lo {
            let v = lo - q[j];
            value += mu_i * v * v;
            grad[j] += -2.0 * mu_i * v;
        } else if q[j] > hi {
            let v = q[j] - hi;
            value += mu_i * v * v;
            grad[j] += 2.0 * mu_i * v;
        }
    }

    // COM strictly inside the support interval (hinge slightly inside the
    // required margin so converged points clear it).
    let margin = problem.support_margin * 1.5;
    let (s_lo, s_hi) = (chain.support.0 + margin, chain.support.1 - margin);
    let com_grad = chain.com_x_gradient(&fk);
    if fk.com_x < s_lo {
        let v = s_lo - fk.com_x;
        value += mu_i * v * v;
        for j in 0..n {
            grad[j] += -2.0 * mu_i * v * com_grad[j];
        }
    } else if fk.com_x > s_hi {
        let v = fk.com_x - s_hi;
        value += mu_i * v * v;
        for j in 0..n {
            grad[j] += 2.0 * mu_i * v * com_grad[j];
        }
    }

    // Collision clearance per designated link.
    let clearance_req = problem.collision_margin + 0.002;
    for &k in &problem.collision_links {
        let seg_a = fk.joints[k];
        let seg_b = fk.joints[k + 1];
        let radius = chain.links[k].radius;
        for rect in &problem.obstacles {
            let (dist, t, witness) = segment_rect_witness(seg_a, seg_b, rect);
            let clearance = dist - radius;
            if clearance >= clearance_req {
                continue;
            }
            let v = clearance_req - clearance;
            value += mu_i * v * v;
            // d dist / d q through the witness pair.
            let jac_a = joint_position_jacobian(chain, &fk.pitches, k);
            let jac_b = joint_position_jacobian(chain, &fk.pitches, k + 1);
            let p = (seg_a.0 + t * (seg_b.0 - seg_a.0), seg_a.1 + t * (seg_b.1 - seg_a.1));
            let (ux, uz) = if dist > 1e-9 {
                ((p.0 - witness.0) / dist, (p.1 - witness.1) / dist)
            } else {
                // Intersecting: push away from the rect centre.
                let cx = (rect.x_min + rect.x_max) / 2.0;
                let cz = (rect.z_min + rect.z_max) / 2.0;
                let dx = p.0 - cx;
                let dz = p.1 - cz;
                let norm = (dx * dx + dz * dz).sqrt().max(1e-9);
                (dx / norm, dz / norm)
            };
            for j in 0..n {
                let dpx = (1.0 - t) * jac_a[j].0 + t * jac_b[j].0;
                let dpz = (1.0 - t) * jac_a[j].1 + t * jac_b[j].1;
                let ddist = ux * dpx + uz * dpz;
                grad[j] += -2.0 * mu_i * v * ddist;
            }
        }
    }

    (value, grad)
}

/// Small L-BFGS with Armijo backtracking.
fn lbfgs<F>(mut f: F, q0: Vec<f64>, max_iters: usize, grad_tol: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let memory = 8usize;
    let mut q = q0;
    let (mut value, mut grad) = f(&q);
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut rho_hist: Vec<f64> = Vec::new();

    for _ in 0..max_iters {
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm < grad_tol {
            break;
        }
        // Two-loop recursion.
        let mut dir = grad.clone();
        let mut alphas = vec![0.0; s_hist.len()];
        for i in (0..s_hist.len()).rev() {
            let a = rho_hist[i] * dot(&s_hist[i], &dir);
            alphas[i] = a;
            axpy(&mut dir, -a, &y_hist[i]);
        }
        if let (Some(s), Some(y)) = (s_hist.last(), y_hist.last()) {
            let scale = dot(s, y) / dot(y, y).max(1e-300);
            for d in dir.iter_mut() {
                *d *= scale.max(1e-12);
            }
        }
        for i in 0..s_hist.len() {
            let b = rho_hist[i] * dot(&y_hist[i], &dir);
            axpy(&mut dir, alphas[i] - b, &s_hist[i]);
        }
        for d in dir.iter_mut() {
            *d = -*d;
        }
        // Ensure descent.
        let mut slope = dot(&grad, &dir);
        if slope >= 0.0 {
            for (d, g) in dir.iter_mut().zip(&grad) {
                *d = -g;
            }
            slope = -gnorm * gnorm;
        }

        // Armijo backtracking.
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = q.iter().zip(&dir).map(|(x, d)| x + step * d).collect();
            let (tv, tg) = f(&trial);
            if tv <= value + 1e-4 * step * slope {
                let s: Vec<f64> = trial.iter().zip(&q).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = tg.iter().zip(&grad).map(|(a, b)| a - b).collect();
                let sy = dot(&s, &y);
                if sy > 1e-12 {
                    s_hist.push(s);
                    y_hist.push(y);
                    rho_hist.push(1.0 / sy);
                    if s_hist.len() > memory {
                        s_hist.remove(0);
                        y_hist.remove(0);
                        rho_hist.remove(0);
                    }
                }
                q = trial;
                value = tv;
                grad = tg;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    q
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(out: &mut [f64], a: f64, x: &[f64]) {
    for (o, v) in out.iter_mut().zip(x) {
        *o += a * v;
    }
}

/// Residuals of the bear-pose equality constraint at `q`.
pub fn equality_residual(problem: &SeatingProblem, q: &[f64]) -> (f64, f64) {
    let fk = problem.chain.forward_kinematics(q);
    let pos = ((fk.ee.0 - problem.bear_target.0).powi(2) + (fk.ee.1 - problem.bear_target.1).powi(2))
        .sqrt();
    let pitch = (fk.ee_pitch - problem.bear_pitch_target).abs();
    (pos, pitch)
}

/// Feasibility of the inequality constraints at `q` (strict margins).
pub fn feasible(problem: &SeatingProblem, q: &[f64]) -> bool {
    audit(problem, q).is_empty()
}

/// Every violated inequality constraint at `q`, with magnitudes.
pub fn audit(problem: &SeatingProblem, q: &[f64]) -> Vec<alloc::string::String> {
    use alloc::format;
    let mut violations = Vec::new();
    let chain = &problem.chain;
    for (j, (&angle, &(lo, hi))) in q.iter().zip(&chain.joint_limits).enumerate() {
        if angle < lo - 1e-9 || angle > hi + 1e-9 {
            violations.push(format!("joint {j} = {angle:.4} outside ({lo}, {hi})"));
        }
    }
    let fk = chain.forward_kinematics(q);
    if fk.com_x < chain.support.0 + problem.support_margin - 1e-9
        || fk.com_x > chain.support.1 - problem.support_margin + 1e-9
    {
        violations.push(format!(
            "com {:.4} outside [{:.4}, {:.4}]",
            fk.com_x,
            chain.support.0 + problem.support_margin,
            chain.support.1 - problem.support_margin
        ));
    }
    for &k in &problem.collision_links {
        let radius = chain.links[k].radius;
        for (r, rect) in problem.obstacles.iter().enumerate() {
            let clearance =
                segment_rect_distance(fk.joints[k], fk.joints[k + 1], rect) - radius;
            if clearance < problem.collision_margin - 1e-6 {
                violations.push(format!("link {k} clearance {clearance:.4} to rect {r}"));
            }
        }
    }
    violations
}

/// Solve for the goal configuration: reach the bear pose while keeping the
/// COM balanced and the chain clear of the chair, minimizing
/// `w1 d_COM + w2 |torso pitch|`.
pub fn goal_config(problem: &SeatingProblem) -> Result<Vec<f64>, WholebodyError> {
    let chain = &problem.chain;
    // Analytic reach pre-check: the target must lie inside the fully
    // stretched chain's disc around the ankle.
    let dx = problem.bear_target.0 - chain.base.0;
    let dz = problem.bear_target.1 - chain.base.1;
    if (dx * dx + dz * dz).sqrt() > chain.total_length() {
        return Err(WholebodyError::Infeasible("target beyond the chain's reach"));
    }
    if problem.bear_target.1 < 0.0 {
        return Err(WholebodyError::Infeasible("target below the ground"));
    }

    let base_starts: [Vec<f64>; 3] = [
        problem.q_start.clone(),
        // Crouch-and-reach towards the target.
        vec![0.30, -0.75, 0.65, 1.60, 0.30],
        // Upright with the arms out front.
        vec![0.05, -0.15, 0.25, 1.85, 0.10],
    ];
    let ramp = |q0: Vec<f64>, zero_objective: bool| -> Vec<f64> {
        let mut local = problem.clone();
        if zero_objective {
            local.w1 = 0.0;
            local.w2 = 0.0;
        }
        let mut q = q0;
        for mu in [1e2, 1e3, 1e4, 1e5, 1e6] {
            let weights = PenaltyWeights { equality: mu, inequality: mu };
            for _ in 0..2 {
                q = lbfgs(
                    |x| penalty_and_gradient(&local, x, &weights, None, true),
                    q,
                    400,
                    1e-9 * mu,
                );
            }
        }
        q
    };

    // Phase 1 finds feasible basins with the objective switched off; phase 2
    // optimizes the objective from every basin and keeps the best feasible
    // result.
    let mut starts: Vec<Vec<f64>> = base_starts
        .iter()
        .filter(|q| q.len() == chain.links.len())
        .cloned()
        .collect();
    let phase1: Vec<Vec<f64>> = starts.iter().map(|q| ramp(q.clone(), true)).collect();
    starts.extend(phase1);

    let objective = |q: &[f64]| -> f64 {
        let weights = PenaltyWeights { equality: 0.0, inequality: 0.0 };
        penalty_and_gradient(problem, q, &weights, None, false).0
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut fallback: Option<(f64, Vec<f64>)> = None;
    // Phase-1 basins are feasible candidates in their own right: a steep
    // objective can drag phase 2 out of the feasible set entirely.
    let mut candidates: Vec<Vec<f64>> = starts.iter().map(|s| ramp(s.clone(), false)).collect();
    candidates.extend(starts);
    for q in candidates {
        let (pos_res, pitch_res) = equality_residual(problem, &q);
        let ok = pos_res < 1e-3 && pitch_res < 1e-2 && feasible(problem, &q);
        let score = objective(&q);
        if ok {
            if best.as_ref().map(|(s, _)| score < *s).unwrap_or(true) {
                best = Some((score, q.clone()));
            }
        }
        let weights = PenaltyWeights { equality: 1e6, inequality: 1e6 };
        let (merit, _) = penalty_and_gradient(problem, &q, &weights, None, true);
        if fallback.as_ref().map(|(m, _)| merit < *m).unwrap_or(true) {
            fallback = Some((merit, q));
        }
    }

    if let Some((_, q)) = best {
        return Ok(q);
    }
    let q = fallback.ok_or(WholebodyError::Infeasible("no start matched the chain"))?.1;

    let (pos_res, pitch_res) = equality_residual(problem, &q);
    if pos_res >= 1e-3 || pitch_res >= 1e-2 {
        return Err(WholebodyError::Infeasible("bear pose residual did not converge"));
    }
    if !feasible(problem, &q) {
        return Err(WholebodyError::Infeasible("no stable collision-free solution"));
    }
    Ok(q)
}

/// Direct transcription of the approach: N waypoints from the standing
/// start to the goal configuration, minimizing the Q-weighted tracking cost
/// under joint, velocity, balance and collision constraints.
pub fn plan_seating_trajectory(
    problem: &SeatingProblem,
    q_goal: &[f64],
) -> Result<Vec<Vec<f64>>, WholebodyError> {
    let n = problem.chain.links.len();
    let horizon = problem.horizon.max(2);
    let interior = horizon - 2;

    // Linear interpolation seed.
    let waypoint = |k: usize| -> Vec<f64> {
        let t = k as f64 / (horizon - 1) as f64;
        problem
            .q_start
            .iter()
            .zip(q_goal)
            .map(|(a, b)| a + t * (b - a))
            .collect()
    };

    let mut x: Vec<f64> = Vec::with_capacity(interior * n);
    for k in 1..horizon - 1 {
        x.extend(waypoint(k));
    }

    if interior > 0 {
        for mu in [1e2, 1e3, 1e4, 1e5, 1e6] {
            let weights = PenaltyWeights { equality: mu, inequality: mu };
            x = lbfgs(
                |vars| trajectory_penalty(problem, q_goal, vars, &weights),
                x,
                400,
                1e-6 * mu,
            );
        }
    }

    let mut trajectory = Vec::with_capacity(horizon);
    trajectory.push(problem.q_start.clone());
    for k in 0..interior {
        trajectory.push(x[k * n..(k + 1) * n].to_vec());
    }
    trajectory.push(q_goal.to_vec());

    // Audit every waypoint and step.
    for q in &trajectory {
        if !feasible(problem, q) {
            return Err(WholebodyError::NoTrajectory("infeasible waypoint"));
        }
    }
    let vmax_slack = 1e-6;
    for pair in trajectory.windows(2) {
        for j in 0..n {
            let dq = (pair[1][j] - pair[0][j]).abs();
            if dq > problem.chain.velocity_limits[j] * problem.dt + vmax_slack {
                return Err(WholebodyError::NoTrajectory("velocity limit exceeded"));
            }
        }
    }
    Ok(trajectory)
}

/// Stacked penalty over the interior waypoints.
fn trajectory_penalty(
    problem: &SeatingProblem,
    q_goal: &[f64],
    vars: &[f64],
    weights: &PenaltyWeights,
) -> (f64, Vec<f64>) {
    let n = problem.chain.links.len();
    let interior = vars.len() / n;
    let mut value = 0.0;
    let mut grad = vec![0.0; vars.len()];

    for k in 0..interior {
        let q = &vars[k * n..(k + 1) * n];
        let (v, g) = penalty_and_gradient(problem, q, weights, Some(q_goal), false);
        value += v;
        for j in 0..n {
            grad[k * n + j] += g[j];
        }
    }

    // Velocity hinges between consecutive waypoints (including endpoints).
    let mu = weights.inequality;
    let step_limit: Vec<f64> = problem
        .chain
        .velocity_limits
        .iter()
        .map(|v| v * problem.dt - 1e-4)
        .collect();
    let get = |k: isize, j: usize, vars: &[f64]| -> f64 {
        if k < 0 {
            problem.q_start[j]
        } else if k as usize >= interior {
            q_goal[j]
        } else {
            vars[k as usize * n + j]
        }
    };
    for k in -1..interior as isize {
        for j in 0..n {
            let a = get(k, j, vars);
            let b = get(k + 1, j, vars);
            let over = (b - a).abs() - step_limit[j];
            if over > 0.0 {
                value += mu * over * over;
                let sign = if b >= a { 1.0 } else { -1.0 };
                if k >= 0 {
                    grad[k as usize * n + j] += -2.0 * mu * over * sign;
                }
                if ((k + 1) as usize) < interior {
                    grad[(k + 1) as usize * n + j] += 2.0 * mu * over * sign;
                }
            }
        }
    }
    (value, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wholebody::PlanarChain;

    fn reachable_problem() -> SeatingProblem {
        let chain = PlanarChain::small_humanoid();
        let mut problem = SeatingProblem::new(chain, (0.30, 0.26));
        // Chair solids: under-seat block ahead, backrest above it.
        problem.obstacles.push(SagittalRect { x_min: 0.22, x_max: 0.70, z_min: 0.0, z_max: 0.23 });
        problem.obstacles.push(SagittalRect { x_min: 0.50, x_max: 0.70, z_min: 0.23, z_max: 0.55 });
        problem
    }

    #[test]
    fn goal_config_converges_and_balances() {
        let problem = reachable_problem();
        let q = goal_config(&problem).unwrap();
        let (pos, pitch) = equality_residual(&problem, &q);
        assert!(pos < 1e-3, "position residual {pos}");
        assert!(pitch < 1e-2, "pitch residual {pitch}");
        assert!(feasible(&problem, &q));
        let fk = problem.chain.forward_kinematics(&q);
        assert!(
            fk.com_x > problem.chain.support.0 + 0.005 && fk.com_x < problem.chain.support.1 - 0.005,
            "com {}",
            fk.com_x
        );
    }

    #[test]
    fn unreachable_target_is_infeasible_by_precheck() {
        let chain = PlanarChain::small_humanoid();
        let reach = chain.total_length();
        let problem = SeatingProblem::new(chain, (2.0 * reach, 0.3));
        assert!(matches!(
            goal_config(&problem),
            Err(WholebodyError::Infeasible("target beyond the chain's reach"))
        ));
    }

    #[test]
    fn torso_weight_straightens_the_torso() {
        let mut a = reachable_problem();
        a.w2 = 0.0;
        let mut b = reachable_problem();
        b.w2 = 8.0;
        let qa = goal_config(&a).unwrap();
        let qb = goal_config(&b).unwrap();
        let ta = a.chain.forward_kinematics(&qa).pitches[a.chain.torso_link].abs();
        let tb = b.chain.forward_kinematics(&qb).pitches[b.chain.torso_link].abs();
        assert!(tb <= ta + 1e-6, "torso bend grew: {ta} -> {tb}");
    }

    #[test]
    fn trajectory_from_goal_to_goal_is_constant() {
        let problem = reachable_problem();
        let q_goal = goal_config(&problem).unwrap();
        let mut fixed = problem.clone();
        fixed.q_start = q_goal.clone();
        let traj = plan_seating_trajectory(&fixed, &q_goal).unwrap();
        for q in &traj {
            for (a, b) in q.iter().zip(&q_goal) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn trajectory_cost_is_monotone_without_obstacles() {
        let chain = PlanarChain::small_humanoid();
        let problem = SeatingProblem::new(chain, (0.28, 0.30));
        let q_goal = goal_config(&problem).unwrap();
        let traj = plan_seating_trajectory(&problem, &q_goal).unwrap();
        let cost = |q: &[f64]| -> f64 {
            q.iter()
                .zip(&q_goal)
                .zip(&problem.q_weights)
                .map(|((a, b), w)| 0.5 * w * (a - b) * (a - b))
                .sum()
        };
        let costs: Vec<f64> = traj.iter().map(|q| cost(q)).collect();
        for pair in costs.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-9, "cost rose: {costs:?}");
        }
        assert!(costs.last().unwrap() < &1e-12);
    }

    #[test]
    fn trajectory_respects_velocity_limits() {
        let problem = reachable_problem();
        let q_goal = goal_config(&problem).unwrap();
        let traj = plan_seating_trajectory(&problem, &q_goal).unwrap();
        for pair in traj.windows(2) {
            for j in 0..5 {
                assert!(
                    (pair[1][j] - pair[0][j]).abs()
                        <= problem.chain.velocity_limits[j] * problem.dt + 1e-6
                );
            }
        }
        assert_eq!(traj.len(), problem.horizon);
    }

    #[test]
    fn blocking_obstacle_forces_a_detour() {
        // Uprighting from a deep lean with a pillar in the shoulder's arc:
        // the straight joint-space interpolation sweeps the torso through the
        // pillar, so the optimizer has to detour (crouch under) while both
        // endpoints stay feasible.
        let mut chain = PlanarChain::small_humanoid();
        chain.support = (-0.10, 0.20);
        let q_start = vec![0.35, -0.20, 0.75, 2.30, -0.55];
        let q_goal = vec![0.05, -0.10, 0.00, 2.30, -0.55];
        let mut problem = SeatingProblem::new(chain, (0.0, 0.0));
        problem.q_start = q_start.clone();
        problem.obstacles.push(SagittalRect { x_min: 0.17, x_max: 0.21, z_min: 0.45, z_max: 0.80 });
        assert!(feasible(&problem, &q_start));
        assert!(feasible(&problem, &q_goal));

        let straight_collides = (0..40).any(|k| {
            let t = k as f64 / 39.0;
            let q: Vec<f64> = q_start.iter().zip(&q_goal).map(|(a, b)| a + t * (b - a)).collect();
            !feasible(&problem, &q)
        });
        assert!(straight_collides, "test instance too easy");

        let traj = plan_seating_trajectory(&problem, &q_goal).unwrap();
        for q in &traj {
            assert!(feasible(&problem, q));
        }
    }
}
