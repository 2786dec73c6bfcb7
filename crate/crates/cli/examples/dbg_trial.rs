use sitkit::formats::config::ConfigFile;
use sitkit::trial::{run_trial, ChairSource, Protocol, TrialContext, TrialSpec};
use sitkit_core::chairgen::{ChairGenParams, ChairVariant};

fn main() {
    let cfg = ConfigFile::default();
    let ctx = TrialContext::from_config(&cfg, std::path::Path::new(".")).unwrap();
    let spec = TrialSpec {
        protocol: Protocol::Accessible,
        chair: ChairSource::Generated(ChairGenParams::new(ChairVariant::Standard, 301)),
        chair_pose: None,
        policy_override: None,
        seed: 17,
        record_timings: true,
        snapshot: false,
        parallel_drops: true,
    };
    let r = run_trial(&ctx, &spec);
    println!("chair pose {:?}", r.chair_initial_pose);
    println!("imagined {:?}", r.imagined_pose);
    println!("goal {:?}", r.goal_pose);
    println!("adjusted {:?}", r.adjusted_position);
    println!("rotations {}", r.rotations_applied);
    if let Some(v) = &r.final_verdict {
        println!("verdict correct={} J={:.2} L={:.2} H={:.3} contacts={:?}", v.correct, v.joint_score, v.link_score, v.sitting_height, v.contacts);
    }
    println!("release {:?} settled {:?} chair_yaw {:?}", r.release_position, r.settled_position, r.chair_final_yaw);
    println!("failure {:?}", r.failure);
    println!("timings {:?}", r.timings);
    if let Some(report) = &r.imagination {
        println!("chosen rotation {:?} counts {:?}", report.chosen_rotation, report.correct_per_rotation);
    }
    let robot = r.executed_path.last().unwrap();
    println!("robot final {:?}", robot);
    if let Some(p) = r.imagined_pose {
        let d = ((p.position.x - robot.x).powi(2) + (p.position.y - robot.y).powi(2)).sqrt();
        println!("robot-to-p distance {d:.3}");
    }
}
