use sitkit::formats::config::ConfigFile;
use sitkit::trial::{run_trial, ChairSource, Protocol, TrialContext, TrialSpec};
use sitkit_core::chairgen::{ChairGenParams, ChairVariant};

fn main() {
    let cfg = ConfigFile::default();
    let ctx = TrialContext::from_config(&cfg, std::path::Path::new(".")).unwrap();
    let spec = TrialSpec {
        protocol: Protocol::Accessible,
        chair: ChairSource::Generated(ChairGenParams::new(ChairVariant::Standard, 302)),
        chair_pose: None,
        policy_override: None,
        seed: 31,
        record_timings: false,
        snapshot: false,
        parallel_drops: true,
    };
    // Run several trials concurrently on scoped threads (mimics the test
    // harness running tests in parallel), then compare.
    let results: Vec<String> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..4)
            .map(|_| {
                let ctx = &ctx;
                let spec = &spec;
                s.spawn(move || serde_json::to_string(&run_trial(ctx, spec)).unwrap())
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let all_eq = results.windows(2).all(|w| w[0] == w[1]);
    println!("concurrent runs identical: {all_eq}");
    if !all_eq {
        for (i, r) in results.iter().enumerate() {
            let x = r.split("\"x\":").nth(1).unwrap().split(',').next().unwrap();
            println!("run {i}: first x = {x}");
        }
    }
}
