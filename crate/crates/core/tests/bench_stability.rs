use mwi_core::harness::run_bench;
use mwi_core::motion::PipelineConfig;
use mwi_core::videoio::synth::pacing_scene;

#[test]
fn repeated_benchmarks_agree_within_15_percent() {
    let frames = pacing_scene(300, 2).frames();
    let cfg = PipelineConfig::default();
    let a = run_bench(&frames, &cfg, 3, None).unwrap();
    let b = run_bench(&frames, &cfg, 3, None).unwrap();
    let ratio = a.fps / b.fps;
    assert!((1.0 / 1.15..=1.15).contains(&ratio), "fps {} vs {}", a.fps, b.fps);
    for r in [&a, &b] {
        assert_eq!(r.frames_processed, 300);
        assert!(r.stage_total_ms() <= r.wall_ms_per_frame());
    }
}
