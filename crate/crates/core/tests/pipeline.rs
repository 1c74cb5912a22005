use beamforge_core::beamline::{design_radial, end_to_end_report, ScalingMode};
use beamforge_core::design::{validate_design, ControlModel, DesignArtifact};
use beamforge_core::scenarios;

#[test]
fn extraction_pipeline_end_to_end() {
    let design = scenarios::extraction_design().unwrap();
    let model = ControlModel::new(&design.pair).unwrap();
    let geometry = scenarios::extraction_geometry();
    let options = scenarios::pipeline_options(1000.0, 2000);
    let radial = design_radial(&scenarios::radial_targets(ScalingMode::Momentum, 0.2)).unwrap();

    let run = end_to_end_report(&model, Some(&radial), &geometry, &options).unwrap();
    let r = &run.report;
    assert!((r.v_mean / 5000.0 - 1.0).abs() < 5e-3, "v_mean {}", r.v_mean);
    assert!((r.r_eff - 0.2).abs() < 1e-6);
    assert!((r.design_scaling - 0.2).abs() < 1e-12);
    assert!(r.max_voltage <= 10.0);
    assert!(r.max_invariant_drift <= 1e-6);
    assert_eq!(r.escaped_fraction, 0.0);
    assert_eq!(r.radial_mode, "momentum");
    assert_eq!(run.axial.times.len(), 21);

    let thermal = end_to_end_report(&model, None, &geometry, &options).unwrap();
    assert_eq!(thermal.report.radial_mode, "none");
    assert!(thermal.report.delta_r_lens > 3.0 * r.delta_r_lens);
    // axial branch does not depend on the radial protocol
    assert_eq!(thermal.report.v_mean, r.v_mean);
}

#[test]
fn artifact_round_trip_preserves_the_design() {
    let design = scenarios::extraction_design().unwrap();
    let artifact = DesignArtifact::new(design.pair.clone()).with_metadata([("note".to_string(), "x".to_string())]);
    let back = DesignArtifact::parse(&artifact.to_text()).unwrap();
    assert_eq!(back, artifact);
    let targets = scenarios::extraction_targets();
    assert_eq!(validate_design(&back.pair, &targets), validate_design(&design.pair, &targets));
}
